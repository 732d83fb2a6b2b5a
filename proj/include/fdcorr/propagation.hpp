#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fdcorr/dynamics.hpp"
#include "fdcorr/integrator.hpp"

namespace fdcorr {

/// Scalar signal recipe: which state component, expressed in which frame.
/// Components 0..2 are positions, 3..5 velocities. The frame may be the
/// model's native frame or BRF (pulled back through the rotating-frame
/// map when the model propagates in the MCI).
struct SignalRecipe {
    int component = 0;
    FrameTag frame = FrameTag::BRF;

    std::string describe() const;
};

double extract_value(const SignalRecipe& recipe, const Dynamics& dyn, double t,
                     const Vector6d& y);
/// d(signal)/d(native state at t); combine with the STM for partials with
/// respect to upstream states.
RowVector6d extract_gradient(const SignalRecipe& recipe, const Dynamics& dyn, double t,
                             const Vector6d& y);

/// Uniformly sampled scalar time series q(t_i), t_i = t0 + dt*i, with
/// optional per-sample partials dq/dx of the owning patchpoint state.
/// The DFT machinery works in local times dt*i.
struct SampledSignal {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> values;
    std::string source;

    /// dq(t_i)/dx_b for the owning block b = owner[i] (empty when partials
    /// were not requested).
    Eigen::MatrixXd partials;  // N x 6
    std::vector<int> owner;    // per-sample patchpoint index
    int n_blocks = 1;

    int size() const { return static_cast<int>(values.size()); }
    double local_time(int i) const { return dt * i; }
    bool has_partials() const { return partials.rows() == size(); }
    double mean() const;
};

// --- plain propagation -----------------------------------------------------

Vector6d propagate_state(const Dynamics& dyn, const Vector6d& y0, double t0, double tf,
                         const OdeOptions& opts = {});

struct VariationalState {
    Vector6d state;
    Matrix6d stm;
};

VariationalState propagate_with_stm(const Dynamics& dyn, const Vector6d& y0, double t0,
                                    double tf, const OdeOptions& opts = {});

/// Stream the integration, invoking the sink at each requested absolute
/// time (sorted ascending, within [t0, tf]). The state pointer carries 6
/// entries, or 42 with the row-major STM appended when with_stm is set.
/// final_state, when non-null, receives the state at tf.
void propagate_sampled(const Dynamics& dyn, const Vector6d& y0, double t0, double tf,
                       const std::vector<double>& times, bool with_stm,
                       const OdeOptions& opts,
                       const std::function<void(int, double, const double*)>& sink,
                       std::vector<double>* final_state = nullptr);

// --- dense trajectory handle ------------------------------------------------

/// Stores the per-step continuous extension for interpolation anywhere in
/// the span. Memory grows with step count; intended for spans of a few
/// hundred nd time units at most. Immutable once built; concurrent reads
/// are safe.
class Trajectory {
  public:
    double t_start() const { return t_start_; }
    double t_end() const { return t_end_; }
    bool with_stm() const { return dim_ == 42; }

    Vector6d state(double t) const;
    Matrix6d stm(double t) const;

  private:
    friend Trajectory propagate_dense(const Dynamics&, const Vector6d&, double, double,
                                      bool, const OdeOptions&);
    struct Step {
        double t0, h;
        std::vector<double> y0;
        std::vector<double> dense;  // 7 x dim interpolation vectors
    };
    void eval(double t, double* out) const;
    const Step& locate(double t) const;

    double t_start_ = 0.0, t_end_ = 0.0;
    int dim_ = 6;
    std::vector<Step> steps_;
};

Trajectory propagate_dense(const Dynamics& dyn, const Vector6d& y0, double t0, double tf,
                           bool with_stm = false, const OdeOptions& opts = {});

// --- signal sampling ---------------------------------------------------------

/// Propagate and sample a scalar signal over n uniform steps starting at
/// the state's epoch. with_partials adds dq(t_i)/dx0 rows computed through
/// the STM.
SampledSignal sample_signal(const Dynamics& dyn, const Vector6d& x0, double t0, int n,
                            double dt, const SignalRecipe& recipe, bool with_partials,
                            const OdeOptions& opts = {});

/// Sample a signal from an existing dense trajectory (no partials).
SampledSignal sample_signal(const Trajectory& traj, const Dynamics& dyn,
                            const SignalRecipe& recipe, int n, double dt);

/// Samples at integer multiples of the strobe period, suppressing the
/// corresponding fundamental.
SampledSignal stroboscopic_sample(const Dynamics& dyn, const Vector6d& x0, double t0,
                                  int n, double period, const SignalRecipe& recipe,
                                  const OdeOptions& opts = {});
SampledSignal stroboscopic_sample(const Trajectory& traj, const Dynamics& dyn,
                                  const SignalRecipe& recipe, int n, double period);

// --- multiple-shooting support ----------------------------------------------

/// Fixed epochs tau_0 < tau_1 < ... < tau_np. Segment s runs from tau_s to
/// tau_{s+1} and is owned by patchpoint s.
struct PatchpointSchedule {
    std::vector<double> epochs;

    int n_patchpoints() const { return static_cast<int>(epochs.size()) - 1; }
    double duration(int s) const { return epochs[s + 1] - epochs[s]; }
    void validate() const;
    static PatchpointSchedule uniform(double t0, double segment_dt, int n_segments);
};

struct SegmentResult {
    std::vector<Vector6d> endpoints;  // end state of each segment
    std::vector<Matrix6d> stms;       // STM over each segment
};

/// Propagate each patchpoint over its own segment. Errors identify the
/// failing segment index.
SegmentResult propagate_segments(const Dynamics& dyn,
                                 const std::vector<Vector6d>& states,
                                 const PatchpointSchedule& schedule, bool with_stm,
                                 const OdeOptions& opts = {}, int n_threads = 1);

struct SegmentSampling {
    SampledSignal signal;  // stitched across segments; owner[i] = segment of sample i
    SegmentResult segments;
};

struct MultiSampling {
    std::vector<SampledSignal> signals;  // one per recipe, same grid
    SegmentResult segments;
};

/// Sample a stitched signal across all segments with per-sample partials
/// taken with respect to the owning patchpoint state.
SegmentSampling sample_segments(const Dynamics& dyn, const std::vector<Vector6d>& states,
                                const PatchpointSchedule& schedule, int n, double dt,
                                const SignalRecipe& recipe, bool with_partials,
                                const OdeOptions& opts = {}, int n_threads = 1);

/// Extract several scalar signals from one shared propagation.
MultiSampling sample_segments_multi(const Dynamics& dyn,
                                    const std::vector<Vector6d>& states,
                                    const PatchpointSchedule& schedule, int n, double dt,
                                    const std::vector<SignalRecipe>& recipes,
                                    bool with_partials, const OdeOptions& opts = {},
                                    int n_threads = 1);

// --- export -------------------------------------------------------------------

/// Write a uniformly sampled trajectory as CSV (t, x, y, z, vx, vy, vz).
void write_trajectory_csv(const std::string& path, const Dynamics& dyn,
                          const Vector6d& x0, double t0, double tf, int n_samples,
                          const OdeOptions& opts = {});

/// Binary cache: magic "FDCT", u32 version, u64 n, f64 t0, f64 dt,
/// u32 n_cols, then n rows of n_cols doubles (t plus state columns).
void write_trajectory_cache(const std::string& path, const Dynamics& dyn,
                            const Vector6d& x0, double t0, double tf, int n_samples,
                            const OdeOptions& opts = {});

}  // namespace fdcorr
