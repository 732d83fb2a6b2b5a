#include "fdcorr/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace fdcorr {

namespace {

const char* component_name(int c) {
    static const char* names[6] = {"x", "y", "z", "vx", "vy", "vz"};
    return names[c];
}

// The order-7 continuous extension trails the order-8 step accuracy; long
// refinement spans need the step capped or interpolation bias shows up as
// a systematic frequency dilation (~1e-11 relative at h = 0.02).
constexpr double kSamplingMaxStep = 0.02;

OdeOptions sampling_options(const OdeOptions& opts) {
    OdeOptions o = opts;
    o.max_step = std::min(o.max_step, kSamplingMaxStep);
    return o;
}

OdeRhs make_rhs(const Dynamics& dyn, bool with_stm) {
    if (with_stm)
        return [&dyn](double t, const double* y, double* dydt) {
            dyn.variational_rates(t, y, dydt);
        };
    return [&dyn](double t, const double* y, double* dydt) { dyn.state_rates(t, y, dydt); };
}

std::vector<double> packed_with_identity(const Vector6d& y0) {
    std::vector<double> y(42, 0.0);
    for (int i = 0; i < 6; ++i) y[i] = y0[i];
    for (int i = 0; i < 6; ++i) y[6 + 7 * i] = 1.0;  // row-major identity
    return y;
}

Matrix6d stm_from_packed(const double* y) {
    Matrix6d phi;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) phi(i, j) = y[6 + 6 * i + j];
    return phi;
}

}  // namespace

std::string SignalRecipe::describe() const {
    return std::string(frame == FrameTag::BRF ? "brf" : (frame == FrameTag::MCI ? "mci" : "eof")) +
           ":" + component_name(component);
}

double SampledSignal::mean() const {
    if (values.empty()) return 0.0;
    // pairwise sum keeps the mean deterministic and accurate for large N
    std::function<double(size_t, size_t)> sum = [&](size_t lo, size_t hi) -> double {
        if (hi - lo <= 64) {
            double s = 0.0;
            for (size_t i = lo; i < hi; ++i) s += values[i];
            return s;
        }
        const size_t mid = lo + (hi - lo) / 2;
        return sum(lo, mid) + sum(mid, hi);
    };
    return sum(0, values.size()) / static_cast<double>(values.size());
}

double extract_value(const SignalRecipe& recipe, const Dynamics& dyn, double t,
                     const Vector6d& y) {
    const FrameTag native = model_frame(dyn.model());
    if (recipe.frame == native) return y[recipe.component];
    if (recipe.frame == FrameTag::BRF && native == FrameTag::MCI) {
        const StateVector6 s = StateVector6::from_packed(y, FrameTag::MCI, t);
        const StateVector6 rot = mci_to_brf(s, dyn.ephemeris(), dyn.constants());
        return rot.packed()[recipe.component];
    }
    throw std::invalid_argument("unsupported signal frame for this model: " +
                                recipe.describe());
}

RowVector6d extract_gradient(const SignalRecipe& recipe, const Dynamics& dyn, double t,
                             const Vector6d& y) {
    (void)y;
    const FrameTag native = model_frame(dyn.model());
    if (recipe.frame == native) return RowVector6d::Unit(recipe.component);
    if (recipe.frame == FrameTag::BRF && native == FrameTag::MCI) {
        const Matrix6d map = mci_to_brf_jacobian(t, dyn.ephemeris(), dyn.constants());
        return map.row(recipe.component);
    }
    throw std::invalid_argument("unsupported signal frame for this model: " +
                                recipe.describe());
}

Vector6d propagate_state(const Dynamics& dyn, const Vector6d& y0, double t0, double tf,
                         const OdeOptions& opts) {
    Vector6d y = y0;
    if (tf == t0) return y;
    integrate_to(make_rhs(dyn, false), 6, t0, tf, y.data(), opts);
    return y;
}

VariationalState propagate_with_stm(const Dynamics& dyn, const Vector6d& y0, double t0,
                                    double tf, const OdeOptions& opts) {
    std::vector<double> y = packed_with_identity(y0);
    if (tf != t0) integrate_to(make_rhs(dyn, true), 42, t0, tf, y.data(), opts);
    VariationalState out;
    out.state = Eigen::Map<Vector6d>(y.data());
    out.stm = stm_from_packed(y.data());
    return out;
}

void propagate_sampled(const Dynamics& dyn, const Vector6d& y0, double t0, double tf,
                       const std::vector<double>& times, bool with_stm,
                       const OdeOptions& opts,
                       const std::function<void(int, double, const double*)>& sink,
                       std::vector<double>* final_state) {
    const int dim = with_stm ? 42 : 6;
    std::vector<double> y =
        with_stm ? packed_with_identity(y0) : std::vector<double>(y0.data(), y0.data() + 6);
    size_t next = 0;
    // emit any samples at the start epoch directly
    while (next < times.size() && times[next] <= t0) {
        if (times[next] < t0 - 1e-12)
            throw std::out_of_range("sample time precedes the propagation start");
        sink(static_cast<int>(next), t0, y.data());
        ++next;
    }
    if (!times.empty() && times.back() > tf + 1e-9)
        throw std::out_of_range("sample time exceeds the propagated span");
    if (tf == t0) {
        if (final_state) *final_state = y;
        return;
    }

    Dop853 stepper(make_rhs(dyn, with_stm), dim, t0, y.data(), tf, opts);
    std::vector<double> buf(dim);
    while (stepper.step()) {
        while (next < times.size() && times[next] <= stepper.t()) {
            stepper.dense_eval(std::min(times[next], stepper.t()), buf.data());
            sink(static_cast<int>(next), times[next], buf.data());
            ++next;
        }
        if (stepper.done()) break;
    }
    // times equal to tf within roundoff
    while (next < times.size()) {
        sink(static_cast<int>(next), times[next], stepper.y());
        ++next;
    }
    if (final_state) final_state->assign(stepper.y(), stepper.y() + dim);
}

// --- Trajectory ---------------------------------------------------------------

Vector6d Trajectory::state(double t) const {
    std::vector<double> buf(dim_);
    eval(t, buf.data());
    return Eigen::Map<Vector6d>(buf.data());
}

Matrix6d Trajectory::stm(double t) const {
    if (!with_stm()) throw std::runtime_error("trajectory was propagated without the STM");
    std::vector<double> buf(dim_);
    eval(t, buf.data());
    return stm_from_packed(buf.data());
}

const Trajectory::Step& Trajectory::locate(double t) const {
    if (t < t_start_ - 1e-12 || t > t_end_ + 1e-12)
        throw std::out_of_range("time outside the propagated span");
    auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                               [](double v, const Step& s) { return v < s.t0; });
    if (it != steps_.begin()) --it;
    return *it;
}

void Trajectory::eval(double t, double* out) const {
    const Step& s = locate(t);
    const double x = std::clamp((t - s.t0) / s.h, 0.0, 1.0);
    for (int i = 0; i < dim_; ++i) {
        double acc = 0.0;
        for (int r = 6; r >= 0; --r) {
            acc += s.dense[static_cast<size_t>(r) * dim_ + i];
            acc *= ((6 - r) % 2 == 0) ? x : (1.0 - x);
        }
        out[i] = acc + s.y0[i];
    }
}

Trajectory propagate_dense(const Dynamics& dyn, const Vector6d& y0, double t0, double tf,
                           bool with_stm, const OdeOptions& opts) {
    const int dim = with_stm ? 42 : 6;
    std::vector<double> y =
        with_stm ? packed_with_identity(y0) : std::vector<double>(y0.data(), y0.data() + 6);
    Trajectory traj;
    traj.dim_ = dim;
    traj.t_start_ = t0;
    traj.t_end_ = tf;
    if (tf == t0) {
        Trajectory::Step s;
        s.t0 = t0;
        s.h = 1.0;
        s.y0 = y;
        s.dense.assign(static_cast<size_t>(7) * dim, 0.0);
        traj.steps_.push_back(std::move(s));
        return traj;
    }
    Dop853 stepper(make_rhs(dyn, with_stm), dim, t0, y.data(), tf, opts);
    while (stepper.step()) {
        Trajectory::Step s;
        s.t0 = stepper.t_prev();
        s.h = stepper.t() - stepper.t_prev();
        s.y0.assign(stepper.y_prev(), stepper.y_prev() + dim);
        s.dense.resize(static_cast<size_t>(7) * dim);
        stepper.copy_dense(s.dense.data());
        traj.steps_.push_back(std::move(s));
        if (stepper.done()) break;
    }
    return traj;
}

SampledSignal sample_signal(const Dynamics& dyn, const Vector6d& x0, double t0, int n,
                            double dt, const SignalRecipe& recipe, bool with_partials,
                            const OdeOptions& opts) {
    if (n <= 0 || dt <= 0.0) throw std::invalid_argument("sample count and spacing must be positive");
    SampledSignal sig;
    sig.t0 = t0;
    sig.dt = dt;
    sig.source = recipe.describe();
    sig.values.resize(n);
    sig.owner.assign(n, 0);
    sig.n_blocks = 1;
    if (with_partials) sig.partials.resize(n, 6);

    std::vector<double> times(n);
    for (int i = 0; i < n; ++i) times[i] = t0 + dt * i;
    const double tf = times.back();
    propagate_sampled(dyn, x0, t0, tf, times, with_partials, sampling_options(opts),
                      [&](int i, double t, const double* y) {
                          const Vector6d s = Eigen::Map<const Vector6d>(y);
                          sig.values[i] = extract_value(recipe, dyn, t, s);
                          if (with_partials) {
                              const RowVector6d g = extract_gradient(recipe, dyn, t, s);
                              sig.partials.row(i) = g * stm_from_packed(y);
                          }
                      });
    return sig;
}

SampledSignal sample_signal(const Trajectory& traj, const Dynamics& dyn,
                            const SignalRecipe& recipe, int n, double dt) {
    SampledSignal sig;
    sig.t0 = traj.t_start();
    sig.dt = dt;
    sig.source = recipe.describe();
    sig.values.resize(n);
    sig.owner.assign(n, 0);
    sig.n_blocks = 1;
    for (int i = 0; i < n; ++i) {
        const double t = sig.t0 + dt * i;
        sig.values[i] = extract_value(recipe, dyn, t, traj.state(t));
    }
    return sig;
}

SampledSignal stroboscopic_sample(const Dynamics& dyn, const Vector6d& x0, double t0,
                                  int n, double period, const SignalRecipe& recipe,
                                  const OdeOptions& opts) {
    if (period <= 0.0) throw std::invalid_argument("strobe period must be positive");
    return sample_signal(dyn, x0, t0, n, period, recipe, false, opts);
}

SampledSignal stroboscopic_sample(const Trajectory& traj, const Dynamics& dyn,
                                  const SignalRecipe& recipe, int n, double period) {
    if (period <= 0.0) throw std::invalid_argument("strobe period must be positive");
    return sample_signal(traj, dyn, recipe, n, period);
}

// --- multiple shooting ----------------------------------------------------------

void PatchpointSchedule::validate() const {
    if (epochs.size() < 2) throw std::invalid_argument("schedule needs at least two epochs");
    for (size_t i = 1; i < epochs.size(); ++i)
        if (epochs[i] <= epochs[i - 1])
            throw std::invalid_argument("schedule epochs must be strictly increasing");
}

PatchpointSchedule PatchpointSchedule::uniform(double t0, double segment_dt, int n_segments) {
    PatchpointSchedule s;
    s.epochs.resize(n_segments + 1);
    for (int i = 0; i <= n_segments; ++i) s.epochs[i] = t0 + segment_dt * i;
    return s;
}

namespace {

template <typename Fn>
void run_indexed(int count, int n_threads, Fn&& fn) {
    n_threads = std::max(1, std::min(n_threads, count));
    if (n_threads == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n_threads);
    for (int w = 0; w < n_threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < count; i += n_threads) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

SegmentResult propagate_segments(const Dynamics& dyn, const std::vector<Vector6d>& states,
                                 const PatchpointSchedule& schedule, bool with_stm,
                                 const OdeOptions& opts, int n_threads) {
    schedule.validate();
    const int np = schedule.n_patchpoints();
    if (static_cast<int>(states.size()) != np)
        throw std::invalid_argument("patchpoint count does not match the schedule");
    SegmentResult res;
    res.endpoints.resize(np);
    res.stms.resize(np, Matrix6d::Identity());
    run_indexed(np, n_threads, [&](int s) {
        try {
            if (with_stm) {
                const VariationalState v = propagate_with_stm(
                    dyn, states[s], schedule.epochs[s], schedule.epochs[s + 1], opts);
                res.endpoints[s] = v.state;
                res.stms[s] = v.stm;
            } else {
                res.endpoints[s] = propagate_state(dyn, states[s], schedule.epochs[s],
                                                   schedule.epochs[s + 1], opts);
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("segment " + std::to_string(s) + ": " + e.what());
        }
    });
    return res;
}

SegmentSampling sample_segments(const Dynamics& dyn, const std::vector<Vector6d>& states,
                                const PatchpointSchedule& schedule, int n, double dt,
                                const SignalRecipe& recipe, bool with_partials,
                                const OdeOptions& opts, int n_threads) {
    MultiSampling multi = sample_segments_multi(dyn, states, schedule, n, dt, {recipe},
                                                with_partials, opts, n_threads);
    SegmentSampling out;
    out.signal = std::move(multi.signals[0]);
    out.segments = std::move(multi.segments);
    return out;
}

MultiSampling sample_segments_multi(const Dynamics& dyn,
                                    const std::vector<Vector6d>& states,
                                    const PatchpointSchedule& schedule, int n, double dt,
                                    const std::vector<SignalRecipe>& recipes,
                                    bool with_partials, const OdeOptions& opts,
                                    int n_threads) {
    schedule.validate();
    if (recipes.empty()) throw std::invalid_argument("at least one signal recipe required");
    const int np = schedule.n_patchpoints();
    if (static_cast<int>(states.size()) != np)
        throw std::invalid_argument("patchpoint count does not match the schedule");
    const double t0 = schedule.epochs.front();
    const double tf = schedule.epochs.back();
    if (t0 + dt * (n - 1) > tf + 1e-9)
        throw std::out_of_range("sampling grid exceeds the schedule span");

    MultiSampling out;
    out.signals.resize(recipes.size());
    for (size_t r = 0; r < recipes.size(); ++r) {
        auto& sig = out.signals[r];
        sig.t0 = t0;
        sig.dt = dt;
        sig.source = recipes[r].describe();
        sig.values.resize(n);
        sig.owner.resize(n);
        sig.n_blocks = np;
        if (with_partials) sig.partials.resize(n, 6);
    }
    out.segments.endpoints.resize(np);
    out.segments.stms.resize(np, Matrix6d::Identity());

    // sample i belongs to segment s with tau_s <= t_i < tau_{s+1}
    std::vector<std::vector<double>> seg_times(np);
    std::vector<std::vector<int>> seg_index(np);
    for (int i = 0; i < n; ++i) {
        const double t = t0 + dt * i;
        int s = static_cast<int>(std::upper_bound(schedule.epochs.begin(), schedule.epochs.end(), t) -
                                 schedule.epochs.begin()) - 1;
        s = std::clamp(s, 0, np - 1);
        for (auto& sig : out.signals) sig.owner[i] = s;
        seg_times[s].push_back(t);
        seg_index[s].push_back(i);
    }

    run_indexed(np, n_threads, [&](int s) {
        try {
            std::vector<double> fin;
            propagate_sampled(
                dyn, states[s], schedule.epochs[s], schedule.epochs[s + 1], seg_times[s],
                with_partials, sampling_options(opts),
                [&](int k, double t, const double* y) {
                    const int i = seg_index[s][k];
                    const Vector6d st = Eigen::Map<const Vector6d>(y);
                    for (size_t r = 0; r < recipes.size(); ++r) {
                        out.signals[r].values[i] = extract_value(recipes[r], dyn, t, st);
                        if (with_partials)
                            out.signals[r].partials.row(i) =
                                extract_gradient(recipes[r], dyn, t, st) * stm_from_packed(y);
                    }
                },
                &fin);
            out.segments.endpoints[s] = Eigen::Map<const Vector6d>(fin.data());
            if (with_partials) out.segments.stms[s] = stm_from_packed(fin.data());
        } catch (const std::exception& e) {
            throw std::runtime_error("segment " + std::to_string(s) + ": " + e.what());
        }
    });
    return out;
}

// --- export ---------------------------------------------------------------------

void write_trajectory_csv(const std::string& path, const Dynamics& dyn,
                          const Vector6d& x0, double t0, double tf, int n_samples,
                          const OdeOptions& opts) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out.precision(15);
    out << "t,x,y,z,vx,vy,vz\n";
    const double dt = (n_samples > 1) ? (tf - t0) / (n_samples - 1) : 0.0;
    std::vector<double> times(n_samples);
    for (int i = 0; i < n_samples; ++i) times[i] = t0 + dt * i;
    propagate_sampled(dyn, x0, t0, tf, times, false, opts,
                      [&](int, double t, const double* y) {
                          out << t;
                          for (int c = 0; c < 6; ++c) out << ',' << y[c];
                          out << '\n';
                      });
}

void write_trajectory_cache(const std::string& path, const Dynamics& dyn,
                            const Vector6d& x0, double t0, double tf, int n_samples,
                            const OdeOptions& opts) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    const char magic[4] = {'F', 'D', 'C', 'T'};
    const std::uint32_t version = 1;
    const std::uint64_t n = static_cast<std::uint64_t>(n_samples);
    const double dt = (n_samples > 1) ? (tf - t0) / (n_samples - 1) : 0.0;
    const std::uint32_t n_cols = 7;
    out.write(magic, 4);
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&t0), sizeof t0);
    out.write(reinterpret_cast<const char*>(&dt), sizeof dt);
    out.write(reinterpret_cast<const char*>(&n_cols), sizeof n_cols);
    std::vector<double> times(n_samples);
    for (int i = 0; i < n_samples; ++i) times[i] = t0 + dt * i;
    propagate_sampled(dyn, x0, t0, tf, times, false, opts,
                      [&](int, double t, const double* y) {
                          out.write(reinterpret_cast<const char*>(&t), sizeof t);
                          out.write(reinterpret_cast<const char*>(y), sizeof(double) * 6);
                      });
}

}  // namespace fdcorr
