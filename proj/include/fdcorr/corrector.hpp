#pragma once

#include <optional>
#include <vector>

#include "fdcorr/periodic.hpp"
#include "fdcorr/sensitivity.hpp"

namespace fdcorr {

enum class ModeMatchStrategy { PeakIndex, NearestFrequency };

/// How a target finds "its" mode in the refined structure. Nearest-nu
/// carries a guard band (in bins); outside it the dominance-rank index
/// is the fallback, since peak ordering may change between iterations.
struct ModeSelector {
    ModeMatchStrategy strategy = ModeMatchStrategy::NearestFrequency;
    int peak_index = 1;         ///< 1-based dominance rank
    double reference_nu = 0.0;  ///< prior frequency for nearest-nu matching
};

/// Spectral constraints on one mode. Frequency and amplitude are never
/// constrained together (they are coupled along the torus family); any
/// subset of {nu | amplitude, phase} may be targeted. amplitude_cap is
/// monitored and reported, not enforced.
struct FrequencyTarget {
    ModeSelector mode;
    std::optional<double> nu;
    std::optional<double> amplitude;
    std::optional<double> phase;
    bool phase_relative_to_reference = false;  ///< constellation followers
    std::optional<double> amplitude_cap;
    /// Constrain this mode in a different scalar signal than the problem's
    /// default (the frozen-orbit case reads the short-period mode off z and
    /// the medium-period mode off x simultaneously).
    std::optional<SignalRecipe> recipe;

    void validate() const;
    int n_rows() const;
};

struct SolverOptions {
    double tol = 1e-10;
    int max_iterations = 40;
    int max_halvings = 6;
    double guard_band_bins = 10.0;
    double max_phase_step = 0.7853981633974483;  // pi/4 homotopy steps
    RefineMethod method = RefineMethod::LNAFF;
    int refine_m = 4;
    RefineOptions refine;
    OdeOptions ode;
    int threads = 1;
    /// Frequency targets are rejected in the fixed-epoch multiple-shooting
    /// formulation unless explicitly overridden (the epochs pin the
    /// longitudinal frequency).
    bool allow_frequency_targets_multi = false;
    bool verbose = false;  ///< iteration trace on stderr
};

/// Free patchpoint states, a fixed epoch schedule, the signal recipe, and
/// the spectral targets. Single shooting is the n_p = 1 case.
struct ShootingProblem {
    Dynamics dynamics;
    std::vector<Vector6d> patchpoints;
    PatchpointSchedule schedule;
    SignalRecipe recipe;
    int n_samples = 0;
    double dt = 0.0;
    std::vector<FrequencyTarget> targets;
    SolverOptions options;

    void validate() const;
};

struct IterationRecord {
    int stage = 0;
    int iteration = 0;
    double residual_norm = 0.0;
    double continuity_norm = 0.0;
    double frequency_norm = 0.0;
    double step_norm = 0.0;
    double linear_residual = 0.0;  ///< ||J dx + F|| of the accepted step
};

struct SolveResult {
    std::vector<Vector6d> patchpoints;
    QuasiPeriodicModel model;           ///< default-channel refinement at convergence
    RefineResult refinement;
    std::vector<SignalRecipe> channel_recipes;       ///< [0] is the default channel
    std::vector<QuasiPeriodicModel> channel_models;  ///< aligned with channel_recipes
    std::vector<int> target_channel;    ///< channel index per target
    std::vector<int> target_component;  ///< component index within that channel
    std::vector<IterationRecord> log;
    bool converged = false;
    double residual_norm = 0.0;
    std::vector<std::optional<double>> monitor_amplitudes;  ///< per target with a cap
    std::vector<bool> monitor_ok;

    /// Refined component a target locked onto.
    const FrequencyComponent& matched(int target) const {
        return channel_models[target_channel[target]].components[target_component[target]];
    }
};

/// Minimum-norm Newton on the stacked frequency constraints with a single
/// free state.
SolveResult solve_single(const ShootingProblem& problem);

/// Multiple shooting: continuity rows stacked over the frequency rows,
/// all patchpoints free, epochs fixed.
SolveResult solve_multi(const ShootingProblem& problem);

/// Least-norm solution of J dx = -f via row-equilibrated normal
/// equations, falling back to a complete orthogonal decomposition.
Eigen::VectorXd minimum_norm_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& f);

// --- constellation -----------------------------------------------------------

struct ConstellationProblem {
    Dynamics dynamics;
    SignalRecipe recipe;
    int n_samples = 0;
    double dt = 0.0;
    PatchpointSchedule schedule;                 ///< shared epochs, n_p = 1
    std::vector<Vector6d> initial_states;        ///< one per satellite
    int reference = 0;
    /// Per-satellite targets. Follower phase targets with
    /// phase_relative_to_reference hold offsets added to the reference's
    /// converged phase for the matching mode.
    std::vector<std::vector<FrequencyTarget>> targets;
    /// Optional per-satellite element offsets (raan, argp, mean anomaly
    /// deltas; a/e/i deltas allowed too). When present, follower initial
    /// guesses are rebuilt from the converged reference state's osculating
    /// elements plus the offset, which lands them far closer to their
    /// phased solutions than independently transformed table elements.
    std::vector<KeplerElements> element_offsets;
    SolverOptions options;
};

struct ConstellationResult {
    std::vector<SolveResult> satellites;
    std::vector<std::string> errors;  ///< per-satellite failure messages ("" if fine)
    bool converged = false;
};

/// Solve the reference satellite first, then the followers (concurrently)
/// with phase offsets anchored to the reference's converged phases. A
/// follower failure leaves the reference solution intact.
ConstellationResult solve_constellation(const ConstellationProblem& problem);

// --- drift reporting -----------------------------------------------------------

/// Relative osculating M and RAAN histories between constellation members,
/// unwrapped, with fitted secular slopes. States are in the model's native
/// frame at t0.
struct PhaseDriftReport {
    std::vector<double> times;
    Eigen::MatrixXd delta_mean_anomaly;  // (n_sat-1) x n_times, radians
    Eigen::MatrixXd delta_raan;
    std::vector<double> slope_mean_anomaly;  // rad per nd time
    std::vector<double> slope_raan;
};

PhaseDriftReport phase_drift_report(const Dynamics& dyn,
                                    const std::vector<Vector6d>& states, double t0,
                                    double horizon, int n_out, int reference = 0,
                                    const OdeOptions& opts = {});

}  // namespace fdcorr
