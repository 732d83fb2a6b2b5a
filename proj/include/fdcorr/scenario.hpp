#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fdcorr/corrector.hpp"

namespace fdcorr {

/// Parsed scenario file. Physical quantities carry explicit units in the
/// JSON keys (_nd, _km, _rad, _deg); see scenarios/ for examples.
struct Scenario {
    int format_version = 1;
    std::string name;
    ModelId model = ModelId::CR3BP;
    std::string provider = "circular";
    double sun_phase_rad = 0.0;
    SystemConstants constants;
    double epoch_nd = 0.0;

    std::vector<Vector6d> states;           ///< native-frame states (one per satellite)
    std::optional<KeplerElements> elements;  ///< alternative element input (first state)
    /// Element sets per satellite when states were given as elements;
    /// drives follower reseeding offsets in constellation runs.
    std::vector<KeplerElements> element_sets;

    // signal recipe
    SignalRecipe recipe;
    int n_samples = 0;
    double span_nd = 0.0;
    double sample_dt() const { return span_nd / n_samples; }

    // refinement
    RefineMethod method = RefineMethod::LNAFF;
    int refine_m = 4;
    RefineOptions refine_opts;

    // correction
    std::vector<FrequencyTarget> targets;                 ///< single satellite
    std::vector<std::vector<FrequencyTarget>> sat_targets;  ///< constellation
    int reference_satellite = 0;
    SolverOptions solver;

    // multiple shooting
    std::optional<PatchpointSchedule> schedule;
    std::string patchpoints_csv;

    // torus seeding (seed-torus subcommand)
    std::optional<Vector6d> periodic_state;
    double periodic_period = 0.0;
    int seed_mode_index = 0;
    double seed_amplitude = 0.0;
    int seed_patch_per_rev = 3;
    int seed_revs = 0;

    // propagate subcommand
    double propagate_span_nd = 0.0;
    int propagate_outputs = 1000;

    std::string output_prefix = "out";

    Dynamics make_dynamics() const;
};

/// Load and schema-check a scenario. Errors name the offending field.
Scenario load_scenario(const std::string& path);

/// Patchpoint CSV: one row per patchpoint, columns epoch_nd,x,y,z,vx,vy,vz.
std::vector<Vector6d> read_patchpoints_csv(const std::string& path,
                                           std::vector<double>& epochs);
void write_patchpoints_csv(const std::string& path, const std::vector<Vector6d>& states,
                           const std::vector<double>& epochs);

}  // namespace fdcorr
