#include "fdcorr/scenario.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fdcorr {

using nlohmann::json;

namespace {
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

[[noreturn]] void fail(const std::string& field, const std::string& why) {
    throw std::runtime_error("scenario field '" + field + "': " + why);
}

double number(const json& j, const std::string& field) {
    if (!j.contains(field)) fail(field, "missing");
    if (!j[field].is_number()) fail(field, "expected a number");
    return j[field].get<double>();
}

double number_or(const json& j, const std::string& field, double fallback) {
    if (!j.contains(field)) return fallback;
    if (!j[field].is_number()) fail(field, "expected a number");
    return j[field].get<double>();
}

int integer_or(const json& j, const std::string& field, int fallback) {
    if (!j.contains(field)) return fallback;
    if (!j[field].is_number_integer()) fail(field, "expected an integer");
    return j[field].get<int>();
}

std::string string_or(const json& j, const std::string& field, const std::string& fb) {
    if (!j.contains(field)) return fb;
    if (!j[field].is_string()) fail(field, "expected a string");
    return j[field].get<std::string>();
}

double angle_rad(const json& j, const std::string& base, double fallback) {
    if (j.contains(base + "_rad")) return number(j, base + "_rad");
    if (j.contains(base + "_deg")) return number(j, base + "_deg") * kDegToRad;
    return fallback;
}

Vector6d state_from_json(const json& j, const std::string& field) {
    if (!j.contains("position_nd") || !j.contains("velocity_nd"))
        fail(field, "needs position_nd and velocity_nd arrays");
    const auto& p = j["position_nd"];
    const auto& v = j["velocity_nd"];
    if (!p.is_array() || p.size() != 3 || !v.is_array() || v.size() != 3)
        fail(field, "position_nd/velocity_nd must be 3-element arrays");
    Vector6d y;
    for (int i = 0; i < 3; ++i) y[i] = p[i].get<double>();
    for (int i = 0; i < 3; ++i) y[3 + i] = v[i].get<double>();
    return y;
}

int component_from_name(const std::string& name) {
    const std::string names[6] = {"x", "y", "z", "vx", "vy", "vz"};
    for (int i = 0; i < 6; ++i)
        if (name == names[i]) return i;
    fail("signal.component", "unknown component '" + name + "'");
}

FrameTag frame_from_name(const std::string& name) {
    if (name == "brf") return FrameTag::BRF;
    if (name == "mci") return FrameTag::MCI;
    if (name == "eof") return FrameTag::EOF_;
    if (name == "native") return FrameTag::BRF;  // resolved by caller for cr3bp
    fail("signal.frame", "unknown frame '" + name + "'");
}

FrequencyTarget target_from_json(const json& j, int index) {
    const std::string field = "targets[" + std::to_string(index) + "]";
    FrequencyTarget t;
    const std::string match = string_or(j, "match", "nearest");
    if (match == "nearest")
        t.mode.strategy = ModeMatchStrategy::NearestFrequency;
    else if (match == "peak")
        t.mode.strategy = ModeMatchStrategy::PeakIndex;
    else
        fail(field + ".match", "expected 'nearest' or 'peak'");
    t.mode.peak_index = integer_or(j, "peak_index", 1);
    t.mode.reference_nu = number_or(j, "reference_nu_nd", 0.0);
    if (t.mode.strategy == ModeMatchStrategy::NearestFrequency && !j.contains("reference_nu_nd"))
        fail(field + ".reference_nu_nd", "required for nearest-frequency matching");
    if (j.contains("nu_nd")) t.nu = number(j, "nu_nd");
    if (j.contains("amplitude_nd")) t.amplitude = number(j, "amplitude_nd");
    if (j.contains("phase_rad") || j.contains("phase_deg"))
        t.phase = angle_rad(j, "phase", 0.0);
    if (j.contains("phase_offset_rad") || j.contains("phase_offset_deg")) {
        t.phase = angle_rad(j, "phase_offset", 0.0);
        t.phase_relative_to_reference = true;
    }
    if (j.contains("amplitude_cap_nd")) t.amplitude_cap = number(j, "amplitude_cap_nd");
    if (j.contains("component") || j.contains("frame")) {
        SignalRecipe r;
        r.component = component_from_name(string_or(j, "component", "x"));
        r.frame = frame_from_name(string_or(j, "frame", "brf"));
        t.recipe = r;
    }
    try {
        t.validate();
    } catch (const std::exception& e) {
        fail(field, e.what());
    }
    return t;
}

}  // namespace

Dynamics Scenario::make_dynamics() const {
    if (model == ModelId::HFEM)
        return Dynamics(model, constants, make_provider(provider, constants, sun_phase_rad));
    return Dynamics(model, constants);
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("scenario parse error at byte " +
                                 std::to_string(e.byte) + ": " + e.what());
    }

    Scenario sc;
    sc.format_version = integer_or(j, "format_version", 1);
    if (sc.format_version != 1) fail("format_version", "unsupported version");
    sc.name = string_or(j, "name", "scenario");
    sc.model = model_from_name(string_or(j, "model", "cr3bp"));
    sc.provider = string_or(j, "provider", "circular");
    sc.sun_phase_rad = number_or(j, "sun_phase_rad", 0.0);

    if (const char* env = std::getenv("FDCORR_CONSTANTS"))
        sc.constants = load_constants(env);
    else if (j.contains("constants_file"))
        sc.constants = load_constants(j["constants_file"].get<std::string>());
    else
        sc.constants = default_constants();
    if (j.contains("constants")) {
        const auto& c = j["constants"];
        sc.constants.mass_ratio = number_or(c, "mass_ratio_nd", sc.constants.mass_ratio);
        sc.constants.l_star_km = number_or(c, "l_star_km", sc.constants.l_star_km);
        sc.constants.gm_earth_moon_km3s2 =
            number_or(c, "gm_earth_moon_km3s2", sc.constants.gm_earth_moon_km3s2);
        sc.constants.gm_sun_km3s2 = number_or(c, "gm_sun_km3s2", sc.constants.gm_sun_km3s2);
        sc.constants.sun_distance_km =
            number_or(c, "sun_distance_km", sc.constants.sun_distance_km);
    }
    sc.epoch_nd = number_or(j, "epoch_nd", 0.0);

    auto parse_state_entry = [&](const json& e, const std::string& field) -> Vector6d {
        if (e.contains("elements")) {
            const auto& el = e["elements"];
            KeplerElements oe;
            oe.a = number(el, "a_km") / sc.constants.l_star_km;
            oe.e = number(el, "e_nd");
            oe.i = angle_rad(el, "i", 0.0);
            oe.raan = angle_rad(el, "raan", 0.0);
            oe.argp = angle_rad(el, "argp", 0.0);
            oe.mean_anomaly = angle_rad(el, "mean_anomaly", 0.0);
            if (!sc.elements) sc.elements = oe;
            sc.element_sets.push_back(oe);
            // elements -> EOF -> BRF -> native frame
            const StateVector6 eof = kepler_to_cartesian(oe, sc.constants, sc.epoch_nd);
            const StateVector6 brf = eof_to_brf(eof, sc.constants);
            if (sc.model == ModelId::HFEM) {
                const auto eph = make_provider(sc.provider, sc.constants, sc.sun_phase_rad);
                return brf_to_mci(brf, *eph, sc.constants).packed();
            }
            return brf.packed();
        }
        return state_from_json(e, field);
    };

    if (j.contains("initial_state"))
        sc.states.push_back(parse_state_entry(j["initial_state"], "initial_state"));
    if (j.contains("satellites")) {
        if (!j["satellites"].is_array()) fail("satellites", "expected an array");
        int k = 0;
        for (const auto& e : j["satellites"])
            sc.states.push_back(parse_state_entry(e, "satellites[" + std::to_string(k++) + "]"));
    }

    if (j.contains("signal")) {
        const auto& s = j["signal"];
        sc.recipe.component = component_from_name(string_or(s, "component", "x"));
        sc.recipe.frame = frame_from_name(string_or(s, "frame", "brf"));
        sc.n_samples = integer_or(s, "n_samples", 0);
        if (s.contains("span_nd"))
            sc.span_nd = number(s, "span_nd");
        else if (s.contains("span_years"))
            sc.span_nd = sc.constants.years_to_nd(number(s, "span_years"));
        if (sc.n_samples <= 0 || sc.n_samples % 2 != 0)
            fail("signal.n_samples", "must be positive and even");
        if (sc.span_nd <= 0.0) fail("signal.span_nd", "must be positive");
        if (s.contains("max_step_nd"))
            sc.solver.ode.max_step = number(s, "max_step_nd");
    }

    if (j.contains("refine")) {
        const auto& r = j["refine"];
        sc.method = refine_method_from_name(string_or(r, "method", "lnaff"));
        sc.refine_m = integer_or(r, "m", 4);
        sc.refine_opts.tol = number_or(r, "tol", sc.refine_opts.tol);
        sc.refine_opts.max_iterations =
            integer_or(r, "max_iterations", sc.refine_opts.max_iterations);
    }

    if (j.contains("targets")) {
        if (!j["targets"].is_array()) fail("targets", "expected an array");
        int k = 0;
        for (const auto& t : j["targets"]) sc.targets.push_back(target_from_json(t, k++));
    }
    if (j.contains("satellite_targets")) {
        if (!j["satellite_targets"].is_array()) fail("satellite_targets", "expected an array");
        for (const auto& lst : j["satellite_targets"]) {
            std::vector<FrequencyTarget> ts;
            int k = 0;
            for (const auto& t : lst) ts.push_back(target_from_json(t, k++));
            sc.sat_targets.push_back(std::move(ts));
        }
        sc.reference_satellite = integer_or(j, "reference_satellite", 0);
    }

    if (j.contains("corrector")) {
        const auto& c = j["corrector"];
        sc.solver.tol = number_or(c, "tol", sc.solver.tol);
        sc.solver.max_iterations = integer_or(c, "max_iterations", sc.solver.max_iterations);
        sc.solver.max_halvings = integer_or(c, "max_halvings", sc.solver.max_halvings);
        sc.solver.guard_band_bins =
            number_or(c, "guard_band_bins", sc.solver.guard_band_bins);
        sc.solver.threads = integer_or(c, "threads", sc.solver.threads);
        sc.solver.allow_frequency_targets_multi =
            c.contains("allow_frequency_targets_multi") &&
            c["allow_frequency_targets_multi"].get<bool>();
    }
    sc.solver.method = sc.method;
    sc.solver.refine_m = sc.refine_m;
    sc.solver.refine = sc.refine_opts;

    if (j.contains("patchpoints")) {
        const auto& p = j["patchpoints"];
        if (p.contains("csv")) sc.patchpoints_csv = p["csv"].get<std::string>();
        if (p.contains("epochs_nd")) {
            PatchpointSchedule sch;
            for (const auto& e : p["epochs_nd"]) sch.epochs.push_back(e.get<double>());
            sch.validate();
            sc.schedule = sch;
        }
    }

    if (j.contains("periodic_orbit")) {
        const auto& p = j["periodic_orbit"];
        sc.periodic_state = state_from_json(p, "periodic_orbit");
        sc.periodic_period = number(p, "period_nd");
        sc.seed_mode_index = integer_or(p, "mode_index", 0);
        sc.seed_amplitude = number_or(p, "seed_amplitude_nd", 0.0);
        sc.seed_patch_per_rev = integer_or(p, "patchpoints_per_rev", 3);
        sc.seed_revs = integer_or(p, "revolutions", 0);
    }

    if (j.contains("propagate")) {
        const auto& p = j["propagate"];
        sc.propagate_span_nd = number_or(p, "span_nd", 0.0);
        sc.propagate_outputs = integer_or(p, "n_output", 1000);
    }

    if (j.contains("output"))
        sc.output_prefix = string_or(j["output"], "prefix", sc.output_prefix);
    return sc;
}

std::vector<Vector6d> read_patchpoints_csv(const std::string& path,
                                           std::vector<double>& epochs) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open patchpoints file: " + path);
    std::vector<Vector6d> states;
    epochs.clear();
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("epoch", 0) == 0) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != 7)
            throw std::runtime_error("patchpoints csv: expected 7 columns, got " +
                                     std::to_string(row.size()));
        epochs.push_back(row[0]);
        Vector6d y;
        for (int i = 0; i < 6; ++i) y[i] = row[1 + i];
        states.push_back(y);
    }
    return states;
}

void write_patchpoints_csv(const std::string& path, const std::vector<Vector6d>& states,
                           const std::vector<double>& epochs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out.precision(17);
    out << "epoch_nd,x,y,z,vx,vy,vz\n";
    for (size_t i = 0; i < states.size(); ++i) {
        out << epochs[i];
        for (int c = 0; c < 6; ++c) out << ',' << states[i][c];
        out << '\n';
    }
}

}  // namespace fdcorr
