// Command-line front end: propagation, spectral analysis, refinement and the
// frequency-domain correctors, driven by JSON scenario files.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fdcorr/scenario.hpp"

using namespace fdcorr;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr double kPi = 3.14159265358979323846;

std::filesystem::path out_path(const std::string& prefix, const std::string& out_dir,
                               const std::string& suffix) {
    std::filesystem::create_directories(out_dir);
    return std::filesystem::path(out_dir) / (prefix + "_" + suffix);
}

json component_json(const FrequencyComponent& c) {
    return json{{"nu_nd", c.nu}, {"amplitude_nd", c.amplitude}, {"phase_rad", c.phase}};
}

json model_json(const QuasiPeriodicModel& m, const RefineReport& rep) {
    json components = json::array();
    for (const auto& c : m.components) components.push_back(component_json(c));
    json reports = json::array();
    for (const auto& r : rep.components)
        reports.push_back(json{{"iterations", r.iterations},
                               {"constraint_norm", r.constraint_norm},
                               {"converged", r.converged}});
    return json{{"format_version", 1},
                {"a0", m.a0},
                {"components", components},
                {"report",
                 {{"method", refine_method_name(rep.method)},
                  {"converged", rep.converged},
                  {"sweeps", rep.sweeps},
                  {"components", reports}}}};
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << j.dump(2) << '\n';
}

SampledSignal read_signal_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open signal file: " + path);
    std::vector<double> t, q;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 't') continue;
        std::stringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
            throw std::invalid_argument("signal csv needs two columns t,q");
        t.push_back(std::stod(a));
        q.push_back(std::stod(b));
    }
    if (t.size() < 4) throw std::invalid_argument("signal csv too short");
    const double dt = t[1] - t[0];
    for (size_t i = 1; i < t.size(); ++i)
        if (std::abs(t[i] - t[0] - dt * i) > 1e-9 * std::max(1.0, std::abs(t[i])))
            throw std::invalid_argument("signal csv is not uniformly spaced");
    SampledSignal sig;
    sig.t0 = t[0];
    sig.dt = dt;
    sig.values = std::move(q);
    sig.owner.assign(sig.values.size(), 0);
    sig.source = "csv";
    return sig;
}

void write_signal_csv(const std::filesystem::path& path, const SampledSignal& sig) {
    std::ofstream out(path);
    out.precision(15);
    out << "t,q\n";
    for (int i = 0; i < sig.size(); ++i)
        out << sig.t0 + sig.dt * i << ',' << sig.values[i] << '\n';
}

void write_spectrum_outputs(const std::string& prefix, const std::string& out_dir,
                            const SampledSignal& sig, int max_peaks) {
    const WindowedDft dft = dft_at_bins(sig);
    const auto peaks = detect_peaks(dft, max_peaks);
    json jbins = json::array(), jamps = json::array(), jpeaks = json::array();
    for (size_t k = 0; k < dft.amplitudes.size(); ++k) {
        jbins.push_back(dft.bin_width * k);
        jamps.push_back(std::abs(dft.amplitudes[k]));
    }
    for (const auto& p : peaks) {
        const FrequencyComponent g = initial_guess(p);
        jpeaks.push_back(json{{"bin", p.k},
                              {"nu_nd", p.nu_hat},
                              {"neighbor_nd", p.nu_neighbor},
                              {"amplitude_nd", g.amplitude},
                              {"phase_rad", g.phase}});
    }
    write_json(out_path(prefix, out_dir, "spectrum.json"),
               json{{"format_version", 1},
                    {"bin_width_nd", dft.bin_width},
                    {"bins", jbins},
                    {"amplitudes", jamps},
                    {"peaks", jpeaks}});
    std::ofstream csv(out_path(prefix, out_dir, "spectrum.csv"));
    csv.precision(15);
    csv << "nu_nd,amplitude,log10_amplitude\n";
    for (size_t k = 1; k < dft.amplitudes.size(); ++k) {
        const double a = 2.0 * std::abs(dft.amplitudes[k]);
        csv << dft.bin_width * k << ',' << a << ',' << std::log10(std::max(a, 1e-300))
            << '\n';
    }
}

void write_iteration_log(const std::filesystem::path& path,
                         const std::vector<IterationRecord>& log) {
    std::ofstream out(path);
    out.precision(15);
    out << "stage,iteration,residual_norm,continuity_norm,frequency_norm,step_norm,"
           "linear_residual\n";
    for (const auto& r : log)
        out << r.stage << ',' << r.iteration << ',' << r.residual_norm << ','
            << r.continuity_norm << ',' << r.frequency_norm << ',' << r.step_norm << ','
            << r.linear_residual << '\n';
}

json states_json(const std::vector<Vector6d>& states) {
    json arr = json::array();
    for (const auto& s : states)
        arr.push_back(json{{"position_nd", {s[0], s[1], s[2]}},
                           {"velocity_nd", {s[3], s[4], s[5]}}});
    return arr;
}

json solve_json(const SolveResult& res) {
    json channels = json::array();
    for (size_t ch = 0; ch < res.channel_models.size(); ++ch) {
        json comps = json::array();
        for (const auto& c : res.channel_models[ch].components)
            comps.push_back(component_json(c));
        channels.push_back(json{{"signal", res.channel_recipes[ch].describe()},
                                {"a0", res.channel_models[ch].a0},
                                {"components", comps}});
    }
    json matched = json::array();
    for (size_t k = 0; k < res.target_component.size(); ++k)
        matched.push_back(json{{"channel", res.target_channel[k]},
                               {"component", res.target_component[k]},
                               {"value", component_json(res.matched(k))}});
    json monitors = json::array();
    for (size_t k = 0; k < res.monitor_amplitudes.size(); ++k)
        if (res.monitor_amplitudes[k])
            monitors.push_back(json{{"target", k},
                                    {"amplitude_nd", *res.monitor_amplitudes[k]},
                                    {"within_cap", res.monitor_ok[k]}});
    return json{{"format_version", 1},
                {"converged", res.converged},
                {"residual_norm", res.residual_norm},
                {"iterations", res.log.size()},
                {"states", states_json(res.patchpoints)},
                {"channels", channels},
                {"matched_targets", matched},
                {"amplitude_monitors", monitors}};
}

/// Plot-data bundle: BRF geometry, log-amplitude spectrum, strobe returns of
/// the dominant mode.
void emit_plots(const Scenario& sc, const std::string& out_dir, const Dynamics& dyn,
                const Vector6d& x0, const std::string& tag) {
    const double span = std::min(sc.span_nd, 40.0);
    write_trajectory_csv(out_path(sc.output_prefix, out_dir, tag + "_trajectory.csv").string(),
                         dyn, x0, sc.epoch_nd, sc.epoch_nd + span, 4000, sc.solver.ode);
    const SampledSignal sig = sample_signal(dyn, x0, sc.epoch_nd, sc.n_samples,
                                            sc.sample_dt(), sc.recipe, false, sc.solver.ode);
    write_spectrum_outputs(sc.output_prefix + "_" + tag, out_dir, sig, 16);
    const auto peaks = detect_peaks(dft_at_bins(sig), 1);
    if (peaks.empty()) return;
    const double period = 2.0 * kPi / peaks[0].nu_hat;
    const int count = std::min(4096, static_cast<int>(sc.span_nd / period));
    if (count < 8) return;
    std::ofstream out(out_path(sc.output_prefix, out_dir, tag + "_strobe.csv"));
    out.precision(15);
    out << "t,x,y,z,vx,vy,vz\n";
    std::vector<double> times(count);
    for (int i = 0; i < count; ++i) times[i] = sc.epoch_nd + period * i;
    propagate_sampled(dyn, x0, sc.epoch_nd, times.back(), times, false, sc.solver.ode,
                      [&](int, double t, const double* y) {
                          StateVector6 s = StateVector6::from_packed(
                              Eigen::Map<const Vector6d>(y), model_frame(dyn.model()), t);
                          if (dyn.model() == ModelId::HFEM)
                              s = mci_to_brf(s, dyn.ephemeris(), dyn.constants());
                          out << t;
                          for (int c = 0; c < 3; ++c) out << ',' << s.position[c];
                          for (int c = 0; c < 3; ++c) out << ',' << s.velocity[c];
                          out << '\n';
                      });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"frequency-domain differential corrections for quasi-periodic orbits"};
    app.require_subcommand(1);

    std::string scenario_path, input_csv, out_dir = "out", method = "";
    int max_peaks = 10, m_override = 0, threads = 0;
    bool plots = false, verbose = false;

    auto add_common = [&](CLI::App* cmd, bool needs_scenario) {
        if (needs_scenario)
            cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
        cmd->add_option("--output-dir", out_dir, "output directory");
        cmd->add_option("--threads", threads, "worker thread cap");
        cmd->add_flag("--emit-plots", plots, "write gnuplot-ready plot data");
        cmd->add_flag("--verbose", verbose, "iteration trace on stderr");
    };

    auto* cmd_prop = app.add_subcommand("propagate", "propagate a scenario state and export");
    add_common(cmd_prop, true);

    auto* cmd_spec = app.add_subcommand("spectrum", "windowed DFT of a signal CSV (t,q)");
    cmd_spec->add_option("--input", input_csv, "signal csv")->required();
    cmd_spec->add_option("--max-peaks", max_peaks, "peak count");
    cmd_spec->add_option("--output-dir", out_dir, "output directory");

    auto* cmd_ref =
        app.add_subcommand("refine", "refine a signal CSV into a quasi-periodic model");
    cmd_ref->add_option("--input", input_csv, "signal csv")->required();
    cmd_ref->add_option("--method", method, "lnaff|gmsc");
    cmd_ref->add_option("--m", m_override, "number of modes");
    cmd_ref->add_option("--output-dir", out_dir, "output directory");

    auto* cmd_refsc =
        app.add_subcommand("refine-scenario", "propagate a scenario and refine its signal");
    add_common(cmd_refsc, true);
    cmd_refsc->add_option("--method", method, "lnaff|gmsc");
    cmd_refsc->add_option("--m", m_override, "number of modes");

    auto* cmd_cs = app.add_subcommand("correct-single", "single-shooting frequency targeter");
    add_common(cmd_cs, true);

    auto* cmd_cm = app.add_subcommand("correct-multi", "multiple-shooting frequency targeter");
    add_common(cmd_cm, true);

    auto* cmd_con = app.add_subcommand("constellation", "phased constellation targeter");
    add_common(cmd_con, true);

    auto* cmd_seed =
        app.add_subcommand("seed-torus", "displace a periodic orbit along its center mode");
    add_common(cmd_seed, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_spec->parsed()) {
            write_spectrum_outputs("signal", out_dir, read_signal_csv(input_csv), max_peaks);
            std::cout << "wrote spectrum outputs to " << out_dir << "\n";
            return 0;
        }
        if (cmd_ref->parsed()) {
            const SampledSignal sig = read_signal_csv(input_csv);
            const RefineMethod mm =
                method.empty() ? RefineMethod::LNAFF : refine_method_from_name(method);
            const RefineResult res =
                refine_sequential(sig, m_override > 0 ? m_override : 4, mm);
            write_json(out_path("signal", out_dir, "refined.json"),
                       model_json(res.model, res.report));
            std::cout << "refined " << res.model.components.size()
                      << " modes, converged=" << res.report.converged << "\n";
            return res.report.converged ? 0 : kExitNumeric;
        }

        Scenario sc = load_scenario(scenario_path);
        if (threads > 0) sc.solver.threads = threads;
        sc.solver.verbose = verbose;
        if (!method.empty()) {
            sc.method = refine_method_from_name(method);
            sc.solver.method = sc.method;
        }
        if (m_override > 0) {
            sc.refine_m = m_override;
            sc.solver.refine_m = m_override;
        }
        const Dynamics dyn = sc.make_dynamics();

        if (cmd_prop->parsed()) {
            if (sc.states.empty())
                throw std::invalid_argument("scenario has no initial state");
            const double span = sc.propagate_span_nd > 0 ? sc.propagate_span_nd : sc.span_nd;
            if (span <= 0.0) throw std::invalid_argument("scenario has no propagation span");
            const int n_out = std::max(1, sc.propagate_outputs);
            write_trajectory_csv(out_path(sc.output_prefix, out_dir, "trajectory.csv").string(),
                                 dyn, sc.states[0], sc.epoch_nd, sc.epoch_nd + span, n_out,
                                 sc.solver.ode);
            write_trajectory_cache(out_path(sc.output_prefix, out_dir, "trajectory.bin").string(),
                                   dyn, sc.states[0], sc.epoch_nd, sc.epoch_nd + span, n_out,
                                   sc.solver.ode);
            if (plots && sc.n_samples > 0) emit_plots(sc, out_dir, dyn, sc.states[0], "ig");
            std::cout << "wrote " << n_out << " samples over " << span << " nd\n";
            return 0;
        }

        if (cmd_refsc->parsed()) {
            if (sc.states.empty() || sc.n_samples <= 0)
                throw std::invalid_argument("scenario needs initial_state and signal blocks");
            const SampledSignal sig =
                sample_signal(dyn, sc.states[0], sc.epoch_nd, sc.n_samples, sc.sample_dt(),
                              sc.recipe, false, sc.solver.ode);
            write_signal_csv(out_path(sc.output_prefix, out_dir, "signal.csv"), sig);
            const RefineResult res =
                refine_sequential(sig, sc.refine_m, sc.method, sc.refine_opts);
            write_json(out_path(sc.output_prefix, out_dir, "refined.json"),
                       model_json(res.model, res.report));
            write_spectrum_outputs(sc.output_prefix, out_dir, sig, std::max(10, sc.refine_m));
            std::cout << "refined " << res.model.components.size()
                      << " modes, converged=" << res.report.converged << "\n";
            return res.report.converged ? 0 : kExitNumeric;
        }

        if (cmd_cs->parsed() || cmd_cm->parsed()) {
            const bool multi = cmd_cm->parsed();
            ShootingProblem p{dyn,        {},         {}, sc.recipe, sc.n_samples,
                              sc.sample_dt(), sc.targets, sc.solver};
            if (multi) {
                if (sc.patchpoints_csv.empty())
                    throw std::invalid_argument(
                        "correct-multi needs patchpoints.csv in the scenario");
                std::vector<double> epochs;
                p.patchpoints = read_patchpoints_csv(sc.patchpoints_csv, epochs);
                // the final epoch closes the last segment
                const double seg = epochs.size() > 1 ? epochs[1] - epochs[0] : sc.span_nd;
                epochs.push_back(epochs.back() + seg);
                p.schedule.epochs = epochs;
            } else {
                if (sc.states.empty())
                    throw std::invalid_argument("scenario has no initial state");
                p.patchpoints = {sc.states[0]};
                p.schedule.epochs = {sc.epoch_nd, sc.epoch_nd + sc.span_nd};
            }
            const SolveResult res = multi ? solve_multi(p) : solve_single(p);
            write_json(out_path(sc.output_prefix, out_dir, "converged.json"), solve_json(res));
            write_iteration_log(out_path(sc.output_prefix, out_dir, "iterations.csv"), res.log);
            if (plots && res.converged)
                emit_plots(sc, out_dir, dyn, res.patchpoints[0], "converged");
            std::cout << (res.converged ? "converged" : "did not converge") << ", residual "
                      << res.residual_norm << ", iterations " << res.log.size() << "\n";
            return res.converged ? 0 : kExitNumeric;
        }

        if (cmd_con->parsed()) {
            if (sc.states.size() < 2 || sc.sat_targets.size() != sc.states.size())
                throw std::invalid_argument(
                    "constellation needs satellites[] and satellite_targets[] of equal size");
            ConstellationProblem cp{dyn,
                                    sc.recipe,
                                    sc.n_samples,
                                    sc.sample_dt(),
                                    PatchpointSchedule{{sc.epoch_nd, sc.epoch_nd + sc.span_nd}},
                                    sc.states,
                                    sc.reference_satellite,
                                    sc.sat_targets,
                                    {},
                                    sc.solver};
            if (sc.element_sets.size() == sc.states.size()) {
                // follower guesses reseed from the converged reference plus the
                // element-table offsets
                const KeplerElements& ref = sc.element_sets[sc.reference_satellite];
                for (const auto& oe : sc.element_sets) {
                    KeplerElements d;
                    d.raan = wrap_pi(oe.raan - ref.raan);
                    d.argp = wrap_pi(oe.argp - ref.argp);
                    d.mean_anomaly = wrap_pi(oe.mean_anomaly - ref.mean_anomaly);
                    cp.element_offsets.push_back(d);
                }
            }
            const ConstellationResult res = solve_constellation(cp);
            json sats = json::array();
            for (size_t s = 0; s < res.satellites.size(); ++s) {
                json j = solve_json(res.satellites[s]);
                j["error"] = res.errors[s];
                sats.push_back(j);
            }
            write_json(out_path(sc.output_prefix, out_dir, "constellation.json"),
                       json{{"format_version", 1},
                            {"converged", res.converged},
                            {"satellites", sats}});
            std::cout << (res.converged ? "constellation converged"
                                        : "constellation did not converge")
                      << "\n";
            return res.converged ? 0 : kExitNumeric;
        }

        if (cmd_seed->parsed()) {
            if (!sc.periodic_state)
                throw std::invalid_argument("seed-torus needs a periodic_orbit block");
            const int n_patch = sc.seed_patch_per_rev * std::max(1, sc.seed_revs);
            const PatchpointSchedule sched = PatchpointSchedule::uniform(
                sc.epoch_nd, sc.periodic_period / sc.seed_patch_per_rev, n_patch);
            const PeriodicOrbit po{*sc.periodic_state, sc.periodic_period};
            const EigenSeed seed = seed_from_eigenstructure(
                dyn, po, sc.seed_mode_index, sc.seed_amplitude, &sched, sc.solver.ode);
            std::vector<double> epochs(sched.epochs.begin(), sched.epochs.end() - 1);
            write_patchpoints_csv(out_path(sc.output_prefix, out_dir, "patchpoints.csv").string(),
                                  seed.patchpoints, epochs);
            std::cout << "seeded " << seed.patchpoints.size()
                      << " patchpoints; rotation number " << seed.mode.rotation_number
                      << ", predicted quasi-frequency " << seed.mode.quasi_frequency << "\n";
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        const std::string what = e.what();
        if (what.rfind("scenario", 0) == 0 || what.find("cannot open") != std::string::npos) {
            std::cerr << "configuration error: " << what << "\n";
            return kExitConfig;
        }
        std::cerr << "numeric failure: " << what << "\n";
        return kExitNumeric;
    }
    return 0;
}
