#include "fdcorr/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <cstdio>

namespace fdcorr {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void FrequencyTarget::validate() const {
    if (nu && amplitude)
        throw std::invalid_argument(
            "a target may constrain frequency or amplitude, not both");
    if (!nu && !amplitude && !phase && !amplitude_cap)
        throw std::invalid_argument("empty frequency target");
    if (phase_relative_to_reference && !phase)
        throw std::invalid_argument("relative phase target without a phase value");
}

int FrequencyTarget::n_rows() const {
    return (nu ? 1 : 0) + (amplitude ? 1 : 0) + (phase ? 1 : 0);
}

void ShootingProblem::validate() const {
    schedule.validate();
    if (static_cast<int>(patchpoints.size()) != schedule.n_patchpoints())
        throw std::invalid_argument("patchpoint count does not match the schedule");
    if (n_samples <= 0 || dt <= 0.0)
        throw std::invalid_argument("signal recipe needs positive n and dt");
    for (const auto& t : targets) t.validate();
    const int n_free = 6 * schedule.n_patchpoints();
    int rows = 6 * (schedule.n_patchpoints() - 1);
    for (const auto& t : targets) rows += t.n_rows();
    if (rows > n_free)
        throw std::invalid_argument("constraint rows exceed free variables");
}

Eigen::VectorXd minimum_norm_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& f) {
    const int m = static_cast<int>(jac.rows());
    // row equilibration: the least-norm solution of J dx = -f is invariant
    // under row scaling, which keeps J J^T well conditioned
    Eigen::VectorXd scale(m);
    for (int r = 0; r < m; ++r) {
        const double nrm = jac.row(r).norm();
        scale[r] = (nrm > 0.0) ? 1.0 / nrm : 1.0;
    }
    const Eigen::MatrixXd js = scale.asDiagonal() * jac;
    const Eigen::VectorXd fs = scale.asDiagonal() * f;
    const Eigen::MatrixXd gram = js * js.transpose();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd dx = -js.transpose() * ldlt.solve(fs);
        if ((js * dx + fs).norm() <= 1e-12 * std::max(1.0, fs.norm())) return dx;
    }
    // near-parallel constraint rows defeat the normal equations; fall back
    // to a pseudo-inverse that keeps every singular value above roundoff
    Eigen::BDCSVD<Eigen::MatrixXd> svd(js, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-13);
    return svd.solve(-fs);
}

namespace {

struct Evaluation {
    std::vector<SignalRecipe> recipes;     // channel 0 = problem default
    std::vector<SampledSignal> signals;    // per channel
    std::vector<RefineResult> refinements; // per channel
    SegmentResult segments;
    DftContext ctx;
    std::vector<int> target_channel;
    std::vector<int> component_of_target;
    Eigen::VectorXd residual;  // continuity rows then frequency rows
    double continuity_norm = 0.0;
    double frequency_norm = 0.0;
    double norm = 0.0;    // per-family infinity norm: the convergence test
    double merit = 0.0;   // residual 2-norm: the line-search objective

    Evaluation(int n, double dt) : ctx(n, dt) {}

    const FrequencyComponent& component(size_t target) const {
        return refinements[target_channel[target]]
            .model.components[component_of_target[target]];
    }
};

int identify_component(const QuasiPeriodicModel& model, const ModeSelector& sel,
                       double bin_width, double guard_band_bins) {
    const int m = static_cast<int>(model.components.size());
    if (m == 0) throw std::runtime_error("refined model is empty");
    const double guard = guard_band_bins * bin_width;
    if (sel.strategy == ModeMatchStrategy::NearestFrequency) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int a = 0; a < m; ++a) {
            const double d = std::abs(model.components[a].nu - sel.reference_nu);
            if (d < best_d) {
                best_d = d;
                best = a;
            }
        }
        if (best_d <= guard) return best;
        // nearest-nu lost the peak: fall back to the dominance rank. Large
        // trial steps can shift a dominant mode by many bins, so the
        // fallback tolerates a relative excursion, still vetoing
        // rank-impostors far from the tracked frequency.
        const int idx = sel.peak_index - 1;
        const double loose = std::max(guard, 0.2 * std::abs(sel.reference_nu));
        if (idx >= 0 && idx < m &&
            std::abs(model.components[idx].nu - sel.reference_nu) <= loose)
            return idx;
        throw std::runtime_error("peak identity lost: no refined mode within the guard band");
    }
    const int idx = sel.peak_index - 1;
    if (idx < 0 || idx >= m)
        throw std::runtime_error("target peak index exceeds refined mode count");
    return idx;
}

/// Working copy of the targets with resolved (absolute) phase values and
/// live nearest-nu references.
struct WorkingTarget {
    FrequencyTarget given;
    ModeSelector selector;
    std::optional<double> stage_phase;      ///< homotopy-intermediate phase target
    std::optional<double> last_amplitude;   ///< from the last accepted iteration
};

Evaluation evaluate(const ShootingProblem& p, const std::vector<Vector6d>& x,
                    std::vector<WorkingTarget>& targets, bool with_partials) {
    Evaluation ev(p.n_samples, p.dt);

    // channel 0 is the problem's default signal; targets may add more
    ev.recipes = {p.recipe};
    ev.target_channel.resize(targets.size(), 0);
    auto same_recipe = [](const SignalRecipe& a, const SignalRecipe& b) {
        return a.component == b.component && a.frame == b.frame;
    };
    for (size_t k = 0; k < targets.size(); ++k) {
        if (!targets[k].given.recipe) continue;
        const SignalRecipe& want = *targets[k].given.recipe;
        int ch = -1;
        for (size_t r = 0; r < ev.recipes.size(); ++r)
            if (same_recipe(ev.recipes[r], want)) ch = static_cast<int>(r);
        if (ch < 0) {
            ev.recipes.push_back(want);
            ch = static_cast<int>(ev.recipes.size()) - 1;
        }
        ev.target_channel[k] = ch;
    }

    MultiSampling sampling =
        sample_segments_multi(p.dynamics, x, p.schedule, p.n_samples, p.dt, ev.recipes,
                              with_partials, p.options.ode, p.options.threads);
    ev.signals = std::move(sampling.signals);
    ev.segments = std::move(sampling.segments);

    ev.refinements.resize(ev.recipes.size());
    for (size_t ch = 0; ch < ev.recipes.size(); ++ch) {
        RefineOptions refine_opts = p.options.refine;
        refine_opts.ensure_band = p.options.guard_band_bins * ev.ctx.bin_width();
        for (size_t k = 0; k < targets.size(); ++k)
            if (ev.target_channel[k] == static_cast<int>(ch) &&
                targets[k].selector.strategy == ModeMatchStrategy::NearestFrequency)
                refine_opts.ensure_frequencies.push_back(targets[k].selector.reference_nu);
        ev.refinements[ch] = refine_sequential(ev.signals[ch], p.options.refine_m,
                                               p.options.method, refine_opts);
        if (!ev.refinements[ch].report.converged)
            throw std::runtime_error("frequency refinement failed during correction");
    }

    const int np = p.schedule.n_patchpoints();
    int rows = 6 * (np - 1);
    for (const auto& t : targets) rows += t.given.n_rows();
    ev.residual.resize(rows);

    int r = 0;
    for (int s = 0; s + 1 < np; ++s) {
        ev.residual.segment<6>(r) = ev.segments.endpoints[s] - x[s + 1];
        r += 6;
    }
    ev.continuity_norm = (np > 1) ? ev.residual.head(6 * (np - 1)).lpNorm<Eigen::Infinity>() : 0.0;

    ev.component_of_target.resize(targets.size());
    for (size_t k = 0; k < targets.size(); ++k) {
        auto& t = targets[k];
        const int ch = ev.target_channel[k];
        const int idx = identify_component(ev.refinements[ch].model, t.selector,
                                           ev.ctx.bin_width(), p.options.guard_band_bins);
        ev.component_of_target[k] = idx;
        const FrequencyComponent& c = ev.refinements[ch].model.components[idx];

        // a matched mode whose amplitude dwarfs the signal is a refinement
        // artifact at a far-off trial state; reject such trials outright
        const double plain_mean = ev.signals[ch].mean();
        double signal_scale = 0.0;
        for (double v : ev.signals[ch].values)
            signal_scale = std::max(signal_scale, std::abs(v - plain_mean));
        if (c.amplitude > 5.0 * signal_scale)
            throw std::runtime_error("matched mode amplitude exceeds the signal scale");
        // amplitude continuity across Newton iterations: a collapse by
        // orders of magnitude means the match latched onto the noise floor
        if (t.last_amplitude && c.amplitude < 1e-3 * *t.last_amplitude)
            throw std::runtime_error(
                "peak identity lost: matched amplitude collapsed against the prior");

        if (t.given.nu) ev.residual[r++] = c.nu - *t.given.nu;
        if (t.given.amplitude) ev.residual[r++] = c.amplitude - *t.given.amplitude;
        if (t.given.phase) {
            const double target = t.stage_phase ? *t.stage_phase : *t.given.phase;
            ev.residual[r++] = wrap_pi(c.phase - target);
        }
    }
    ev.frequency_norm =
        (rows > 6 * (np - 1))
            ? ev.residual.tail(rows - 6 * (np - 1)).lpNorm<Eigen::Infinity>()
            : 0.0;
    ev.norm = std::max(ev.continuity_norm, ev.frequency_norm);
    ev.merit = ev.residual.norm();
    return ev;
}

Eigen::MatrixXd assemble_jacobian(const ShootingProblem& p, const Evaluation& ev,
                                  const std::vector<WorkingTarget>& targets) {
    const int np = p.schedule.n_patchpoints();
    const int n_free = 6 * np;
    int rows = 6 * (np - 1);
    for (const auto& t : targets) rows += t.given.n_rows();
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(rows, n_free);

    for (int s = 0; s + 1 < np; ++s) {
        jac.block<6, 6>(6 * s, 6 * s) = ev.segments.stms[s];
        jac.block<6, 6>(6 * s, 6 * (s + 1)) = -Matrix6d::Identity();
    }

    int r = 6 * (np - 1);
    for (size_t k = 0; k < targets.size(); ++k) {
        const int ch = ev.target_channel[k];
        const int idx = ev.component_of_target[k];
        const FrequencyComponent& c = ev.refinements[ch].model.components[idx];
        const GmscBins* bins = nullptr;
        if (p.options.method == RefineMethod::GMSC)
            bins = &ev.refinements[ch].gmsc_bins[idx];
        const FrequencySensitivity sens =
            frequency_sensitivity(p.options.method, ev.signals[ch], ev.ctx, c, bins);
        const auto& t = targets[k];
        if (t.given.nu) jac.row(r++) = sens.rows.row(0);
        if (t.given.amplitude) jac.row(r++) = sens.rows.row(1);
        if (t.given.phase) jac.row(r++) = sens.rows.row(2);
    }
    return jac;
}

SolveResult run_newton(const ShootingProblem& p) {
    p.validate();
    SolveResult result;
    std::vector<Vector6d> x = p.patchpoints;

    std::vector<WorkingTarget> targets;
    for (const auto& t : p.targets) targets.push_back({t, t.mode, std::nullopt});

    auto track_modes = [&](const Evaluation& ev) {
        for (size_t k = 0; k < targets.size(); ++k) {
            const auto& c = ev.component(k);
            if (targets[k].selector.strategy == ModeMatchStrategy::NearestFrequency)
                targets[k].selector.reference_nu = c.nu;
            targets[k].last_amplitude = c.amplitude;
        }
    };

    bool finished = false;
    int stage = 0;
    Evaluation ev = evaluate(p, x, targets, true);
    track_modes(ev);
    if (p.options.verbose)
        for (size_t k = 0; k < targets.size(); ++k) {
            const auto& c = ev.component(k);
            std::fprintf(stderr, "[fdc] entry target %zu -> nu=%.9f A=%.3e th=%.6f\n", k,
                         c.nu, c.amplitude, c.phase);
        }

    while (!finished && stage < 64) {
        // phase homotopy: pull distant phase targets in by at most
        // max_phase_step per stage
        finished = true;
        for (size_t k = 0; k < targets.size(); ++k) {
            auto& t = targets[k];
            if (!t.given.phase) continue;
            const double current = ev.component(k).phase;
            const double delta = wrap_pi(*t.given.phase - current);
            if (std::abs(delta) > p.options.max_phase_step + 1e-12) {
                t.stage_phase =
                    current + std::copysign(p.options.max_phase_step, delta);
                finished = false;
            } else {
                t.stage_phase.reset();
            }
        }

        // recompute the residual under the stage targets
        ev = evaluate(p, x, targets, true);
        track_modes(ev);

        for (int it = 0; it < p.options.max_iterations; ++it) {
            if (ev.norm < p.options.tol) break;
            const Eigen::MatrixXd jac = assemble_jacobian(p, ev, targets);
            const Eigen::VectorXd step = minimum_norm_step(jac, ev.residual);
            const double lin_res = (jac * step + ev.residual).norm();

            double alpha = 1.0;
            bool accepted = false;
            for (int h = 0; h <= p.options.max_halvings; ++h) {
                std::vector<Vector6d> x_try = x;
                for (int b = 0; b < p.schedule.n_patchpoints(); ++b)
                    x_try[b] += alpha * step.segment<6>(6 * b);
                try {
                    Evaluation trial = evaluate(p, x_try, targets, true);
                    if (p.options.verbose) {
                        std::fprintf(stderr,
                                     "[fdc] stage %d it %d alpha %.3g -> |F|=%.3e "
                                     "(cont %.3e freq %.3e), from %.3e\n",
                                     stage, it, alpha, trial.norm, trial.continuity_norm,
                                     trial.frequency_norm, ev.norm);
                        for (size_t k = 0; k < targets.size(); ++k) {
                            const auto& c = trial.component(k);
                            std::fprintf(stderr,
                                         "[fdc]   target %zu -> nu=%.6f A=%.3e th=%.4f\n",
                                         k, c.nu, c.amplitude, c.phase);
                        }
                    }
                    if (trial.merit < ev.merit) {
                        x = std::move(x_try);
                        ev = std::move(trial);
                        accepted = true;
                        break;
                    }
                } catch (const std::exception& e) {
                    // propagation or refinement blew up; shorten the step
                    if (p.options.verbose)
                        std::fprintf(stderr, "[fdc] stage %d it %d alpha %.3g -> %s\n",
                                     stage, it, alpha, e.what());
                }
                alpha *= 0.5;
            }
            IterationRecord rec;
            rec.stage = stage;
            rec.iteration = it;
            rec.residual_norm = ev.norm;
            rec.continuity_norm = ev.continuity_norm;
            rec.frequency_norm = ev.frequency_norm;
            rec.step_norm = alpha * step.norm();
            rec.linear_residual = lin_res;
            result.log.push_back(rec);
            if (!accepted)
                throw std::runtime_error("corrector stalled: no step reduced the residual");
            track_modes(ev);
        }
        if (ev.norm >= p.options.tol && finished)
            break;  // ran out of iterations on the final stage
        ++stage;
    }

    result.patchpoints = x;
    result.refinement = ev.refinements[0];
    result.model = ev.refinements[0].model;
    result.channel_recipes = ev.recipes;
    for (const auto& ref : ev.refinements) result.channel_models.push_back(ref.model);
    result.target_channel = ev.target_channel;
    result.target_component = ev.component_of_target;
    result.residual_norm = ev.norm;
    result.converged = ev.norm < p.options.tol && finished;

    // amplitude monitors are evaluated post hoc, never enforced
    result.monitor_amplitudes.resize(targets.size());
    result.monitor_ok.resize(targets.size(), true);
    for (size_t k = 0; k < targets.size(); ++k) {
        if (!targets[k].given.amplitude_cap) continue;
        const double amp = ev.component(k).amplitude;
        result.monitor_amplitudes[k] = amp;
        result.monitor_ok[k] = amp < *targets[k].given.amplitude_cap;
    }
    return result;
}

}  // namespace

SolveResult solve_single(const ShootingProblem& problem) {
    if (problem.schedule.n_patchpoints() != 1)
        throw std::invalid_argument("solve_single expects exactly one patchpoint");
    return run_newton(problem);
}

SolveResult solve_multi(const ShootingProblem& problem) {
    if (problem.schedule.n_patchpoints() < 2)
        throw std::invalid_argument("solve_multi expects at least two patchpoints");
    if (!problem.options.allow_frequency_targets_multi) {
        for (const auto& t : problem.targets)
            if (t.nu)
                throw std::invalid_argument(
                    "frequency targets are overconstrained under fixed epochs; "
                    "set allow_frequency_targets_multi to override");
    }
    return run_newton(problem);
}

ConstellationResult solve_constellation(const ConstellationProblem& p) {
    const int n_sat = static_cast<int>(p.initial_states.size());
    if (static_cast<int>(p.targets.size()) != n_sat)
        throw std::invalid_argument("one target list per satellite required");
    if (p.reference < 0 || p.reference >= n_sat)
        throw std::invalid_argument("reference index out of range");
    for (const auto& t : p.targets[p.reference])
        if (t.phase_relative_to_reference)
            throw std::invalid_argument("the reference cannot target relative phases");

    auto make_problem = [&](int sat, const std::vector<FrequencyTarget>& targets) {
        ShootingProblem sp{p.dynamics, {p.initial_states[sat]}, p.schedule,
                           p.recipe,   p.n_samples,             p.dt,
                           targets,    p.options};
        return sp;
    };

    ConstellationResult result;
    result.satellites.resize(n_sat);
    result.errors.assign(n_sat, "");
    try {
        result.satellites[p.reference] =
            solve_single(make_problem(p.reference, p.targets[p.reference]));
    } catch (const std::exception& e) {
        result.errors[p.reference] = e.what();
        result.converged = false;
        return result;
    }
    const SolveResult& ref = result.satellites[p.reference];
    if (!ref.converged) {
        result.converged = false;
        return result;
    }

    // anchor follower phase targets to the reference's converged phases,
    // matching on the same signal channel
    auto ref_channel = [&](const std::optional<SignalRecipe>& recipe) -> int {
        if (!recipe) return 0;
        for (size_t ch = 0; ch < ref.channel_recipes.size(); ++ch)
            if (ref.channel_recipes[ch].component == recipe->component &&
                ref.channel_recipes[ch].frame == recipe->frame)
                return static_cast<int>(ch);
        throw std::runtime_error(
            "relative phase target uses a signal the reference never refined");
    };
    std::vector<std::vector<FrequencyTarget>> resolved(n_sat);
    for (int s = 0; s < n_sat; ++s) {
        if (s == p.reference) continue;
        resolved[s] = p.targets[s];
        for (auto& t : resolved[s]) {
            if (!t.phase_relative_to_reference) continue;
            DftContext ctx(p.n_samples, p.dt);
            const QuasiPeriodicModel& anchor = ref.channel_models[ref_channel(t.recipe)];
            const int ref_idx = identify_component(anchor, t.mode, ctx.bin_width(),
                                                   p.options.guard_band_bins);
            t.phase = wrap_two_pi(anchor.components[ref_idx].phase + *t.phase);
            t.phase_relative_to_reference = false;
        }
    }

    // rebuild follower guesses from the converged reference when element
    // offsets are provided
    std::vector<Vector6d> follower_ig(n_sat);
    for (int s = 0; s < n_sat; ++s) follower_ig[s] = p.initial_states[s];
    if (!p.element_offsets.empty()) {
        if (static_cast<int>(p.element_offsets.size()) != n_sat)
            throw std::invalid_argument("one element offset per satellite required");
        const double t0 = p.schedule.epochs.front();
        const FrameTag native = model_frame(p.dynamics.model());
        StateVector6 ref_state = StateVector6::from_packed(
            ref.patchpoints[0], native, t0);
        if (native == FrameTag::MCI)
            ref_state = mci_to_brf(ref_state, p.dynamics.ephemeris(), p.dynamics.constants());
        const KeplerElements ref_oe =
            cartesian_to_kepler(brf_to_eof(ref_state, p.dynamics.constants()),
                                p.dynamics.constants());
        for (int s = 0; s < n_sat; ++s) {
            if (s == p.reference) continue;
            const KeplerElements& d = p.element_offsets[s];
            KeplerElements oe = ref_oe;
            oe.a += d.a;
            oe.e += d.e;
            oe.i += d.i;
            oe.raan = wrap_two_pi(oe.raan + d.raan);
            oe.argp = wrap_two_pi(oe.argp + d.argp);
            oe.mean_anomaly = wrap_two_pi(oe.mean_anomaly + d.mean_anomaly);
            StateVector6 brf = eof_to_brf(
                kepler_to_cartesian(oe, p.dynamics.constants(), t0), p.dynamics.constants());
            follower_ig[s] =
                (native == FrameTag::MCI)
                    ? brf_to_mci(brf, p.dynamics.ephemeris(), p.dynamics.constants()).packed()
                    : brf.packed();
        }
    }

    std::vector<int> followers;
    for (int s = 0; s < n_sat; ++s)
        if (s != p.reference) followers.push_back(s);

    const int workers = std::max(1, std::min<int>(p.options.threads,
                                                  static_cast<int>(followers.size())));
    std::vector<std::thread> pool;
    auto solve_one = [&](size_t fi) {
        const int s = followers[fi];
        try {
            ShootingProblem sp = make_problem(s, resolved[s]);
            sp.patchpoints[0] = follower_ig[s];
            result.satellites[s] = solve_single(sp);
        } catch (const std::exception& e) {
            result.errors[s] = e.what();
            result.satellites[s].converged = false;
        }
    };
    if (workers == 1) {
        for (size_t fi = 0; fi < followers.size(); ++fi) solve_one(fi);
    } else {
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (size_t fi = w; fi < followers.size(); fi += workers) solve_one(fi);
            });
        for (auto& th : pool) th.join();
    }

    result.converged = true;
    for (const auto& sat : result.satellites) result.converged &= sat.converged;
    return result;
}

PhaseDriftReport phase_drift_report(const Dynamics& dyn,
                                    const std::vector<Vector6d>& states, double t0,
                                    double horizon, int n_out, int reference,
                                    const OdeOptions& opts) {
    const int n_sat = static_cast<int>(states.size());
    PhaseDriftReport rep;
    rep.times.resize(n_out);
    for (int i = 0; i < n_out; ++i)
        rep.times[i] = t0 + horizon * i / std::max(1, n_out - 1);

    Eigen::MatrixXd mean_anom(n_sat, n_out), raan(n_sat, n_out);
    const FrameTag native = model_frame(dyn.model());
    for (int s = 0; s < n_sat; ++s) {
        std::vector<double> times = rep.times;
        propagate_sampled(dyn, states[s], t0, t0 + horizon, times, false, opts,
                          [&](int i, double t, const double* y) {
                              StateVector6 sv = StateVector6::from_packed(
                                  Eigen::Map<const Vector6d>(y), native, t);
                              if (native == FrameTag::MCI)
                                  sv = mci_to_brf(sv, dyn.ephemeris(), dyn.constants());
                              const StateVector6 eof = brf_to_eof(sv, dyn.constants());
                              const KeplerElements oe =
                                  cartesian_to_kepler(eof, dyn.constants());
                              mean_anom(s, i) = oe.mean_anomaly;
                              raan(s, i) = oe.raan;
                          });
    }

    auto unwrap_series = [&](Eigen::VectorXd v) {
        for (int i = 1; i < v.size(); ++i) {
            double d = v[i] - v[i - 1];
            while (d > kPi) {
                v[i] -= 2.0 * kPi;
                d = v[i] - v[i - 1];
            }
            while (d < -kPi) {
                v[i] += 2.0 * kPi;
                d = v[i] - v[i - 1];
            }
        }
        return v;
    };

    const int n_rel = n_sat - 1;
    rep.delta_mean_anomaly.resize(n_rel, n_out);
    rep.delta_raan.resize(n_rel, n_out);
    rep.slope_mean_anomaly.resize(n_rel);
    rep.slope_raan.resize(n_rel);
    int row = 0;
    for (int s = 0; s < n_sat; ++s) {
        if (s == reference) continue;
        Eigen::VectorXd dm(n_out), dr(n_out);
        for (int i = 0; i < n_out; ++i) {
            dm[i] = wrap_two_pi(mean_anom(s, i) - mean_anom(reference, i));
            dr[i] = wrap_two_pi(raan(s, i) - raan(reference, i));
        }
        dm = unwrap_series(dm);
        dr = unwrap_series(dr);
        rep.delta_mean_anomaly.row(row) = dm;
        rep.delta_raan.row(row) = dr;
        // least-squares slope
        const double tbar =
            std::accumulate(rep.times.begin(), rep.times.end(), 0.0) / n_out;
        double stt = 0.0, stm = 0.0, str = 0.0;
        for (int i = 0; i < n_out; ++i) {
            const double dt = rep.times[i] - tbar;
            stt += dt * dt;
            stm += dt * (dm[i] - dm.mean());
            str += dt * (dr[i] - dr.mean());
        }
        rep.slope_mean_anomaly[row] = stm / stt;
        rep.slope_raan[row] = str / stt;
        ++row;
    }
    return rep;
}

}  // namespace fdcorr
