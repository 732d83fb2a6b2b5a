#include "fdcorr/refine.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fdcorr {

RefineMethod refine_method_from_name(const std::string& name) {
    if (name == "lnaff") return RefineMethod::LNAFF;
    if (name == "gmsc") return RefineMethod::GMSC;
    throw std::invalid_argument("unknown refinement method: " + name);
}

const char* refine_method_name(RefineMethod m) {
    return m == RefineMethod::LNAFF ? "lnaff" : "gmsc";
}

double QuasiPeriodicModel::evaluate(double t) const {
    double q = a0;
    for (const auto& c : components) q += c.evaluate(t);
    return q;
}

std::vector<double> QuasiPeriodicModel::residual(const DftContext& ctx,
                                                 const std::vector<double>& q) const {
    std::vector<double> r(q.size());
    for (size_t i = 0; i < q.size(); ++i) r[i] = q[i] - evaluate(ctx.times()[i]);
    return r;
}

Eigen::Vector3d lnaff_constraints(const DftContext& ctx, const std::vector<double>& q,
                                  const FrequencyComponent& xi) {
    const auto d = ctx.dft_continuous(q, xi.nu);
    const double mag = std::hypot(d.c, d.s);
    if (mag == 0.0) throw std::runtime_error("lnaff: zero DFT magnitude at nu");
    const auto b = ctx.dft_basis_at_own_frequency(xi.nu);
    const double ac = xi.amplitude * std::cos(xi.phase);
    const double as = xi.amplitude * std::sin(xi.phase);
    Eigen::Vector3d f;
    f[0] = (d.c * d.dc + d.s * d.ds) / (2.0 * mag);
    f[1] = ac * b.cc - as * b.cs - d.c;
    f[2] = ac * b.sc - as * b.ss - d.s;
    return f;
}

Eigen::Matrix3d lnaff_jacobian(const DftContext& ctx, const std::vector<double>& q,
                               const FrequencyComponent& xi) {
    const auto d = ctx.dft_continuous(q, xi.nu);
    const double mag2 = d.c * d.c + d.s * d.s;
    const double mag = std::sqrt(mag2);
    if (mag == 0.0) throw std::runtime_error("lnaff: zero DFT magnitude at nu");
    const auto b = ctx.dft_basis_at_own_frequency(xi.nu);
    const double cth = std::cos(xi.phase), sth = std::sin(xi.phase);
    const double ac = xi.amplitude * cth;
    const double as = xi.amplitude * sth;

    Eigen::Matrix3d j;
    const double l1 = d.c * d.dc + d.s * d.ds;
    j(0, 0) = -l1 * l1 / (2.0 * mag2 * mag) +
              (d.dc * d.dc + d.ds * d.ds + d.c * d.d2c + d.s * d.d2s) / (2.0 * mag);
    j(0, 1) = 0.0;
    j(0, 2) = 0.0;

    j(1, 0) = ac * b.dcc - as * b.dcs - d.dc;
    j(1, 1) = cth * b.cc - sth * b.cs;
    j(1, 2) = -as * b.cc - ac * b.cs;

    j(2, 0) = ac * b.dsc - as * b.dss - d.ds;
    j(2, 1) = cth * b.sc - sth * b.ss;
    j(2, 2) = -as * b.sc - ac * b.ss;
    return j;
}

namespace {

Eigen::Vector3d gmsc_mode_rows_value(const DftContext& ctx,
                                     const std::vector<FrequencyComponent>& modes,
                                     const GmscBins& bins) {
    double c_peak = 0.0, s_peak = 0.0, cs_nb = 0.0;
    for (const auto& m : modes) {
        const auto bp = ctx.dft_basis(m.nu, bins.nu_peak);
        const auto bn = ctx.dft_basis(m.nu, bins.nu_neighbor);
        const double ac = m.amplitude * std::cos(m.phase);
        const double as = m.amplitude * std::sin(m.phase);
        c_peak += ac * bp.cc - as * bp.cs;
        s_peak += ac * bp.sc - as * bp.ss;
        cs_nb += bins.cosine_row ? (ac * bn.cc - as * bn.cs) : (ac * bn.sc - as * bn.ss);
    }
    return Eigen::Vector3d(c_peak, s_peak, cs_nb);
}

}  // namespace

Eigen::VectorXd gmsc_constraints(const DftContext& ctx, const std::vector<double>& q,
                                 const std::vector<FrequencyComponent>& modes,
                                 const std::vector<GmscBins>& bins) {
    if (modes.size() != bins.size())
        throw std::invalid_argument("modes and collocation bins must pair up");
    const int j = static_cast<int>(modes.size());
    Eigen::VectorXd f(3 * j);
    for (int l = 0; l < j; ++l) {
        const Eigen::Vector3d lhs = gmsc_mode_rows_value(ctx, modes, bins[l]);
        const auto dp = ctx.dft_continuous(q, bins[l].nu_peak);
        const auto dn = ctx.dft_continuous(q, bins[l].nu_neighbor);
        f[3 * l + 0] = lhs[0] - dp.c;
        f[3 * l + 1] = lhs[1] - dp.s;
        f[3 * l + 2] = lhs[2] - (bins[l].cosine_row ? dn.c : dn.s);
    }
    return f;
}

Eigen::Matrix3d gmsc_jacobian_block(const DftContext& ctx, const FrequencyComponent& xi,
                                    const GmscBins& bins) {
    const auto bp = ctx.dft_basis(xi.nu, bins.nu_peak);
    const auto bn = ctx.dft_basis(xi.nu, bins.nu_neighbor);
    const double cth = std::cos(xi.phase), sth = std::sin(xi.phase);
    const double ac = xi.amplitude * cth;
    const double as = xi.amplitude * sth;
    Eigen::Matrix3d j;
    j(0, 0) = ac * bp.dcc - as * bp.dcs;
    j(0, 1) = cth * bp.cc - sth * bp.cs;
    j(0, 2) = -as * bp.cc - ac * bp.cs;
    j(1, 0) = ac * bp.dsc - as * bp.dss;
    j(1, 1) = cth * bp.sc - sth * bp.ss;
    j(1, 2) = -as * bp.sc - ac * bp.ss;
    if (bins.cosine_row) {
        j(2, 0) = ac * bn.dcc - as * bn.dcs;
        j(2, 1) = cth * bn.cc - sth * bn.cs;
        j(2, 2) = -as * bn.cc - ac * bn.cs;
    } else {
        j(2, 0) = ac * bn.dsc - as * bn.dss;
        j(2, 1) = cth * bn.sc - sth * bn.ss;
        j(2, 2) = -as * bn.sc - ac * bn.ss;
    }
    return j;
}

Eigen::MatrixXd gmsc_jacobian(const DftContext& ctx,
                              const std::vector<FrequencyComponent>& modes,
                              const std::vector<GmscBins>& bins) {
    const int j = static_cast<int>(modes.size());
    Eigen::MatrixXd out(3 * j, 3 * j);
    for (int l = 0; l < j; ++l)
        for (int a = 0; a < j; ++a)
            out.block<3, 3>(3 * l, 3 * a) = gmsc_jacobian_block(ctx, modes[a], bins[l]);
    return out;
}

GmscBins gmsc_select_bins(const DftContext& ctx, const std::vector<double>& q,
                          const Peak& peak, const FrequencyComponent& xi) {
    (void)q;
    GmscBins bins;
    bins.nu_peak = peak.nu_hat;
    bins.nu_neighbor = peak.nu_neighbor;
    double inv_norm[2];
    for (int flavor = 0; flavor < 2; ++flavor) {
        bins.cosine_row = (flavor == 0);
        const Eigen::Matrix3d j = gmsc_jacobian_block(ctx, xi, bins);
        const Eigen::FullPivLU<Eigen::Matrix3d> lu(j);
        inv_norm[flavor] = lu.isInvertible() ? lu.inverse().norm()
                                             : std::numeric_limits<double>::infinity();
    }
    if (std::isinf(inv_norm[0]) && std::isinf(inv_norm[1]))
        throw std::runtime_error("gmsc: both candidate collocation systems are singular");
    bins.cosine_row = inv_norm[0] <= inv_norm[1];
    return bins;
}

namespace {

/// Newton with halving line search on the constraint norm. Converged when
/// the constraints drop below tol, or when the step stagnates at machine
/// level (the constraint scale can sit above an absolute tol for long
/// spans while the root is already pinned).
template <typename FnF, typename FnJ, typename Vec>
int newton_solve(Vec& x, const FnF& eval_f, const FnJ& eval_j, double tol, int max_iter,
                 double* final_norm, bool* stationary = nullptr) {
    Vec f = eval_f(x);
    double norm = f.template lpNorm<Eigen::Infinity>();
    int it = 0;
    if (stationary) *stationary = false;
    while (norm > tol && it < max_iter) {
        const auto j = eval_j(x);
        const Vec step = j.fullPivLu().solve(-f);
        if (step.template lpNorm<Eigen::Infinity>() <
            1e-14 * std::max(1.0, x.template lpNorm<Eigen::Infinity>())) {
            if (stationary) *stationary = true;
            break;
        }
        double alpha = 1.0;
        Vec x_new = x + step;
        Vec f_new = eval_f(x_new);
        double norm_new = f_new.template lpNorm<Eigen::Infinity>();
        for (int h = 0; h < 8 && !(norm_new < norm || std::isnan(norm)); ++h) {
            alpha *= 0.5;
            x_new = x + alpha * step;
            f_new = eval_f(x_new);
            norm_new = f_new.template lpNorm<Eigen::Infinity>();
        }
        if (norm_new >= norm) {
            // line search exhausted: accept the best point as stationary
            if (stationary) *stationary = true;
            break;
        }
        x = x_new;
        f = f_new;
        norm = norm_new;
        ++it;
        if (std::isnan(norm)) break;
    }
    if (final_norm) *final_norm = norm;
    return it;
}

FrequencyComponent unpack_xi(const Eigen::Vector3d& v) {
    return FrequencyComponent{v[0], v[1], v[2]};
}

void canonicalize(FrequencyComponent& c) {
    if (c.amplitude < 0.0) {
        c.amplitude = -c.amplitude;
        c.phase += 3.14159265358979323846;
    }
    c.phase = wrap_two_pi(c.phase);
}

}  // namespace

RefineResult refine_sequential(const SampledSignal& signal, int m, RefineMethod method,
                               const RefineOptions& opts) {
    DftContext ctx(signal.size(), signal.dt);
    return refine_sequential(ctx, signal.values, m, method, opts);
}

RefineResult refine_sequential(const DftContext& ctx, const std::vector<double>& values,
                               int m, RefineMethod method, const RefineOptions& opts) {
    if (m < 1) throw std::invalid_argument("refinement needs m >= 1");
    RefineResult out;
    out.report.method = method;
    auto& comps = out.model.components;

    auto mean_of = [&](const std::vector<double>& v) {
        SampledSignal tmp;
        tmp.values = v;
        tmp.dt = ctx.dt();
        return tmp.mean();
    };

    // a0 starts as the plain signal average and is re-averaged against the
    // fitted modes as they converge
    double a0 = mean_of(values);
    std::vector<double> work(values.size());
    // skip = -1: subtract every mode (residual); skip >= 0: subtract all but
    // one; skip = kSubtractNone: leave q - a0 intact for the joint solve
    constexpr int kSubtractNone = -2;
    auto rebuild_work = [&](int skip) {
        for (size_t i = 0; i < values.size(); ++i) {
            double v = values[i] - a0;
            const double t = ctx.times()[i];
            if (skip != kSubtractNone)
                for (int a = 0; a < static_cast<int>(comps.size()); ++a)
                    if (a != skip) v -= comps[a].evaluate(t);
            work[i] = v;
        }
    };
    auto update_a0 = [&] {
        std::vector<double> resid(values.size());
        for (size_t i = 0; i < values.size(); ++i) {
            double v = values[i];
            const double t = ctx.times()[i];
            for (const auto& c : comps) v -= c.evaluate(t);
            resid[i] = v;
        }
        a0 = mean_of(resid);
    };

    // peaks below the original spectrum's numerical floor terminate the peel
    const double top_magnitude = [&] {
        const WindowedDft dft = dft_at_bins(ctx, values);
        double top = 0.0;
        for (const auto& f : dft.amplitudes) top = std::max(top, std::abs(f));
        return top;
    }();
    const double peak_floor = top_magnitude * 1e-12;

    auto solve_lnaff_mode = [&](int a, double* norm, bool* stationary) {
        rebuild_work(a);
        Eigen::Vector3d x(comps[a].nu, comps[a].amplitude, comps[a].phase);
        const int iters = newton_solve(
            x,
            [&](const Eigen::Vector3d& v) { return lnaff_constraints(ctx, work, unpack_xi(v)); },
            [&](const Eigen::Vector3d& v) { return lnaff_jacobian(ctx, work, unpack_xi(v)); },
            opts.tol, opts.max_iterations, norm, stationary);
        comps[a] = unpack_xi(x);
        return iters;
    };

    auto solve_gmsc_joint = [&](double* norm, bool* stationary) {
        rebuild_work(kSubtractNone);  // q - a0, all modes live in the model side
        Eigen::VectorXd x(3 * comps.size());
        for (size_t a = 0; a < comps.size(); ++a)
            x.segment<3>(3 * a) << comps[a].nu, comps[a].amplitude, comps[a].phase;
        auto unpack_all = [&](const Eigen::VectorXd& v) {
            std::vector<FrequencyComponent> ms(comps.size());
            for (size_t a = 0; a < comps.size(); ++a)
                ms[a] = FrequencyComponent{v[3 * a], v[3 * a + 1], v[3 * a + 2]};
            return ms;
        };
        const int iters = newton_solve(
            x,
            [&](const Eigen::VectorXd& v) {
                return gmsc_constraints(ctx, work, unpack_all(v), out.gmsc_bins);
            },
            [&](const Eigen::VectorXd& v) {
                return gmsc_jacobian(ctx, unpack_all(v), out.gmsc_bins);
            },
            opts.tol, opts.max_iterations, norm, stationary);
        const auto ms = unpack_all(x);
        for (size_t a = 0; a < comps.size(); ++a) comps[a] = ms[a];
        return iters;
    };

    bool all_ok = true;
    bool exhausted = false;

    auto peel_peak = [&](const Peak& peak) {
        ComponentReport rep;
        bool stationary = false;
        if (method == RefineMethod::LNAFF) {
            comps.push_back(initial_guess(peak));
            rep.iterations = solve_lnaff_mode(static_cast<int>(comps.size()) - 1,
                                              &rep.constraint_norm, &stationary);
        } else {
            const FrequencyComponent guess = initial_guess(peak);
            out.gmsc_bins.push_back(gmsc_select_bins(ctx, work, peak, guess));
            comps.push_back(guess);
            rep.iterations = solve_gmsc_joint(&rep.constraint_norm, &stationary);
        }
        rep.converged = rep.constraint_norm <= opts.tol || stationary;
        all_ok = all_ok && rep.converged;
        out.report.components.push_back(rep);
        update_a0();
        return rep.converged;
    };

    for (int j = 0; j < m; ++j) {
        rebuild_work(-1);
        const WindowedDft dft = dft_at_bins(ctx, work);
        const auto peaks = detect_peaks(dft, 1, opts.guard_bins);
        if (peaks.empty() || peaks[0].magnitude() <= peak_floor) {
            exhausted = true;
            break;
        }
        if (!peel_peak(peaks[0])) break;
    }

    // targeted modes may rank below the m dominant peaks; peel the local
    // maximum nearest each requested frequency as an extra mode. Best
    // effort: a frequency with no nearby peak is simply skipped (the
    // caller's identification guards react to the absence).
    if (all_ok && opts.ensure_band > 0.0) {
        for (double want : opts.ensure_frequencies) {
            bool have = false;
            for (const auto& c : comps)
                have = have || std::abs(c.nu - want) <= opts.ensure_band;
            if (have) continue;
            rebuild_work(-1);
            const WindowedDft dft = dft_at_bins(ctx, work);
            const auto peaks =
                detect_peaks(dft, ctx.n() / 2, opts.guard_bins);
            const Peak* best = nullptr;
            double best_d = opts.ensure_band;
            for (const auto& p : peaks) {
                const double d = std::abs(p.nu_hat - want);
                if (d <= best_d && p.magnitude() > peak_floor) {
                    best_d = d;
                    best = &p;
                }
            }
            if (best && !peel_peak(*best)) {
                all_ok = false;
                break;
            }
        }
    }

    // clean-up sweeps: modes and a0 still carry each other's window leakage
    // after the forward pass
    if (all_ok && !comps.empty()) {
        for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
            Eigen::VectorXd before(3 * comps.size() + 1);
            for (size_t a = 0; a < comps.size(); ++a)
                before.segment<3>(3 * a) << comps[a].nu, comps[a].amplitude, comps[a].phase;
            before[3 * comps.size()] = a0;

            if (method == RefineMethod::LNAFF) {
                for (int a = 0; a < static_cast<int>(comps.size()); ++a) {
                    double norm = 0.0;
                    bool stationary = false;
                    solve_lnaff_mode(a, &norm, &stationary);
                    out.report.components[a].constraint_norm = norm;
                }
            } else {
                double norm = 0.0;
                bool stationary = false;
                solve_gmsc_joint(&norm, &stationary);
                for (auto& r : out.report.components) r.constraint_norm = norm;
            }
            update_a0();
            ++out.report.sweeps;

            Eigen::VectorXd after(3 * comps.size() + 1);
            for (size_t a = 0; a < comps.size(); ++a)
                after.segment<3>(3 * a) << comps[a].nu, comps[a].amplitude, comps[a].phase;
            after[3 * comps.size()] = a0;
            if ((after - before).lpNorm<Eigen::Infinity>() < 1e-13) break;
        }
    }

    out.model.a0 = a0;
    for (auto& c : comps) canonicalize(c);
    out.report.converged = all_ok && !exhausted && static_cast<int>(comps.size()) >= m;
    return out;
}

}  // namespace fdcorr
