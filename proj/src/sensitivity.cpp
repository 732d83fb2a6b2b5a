#include "fdcorr/sensitivity.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace fdcorr {

namespace {

/// Deterministic pairwise accumulation of 1x6 rows into per-block sums.
template <typename Weight>
Eigen::MatrixXd accumulate_rows(const SampledSignal& sig, int n_blocks, const Weight& w) {
    const int n = sig.size();
    std::function<Eigen::MatrixXd(int, int)> sum = [&](int lo, int hi) -> Eigen::MatrixXd {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n_blocks, 6);
        if (hi - lo <= 256) {
            for (int i = lo; i < hi; ++i)
                acc.row(sig.owner[i]) += w(i) * sig.partials.row(i);
            return acc;
        }
        const int mid = lo + (hi - lo) / 2;
        return sum(lo, mid) + sum(mid, hi);
    };
    return sum(0, n);
}

}  // namespace

SignalPartialSums signal_partials_at(const SampledSignal& sig, const DftContext& ctx,
                                     double f) {
    if (!sig.has_partials())
        throw std::invalid_argument("signal carries no state partials");
    const int nb = sig.n_blocks;
    const int n = sig.size();
    const auto& t = ctx.times();
    const auto& h = ctx.window();
    const double scale = 2.0 / n;

    SignalPartialSums out;
    out.u_cos = scale * accumulate_rows(sig, nb, [&](int i) { return h[i] * std::cos(f * t[i]); });
    out.u_sin = scale * accumulate_rows(sig, nb, [&](int i) { return h[i] * std::sin(f * t[i]); });
    out.v_cos = scale * accumulate_rows(sig, nb,
                                        [&](int i) { return -t[i] * h[i] * std::sin(f * t[i]); });
    out.v_sin = scale * accumulate_rows(sig, nb,
                                        [&](int i) { return t[i] * h[i] * std::cos(f * t[i]); });

    // The refinement works on q - mean(q); subtracting the mean couples
    // every sample to every block through dA0/dx_b = (1/N) sum_{I_b} rows.
    const Eigen::MatrixXd mean_rows =
        accumulate_rows(sig, nb, [&](int) { return 1.0 / n; });
    const std::vector<double> ones(n, 1.0);
    const auto wdft = ctx.dft_continuous(ones, f);  // window DFT C_h, S_h and slopes
    out.u_cos -= mean_rows * wdft.c;
    out.u_sin -= mean_rows * wdft.s;
    out.v_cos -= mean_rows * wdft.dc;
    out.v_sin -= mean_rows * wdft.ds;
    return out;
}

FrequencySensitivity lnaff_sensitivity(const SampledSignal& sig, const DftContext& ctx,
                                       const FrequencyComponent& xi) {
    const int nb = sig.n_blocks;
    // mean-removed working signal, matching the refinement
    std::vector<double> qw = sig.values;
    const double a0 = sig.mean();
    for (auto& v : qw) v -= a0;

    const auto d = ctx.dft_continuous(qw, xi.nu);
    const double mag2 = d.c * d.c + d.s * d.s;
    const double mag = std::sqrt(mag2);
    if (mag == 0.0) throw std::runtime_error("lnaff sensitivity: zero DFT magnitude");
    const auto sums = signal_partials_at(sig, ctx, xi.nu);

    Eigen::MatrixXd rhs(3, 6 * nb);
    for (int b = 0; b < nb; ++b) {
        const RowVector6d dc_dx = sums.u_cos.row(b);
        const RowVector6d ds_dx = sums.u_sin.row(b);
        const RowVector6d dcp_dx = sums.v_cos.row(b);  // d(dC/dnu)/dx
        const RowVector6d dsp_dx = sums.v_sin.row(b);
        const double l1 = d.c * d.dc + d.s * d.ds;
        const RowVector6d l2 = d.c * dc_dx + d.s * ds_dx;
        const RowVector6d l3 = d.dc * dc_dx + d.ds * ds_dx;
        const RowVector6d l4 = d.c * dcp_dx + d.s * dsp_dx;
        rhs.block<1, 6>(0, 6 * b) = -l1 / (2.0 * mag2 * mag) * l2 + (l3 + l4) / (2.0 * mag);
        rhs.block<1, 6>(1, 6 * b) = -dc_dx;
        rhs.block<1, 6>(2, 6 * b) = -ds_dx;
    }

    const Eigen::Matrix3d j = lnaff_jacobian(ctx, qw, xi);
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(j);
    if (!lu.isInvertible())
        throw std::runtime_error("lnaff sensitivity: singular refinement Jacobian");
    FrequencySensitivity out;
    out.n_blocks = nb;
    out.rows = -lu.solve(rhs);
    return out;
}

FrequencySensitivity gmsc_sensitivity(const SampledSignal& sig, const DftContext& ctx,
                                      const FrequencyComponent& xi, const GmscBins& bins) {
    const int nb = sig.n_blocks;
    const auto peak_sums = signal_partials_at(sig, ctx, bins.nu_peak);
    const auto nb_sums = signal_partials_at(sig, ctx, bins.nu_neighbor);

    Eigen::MatrixXd rhs(3, 6 * nb);
    for (int b = 0; b < nb; ++b) {
        rhs.block<1, 6>(0, 6 * b) = -peak_sums.u_cos.row(b);
        rhs.block<1, 6>(1, 6 * b) = -peak_sums.u_sin.row(b);
        rhs.block<1, 6>(2, 6 * b) =
            bins.cosine_row ? RowVector6d(-nb_sums.u_cos.row(b))
                            : RowVector6d(-nb_sums.u_sin.row(b));
    }
    const Eigen::Matrix3d j = gmsc_jacobian_block(ctx, xi, bins);
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(j);
    if (!lu.isInvertible())
        throw std::runtime_error("gmsc sensitivity: singular refinement Jacobian");
    FrequencySensitivity out;
    out.n_blocks = nb;
    out.rows = -lu.solve(rhs);
    return out;
}

FrequencySensitivity frequency_sensitivity(RefineMethod method, const SampledSignal& signal,
                                           const DftContext& ctx, const FrequencyComponent& xi,
                                           const GmscBins* bins) {
    if (method == RefineMethod::LNAFF) return lnaff_sensitivity(signal, ctx, xi);
    if (!bins) throw std::invalid_argument("gmsc sensitivity needs collocation bins");
    return gmsc_sensitivity(signal, ctx, xi, *bins);
}

}  // namespace fdcorr
