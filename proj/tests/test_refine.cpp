#include <doctest.h>

#include <random>

#include "fdcorr/refine.hpp"

using namespace fdcorr;

namespace {
constexpr double kPi = 3.14159265358979323846;

std::vector<double> synth(const DftContext& ctx, double a0,
                          const std::vector<FrequencyComponent>& modes) {
    std::vector<double> q(ctx.n(), a0);
    for (int i = 0; i < ctx.n(); ++i)
        for (const auto& m : modes) q[i] += m.evaluate(ctx.times()[i]);
    return q;
}

Eigen::Matrix3d fd_jacobian_lnaff(const DftContext& ctx, const std::vector<double>& q,
                                  const FrequencyComponent& xi) {
    Eigen::Matrix3d j;
    const double h[3] = {1e-7, 1e-8, 1e-8};
    for (int c = 0; c < 3; ++c) {
        FrequencyComponent p = xi, m = xi;
        (&p.nu)[c] += h[c];
        (&m.nu)[c] -= h[c];
        j.col(c) = (lnaff_constraints(ctx, q, p) - lnaff_constraints(ctx, q, m)) /
                   (2.0 * h[c]);
    }
    return j;
}

}  // namespace

TEST_CASE("lnaff constraints vanish at the fixed point of a pure tone") {
    DftContext ctx(4096, 0.05);
    const FrequencyComponent truth{ctx.bin_frequency(141) + 0.23 * ctx.bin_width(), 0.8, 1.9};
    const auto q = synth(ctx, 0.0, {truth});
    const Eigen::Vector3d f = lnaff_constraints(ctx, q, truth);
    CHECK(std::abs(f[0]) < 1e-8 * ctx.span());  // magnitude row scales with T
    CHECK(std::abs(f[1]) < 1e-10);
    CHECK(std::abs(f[2]) < 1e-10);
}

TEST_CASE("lnaff constraint 1 tracks the frequency offset direction") {
    DftContext ctx(4096, 0.05);
    const FrequencyComponent truth{ctx.bin_frequency(141), 1.0, 0.0};
    const auto q = synth(ctx, 0.0, {truth});
    FrequencyComponent lo = truth, hi = truth;
    lo.nu -= 0.1 * ctx.bin_width();
    hi.nu += 0.1 * ctx.bin_width();
    // |F| has a max at truth: d|F|/dnu is positive below, negative above
    CHECK(lnaff_constraints(ctx, q, lo)[0] > 0.0);
    CHECK(lnaff_constraints(ctx, q, hi)[0] < 0.0);
}

TEST_CASE("lnaff constraints 2-3 scale linearly in the amplitude error") {
    DftContext ctx(2048, 0.05);
    const FrequencyComponent truth{ctx.bin_frequency(99), 0.5, 0.7};
    const auto q = synth(ctx, 0.0, {truth});
    FrequencyComponent x1 = truth, x2 = truth;
    x1.amplitude = truth.amplitude * 2.0;   // dA
    x2.amplitude = truth.amplitude * 3.0;   // 2 dA
    const Eigen::Vector3d f1 = lnaff_constraints(ctx, q, x1);
    const Eigen::Vector3d f2 = lnaff_constraints(ctx, q, x2);
    CHECK(f2[1] == doctest::Approx(2.0 * f1[1]).epsilon(1e-9));
    CHECK(f2[2] == doctest::Approx(2.0 * f1[2]).epsilon(1e-9));
}

TEST_CASE("lnaff jacobian: magnitude row is independent of A and theta") {
    DftContext ctx(1024, 0.1);
    const FrequencyComponent xi{ctx.bin_frequency(70) + 0.4 * ctx.bin_width(), 0.9, 0.4};
    const auto q = synth(ctx, 0.0, {{ctx.bin_frequency(70), 1.0, 0.2}});
    const Eigen::Matrix3d j = lnaff_jacobian(ctx, q, xi);
    CHECK(j(0, 1) == 0.0);
    CHECK(j(0, 2) == 0.0);
}

TEST_CASE("lnaff jacobian matches finite differences") {
    DftContext ctx(1024, 0.1);
    std::mt19937 gen(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<FrequencyComponent> modes = {
            {ctx.bin_frequency(60) + u(gen) * ctx.bin_width(), 0.5 + u(gen), 2.0 * kPi * u(gen)},
            {ctx.bin_frequency(200) + u(gen) * ctx.bin_width(), 0.2 + u(gen), 2.0 * kPi * u(gen)}};
        const auto q = synth(ctx, 0.3, modes);
        FrequencyComponent xi = modes[0];
        xi.nu += 0.2 * ctx.bin_width() * (u(gen) - 0.5);
        xi.amplitude *= 1.0 + 0.1 * (u(gen) - 0.5);
        xi.phase += 0.1 * (u(gen) - 0.5);
        const Eigen::Matrix3d analytic = lnaff_jacobian(ctx, q, xi);
        const Eigen::Matrix3d fd = fd_jacobian_lnaff(ctx, q, xi);
        CHECK((analytic - fd).norm() / fd.norm() < 1e-6);
    }
}

TEST_CASE("lnaff jacobian is well conditioned at a pure-tone fixed point") {
    DftContext ctx(4096, 0.05);
    const FrequencyComponent truth{ctx.bin_frequency(141) + 0.31 * ctx.bin_width(), 0.8, 1.9};
    const auto q = synth(ctx, 0.0, {truth});
    Eigen::Matrix3d j = lnaff_jacobian(ctx, q, truth);
    // scale the magnitude row into the same units as the others
    j.row(0) /= ctx.span();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(j);
    CHECK(svd.singularValues()(0) / svd.singularValues()(2) < 1e6);
}

TEST_CASE("gmsc residual vanishes for an exact on-bin tone") {
    DftContext ctx(2048, 0.05);
    const FrequencyComponent truth{ctx.bin_frequency(130), 0.6, 2.2};
    const auto q = synth(ctx, 0.0, {truth});
    const auto peaks = detect_peaks(dft_at_bins(ctx, q), 1);
    REQUIRE(!peaks.empty());
    const GmscBins bins = gmsc_select_bins(ctx, q, peaks[0], truth);
    const Eigen::VectorXd f = gmsc_constraints(ctx, q, {truth}, {bins});
    CHECK(f.lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("gmsc jacobian matches finite differences, including cross blocks") {
    DftContext ctx(1024, 0.1);
    std::vector<FrequencyComponent> modes = {
        {ctx.bin_frequency(50) + 0.2 * ctx.bin_width(), 1.0, 0.3},
        {ctx.bin_frequency(300) - 0.3 * ctx.bin_width(), 0.4, 1.4}};
    std::vector<GmscBins> bins = {{ctx.bin_frequency(50), ctx.bin_frequency(51), true},
                                  {ctx.bin_frequency(300), ctx.bin_frequency(299), false}};
    const auto q = synth(ctx, 0.1, modes);
    const Eigen::MatrixXd analytic = gmsc_jacobian(ctx, modes, bins);

    Eigen::MatrixXd fd(6, 6);
    const double h[3] = {1e-7, 1e-8, 1e-8};
    for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 3; ++c) {
            auto p = modes, m = modes;
            (&p[a].nu)[c] += h[c];
            (&m[a].nu)[c] -= h[c];
            fd.col(3 * a + c) = (gmsc_constraints(ctx, q, p, bins) -
                                 gmsc_constraints(ctx, q, m, bins)) /
                                (2.0 * h[c]);
        }
    CHECK((analytic - fd).norm() / fd.norm() < 1e-6);

    // far-separated tones: cross blocks are tiny against the diagonal
    const double diag = std::min(analytic.block<3, 3>(0, 0).norm(),
                                 analytic.block<3, 3>(3, 3).norm());
    CHECK(analytic.block<3, 3>(0, 3).norm() < 1e-3 * diag);
    CHECK(analytic.block<3, 3>(3, 0).norm() < 1e-3 * diag);
}

TEST_CASE("gmsc jacobian is symmetric under mode relabeling") {
    DftContext ctx(1024, 0.1);
    std::vector<FrequencyComponent> modes = {
        {ctx.bin_frequency(80) + 0.1 * ctx.bin_width(), 0.7, 0.9},
        {ctx.bin_frequency(240) + 0.1 * ctx.bin_width(), 0.7, 0.9}};
    std::vector<GmscBins> bins = {{ctx.bin_frequency(80), ctx.bin_frequency(81), true},
                                  {ctx.bin_frequency(240), ctx.bin_frequency(241), true}};
    const Eigen::MatrixXd j = gmsc_jacobian(ctx, modes, bins);
    // swapping the two identical-parameter modes permutes the blocks
    std::swap(modes[0], modes[1]);
    std::swap(bins[0], bins[1]);
    const Eigen::MatrixXd js = gmsc_jacobian(ctx, modes, bins);
    CHECK((j.block<3, 3>(0, 0) - js.block<3, 3>(3, 3)).norm() < 1e-14);
    CHECK((j.block<3, 3>(0, 3) - js.block<3, 3>(3, 0)).norm() < 1e-14);
}

TEST_CASE("gmsc neighbor-row choice reacts to the spectrum") {
    DftContext ctx(2048, 0.05);
    // a tone just above the bin pushes the dominant neighbor up; mirrored
    // placement flips it
    const double nu_hi = ctx.bin_frequency(130) + 0.4 * ctx.bin_width();
    const auto q_hi = synth(ctx, 0.0, {{nu_hi, 1.0, 0.4}});
    const auto p_hi = detect_peaks(dft_at_bins(ctx, q_hi), 1);
    REQUIRE(!p_hi.empty());
    CHECK(p_hi[0].nu_neighbor == doctest::Approx(ctx.bin_frequency(131)));

    const double nu_lo = ctx.bin_frequency(130) - 0.4 * ctx.bin_width();
    const auto q_lo = synth(ctx, 0.0, {{nu_lo, 1.0, 0.4}});
    const auto p_lo = detect_peaks(dft_at_bins(ctx, q_lo), 1);
    REQUIRE(!p_lo.empty());
    CHECK(p_lo[0].nu_neighbor == doctest::Approx(ctx.bin_frequency(129)));
}

TEST_CASE("refine m=1 reproduces a pure tone to 1e-9 of its amplitude") {
    DftContext ctx(4096, 0.05);
    const FrequencyComponent truth{ctx.bin_frequency(141) + 0.47 * ctx.bin_width(), 0.8, 1.9};
    const auto q = synth(ctx, 0.2, {truth});
    for (RefineMethod method : {RefineMethod::LNAFF, RefineMethod::GMSC}) {
        const RefineResult res = refine_sequential(ctx, q, 1, method);
        REQUIRE(res.report.converged);
        CHECK(res.model.a0 == doctest::Approx(0.2).epsilon(1e-9));
        double worst = 0.0;
        for (int i = 0; i < ctx.n(); ++i)
            worst = std::max(worst,
                             std::abs(res.model.evaluate(ctx.times()[i]) - q[i]));
        CHECK(worst < 1e-9 * truth.amplitude);
    }
}

TEST_CASE("three-tone generator oracle: triplets recovered to 1e-9") {
    DftContext ctx(8192, 0.05);
    const double df = ctx.bin_width();
    const std::vector<FrequencyComponent> truth = {
        {ctx.bin_frequency(400) + 0.21 * df, 1.0, 0.7},
        {ctx.bin_frequency(900) - 0.34 * df, 0.31, 2.9},
        {ctx.bin_frequency(1800) + 0.45 * df, 0.08, 4.4}};
    const auto q = synth(ctx, -0.4, truth);
    for (RefineMethod method : {RefineMethod::LNAFF, RefineMethod::GMSC}) {
        CAPTURE(refine_method_name(method));
        const RefineResult res = refine_sequential(ctx, q, 3, method);
        REQUIRE(res.report.converged);
        REQUIRE(res.model.components.size() == 3);
        for (int k = 0; k < 3; ++k) {
            const auto& got = res.model.components[k];
            CHECK(std::abs(got.nu - truth[k].nu) < 1e-9);
            CHECK(std::abs(got.amplitude - truth[k].amplitude) < 1e-9);
            CHECK(std::abs(wrap_pi(got.phase - truth[k].phase)) < 1e-8);
        }
    }
}

TEST_CASE("the two refinement methods agree on the dominant peak") {
    DftContext ctx(4096, 0.06);
    const std::vector<FrequencyComponent> truth = {
        {ctx.bin_frequency(300) + 0.18 * ctx.bin_width(), 1.0, 1.3},
        {ctx.bin_frequency(800) + 0.42 * ctx.bin_width(), 0.2, 0.4}};
    const auto q = synth(ctx, 0.0, truth);
    const RefineResult a = refine_sequential(ctx, q, 2, RefineMethod::LNAFF);
    const RefineResult b = refine_sequential(ctx, q, 2, RefineMethod::GMSC);
    REQUIRE(a.report.converged);
    REQUIRE(b.report.converged);
    CHECK(std::abs(a.model.components[0].nu - b.model.components[0].nu) < 1e-8);
    CHECK(std::abs(a.model.components[1].nu - b.model.components[1].nu) < 1e-8);
}

TEST_CASE("phase covariance under a start-time shift") {
    DftContext ctx(4096, 0.05);
    const double delta = 3.7;
    const std::vector<FrequencyComponent> truth = {
        {ctx.bin_frequency(200) + 0.28 * ctx.bin_width(), 0.9, 0.6},
        {ctx.bin_frequency(700) - 0.15 * ctx.bin_width(), 0.3, 2.0}};
    std::vector<FrequencyComponent> shifted = truth;
    for (auto& m : shifted) m.phase += m.nu * delta;
    const auto q0 = synth(ctx, 0.0, truth);
    const auto q1 = synth(ctx, 0.0, shifted);
    const RefineResult r0 = refine_sequential(ctx, q0, 2, RefineMethod::LNAFF);
    const RefineResult r1 = refine_sequential(ctx, q1, 2, RefineMethod::LNAFF);
    for (int k = 0; k < 2; ++k) {
        CHECK(std::abs(r1.model.components[k].nu - r0.model.components[k].nu) < 1e-10);
        CHECK(std::abs(r1.model.components[k].amplitude - r0.model.components[k].amplitude) <
              1e-10);
        CHECK(std::abs(wrap_pi(r1.model.components[k].phase - r0.model.components[k].phase -
                               r0.model.components[k].nu * delta)) < 1e-8);
    }
}

TEST_CASE("refinement reports a partial model when peaks run out") {
    DftContext ctx(256, 0.1);
    const std::vector<double> q(256, 2.5);  // pure DC: nothing to peel
    const RefineResult res = refine_sequential(ctx, q, 3, RefineMethod::LNAFF);
    CHECK(!res.report.converged);
    CHECK(res.model.components.empty());
    CHECK(res.model.a0 == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("asking for more modes than tones yields negligible extras") {
    DftContext ctx(1024, 0.1);
    const FrequencyComponent truth{ctx.bin_frequency(200) + 0.3 * ctx.bin_width(), 1.0, 0.9};
    const auto q = synth(ctx, 0.0, {truth});
    const RefineResult res = refine_sequential(ctx, q, 3, RefineMethod::LNAFF);
    REQUIRE(!res.model.components.empty());
    CHECK(std::abs(res.model.components[0].nu - truth.nu) < 1e-9);
    for (size_t a = 1; a < res.model.components.size(); ++a)
        CHECK(res.model.components[a].amplitude < 1e-6 * truth.amplitude);
}
