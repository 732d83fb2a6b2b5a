#include <doctest.h>

#include <complex>
#include <random>

#include "fdcorr/spectrum.hpp"

using namespace fdcorr;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

std::vector<double> tone(const DftContext& ctx, double nu, double amp, double phase) {
    std::vector<double> q(ctx.n());
    for (int i = 0; i < ctx.n(); ++i) q[i] = amp * std::cos(nu * ctx.times()[i] + phase);
    return q;
}

/// Independent oracle: direct windowed summation, no FFT machinery.
std::complex<double> direct_dft(const DftContext& ctx, const std::vector<double>& q,
                                double f) {
    std::complex<double> acc(0.0, 0.0);
    for (int i = 0; i < ctx.n(); ++i) {
        const double t = ctx.times()[i];
        acc += q[i] * ctx.window()[i] *
               std::complex<double>(std::cos(f * t), -std::sin(f * t));
    }
    return acc / static_cast<double>(ctx.n());
}

}  // namespace

TEST_CASE("window has unit mean for all even sizes >= 16") {
    for (int n : {16, 64, 100, 1024, 4096}) {
        DftContext ctx(n, 0.1);
        double sum = 0.0;
        for (double w : ctx.window()) sum += w;
        CHECK(sum / n == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(DftContext(15, 0.1), std::invalid_argument);
}

TEST_CASE("bin frequencies depend on the span only") {
    DftContext a(256, 0.1);     // T = 25.6
    DftContext b(512, 0.05);    // T = 25.6, doubled N
    CHECK(a.bin_width() == doctest::Approx(kTwoPi / 25.6).epsilon(1e-14));
    for (int k = 0; k <= 10; ++k)
        CHECK(a.bin_frequency(k) == doctest::Approx(b.bin_frequency(k)).epsilon(1e-14));
}

TEST_CASE("fft path matches the direct-summation oracle") {
    std::mt19937 gen(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n : {64, 96}) {  // power of two and Bluestein path
        DftContext ctx(n, 0.21);
        std::vector<double> q(n);
        for (auto& v : q) v = u(gen);
        const WindowedDft dft = dft_at_bins(ctx, q);
        for (int k = 0; k <= n / 2; ++k) {
            const std::complex<double> want = direct_dft(ctx, q, ctx.bin_frequency(k));
            CHECK(std::abs(dft.amplitudes[k] - want) < 1e-12);
        }
    }
}

TEST_CASE("constant signal concentrates at DC") {
    DftContext ctx(256, 0.1);
    std::vector<double> q(256, 3.7);
    const WindowedDft dft = dft_at_bins(ctx, q);
    CHECK(dft.amplitudes[0].real() == doctest::Approx(3.7).epsilon(1e-12));
    for (int k = 3; k <= 128; ++k) CHECK(dft.magnitude(k) < 1e-12);
}

TEST_CASE("on-bin tone: amplitude estimate within 1e-10") {
    DftContext ctx(1024, 0.05);
    const double nu = ctx.bin_frequency(97);
    const double amp = 0.734;
    const double phase = 1.21;
    const auto q = tone(ctx, nu, amp, phase);
    const WindowedDft dft = dft_at_bins(ctx, q);
    CHECK(2.0 * dft.magnitude(97) == doctest::Approx(amp).epsilon(1e-10));
}

TEST_CASE("dft_continuous matches bins and finite differences") {
    DftContext ctx(512, 0.07);
    std::mt19937 gen(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> q(512);
    for (auto& v : q) v = u(gen);

    const WindowedDft dft = dft_at_bins(ctx, q);
    for (int k : {3, 17, 100}) {
        const auto c = ctx.dft_continuous(q, ctx.bin_frequency(k));
        CHECK(std::abs(0.5 * c.c - dft.amplitudes[k].real()) < 1e-14);
        CHECK(std::abs(-0.5 * c.s - dft.amplitudes[k].imag()) < 1e-14);
    }

    const double f0 = 1.234;
    const double h = 1e-5;
    const auto mid = ctx.dft_continuous(q, f0);
    const auto lo = ctx.dft_continuous(q, f0 - h);
    const auto hi = ctx.dft_continuous(q, f0 + h);
    CHECK((hi.c - lo.c) / (2 * h) == doctest::Approx(mid.dc).epsilon(1e-6));
    CHECK((hi.s - lo.s) / (2 * h) == doctest::Approx(mid.ds).epsilon(1e-6));
    CHECK((hi.dc - lo.dc) / (2 * h) == doctest::Approx(mid.d2c).epsilon(1e-6));
    CHECK((hi.ds - lo.ds) / (2 * h) == doctest::Approx(mid.d2s).epsilon(1e-6));
}

TEST_CASE("single tone: |F| is maximized at the generating frequency") {
    DftContext ctx(4096, 0.05);
    const double nu = ctx.bin_frequency(200) + 0.41 * ctx.bin_width();  // off-bin
    const auto q = tone(ctx, nu, 1.0, 0.3);
    // Newton on d|F|/df = (C dC + S dS) / (2|F|)
    double f = ctx.bin_frequency(200);
    for (int it = 0; it < 30; ++it) {
        const auto d = ctx.dft_continuous(q, f);
        const double g = d.c * d.dc + d.s * d.ds;
        const double gp = d.dc * d.dc + d.ds * d.ds + d.c * d.d2c + d.s * d.d2s;
        const double step = -g / gp;
        f += step;
        if (std::abs(step) < 1e-14) break;
    }
    CHECK(f == doctest::Approx(nu).epsilon(1e-9));
}

TEST_CASE("basis functions at their own frequency approach 1 and 0") {
    DftContext ctx(4096, 0.05);
    const double nu = ctx.bin_frequency(150);
    const auto b = ctx.dft_basis_at_own_frequency(nu);
    CHECK(b.cc == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(std::abs(b.cs) < 1e-3);
    CHECK(b.ss == doctest::Approx(1.0).epsilon(1e-3));

    // refinement with N: doubling the sample count tightens cc toward 1
    DftContext fine(8192, 0.025);
    const auto bf = fine.dft_basis_at_own_frequency(fine.bin_frequency(300));
    CHECK(std::abs(bf.cc - 1.0) <= std::abs(b.cc - 1.0) + 1e-12);
}

TEST_CASE("basis nu-derivatives match finite differences") {
    DftContext ctx(512, 0.07);
    const double f = ctx.bin_frequency(40);
    const double nu = f + 0.3 * ctx.bin_width();
    const double h = 1e-6;
    const auto mid = ctx.dft_basis(nu, f);
    const auto lo = ctx.dft_basis(nu - h, f);
    const auto hi = ctx.dft_basis(nu + h, f);
    CHECK((hi.cc - lo.cc) / (2 * h) == doctest::Approx(mid.dcc).epsilon(1e-6));
    CHECK((hi.cs - lo.cs) / (2 * h) == doctest::Approx(mid.dcs).epsilon(1e-6));
    CHECK((hi.sc - lo.sc) / (2 * h) == doctest::Approx(mid.dsc).epsilon(1e-6));
    CHECK((hi.ss - lo.ss) / (2 * h) == doctest::Approx(mid.dss).epsilon(1e-6));

    const auto own_mid = ctx.dft_basis_at_own_frequency(nu);
    const auto own_lo = ctx.dft_basis_at_own_frequency(nu - h);
    const auto own_hi = ctx.dft_basis_at_own_frequency(nu + h);
    CHECK((own_hi.cc - own_lo.cc) / (2 * h) == doctest::Approx(own_mid.dcc).epsilon(1e-6));
    CHECK((own_hi.ss - own_lo.ss) / (2 * h) == doctest::Approx(own_mid.dss).epsilon(1e-6));
    CHECK(own_mid.dcc == doctest::Approx(-own_mid.dss).epsilon(1e-12));
}

TEST_CASE("peak detection finds well-separated tones in order") {
    DftContext ctx(2048, 0.05);
    const double nu1 = ctx.bin_frequency(120) + 0.2 * ctx.bin_width();
    const double nu2 = ctx.bin_frequency(400) - 0.35 * ctx.bin_width();
    std::vector<double> q(ctx.n());
    for (int i = 0; i < ctx.n(); ++i) {
        const double t = ctx.times()[i];
        q[i] = 1.0 * std::cos(nu1 * t + 0.5) + 0.3 * std::cos(nu2 * t + 2.0);
    }
    const auto peaks = detect_peaks(dft_at_bins(ctx, q), 5);
    REQUIRE(peaks.size() >= 2);
    CHECK(peaks[0].k == 120);
    CHECK(peaks[1].k == 400);
    // neighbor selection points toward the true off-bin frequency
    CHECK(peaks[0].nu_neighbor == doctest::Approx(ctx.bin_frequency(121)));
    CHECK(peaks[1].nu_neighbor == doctest::Approx(ctx.bin_frequency(399)));
}

TEST_CASE("pure DC has no interior peaks") {
    DftContext ctx(256, 0.1);
    std::vector<double> q(256, 1.0);
    CHECK(detect_peaks(dft_at_bins(ctx, q), 10).empty());
}

TEST_CASE("initial guesses: on-bin, zero-phase and half-bin tones") {
    DftContext ctx(4096, 0.05);
    const int k = 300;
    {
        const auto q = tone(ctx, ctx.bin_frequency(k), 0.8, 1.1);
        const auto peaks = detect_peaks(dft_at_bins(ctx, q), 1);
        REQUIRE(!peaks.empty());
        const FrequencyComponent g = initial_guess(peaks[0]);
        CHECK(g.nu == doctest::Approx(ctx.bin_frequency(k)).epsilon(1e-10));
        CHECK(g.amplitude == doctest::Approx(0.8).epsilon(1e-6));
        CHECK(std::abs(wrap_pi(g.phase - 1.1)) < 1e-2);
    }
    {
        const auto q = tone(ctx, ctx.bin_frequency(k), 1.0, 0.0);
        const auto peaks = detect_peaks(dft_at_bins(ctx, q), 1);
        const FrequencyComponent g = initial_guess(peaks[0]);
        CHECK(std::abs(wrap_pi(g.phase)) < 1e-6);
    }
    {
        const double nu = ctx.bin_frequency(k) + 0.5 * ctx.bin_width();
        const auto q = tone(ctx, nu, 1.0, 0.0);
        const auto peaks = detect_peaks(dft_at_bins(ctx, q), 1);
        const FrequencyComponent g = initial_guess(peaks[0]);
        CHECK(std::abs(g.nu - nu) <= 0.5 * ctx.bin_width() + 1e-12);
    }
}

TEST_CASE("peak frequencies are stable under time shifts; phases rotate") {
    DftContext ctx(2048, 0.05);
    const double nu = ctx.bin_frequency(180);
    const double shift = 7.3;  // start-time offset
    const auto q0 = tone(ctx, nu, 1.0, 0.4);
    const auto q1 = tone(ctx, nu, 1.0, 0.4 + nu * shift);  // same tone, shifted origin
    const auto p0 = detect_peaks(dft_at_bins(ctx, q0), 1);
    const auto p1 = detect_peaks(dft_at_bins(ctx, q1), 1);
    REQUIRE(!p0.empty());
    REQUIRE(!p1.empty());
    CHECK(p0[0].k == p1[0].k);
    const FrequencyComponent g0 = initial_guess(p0[0]);
    const FrequencyComponent g1 = initial_guess(p1[0]);
    CHECK(g0.amplitude == doctest::Approx(g1.amplitude).epsilon(1e-9));
    CHECK(std::abs(wrap_pi(g1.phase - g0.phase - nu * shift)) < 1e-6);
}

TEST_CASE("reconstructing a one-tone model reproduces the peak magnitude to 5%") {
    DftContext ctx(1024, 0.08);
    const double nu = ctx.bin_frequency(77) + 0.37 * ctx.bin_width();
    const auto q = tone(ctx, nu, 0.6, 2.6);
    const auto peaks = detect_peaks(dft_at_bins(ctx, q), 1);
    REQUIRE(!peaks.empty());
    const FrequencyComponent g = initial_guess(peaks[0]);
    std::vector<double> synth(ctx.n());
    for (int i = 0; i < ctx.n(); ++i) synth[i] = g.evaluate(ctx.times()[i]);
    const auto dft_synth = dft_at_bins(ctx, synth);
    const auto dft_orig = dft_at_bins(ctx, q);
    CHECK(dft_synth.magnitude(peaks[0].k) ==
          doctest::Approx(dft_orig.magnitude(peaks[0].k)).epsilon(0.05));
}

TEST_CASE("odd-length signals are rejected") {
    SampledSignal sig;
    sig.dt = 0.1;
    sig.values = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(dft_at_bins(sig), std::invalid_argument);
}
