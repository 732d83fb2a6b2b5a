#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "fdcorr/periodic.hpp"
#include "fdcorr/propagation.hpp"

using namespace fdcorr;

namespace {
const SystemConstants kConst = default_constants();
constexpr double kPi = 3.14159265358979323846;

Vector6d dro_initial() {
    Vector6d y;
    y << 0.883749964899239, 0, 0, 0, 0.470425740470053, 0;
    return y;
}

OdeOptions tight() {
    OdeOptions o;
    o.rtol = 1e-12;
    o.atol = 1e-12;
    return o;
}

}  // namespace

TEST_CASE("periodic DRO closes after one period") {
    const Dynamics dyn(ModelId::CR3BP, kConst);
    const Vector6d end = propagate_state(dyn, dro_initial(), 0.0, 1.6, tight());
    CHECK((end - dro_initial()).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("zero-duration span is the identity") {
    const Dynamics dyn(ModelId::CR3BP, kConst);
    const Vector6d end = propagate_state(dyn, dro_initial(), 0.0, 0.0);
    CHECK((end - dro_initial()).norm() == 0.0);
}

TEST_CASE("jacobi constant is conserved along the DRO") {
    const Dynamics dyn(ModelId::CR3BP, kConst);
    const double c0 = jacobi_constant(dro_initial(), kConst.mass_ratio);
    std::vector<double> times;
    for (int i = 1; i <= 16; ++i) times.push_back(0.1 * i);
    double worst = 0.0;
    propagate_sampled(dyn, dro_initial(), 0.0, 1.6, times, false, tight(),
                      [&](int, double, const double* y) {
                          const double c = jacobi_constant(Eigen::Map<const Vector6d>(y),
                                                           kConst.mass_ratio);
                          worst = std::max(worst, std::abs(c - c0));
                      });
    CHECK(worst < 1e-11);
}

TEST_CASE("two-body circular orbit: radius error < 1e-10 over 100 periods") {
    SystemConstants c = kConst;
    c.mass_ratio = 1.0;  // pure point-mass Moon
    const Dynamics dyn(ModelId::HFEM, c, std::make_shared<CircularProvider>(c));
    const double r = 0.01;
    const double v = std::sqrt(1.0 / r);
    Vector6d y0;
    y0 << r, 0, 0, 0, v, 0;
    const double period = 2.0 * kPi * std::sqrt(r * r * r);
    const Vector6d end = propagate_state(dyn, y0, 0.0, 100.0 * period, tight());
    CHECK(std::abs(end.head<3>().norm() - r) < 1e-10);
}

TEST_CASE("stm is the identity at t = 0 and matches finite differences") {
    const Dynamics dyn(ModelId::CR3BP, kConst);
    CHECK((propagate_with_stm(dyn, dro_initial(), 0.0, 0.0).stm - Matrix6d::Identity())
              .norm() == 0.0);

    const double T = 0.8;
    const VariationalState v = propagate_with_stm(dyn, dro_initial(), 0.0, T, tight());
    for (int j = 0; j < 6; ++j) {
        const double h = 1e-8;
        Vector6d yp = dro_initial(), ym = dro_initial();
        yp[j] += h;
        ym[j] -= h;
        const Vector6d col =
            (propagate_state(dyn, yp, 0.0, T, tight()) -
             propagate_state(dyn, ym, 0.0, T, tight())) /
            (2.0 * h);
        CHECK((v.stm.col(j) - col).norm() / col.norm() < 1e-5);
    }
}

TEST_CASE("monodromy of the DRO is symplectic-determinant and elliptic") {
    const Dynamics dyn(ModelId::CR3BP, kConst);
    const PeriodicOrbit po{dro_initial(), 1.6};
    const Matrix6d m = monodromy(dyn, po, tight());
    CHECK(std::abs(m.determinant() - 1.0) < 1e-8);
    for (const auto& lam : monodromy_eigenvalues(m))
        CHECK(std::abs(lam) == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("dense trajectory interpolation matches direct propagation") {
    const Dynamics dyn(ModelId::CR3BP, kConst);
    const Trajectory traj = propagate_dense(dyn, dro_initial(), 0.0, 1.6, true, tight());
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.6);
    for (int k = 0; k < 12; ++k) {
        const double t = u(gen);
        const Vector6d direct = propagate_state(dyn, dro_initial(), 0.0, t, tight());
        CHECK((traj.state(t) - direct).lpNorm<Eigen::Infinity>() < 1e-10);
    }
    CHECK_THROWS_AS(traj.state(2.0), std::out_of_range);
}

TEST_CASE("sampled-signal partials match finite differences") {
    const Dynamics dyn(ModelId::CR3BP, kConst);
    const int n = 64;
    const double dt = 0.05;
    SignalRecipe recipe{0, FrameTag::BRF};
    const SampledSignal sig =
        sample_signal(dyn, dro_initial(), 0.0, n, dt, recipe, true, tight());
    REQUIRE(sig.has_partials());

    std::mt19937 gen(2);
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int trial = 0; trial < 4; ++trial) {
        const int i = pick(gen);
        for (int j = 0; j < 6; ++j) {
            const double h = 1e-7;
            Vector6d yp = dro_initial(), ym = dro_initial();
            yp[j] += h;
            ym[j] -= h;
            const SampledSignal sp = sample_signal(dyn, yp, 0.0, n, dt, recipe, false, tight());
            const SampledSignal sm = sample_signal(dyn, ym, 0.0, n, dt, recipe, false, tight());
            const double fd = (sp.values[i] - sm.values[i]) / (2.0 * h);
            if (std::abs(fd) > 1e-6)
                CHECK(sig.partials(i, j) == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("mci-frame signal extraction matches the rotating-frame pullback") {
    const Dynamics cr3bp(ModelId::CR3BP, kConst);
    const auto eph = std::make_shared<CircularProvider>(kConst);
    const Dynamics hfem(ModelId::HFEM, kConst, eph);

    StateVector6 s0;
    s0.position = dro_initial().head<3>();
    s0.velocity = dro_initial().tail<3>();
    s0.frame = FrameTag::BRF;
    s0.epoch = 0.0;
    const Vector6d mci0 = brf_to_mci(s0, *eph, kConst).packed();

    const int n = 32;
    const double dt = 0.05;
    const SignalRecipe recipe{0, FrameTag::BRF};
    const SampledSignal a = sample_signal(cr3bp, dro_initial(), 0.0, n, dt, recipe, false, tight());
    const SampledSignal b = sample_signal(hfem, mci0, 0.0, n, dt, recipe, false, tight());
    for (int i = 0; i < n; ++i)
        CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-9));
}

TEST_CASE("hfem with circular provider reproduces the CR3BP over a DRO period") {
    const auto eph = std::make_shared<CircularProvider>(kConst);
    const Dynamics cr3bp(ModelId::CR3BP, kConst);
    const Dynamics hfem(ModelId::HFEM, kConst, eph);

    StateVector6 s0;
    s0.position = dro_initial().head<3>();
    s0.velocity = dro_initial().tail<3>();
    s0.frame = FrameTag::BRF;
    const Vector6d mci0 = brf_to_mci(s0, *eph, kConst).packed();

    const double T = 1.6;
    const Vector6d brf_end = propagate_state(cr3bp, dro_initial(), 0.0, T, tight());
    const Vector6d mci_end = propagate_state(hfem, mci0, 0.0, T, tight());
    const StateVector6 back = mci_to_brf(
        StateVector6::from_packed(mci_end, FrameTag::MCI, T), *eph, kConst);
    CHECK((back.packed() - brf_end).lpNorm<Eigen::Infinity>() < 1e-6);
    // the frame map preserves the Jacobi constant under the circular provider
    CHECK(jacobi_constant(back.packed(), kConst.mass_ratio) ==
          doctest::Approx(jacobi_constant(dro_initial(), kConst.mass_ratio)).epsilon(1e-10));
}

TEST_CASE("stroboscopic sampling aliases the orbit rate to a constant") {
    SystemConstants c = kConst;
    c.mass_ratio = 1.0;
    const Dynamics dyn(ModelId::HFEM, c, std::make_shared<CircularProvider>(c));
    const double r = 0.01;
    Vector6d y0;
    y0 << r, 0, 0, 0, std::sqrt(1.0 / r), 0;
    const double period = 2.0 * kPi * std::sqrt(r * r * r);
    const SampledSignal strobe =
        stroboscopic_sample(dyn, y0, 0.0, 24, period, SignalRecipe{0, FrameTag::MCI}, tight());
    for (double v : strobe.values) CHECK(v == doctest::Approx(r).epsilon(1e-9));
    CHECK_THROWS_AS(
        stroboscopic_sample(dyn, y0, 0.0, 4, -1.0, SignalRecipe{0, FrameTag::MCI}, tight()),
        std::invalid_argument);
}

TEST_CASE("segment propagation reproduces a sliced continuous trajectory") {
    const Dynamics dyn(ModelId::CR3BP, kConst);
    const PatchpointSchedule schedule = PatchpointSchedule::uniform(0.0, 0.4, 4);
    std::vector<Vector6d> states(4);
    for (int s = 0; s < 4; ++s)
        states[s] = propagate_state(dyn, dro_initial(), 0.0, schedule.epochs[s], tight());

    const SegmentResult res = propagate_segments(dyn, states, schedule, true, tight(), 2);
    for (int s = 0; s + 1 < 4; ++s)
        CHECK((res.endpoints[s] - states[s + 1]).lpNorm<Eigen::Infinity>() < 1e-10);
    // last endpoint closes the period
    CHECK((res.endpoints[3] - dro_initial()).lpNorm<Eigen::Infinity>() < 1e-10);
    // chained segment STMs equal the single-shot monodromy
    Matrix6d chained = Matrix6d::Identity();
    for (int s = 0; s < 4; ++s) chained = res.stms[s] * chained;
    const Matrix6d mono = monodromy(dyn, PeriodicOrbit{dro_initial(), 1.6}, tight());
    CHECK((chained - mono).norm() / mono.norm() < 1e-8);
}

TEST_CASE("segment sampling stitches the signal and assigns owners") {
    const Dynamics dyn(ModelId::CR3BP, kConst);
    const PatchpointSchedule schedule = PatchpointSchedule::uniform(0.0, 0.4, 4);
    std::vector<Vector6d> states(4);
    for (int s = 0; s < 4; ++s)
        states[s] = propagate_state(dyn, dro_initial(), 0.0, schedule.epochs[s], tight());

    const int n = 64;
    const double dt = 1.6 / n;
    const SegmentSampling seg = sample_segments(dyn, states, schedule, n, dt,
                                                SignalRecipe{0, FrameTag::BRF}, true,
                                                tight(), 2);
    const SampledSignal whole =
        sample_signal(dyn, dro_initial(), 0.0, n, dt, SignalRecipe{0, FrameTag::BRF},
                      false, tight());
    for (int i = 0; i < n; ++i) {
        CHECK(seg.signal.values[i] == doctest::Approx(whole.values[i]).epsilon(1e-9));
        const int expect = std::min(3, static_cast<int>(i * dt / 0.4 + 1e-12));
        CHECK(seg.signal.owner[i] == expect);
    }
    CHECK(seg.signal.n_blocks == 4);
}

TEST_CASE("sampling past the propagated span is rejected") {
    const Dynamics dyn(ModelId::CR3BP, kConst);
    std::vector<double> times = {0.0, 2.0};
    CHECK_THROWS_AS(
        propagate_sampled(dyn, dro_initial(), 0.0, 1.0, times, false, tight(),
                          [](int, double, const double*) {}),
        std::out_of_range);
}
