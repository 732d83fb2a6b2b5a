#include <doctest.h>

#include <random>

#include "fdcorr/dynamics.hpp"

using namespace fdcorr;

namespace {
const SystemConstants kConst = default_constants();
constexpr double kPi = 3.14159265358979323846;

Matrix6d finite_difference_jacobian(const std::function<Vector6d(const Vector6d&)>& f,
                                    const Vector6d& y, double h = 1e-7) {
    Matrix6d j;
    for (int c = 0; c < 6; ++c) {
        Vector6d yp = y, ym = y;
        yp[c] += h;
        ym[c] -= h;
        j.col(c) = (f(yp) - f(ym)) / (2.0 * h);
    }
    return j;
}

Vector6d rates_of(const Dynamics& dyn, double t, const Vector6d& y) {
    Vector6d out;
    dyn.state_rates(t, y.data(), out.data());
    return out;
}

}  // namespace

TEST_CASE("dam: semi-major axis rate is structurally zero") {
    KeplerElements oe;
    oe.a = 8000.0;
    oe.e = 0.3;
    oe.i = 1.1;
    oe.argp = 0.7;
    oe.raan = 2.0;
    oe.mean_anomaly = 0.1;
    const Vector6d r = dam_rates(oe, kConst);
    CHECK(r[0] == 0.0);
    CHECK(std::abs(r[1]) > 0.0);
}

TEST_CASE("dam: frozen-orbit equilibrium kills e, i and argp rates") {
    KeplerElements oe;
    oe.a = 10000.0;
    oe.i = 45.0 * kPi / 180.0;
    oe.e = dam_equilibrium_eccentricity(oe.i);
    oe.argp = kPi / 2.0;
    oe.raan = 0.3;
    oe.mean_anomaly = 1.0;
    CHECK(oe.e == doctest::Approx(0.40824829).epsilon(1e-8));
    const Vector6d r = dam_rates(oe, kConst);
    CHECK(std::abs(r[1]) < 1e-14);  // de/dt
    CHECK(std::abs(r[2]) < 1e-14);  // di/dt
    CHECK(std::abs(r[4]) < 1e-14);  // dargp/dt
    CHECK(r[3] < 0.0);              // node regresses for i < 90 deg
    CHECK(r[5] > 0.0);              // mean anomaly advances
}

TEST_CASE("dam: degenerate elements are rejected") {
    KeplerElements oe;
    oe.a = 10000.0;
    oe.e = 0.0;
    oe.i = 1.0;
    CHECK_THROWS_AS(dam_rates(oe, kConst), std::invalid_argument);
    oe.e = 0.5;
    oe.i = 0.0;
    CHECK_THROWS_AS(dam_rates(oe, kConst), std::invalid_argument);
}

TEST_CASE("cr3bp: acceleration vanishes at L1 with zero velocity") {
    const double mu = kConst.mass_ratio;
    const double x_l1 = l1_position(mu);
    Vector6d s;
    s << x_l1, 0, 0, 0, 0, 0;
    CHECK(cr3bp_accel(s, mu).norm() < 1e-12);
}

TEST_CASE("cr3bp: jacobian matches finite differences") {
    const double mu = kConst.mass_ratio;
    const Dynamics dyn(ModelId::CR3BP, kConst);
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Vector6d y;
        y << 0.8 + 0.3 * u(gen), 0.3 * u(gen), 0.2 * u(gen), 0.2 * u(gen), 0.4 * u(gen),
            0.1 * u(gen);
        const Matrix6d analytic = cr3bp_jacobian(y, mu);
        const Matrix6d fd = finite_difference_jacobian(
            [&](const Vector6d& v) { return rates_of(dyn, 0.0, v); }, y);
        CHECK((analytic - fd).norm() / fd.norm() < 1e-7);
    }
}

TEST_CASE("hfem: with no perturbers a circular orbit stays circular") {
    SystemConstants c = kConst;
    // provider with Earth removed is not offered; emulate the pure two-body
    // limit by zeroing the Earth's share of the nd gravitational parameter
    c.mass_ratio = 1.0;  // mu_moon = 1, mu_earth = 0
    const Dynamics dyn(ModelId::HFEM, c, std::make_shared<CircularProvider>(c));
    const double r = 0.01;
    const double v = std::sqrt(c.mu_moon() / r);
    Vector6d y;
    y << r, 0, 0, 0, v, 0;
    const Vector6d a0 = rates_of(dyn, 0.0, y);
    CHECK(a0.head<3>().norm() == doctest::Approx(v).epsilon(1e-13));
    CHECK(a0.tail<3>().norm() == doctest::Approx(c.mu_moon() / (r * r)).epsilon(1e-13));
}

TEST_CASE("hfem: jacobian matches finite differences (bicircular, Sun on)") {
    const Dynamics dyn(ModelId::HFEM, kConst, std::make_shared<BicircularProvider>(kConst));
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Vector6d y;
        y << 0.05 * u(gen), 0.05 * u(gen), 0.05 * u(gen), 0.3 * u(gen), 0.3 * u(gen),
            0.3 * u(gen);
        if (y.head<3>().norm() < 5e-3) y[0] += 0.01;
        const double t = 3.0 * u(gen);
        const Matrix6d analytic = hfem_jacobian(y, t, dyn.ephemeris(), kConst);
        const Matrix6d fd = finite_difference_jacobian(
            [&](const Vector6d& v) { return rates_of(dyn, t, v); }, y);
        CHECK((analytic - fd).norm() / fd.norm() < 1e-7);
    }
}

TEST_CASE("variational rates start from the identity STM") {
    const Dynamics dyn(ModelId::CR3BP, kConst);
    std::vector<double> y(42, 0.0);
    y[0] = 0.9;
    y[4] = 0.4;
    for (int i = 0; i < 6; ++i) y[6 + 7 * i] = 1.0;
    std::vector<double> dydt(42);
    dyn.variational_rates(0.0, y.data(), dydt.data());
    // dPhi/dt = A * I = A
    const Matrix6d a = cr3bp_jacobian(Eigen::Map<Vector6d>(y.data()), kConst.mass_ratio);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            CHECK(dydt[6 + 6 * i + j] == doctest::Approx(a(i, j)).epsilon(1e-14));
}

TEST_CASE("dam has no variational equations") {
    const Dynamics dyn(ModelId::DAM, kConst);
    std::vector<double> y(42, 0.1), dydt(42);
    CHECK_THROWS_AS(dyn.variational_rates(0.0, y.data(), dydt.data()), std::runtime_error);
}
