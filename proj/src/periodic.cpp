#include "fdcorr/periodic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace fdcorr {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

PeriodicOrbit correct_planar_perpendicular(const Dynamics& dyn, double x0,
                                           double ydot_guess, double period_guess,
                                           double tol, int max_iter,
                                           const OdeOptions& opts) {
    double ydot = ydot_guess;
    double t_half = 0.5 * period_guess;
    for (int it = 0; it < max_iter; ++it) {
        Vector6d y0;
        y0 << x0, 0.0, 0.0, 0.0, ydot, 0.0;
        const VariationalState v = propagate_with_stm(dyn, y0, 0.0, t_half, opts);
        const Eigen::Vector2d f(v.state[1], v.state[3]);  // y, xdot at T/2
        if (f.lpNorm<Eigen::Infinity>() < tol) {
            PeriodicOrbit orbit;
            orbit.state = y0;
            orbit.period = 2.0 * t_half;
            return orbit;
        }
        Vector6d rates;
        dyn.state_rates(t_half, v.state.data(), rates.data());
        Eigen::Matrix2d j;
        j << v.stm(1, 4), rates[1],
             v.stm(3, 4), rates[3];
        const Eigen::Vector2d step = j.fullPivLu().solve(-f);
        ydot += step[0];
        t_half += step[1];
    }
    throw std::runtime_error("planar periodic-orbit correction did not converge");
}

PeriodicOrbit correct_halo_fixed_period(const Dynamics& dyn, const Vector6d& guess,
                                        double period, double tol, int max_iter,
                                        const OdeOptions& opts) {
    Vector6d y0 = guess;
    y0[1] = 0.0;
    y0[3] = 0.0;
    y0[5] = 0.0;
    const double t_half = 0.5 * period;
    for (int it = 0; it < max_iter; ++it) {
        const VariationalState v = propagate_with_stm(dyn, y0, 0.0, t_half, opts);
        const Eigen::Vector3d f(v.state[1], v.state[3], v.state[5]);  // y, xdot, zdot
        if (f.lpNorm<Eigen::Infinity>() < tol) {
            PeriodicOrbit orbit;
            orbit.state = y0;
            orbit.period = period;
            return orbit;
        }
        Eigen::Matrix3d j;
        const int rows[3] = {1, 3, 5};
        const int cols[3] = {0, 2, 4};  // x, z, ydot
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) j(r, c) = v.stm(rows[r], cols[c]);
        const Eigen::Vector3d step = j.fullPivLu().solve(-f);
        y0[0] += step[0];
        y0[2] += step[1];
        y0[4] += step[2];
    }
    throw std::runtime_error("halo correction did not converge");
}

Matrix6d monodromy(const Dynamics& dyn, const PeriodicOrbit& orbit, const OdeOptions& opts) {
    return propagate_with_stm(dyn, orbit.state, 0.0, orbit.period, opts).stm;
}

std::vector<std::complex<double>> monodromy_eigenvalues(const Matrix6d& m) {
    Eigen::EigenSolver<Matrix6d> solver(m);
    std::vector<std::complex<double>> ev(6);
    for (int i = 0; i < 6; ++i) ev[i] = solver.eigenvalues()[i];
    std::sort(ev.begin(), ev.end(),
              [](const std::complex<double>& a, const std::complex<double>& b) {
                  return std::abs(a) > std::abs(b);
              });
    return ev;
}

std::vector<CenterMode> center_modes(const Matrix6d& m, double period,
                                     double unit_circle_tol, double min_imag) {
    Eigen::EigenSolver<Matrix6d> solver(m);
    std::vector<CenterMode> modes;
    for (int i = 0; i < 6; ++i) {
        const std::complex<double> lam = solver.eigenvalues()[i];
        if (lam.imag() <= min_imag) continue;                       // keep Im > 0 member
        if (std::abs(std::abs(lam) - 1.0) > unit_circle_tol) continue;
        if (std::abs(lam - std::complex<double>(1.0, 0.0)) < 1e-3) continue;  // trivial pair
        CenterMode cm;
        cm.eigenvalue = lam;
        cm.eigenvector = solver.eigenvectors().col(i);
        cm.rotation_number = std::atan2(std::abs(lam.imag()), lam.real());
        cm.quasi_frequency = cm.rotation_number / period;
        double out_of_plane = std::abs(cm.eigenvector[2]) + std::abs(cm.eigenvector[5]);
        cm.mostly_in_plane = out_of_plane < 1e-6 * cm.eigenvector.norm();
        modes.push_back(cm);
    }
    if (modes.empty()) throw std::runtime_error("monodromy has no center pair");
    std::sort(modes.begin(), modes.end(), [](const CenterMode& a, const CenterMode& b) {
        return a.rotation_number < b.rotation_number;
    });
    return modes;
}

EigenSeed seed_from_eigenstructure(const Dynamics& dyn, const PeriodicOrbit& orbit,
                                   int mode_index, double amplitude,
                                   const PatchpointSchedule* schedule,
                                   const OdeOptions& opts) {
    const Matrix6d m = monodromy(dyn, orbit, opts);
    const auto modes = center_modes(m, orbit.period);
    if (mode_index < 0 || mode_index >= static_cast<int>(modes.size()))
        throw std::out_of_range("center mode index out of range");
    EigenSeed seed;
    seed.mode = modes[mode_index];
    seed.nu_longitudinal = kTwoPi / orbit.period;

    const Eigen::Matrix<std::complex<double>, 6, 1> v = seed.mode.eigenvector;
    const double norm0 = v.real().norm();
    const double scale = (norm0 > 0.0) ? amplitude / norm0 : 0.0;
    seed.state = orbit.state + scale * v.real();

    if (schedule) {
        schedule->validate();
        // One dense revolution supplies both the orbit state and the STM at
        // any phase; eigenvalue powers carry the displacement across
        // revolutions.
        const Trajectory rev = propagate_dense(dyn, orbit.state, 0.0, orbit.period, true, opts);
        const double t0 = schedule->epochs.front();
        seed.patchpoints.resize(schedule->n_patchpoints());
        for (int k = 0; k < schedule->n_patchpoints(); ++k) {
            const double tau = schedule->epochs[k] - t0;
            const double revs = std::floor(tau / orbit.period + 1e-12);
            double s = tau - revs * orbit.period;
            if (s < 0.0) s = 0.0;
            const Vector6d base = rev.state(s);
            const Matrix6d phi = rev.stm(s);
            const std::complex<double> rot =
                std::pow(seed.mode.eigenvalue, static_cast<double>(revs));
            const Eigen::Matrix<std::complex<double>, 6, 1> dv =
                rot * (phi.cast<std::complex<double>>() * v);
            seed.patchpoints[k] = base + scale * dv.real();
        }
    }
    return seed;
}

}  // namespace fdcorr
