#pragma once

#include <complex>
#include <vector>

#include "fdcorr/propagation.hpp"

namespace fdcorr {

struct PeriodicOrbit {
    Vector6d state;
    double period = 0.0;
};

/// Correct a planar symmetric orbit (x-axis crossing, x0 held fixed) to a
/// perpendicular crossing at half period. Frees (ydot, T).
PeriodicOrbit correct_planar_perpendicular(const Dynamics& dyn, double x0,
                                           double ydot_guess, double period_guess,
                                           double tol = 1e-12, int max_iter = 30,
                                           const OdeOptions& opts = {});

/// Correct a halo-type orbit, symmetric about the x-z plane, holding the
/// period fixed. Frees (x, z, ydot); targets y = xdot = zdot = 0 at T/2.
PeriodicOrbit correct_halo_fixed_period(const Dynamics& dyn, const Vector6d& guess,
                                        double period, double tol = 1e-12,
                                        int max_iter = 30, const OdeOptions& opts = {});

Matrix6d monodromy(const Dynamics& dyn, const PeriodicOrbit& orbit,
                   const OdeOptions& opts = {});

/// One oscillatory (center) pair of the monodromy spectrum.
struct CenterMode {
    std::complex<double> eigenvalue;      ///< the Im > 0 member of the pair
    Eigen::Matrix<std::complex<double>, 6, 1> eigenvector;
    double rotation_number = 0.0;         ///< sigma = atan2(Im, Re)
    double quasi_frequency = 0.0;         ///< nu_Q = sigma / T
    bool mostly_in_plane = false;
};

/// Extract center pairs (|lambda| near 1, complex, away from the trivial
/// unit pair), sorted by rotation number. Throws if none is found.
std::vector<CenterMode> center_modes(const Matrix6d& m, double period,
                                     double unit_circle_tol = 5e-2,
                                     double min_imag = 1e-4);

/// All six monodromy eigenvalues, sorted by magnitude descending.
std::vector<std::complex<double>> monodromy_eigenvalues(const Matrix6d& m);

/// State(s) displaced along the real span of a center eigenvector: the
/// linear approximation of the nearby quasi-periodic torus. With a
/// schedule, patchpoints are displaced consistently with the linear flow
/// (STM within the period, eigenvalue powers across periods).
struct EigenSeed {
    Vector6d state;
    std::vector<Vector6d> patchpoints;
    CenterMode mode;
    double nu_longitudinal = 0.0;  ///< 2*pi / period
};

EigenSeed seed_from_eigenstructure(const Dynamics& dyn, const PeriodicOrbit& orbit,
                                   int mode_index, double amplitude,
                                   const PatchpointSchedule* schedule = nullptr,
                                   const OdeOptions& opts = {});

}  // namespace fdcorr
