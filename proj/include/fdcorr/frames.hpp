#pragma once

#include <Eigen/Core>

#include "fdcorr/constants.hpp"
#include "fdcorr/ephemeris.hpp"

namespace fdcorr {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using RowVector6d = Eigen::Matrix<double, 1, 6>;

/// BRF: barycentric rotating frame (x toward the Moon, z along the lunar
/// orbit angular momentum). EOF: Moon-centered frame rotating at constant
/// negative rate relative to BRF, used for orbital-element extraction.
/// MCI: Moon-centered inertial frame.
enum class FrameTag { BRF, EOF_, MCI };

const char* frame_name(FrameTag f);

/// Position + velocity in nd units, tagged with the frame it lives in.
struct StateVector6 {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
    FrameTag frame = FrameTag::BRF;
    double epoch = 0.0;

    Vector6d packed() const;
    static StateVector6 from_packed(const Vector6d& y, FrameTag f, double epoch);

    /// Throws if the state is not tagged with the expected frame.
    void require_frame(FrameTag expected) const;
};

/// Classical Keplerian elements. Angles in radians, normalized to
/// [0, 2*pi). The semi-major axis unit is contextual: nd for the EOF
/// cartesian conversions, km when driving the doubly-averaged rates.
struct KeplerElements {
    double a = 0.0;       ///< semi-major axis
    double e = 0.0;       ///< eccentricity, in [0,1) here
    double i = 0.0;       ///< inclination [rad]
    double raan = 0.0;    ///< right ascension of the ascending node [rad]
    double argp = 0.0;    ///< argument of perilune [rad]
    double mean_anomaly = 0.0;  ///< [rad]

    Vector6d packed() const;
    static KeplerElements from_packed(const Vector6d& y);
};

/// Wrap an angle to [0, 2*pi).
double wrap_two_pi(double a);
/// Wrap an angle to (-pi, pi].
double wrap_pi(double a);

/// Rotation by t about z and its time derivative (the EOF spin).
Eigen::Matrix3d eof_rotation(double t);
Eigen::Matrix3d eof_rotation_rate(double t);

/// Moon position in the BRF: (1-mu, 0, 0).
Eigen::Vector3d moon_position_brf(double mass_ratio);

// --- frame transformations ---------------------------------------------

StateVector6 brf_to_eof(const StateVector6& s, const SystemConstants& c);
StateVector6 eof_to_brf(const StateVector6& s, const SystemConstants& c);

StateVector6 brf_to_mci(const StateVector6& s, const EphemerisProvider& eph,
                        const SystemConstants& c);
StateVector6 mci_to_brf(const StateVector6& s, const EphemerisProvider& eph,
                        const SystemConstants& c);

/// 6x6 Jacobian of the MCI -> BRF state map at epoch t. Left-multiplied
/// against an MCI-state STM it yields partials of BRF components with
/// respect to upstream free variables.
Matrix6d mci_to_brf_jacobian(double t, const EphemerisProvider& eph,
                             const SystemConstants& c);

// --- Keplerian element conversions --------------------------------------

/// Osculating elements of a Moon-centered EOF state. mu is the nd
/// gravitational parameter of the Moon. Throws for e >= 1 (parabolic or
/// hyperbolic input) and for vanishing angular momentum.
///
/// Degenerate conventions (threshold 1e-11): circular orbits report
/// argp = 0 and fold the argument of latitude into the anomaly;
/// equatorial orbits report raan = 0 and measure argp from x.
KeplerElements cartesian_to_kepler(const Eigen::Vector3d& r, const Eigen::Vector3d& v,
                                   double mu);
KeplerElements cartesian_to_kepler(const StateVector6& s, const SystemConstants& c);

void kepler_to_cartesian(const KeplerElements& oe, double mu, Eigen::Vector3d& r,
                         Eigen::Vector3d& v);
StateVector6 kepler_to_cartesian(const KeplerElements& oe, const SystemConstants& c,
                                 double epoch = 0.0);

/// Solve Kepler's equation E - e*sin(E) = M for the eccentric anomaly.
double solve_kepler(double mean_anomaly, double e);

}  // namespace fdcorr
