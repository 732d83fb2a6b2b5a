#include "fdcorr/ephemeris.hpp"

#include <cmath>
#include <stdexcept>

namespace fdcorr {

namespace {

Eigen::Matrix3d rot_z(double a) {
    Eigen::Matrix3d m;
    m << std::cos(a), -std::sin(a), 0.0,
         std::sin(a),  std::cos(a), 0.0,
         0.0,          0.0,         1.0;
    return m;
}

Eigen::Matrix3d rot_z_rate(double a, double rate) {
    Eigen::Matrix3d m;
    m << -std::sin(a), -std::cos(a), 0.0,
          std::cos(a), -std::sin(a), 0.0,
          0.0,          0.0,         0.0;
    return rate * m;
}

}  // namespace

Eigen::Vector3d CircularProvider::body_position(Body b, double t) const {
    if (b != Body::Earth) throw std::runtime_error("circular provider has no Sun");
    // Earth-Moon separation is -x_hat in the rotating frame; rotate into MCI.
    return -Eigen::Vector3d(std::cos(t), std::sin(t), 0.0);
}

Eigen::Matrix3d CircularProvider::rotating_dcm(double t) const { return rot_z(t); }

Eigen::Matrix3d CircularProvider::rotating_dcm_rate(double t) const { return rot_z_rate(t, 1.0); }

Eigen::Vector3d BicircularProvider::body_position(Body b, double t) const {
    if (b == Body::Earth) return -Eigen::Vector3d(std::cos(t), std::sin(t), 0.0);
    if (b == Body::Sun) {
        const double a = constants_.sun_distance();
        const double ang = constants_.sun_rate() * t + sun_phase_;
        const Eigen::Vector3d sun_bary(a * std::cos(ang), a * std::sin(ang), 0.0);
        const Eigen::Vector3d moon_bary =
            (1.0 - constants_.mass_ratio) * Eigen::Vector3d(std::cos(t), std::sin(t), 0.0);
        return sun_bary - moon_bary;
    }
    throw std::runtime_error("unknown body");
}

Eigen::Matrix3d BicircularProvider::rotating_dcm(double t) const { return rot_z(t); }

Eigen::Matrix3d BicircularProvider::rotating_dcm_rate(double t) const { return rot_z_rate(t, 1.0); }

std::shared_ptr<const EphemerisProvider> make_provider(const std::string& name,
                                                       const SystemConstants& c,
                                                       double sun_phase_rad) {
    if (name == "circular") return std::make_shared<CircularProvider>(c);
    if (name == "bicircular") return std::make_shared<BicircularProvider>(c, sun_phase_rad);
    throw std::invalid_argument("unknown ephemeris provider: " + name);
}

}  // namespace fdcorr
