#include "fdcorr/frames.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Geometry>

namespace fdcorr {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kDegenerateTol = 1e-11;
}  // namespace

const char* frame_name(FrameTag f) {
    switch (f) {
        case FrameTag::BRF: return "BRF";
        case FrameTag::EOF_: return "EOF";
        case FrameTag::MCI: return "MCI";
    }
    return "?";
}

Vector6d StateVector6::packed() const {
    Vector6d y;
    y << position, velocity;
    return y;
}

StateVector6 StateVector6::from_packed(const Vector6d& y, FrameTag f, double epoch) {
    StateVector6 s;
    s.position = y.head<3>();
    s.velocity = y.tail<3>();
    s.frame = f;
    s.epoch = epoch;
    return s;
}

void StateVector6::require_frame(FrameTag expected) const {
    if (frame != expected)
        throw std::invalid_argument(std::string("state frame is ") + frame_name(frame) +
                                    ", expected " + frame_name(expected));
}

Vector6d KeplerElements::packed() const {
    Vector6d y;
    y << a, e, i, raan, argp, mean_anomaly;
    return y;
}

KeplerElements KeplerElements::from_packed(const Vector6d& y) {
    return KeplerElements{y[0], y[1], y[2], y[3], y[4], y[5]};
}

double wrap_two_pi(double a) {
    double w = std::fmod(a, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    return w;
}

double wrap_pi(double a) {
    double w = wrap_two_pi(a);
    if (w > 3.14159265358979323846) w -= kTwoPi;
    return w;
}

Eigen::Matrix3d eof_rotation(double t) {
    Eigen::Matrix3d m;
    m << std::cos(t), -std::sin(t), 0.0,
         std::sin(t),  std::cos(t), 0.0,
         0.0,          0.0,         1.0;
    return m;
}

Eigen::Matrix3d eof_rotation_rate(double t) {
    Eigen::Matrix3d m;
    m << -std::sin(t), -std::cos(t), 0.0,
          std::cos(t), -std::sin(t), 0.0,
          0.0,          0.0,         0.0;
    return m;
}

Eigen::Vector3d moon_position_brf(double mass_ratio) {
    return Eigen::Vector3d(1.0 - mass_ratio, 0.0, 0.0);
}

StateVector6 brf_to_eof(const StateVector6& s, const SystemConstants& c) {
    s.require_frame(FrameTag::BRF);
    const double t = s.epoch;
    const Eigen::Matrix3d ce = eof_rotation(t);
    const Eigen::Matrix3d ce_dot = eof_rotation_rate(t);
    const Eigen::Vector3d rel = s.position - moon_position_brf(c.mass_ratio);
    StateVector6 out;
    out.position = ce * rel;
    out.velocity = ce_dot * rel + ce * s.velocity;
    out.frame = FrameTag::EOF_;
    out.epoch = t;
    return out;
}

StateVector6 eof_to_brf(const StateVector6& s, const SystemConstants& c) {
    s.require_frame(FrameTag::EOF_);
    const double t = s.epoch;
    const Eigen::Matrix3d ce = eof_rotation(t);
    const Eigen::Matrix3d ce_dot = eof_rotation_rate(t);
    StateVector6 out;
    out.position = ce.transpose() * s.position + moon_position_brf(c.mass_ratio);
    out.velocity = ce_dot.transpose() * s.position + ce.transpose() * s.velocity;
    out.frame = FrameTag::BRF;
    out.epoch = t;
    return out;
}

StateVector6 brf_to_mci(const StateVector6& s, const EphemerisProvider& eph,
                        const SystemConstants& c) {
    s.require_frame(FrameTag::BRF);
    const double t = s.epoch;
    const double l = eph.earth_moon_distance(t);
    const double ldot = eph.earth_moon_distance_rate(t);
    const Eigen::Matrix3d C = eph.rotating_dcm(t);
    const Eigen::Matrix3d Cdot = eph.rotating_dcm_rate(t);
    const Eigen::Vector3d rel = s.position - moon_position_brf(c.mass_ratio);
    StateVector6 out;
    out.position = l * (C * rel);
    out.velocity = ldot * (C * rel) + l * (Cdot * rel) + l * (C * s.velocity);
    out.frame = FrameTag::MCI;
    out.epoch = t;
    return out;
}

StateVector6 mci_to_brf(const StateVector6& s, const EphemerisProvider& eph,
                        const SystemConstants& c) {
    s.require_frame(FrameTag::MCI);
    const double t = s.epoch;
    const double l = eph.earth_moon_distance(t);
    const double ldot = eph.earth_moon_distance_rate(t);
    const Eigen::Matrix3d Ct = eph.rotating_dcm(t).transpose();
    const Eigen::Matrix3d Cdot_t = eph.rotating_dcm_rate(t).transpose();
    StateVector6 out;
    out.position = (Ct * s.position) / l + moon_position_brf(c.mass_ratio);
    out.velocity = -(ldot / (l * l)) * (Ct * s.position) + (Cdot_t * s.position) / l +
                   (Ct * s.velocity) / l;
    out.frame = FrameTag::BRF;
    out.epoch = t;
    return out;
}

Matrix6d mci_to_brf_jacobian(double t, const EphemerisProvider& eph,
                             const SystemConstants& c) {
    (void)c;
    const double l = eph.earth_moon_distance(t);
    const double ldot = eph.earth_moon_distance_rate(t);
    const Eigen::Matrix3d Ct = eph.rotating_dcm(t).transpose();
    const Eigen::Matrix3d Cdot_t = eph.rotating_dcm_rate(t).transpose();
    Matrix6d J = Matrix6d::Zero();
    J.topLeftCorner<3, 3>() = Ct / l;
    J.bottomLeftCorner<3, 3>() = -(ldot / (l * l)) * Ct + Cdot_t / l;
    J.bottomRightCorner<3, 3>() = Ct / l;
    return J;
}

double solve_kepler(double mean_anomaly, double e) {
    const double m = wrap_pi(mean_anomaly);
    double ecc_anom = (e < 0.8) ? m : 3.14159265358979323846 * (m >= 0 ? 1.0 : -1.0);
    for (int it = 0; it < 50; ++it) {
        const double f = ecc_anom - e * std::sin(ecc_anom) - m;
        const double fp = 1.0 - e * std::cos(ecc_anom);
        const double step = f / fp;
        ecc_anom -= step;
        if (std::abs(step) < 1e-15) break;
    }
    return ecc_anom;
}

KeplerElements cartesian_to_kepler(const Eigen::Vector3d& r, const Eigen::Vector3d& v,
                                   double mu) {
    const double rn = r.norm();
    const double vn2 = v.squaredNorm();
    if (rn <= 0.0) throw std::invalid_argument("zero radius");
    const Eigen::Vector3d h = r.cross(v);
    const double hn = h.norm();
    if (hn < 1e-300) throw std::invalid_argument("rectilinear orbit: zero angular momentum");
    const Eigen::Vector3d e_vec = ((vn2 - mu / rn) * r - r.dot(v) * v) / mu;
    const double e = e_vec.norm();
    const double energy = 0.5 * vn2 - mu / rn;
    if (e >= 1.0 || energy >= 0.0)
        throw std::invalid_argument("open orbit (e >= 1) not supported");
    KeplerElements oe;
    oe.a = -mu / (2.0 * energy);
    oe.e = e;
    oe.i = std::atan2(std::hypot(h.x(), h.y()), h.z());

    const bool equatorial = oe.i < kDegenerateTol ||
                            oe.i > 3.14159265358979323846 - kDegenerateTol;
    const bool circular = e < kDegenerateTol;

    const Eigen::Vector3d h_unit = h / hn;
    // signed in-plane angle from a to b, positive around h
    auto plane_angle = [&](const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
        return std::atan2(h_unit.dot(a.cross(b)), a.dot(b));
    };

    Eigen::Vector3d node = Eigen::Vector3d::UnitZ().cross(h);
    if (equatorial) {
        oe.raan = 0.0;
        node = Eigen::Vector3d::UnitX();
    } else {
        node.normalize();
        oe.raan = wrap_two_pi(std::atan2(node.y(), node.x()));
    }

    Eigen::Vector3d apse = e_vec;
    if (circular) {
        oe.argp = 0.0;
        apse = node;
    } else {
        apse /= e;
        oe.argp = wrap_two_pi(plane_angle(node, apse));
    }

    const double f = plane_angle(apse, r / rn);

    if (circular) {
        // anomaly measured from the node line; e = 0 makes E = f = M
        oe.mean_anomaly = wrap_two_pi(f);
    } else {
        const double ecc_anom =
            2.0 * std::atan2(std::sqrt(1.0 - e) * std::sin(0.5 * f),
                             std::sqrt(1.0 + e) * std::cos(0.5 * f));
        oe.mean_anomaly = wrap_two_pi(ecc_anom - e * std::sin(ecc_anom));
    }

    // fmod can land exactly on 2*pi after rounding; fold the boundary
    if (oe.raan >= kTwoPi) oe.raan = 0.0;
    if (oe.argp >= kTwoPi) oe.argp = 0.0;
    if (oe.mean_anomaly >= kTwoPi) oe.mean_anomaly = 0.0;
    return oe;
}

KeplerElements cartesian_to_kepler(const StateVector6& s, const SystemConstants& c) {
    s.require_frame(FrameTag::EOF_);
    return cartesian_to_kepler(s.position, s.velocity, c.mu_moon());
}

void kepler_to_cartesian(const KeplerElements& oe, double mu, Eigen::Vector3d& r,
                         Eigen::Vector3d& v) {
    if (oe.e < 0.0 || oe.e >= 1.0) throw std::invalid_argument("eccentricity outside [0,1)");
    if (oe.a <= 0.0) throw std::invalid_argument("non-positive semi-major axis");
    const double ecc_anom = solve_kepler(oe.mean_anomaly, oe.e);
    const double f = 2.0 * std::atan2(std::sqrt(1.0 + oe.e) * std::sin(0.5 * ecc_anom),
                                      std::sqrt(1.0 - oe.e) * std::cos(0.5 * ecc_anom));
    const double p = oe.a * (1.0 - oe.e * oe.e);
    const double rn = p / (1.0 + oe.e * std::cos(f));
    const Eigen::Vector3d r_pqw(rn * std::cos(f), rn * std::sin(f), 0.0);
    const double s = std::sqrt(mu / p);
    const Eigen::Vector3d v_pqw(-s * std::sin(f), s * (oe.e + std::cos(f)), 0.0);

    const Eigen::Matrix3d R =
        (Eigen::AngleAxisd(oe.raan, Eigen::Vector3d::UnitZ()) *
         Eigen::AngleAxisd(oe.i, Eigen::Vector3d::UnitX()) *
         Eigen::AngleAxisd(oe.argp, Eigen::Vector3d::UnitZ()))
            .toRotationMatrix();
    r = R * r_pqw;
    v = R * v_pqw;
}

StateVector6 kepler_to_cartesian(const KeplerElements& oe, const SystemConstants& c,
                                 double epoch) {
    StateVector6 s;
    kepler_to_cartesian(oe, c.mu_moon(), s.position, s.velocity);
    s.frame = FrameTag::EOF_;
    s.epoch = epoch;
    return s;
}

}  // namespace fdcorr
