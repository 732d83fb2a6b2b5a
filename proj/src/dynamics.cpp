#include "fdcorr/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace fdcorr {

ModelId model_from_name(const std::string& name) {
    if (name == "dam") return ModelId::DAM;
    if (name == "cr3bp") return ModelId::CR3BP;
    if (name == "hfem") return ModelId::HFEM;
    throw std::invalid_argument("unknown model: " + name);
}

const char* model_name(ModelId m) {
    switch (m) {
        case ModelId::DAM: return "dam";
        case ModelId::CR3BP: return "cr3bp";
        case ModelId::HFEM: return "hfem";
    }
    return "?";
}

FrameTag model_frame(ModelId m) {
    switch (m) {
        case ModelId::DAM: return FrameTag::EOF_;
        case ModelId::CR3BP: return FrameTag::BRF;
        case ModelId::HFEM: return FrameTag::MCI;
    }
    return FrameTag::BRF;
}

Vector6d dam_rates(const KeplerElements& oe, const SystemConstants& c) {
    if (oe.e <= 0.0 || oe.e >= 1.0)
        throw std::invalid_argument("dam_rates requires e in (0,1)");
    if (oe.i <= 0.0 || oe.i >= 3.14159265358979323846)
        throw std::invalid_argument("dam_rates requires i in (0,pi)");
    const double n_sat = std::sqrt(c.mass_ratio * c.gm_earth_moon_km3s2 /
                                   (oe.a * oe.a * oe.a));  // [rad/s], a in km
    const double n_e = c.n_earth_rad_s();
    const double t_star = c.t_star_s();
    const double k = (1.0 - c.mass_ratio) * n_e * n_e * t_star / n_sat;
    const double e2 = oe.e * oe.e;
    const double root = std::sqrt(1.0 - e2);
    const double sin_i = std::sin(oe.i);
    const double sin_2i = std::sin(2.0 * oe.i);
    const double cos_2i = std::cos(2.0 * oe.i);
    const double sin_2w = std::sin(2.0 * oe.argp);
    const double cos_2w = std::cos(2.0 * oe.argp);

    // packed order matches KeplerElements::packed: a, e, i, raan, argp, M
    Vector6d rates;
    rates[0] = 0.0;
    rates[1] = (15.0 / 8.0) * k * oe.e * root * sin_i * sin_i * sin_2w;
    rates[2] = -(15.0 / 16.0) * k * (e2 / root) * sin_2i * sin_2w;
    rates[3] = (3.0 / 8.0) * k / root * (5.0 * e2 * cos_2w - 3.0 * e2 - 2.0) * std::cos(oe.i);
    rates[4] = (3.0 / 16.0) * k / root *
               ((3.0 + 2.0 * e2 + 5.0 * cos_2i) + 5.0 * (1.0 - 2.0 * e2 - cos_2i) * cos_2w);
    rates[5] = n_sat * t_star;
    return rates;
}

double dam_equilibrium_eccentricity(double inclination) {
    const double c2 = std::cos(inclination) * std::cos(inclination);
    const double arg = 1.0 - (5.0 / 3.0) * c2;
    if (arg < 0.0) throw std::invalid_argument("no frozen eccentricity below critical inclination");
    return std::sqrt(arg);
}

Eigen::Vector3d cr3bp_accel(const Vector6d& s, double mu) {
    const double x = s[0], y = s[1], z = s[2];
    const Eigen::Vector3d r_earth(x + mu, y, z);
    const Eigen::Vector3d r_moon(x - 1.0 + mu, y, z);
    const double d = r_earth.norm();
    const double r = r_moon.norm();
    if (d <= 0.0 || r <= 0.0) throw std::runtime_error("cr3bp: state at a primary");
    const double d3 = d * d * d;
    const double r3 = r * r * r;
    Eigen::Vector3d grad_v(x, y, 0.0);
    grad_v -= (1.0 - mu) / d3 * r_earth;
    grad_v -= mu / r3 * r_moon;
    // Coriolis: -2 z_hat x v
    return grad_v + Eigen::Vector3d(2.0 * s[4], -2.0 * s[3], 0.0);
}

Matrix6d cr3bp_jacobian(const Vector6d& s, double mu) {
    const double x = s[0], y = s[1], z = s[2];
    const Eigen::Vector3d re(x + mu, y, z);
    const Eigen::Vector3d rm(x - 1.0 + mu, y, z);
    const double d = re.norm(), r = rm.norm();
    const double d3 = d * d * d, d5 = d3 * d * d;
    const double r3 = r * r * r, r5 = r3 * r * r;

    Eigen::Matrix3d vxx = -((1.0 - mu) / d3 + mu / r3) * Eigen::Matrix3d::Identity();
    vxx += 3.0 * (1.0 - mu) / d5 * (re * re.transpose());
    vxx += 3.0 * mu / r5 * (rm * rm.transpose());
    vxx(0, 0) += 1.0;
    vxx(1, 1) += 1.0;

    Matrix6d a = Matrix6d::Zero();
    a.topRightCorner<3, 3>() = Eigen::Matrix3d::Identity();
    a.bottomLeftCorner<3, 3>() = vxx;
    a(3, 4) = 2.0;
    a(4, 3) = -2.0;
    return a;
}

double jacobi_constant(const Vector6d& s, double mu) {
    const double x = s[0], y = s[1], z = s[2];
    const double d = std::sqrt((x + mu) * (x + mu) + y * y + z * z);
    const double r = std::sqrt((x - 1.0 + mu) * (x - 1.0 + mu) + y * y + z * z);
    const double v2 = s[3] * s[3] + s[4] * s[4] + s[5] * s[5];
    return x * x + y * y + 2.0 * (1.0 - mu) / d + 2.0 * mu / r - v2;
}

double l1_position(double mu) {
    // Root of dV/dx on the x axis between the primaries.
    double x = 1.0 - std::cbrt(mu / 3.0);
    for (int it = 0; it < 100; ++it) {
        const double d = x + mu;
        const double r = x - 1.0 + mu;  // negative between primaries
        const double f = x - (1.0 - mu) / (d * d) + mu / (r * r);
        const double fp = 1.0 + 2.0 * (1.0 - mu) / (d * d * d) - 2.0 * mu / (r * r * r);
        const double step = f / fp;
        x -= step;
        if (std::abs(step) < 1e-15) break;
    }
    return x;
}

namespace {

inline Eigen::Matrix3d point_mass_gradient(const Eigen::Vector3d& rel, double gm) {
    // d/dr of (-gm * rel / |rel|^3)
    const double rn = rel.norm();
    const double r3 = rn * rn * rn;
    const double r5 = r3 * rn * rn;
    return -gm * (Eigen::Matrix3d::Identity() / r3 - 3.0 * (rel * rel.transpose()) / r5);
}

}  // namespace

Eigen::Vector3d hfem_accel(const Vector6d& s, double t, const EphemerisProvider& eph,
                           const SystemConstants& c) {
    const Eigen::Vector3d r = s.head<3>();
    const double rn = r.norm();
    if (rn <= 0.0) throw std::runtime_error("hfem: state at the Moon center");
    Eigen::Vector3d acc = -c.mu_moon() / (rn * rn * rn) * r;
    for (Body b : {Body::Earth, Body::Sun}) {
        if (!eph.has_body(b)) continue;
        const double gm = (b == Body::Earth) ? c.mu_earth() : c.mu_sun();
        const Eigen::Vector3d p = eph.body_position(b, t);  // body position, Moon-centered
        const Eigen::Vector3d body_to_moon = -p;
        const Eigen::Vector3d body_to_sc = r - p;
        const double dm = body_to_moon.norm();
        const double dc = body_to_sc.norm();
        if (dc <= 0.0) throw std::runtime_error("hfem: state at a perturbing body");
        acc += gm * (body_to_moon / (dm * dm * dm) - body_to_sc / (dc * dc * dc));
    }
    return acc;
}

Matrix6d hfem_jacobian(const Vector6d& s, double t, const EphemerisProvider& eph,
                       const SystemConstants& c) {
    const Eigen::Vector3d r = s.head<3>();
    Eigen::Matrix3d grad = point_mass_gradient(r, c.mu_moon());
    for (Body b : {Body::Earth, Body::Sun}) {
        if (!eph.has_body(b)) continue;
        const double gm = (b == Body::Earth) ? c.mu_earth() : c.mu_sun();
        const Eigen::Vector3d p = eph.body_position(b, t);
        grad += point_mass_gradient(r - p, gm);
    }
    Matrix6d a = Matrix6d::Zero();
    a.topRightCorner<3, 3>() = Eigen::Matrix3d::Identity();
    a.bottomLeftCorner<3, 3>() = grad;
    return a;
}

Dynamics::Dynamics(ModelId model, const SystemConstants& c,
                   std::shared_ptr<const EphemerisProvider> eph)
    : model_(model), constants_(c), eph_(std::move(eph)) {
    if (model_ == ModelId::HFEM && !eph_)
        throw std::invalid_argument("HFEM requires an ephemeris provider");
}

const EphemerisProvider& Dynamics::ephemeris() const {
    if (!eph_) throw std::runtime_error("no ephemeris provider attached");
    return *eph_;
}

void Dynamics::state_rates(double t, const double* y, double* dydt) const {
    switch (model_) {
        case ModelId::DAM: {
            const KeplerElements oe =
                KeplerElements::from_packed(Eigen::Map<const Vector6d>(y));
            Eigen::Map<Vector6d> out(dydt);
            out = dam_rates(oe, constants_);
            return;
        }
        case ModelId::CR3BP: {
            const Eigen::Map<const Vector6d> s(y);
            dydt[0] = y[3];
            dydt[1] = y[4];
            dydt[2] = y[5];
            Eigen::Map<Eigen::Vector3d>(dydt + 3) = cr3bp_accel(s, constants_.mass_ratio);
            return;
        }
        case ModelId::HFEM: {
            const Eigen::Map<const Vector6d> s(y);
            dydt[0] = y[3];
            dydt[1] = y[4];
            dydt[2] = y[5];
            Eigen::Map<Eigen::Vector3d>(dydt + 3) = hfem_accel(s, t, *eph_, constants_);
            return;
        }
    }
}

Matrix6d Dynamics::state_jacobian(double t, const Vector6d& y) const {
    switch (model_) {
        case ModelId::CR3BP: return cr3bp_jacobian(y, constants_.mass_ratio);
        case ModelId::HFEM: return hfem_jacobian(y, t, *eph_, constants_);
        case ModelId::DAM:
            throw std::runtime_error("DAM carries no variational equations");
    }
    return Matrix6d::Zero();
}

void Dynamics::variational_rates(double t, const double* y, double* dydt) const {
    state_rates(t, y, dydt);
    const Matrix6d a = state_jacobian(t, Eigen::Map<const Vector6d>(y));
    const Eigen::Map<const Matrix6d, 0, Eigen::Stride<1, 6>> phi(y + 6);  // row-major view
    Eigen::Map<Matrix6d, 0, Eigen::Stride<1, 6>> phidot(dydt + 6);
    phidot = a * phi;
}

}  // namespace fdcorr
