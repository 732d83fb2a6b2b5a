#pragma once

#include <memory>
#include <string>

#include <Eigen/Core>

#include "fdcorr/constants.hpp"

namespace fdcorr {

enum class Body { Earth, Sun };

/// Source of perturbing-body positions and of the rotating-to-inertial
/// frame geometry. Positions are Moon-centered, expressed on the inertial
/// axes, in nd units. Implementations must be immutable after
/// construction; evaluations may be issued concurrently.
class EphemerisProvider {
  public:
    virtual ~EphemerisProvider() = default;

    virtual std::string name() const = 0;
    virtual bool has_body(Body b) const = 0;
    virtual Eigen::Vector3d body_position(Body b, double t) const = 0;

    /// Instantaneous Earth-Moon distance, in units of l_star.
    virtual double earth_moon_distance(double t) const = 0;
    /// d/dt of the above.
    virtual double earth_moon_distance_rate(double t) const = 0;

    /// Direction cosine matrix C = [x_hat y_hat z_hat] mapping rotating
    /// (BRF) axes onto inertial (MCI) axes, and its time derivative.
    virtual Eigen::Matrix3d rotating_dcm(double t) const = 0;
    virtual Eigen::Matrix3d rotating_dcm_rate(double t) const = 0;
};

/// Moon on a circular orbit, no Sun. The rotating frame spins at unit nd
/// rate about z with C(0) = I; l is identically 1.
class CircularProvider final : public EphemerisProvider {
  public:
    explicit CircularProvider(const SystemConstants& c) : constants_(c) {}

    std::string name() const override { return "circular"; }
    bool has_body(Body b) const override { return b == Body::Earth; }
    Eigen::Vector3d body_position(Body b, double t) const override;
    double earth_moon_distance(double) const override { return 1.0; }
    double earth_moon_distance_rate(double) const override { return 0.0; }
    Eigen::Matrix3d rotating_dcm(double t) const override;
    Eigen::Matrix3d rotating_dcm_rate(double t) const override;

  private:
    SystemConstants constants_;
};

/// Circular provider plus the Sun on a circular orbit about the
/// Earth-Moon barycenter, in the Earth-Moon plane. Supplies one external
/// forcing frequency (the synodic rate of the Sun line).
class BicircularProvider final : public EphemerisProvider {
  public:
    BicircularProvider(const SystemConstants& c, double sun_phase_rad = 0.0)
        : constants_(c), sun_phase_(sun_phase_rad) {}

    std::string name() const override { return "bicircular"; }
    bool has_body(Body b) const override { return b == Body::Earth || b == Body::Sun; }
    Eigen::Vector3d body_position(Body b, double t) const override;
    double earth_moon_distance(double) const override { return 1.0; }
    double earth_moon_distance_rate(double) const override { return 0.0; }
    Eigen::Matrix3d rotating_dcm(double t) const override;
    Eigen::Matrix3d rotating_dcm_rate(double t) const override;

  private:
    SystemConstants constants_;
    double sun_phase_;
};

/// Factory by name: "circular" or "bicircular". Hook point for an
/// external ephemeris adapter (e.g. a binary-kernel reader): implement
/// EphemerisProvider and extend this factory.
std::shared_ptr<const EphemerisProvider> make_provider(const std::string& name,
                                                       const SystemConstants& c,
                                                       double sun_phase_rad = 0.0);

}  // namespace fdcorr
