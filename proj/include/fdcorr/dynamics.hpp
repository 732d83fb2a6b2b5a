#pragma once

#include <memory>
#include <string>

#include "fdcorr/frames.hpp"

namespace fdcorr {

/// The three dynamical models. DAM states are doubly-averaged Keplerian
/// elements (a in km), CR3BP states live in the BRF, HFEM states in the
/// MCI.
enum class ModelId { DAM, CR3BP, HFEM };

ModelId model_from_name(const std::string& name);
const char* model_name(ModelId m);
FrameTag model_frame(ModelId m);

// --- doubly-averaged model ----------------------------------------------

/// Rates of the doubly-averaged mean elements under the averaged Earth
/// perturbation (Lagrange planetary equations), per nd time. The
/// semi-major axis must be in km; its rate is structurally zero.
Vector6d dam_rates(const KeplerElements& oe, const SystemConstants& c);

/// Frozen-orbit equilibrium eccentricity for a given inclination:
/// e = sqrt(1 - 5/3 cos^2 i). Valid for cos^2 i <= 3/5.
double dam_equilibrium_eccentricity(double inclination);

// --- CR3BP ---------------------------------------------------------------

Eigen::Vector3d cr3bp_accel(const Vector6d& state, double mu);
/// Exact linearization of the CR3BP equations of motion.
Matrix6d cr3bp_jacobian(const Vector6d& state, double mu);
/// Jacobi constant C = 2V - v^2.
double jacobi_constant(const Vector6d& state, double mu);
/// x-coordinate of the collinear point L1 (between the primaries).
double l1_position(double mu);

// --- HFEM ------------------------------------------------------------------

Eigen::Vector3d hfem_accel(const Vector6d& state, double t, const EphemerisProvider& eph,
                           const SystemConstants& c);
Matrix6d hfem_jacobian(const Vector6d& state, double t, const EphemerisProvider& eph,
                       const SystemConstants& c);

// --- generic right-hand side ----------------------------------------------

/// Bundles a model with everything it needs to evaluate state and
/// variational derivatives. Pure and immutable; safe to share across
/// threads.
class Dynamics {
  public:
    Dynamics(ModelId model, const SystemConstants& c,
             std::shared_ptr<const EphemerisProvider> eph = nullptr);

    ModelId model() const { return model_; }
    const SystemConstants& constants() const { return constants_; }
    const EphemerisProvider& ephemeris() const;
    std::shared_ptr<const EphemerisProvider> ephemeris_ptr() const { return eph_; }

    /// dy/dt for the 6-dim state.
    void state_rates(double t, const double* y, double* dydt) const;
    /// dy/dt for state (6) + STM (36, row-major). DAM has no variational
    /// form and rejects this call.
    void variational_rates(double t, const double* y, double* dydt) const;

    /// A(t) = d(state_rates)/d(state) for the STM right-hand side.
    Matrix6d state_jacobian(double t, const Vector6d& y) const;

  private:
    ModelId model_;
    SystemConstants constants_;
    std::shared_ptr<const EphemerisProvider> eph_;
};

}  // namespace fdcorr
