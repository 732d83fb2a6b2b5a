#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdcorr/spectrum.hpp"

namespace fdcorr {

enum class RefineMethod { LNAFF, GMSC };

RefineMethod refine_method_from_name(const std::string& name);
const char* refine_method_name(RefineMethod m);

/// Truncated Fourier representation q(t) ~ a0 + sum A_j cos(nu_j t + theta_j).
struct QuasiPeriodicModel {
    double a0 = 0.0;
    std::vector<FrequencyComponent> components;

    double evaluate(double t) const;
    /// Residual q - model on the signal grid.
    std::vector<double> residual(const DftContext& ctx, const std::vector<double>& q) const;
};

struct ComponentReport {
    int iterations = 0;
    double constraint_norm = 0.0;
    bool converged = false;
};

struct RefineReport {
    RefineMethod method = RefineMethod::LNAFF;
    std::vector<ComponentReport> components;
    int sweeps = 0;
    bool converged = false;
};

struct RefineOptions {
    double tol = 1e-12;
    int max_iterations = 50;
    int guard_bins = 2;
    /// Gauss-Seidel re-peeling sweeps after the forward pass.
    int max_sweeps = 3;
    /// Frequencies that must end up refined even when their peaks rank
    /// below the m dominant ones: after the dominance passes, the local
    /// maximum nearest each entry (within ensure_band) is peeled as an
    /// extra mode. Keeps shrinking target modes trackable.
    std::vector<double> ensure_frequencies;
    double ensure_band = 0.0;
};

// --- L-NAFF --------------------------------------------------------------------

/// The three scalar constraints: stationarity of |F| in frequency, and
/// matching of the cosine/sine DFT components at nu.
Eigen::Vector3d lnaff_constraints(const DftContext& ctx, const std::vector<double>& q,
                                  const FrequencyComponent& xi);
/// Analytic 3x3 Jacobian of the constraints in (nu, A, theta). The
/// magnitude row is independent of A and theta.
Eigen::Matrix3d lnaff_jacobian(const DftContext& ctx, const std::vector<double>& q,
                               const FrequencyComponent& xi);

// --- GMS-C ----------------------------------------------------------------------

/// Collocation bins for one mode: the peak bin, its dominant neighbor,
/// and which of the cosine/sine rows is enforced at the neighbor.
struct GmscBins {
    double nu_peak = 0.0;
    double nu_neighbor = 0.0;
    bool cosine_row = true;
};

/// Pick the neighbor-row flavor giving the better conditioned single-mode
/// Jacobian (smaller inverse norm).
GmscBins gmsc_select_bins(const DftContext& ctx, const std::vector<double>& q,
                          const Peak& peak, const FrequencyComponent& xi);

/// Stacked collocation residuals for the first j modes refined
/// simultaneously: 3 rows per mode, matching the model's DFT to the
/// signal's DFT at each mode's peak and neighbor bins.
Eigen::VectorXd gmsc_constraints(const DftContext& ctx, const std::vector<double>& q,
                                 const std::vector<FrequencyComponent>& modes,
                                 const std::vector<GmscBins>& bins);
/// Dense stacked Jacobian, including cross-mode blocks.
Eigen::MatrixXd gmsc_jacobian(const DftContext& ctx,
                              const std::vector<FrequencyComponent>& modes,
                              const std::vector<GmscBins>& bins);

/// Single-mode 3x3 diagonal block of the stacked Jacobian.
Eigen::Matrix3d gmsc_jacobian_block(const DftContext& ctx, const FrequencyComponent& xi,
                                    const GmscBins& bins);

// --- sequential refinement -------------------------------------------------------

/// Peel the m dominant peaks from the signal. a0 is the signal mean for
/// both methods. L-NAFF refines one mode at a time against the residual
/// (plus clean-up sweeps); GMS-C re-solves the first j modes jointly at
/// step j. Per-mode collocation bins are available afterwards via
/// last_gmsc_bins on the report for sensitivity work.
struct RefineResult {
    QuasiPeriodicModel model;
    RefineReport report;
    std::vector<GmscBins> gmsc_bins;  // populated for GMS-C
};

RefineResult refine_sequential(const SampledSignal& signal, int m, RefineMethod method,
                               const RefineOptions& opts = {});
RefineResult refine_sequential(const DftContext& ctx, const std::vector<double>& values,
                               int m, RefineMethod method, const RefineOptions& opts = {});

}  // namespace fdcorr
