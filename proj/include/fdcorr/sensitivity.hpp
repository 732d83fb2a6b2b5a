#pragma once

#include "fdcorr/refine.hpp"

namespace fdcorr {

/// Rows d(nu)/dX, d(A)/dX, d(theta)/dX over the stacked free-variable
/// vector: 6 columns per patchpoint block. Built by differentiating the
/// converged refinement constraints through the implicit function
/// theorem; the per-sample partials dq(t_i)/dx ride the segment STMs.
struct FrequencySensitivity {
    Eigen::Matrix<double, 3, Eigen::Dynamic> rows;
    int n_blocks = 1;

    RowVector6d d_nu(int block = 0) const { return rows.block<1, 6>(0, 6 * block); }
    RowVector6d d_amplitude(int block = 0) const { return rows.block<1, 6>(1, 6 * block); }
    RowVector6d d_phase(int block = 0) const { return rows.block<1, 6>(2, 6 * block); }
};

/// Per-block accumulated DFT partial sums of the mean-removed signal.
/// Shared between the two methods; the refinement subtracts the signal
/// mean, so the partials carry the matching rank-one correction.
struct SignalPartialSums {
    Eigen::MatrixXd u_cos;   // n_blocks x 6: d C_q(f) / dx_b
    Eigen::MatrixXd u_sin;   // n_blocks x 6: d S_q(f) / dx_b
    Eigen::MatrixXd v_cos;   // n_blocks x 6: d (dC_q/dnu) / dx_b
    Eigen::MatrixXd v_sin;   // n_blocks x 6: d (dS_q/dnu) / dx_b
};

/// Assemble the partial sums at frequency f. Requires signal.has_partials().
SignalPartialSums signal_partials_at(const SampledSignal& signal, const DftContext& ctx,
                                     double f);

/// Sensitivity of an L-NAFF-refined triplet with respect to the
/// patchpoint states (3 x 6*n_blocks). Throws if the refinement Jacobian
/// is singular.
FrequencySensitivity lnaff_sensitivity(const SampledSignal& signal, const DftContext& ctx,
                                       const FrequencyComponent& xi);

/// GMS-C counterpart, differentiating the mode's own collocation block.
FrequencySensitivity gmsc_sensitivity(const SampledSignal& signal, const DftContext& ctx,
                                      const FrequencyComponent& xi, const GmscBins& bins);

FrequencySensitivity frequency_sensitivity(RefineMethod method, const SampledSignal& signal,
                                           const DftContext& ctx, const FrequencyComponent& xi,
                                           const GmscBins* bins);

}  // namespace fdcorr
