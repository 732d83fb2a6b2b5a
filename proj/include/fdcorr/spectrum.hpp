#pragma once

#include <complex>
#include <vector>

#include "fdcorr/propagation.hpp"

namespace fdcorr {

/// One spectral mode: frequency [rad per nd time], amplitude (signal
/// units), phase [rad]. Phases are canonicalized to [0, 2*pi) when
/// reported; correction loops may hold them unwrapped.
struct FrequencyComponent {
    double nu = 0.0;
    double amplitude = 0.0;
    double phase = 0.0;

    double evaluate(double t) const;
};

/// Precomputed sampling grid and order-2 Hann window for DFT work on
/// signals with n samples spaced dt apart. The window
/// h(i) = (2/3)(1 - cos(2*pi*i/n))^2 has unit mean.
class DftContext {
  public:
    DftContext(int n, double dt);

    int n() const { return n_; }
    double dt() const { return dt_; }
    double span() const { return dt_ * n_; }
    double bin_width() const { return bin_width_; }
    double bin_frequency(int k) const { return bin_width_ * k; }
    const std::vector<double>& window() const { return window_; }
    const std::vector<double>& times() const { return times_; }

    /// Continuous-frequency DFT of q at f: C = 2 Re F, S = -2 Im F, plus
    /// first and second frequency derivatives.
    struct Continuous {
        double c, s, dc, ds, d2c, d2s;
        double magnitude() const;  // |F| = sqrt(c^2 + s^2)/2
    };
    Continuous dft_continuous(const std::vector<double>& q, double f) const;

    /// DFTs of the basis signals cos(nu t), sin(nu t) evaluated at the
    /// fixed frequency f, with partial derivatives in nu.
    struct Basis {
        double cc, cs, sc, ss;
        double dcc, dcs, dsc, dss;
    };
    Basis dft_basis(double nu, double f) const;

    /// Basis evaluated at its own frequency (f = nu) with total
    /// d/d(nu) derivatives, as the magnitude-maximization constraints
    /// require.
    Basis dft_basis_at_own_frequency(double nu) const;

  private:
    int n_;
    double dt_;
    double bin_width_;
    std::vector<double> window_;
    std::vector<double> times_;
};

/// Full-bin windowed DFT, F(f_k) for 0 <= k <= n/2.
struct WindowedDft {
    double bin_width = 0.0;
    int n = 0;
    std::vector<std::complex<double>> amplitudes;  // n/2 + 1 entries

    double magnitude(int k) const { return std::abs(amplitudes[k]); }
    double c_q(int k) const { return 2.0 * amplitudes[k].real(); }
    double s_q(int k) const { return -2.0 * amplitudes[k].imag(); }
};

/// FFT-backed evaluation at the standard bins. n must be even; a power
/// of two uses the radix-2 path, other even sizes go through Bluestein.
WindowedDft dft_at_bins(const DftContext& ctx, const std::vector<double>& q);
WindowedDft dft_at_bins(const SampledSignal& signal);

/// A local maximum of |F| over the interior bins.
struct Peak {
    int k = 0;
    double nu_hat = 0.0;       ///< bin frequency of the peak
    double nu_neighbor = 0.0;  ///< dominant adjacent bin (larger |F|; ties pick lower)
    std::complex<double> f_prev, f_peak, f_next;

    double magnitude() const { return std::abs(f_peak); }
};

/// Local-maxima bins sorted by |F| descending. Bins within guard_bins of
/// DC or Nyquist are excluded (window-lobe contamination). Returns fewer
/// than max_count peaks when the spectrum runs out.
std::vector<Peak> detect_peaks(const WindowedDft& dft, int max_count, int guard_bins = 2);

/// DFT-seeded starting triplet for a peak: nu = bin frequency,
/// A = 2|F|, theta = atan2(-S, C).
FrequencyComponent initial_guess(const Peak& peak);

/// In-place complex FFT (forward), size a power of two.
void fft_radix2(std::vector<std::complex<double>>& a);
/// Forward DFT of arbitrary size via Bluestein's chirp-z algorithm.
std::vector<std::complex<double>> fft_bluestein(const std::vector<std::complex<double>>& a);

}  // namespace fdcorr
