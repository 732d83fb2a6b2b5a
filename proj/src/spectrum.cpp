#include "fdcorr/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace fdcorr {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_power_of_two(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Deterministic pairwise reduction of fn(i) over [0, n) into `width`
/// accumulators.
template <int Width, typename Fn>
void pairwise_accumulate(size_t lo, size_t hi, const Fn& fn, double* acc) {
    if (hi - lo <= 128) {
        double local[Width] = {0.0};
        double term[Width];
        for (size_t i = lo; i < hi; ++i) {
            fn(i, term);
            for (int w = 0; w < Width; ++w) local[w] += term[w];
        }
        for (int w = 0; w < Width; ++w) acc[w] += local[w];
        return;
    }
    const size_t mid = lo + (hi - lo) / 2;
    double left[Width] = {0.0}, right[Width] = {0.0};
    pairwise_accumulate<Width>(lo, mid, fn, left);
    pairwise_accumulate<Width>(mid, hi, fn, right);
    for (int w = 0; w < Width; ++w) acc[w] += left[w] + right[w];
}

}  // namespace

double FrequencyComponent::evaluate(double t) const {
    return amplitude * std::cos(nu * t + phase);
}

DftContext::DftContext(int n, double dt) : n_(n), dt_(dt) {
    if (n <= 0 || n % 2 != 0) throw std::invalid_argument("sample count must be even and positive");
    if (dt <= 0.0) throw std::invalid_argument("sample spacing must be positive");
    bin_width_ = kTwoPi / (dt * n);
    window_.resize(n);
    times_.resize(n);
    for (int i = 0; i < n; ++i) {
        const double u = 1.0 - std::cos(kTwoPi * i / n);
        window_[i] = (2.0 / 3.0) * u * u;
        times_[i] = dt * i;
    }
}

double DftContext::Continuous::magnitude() const { return 0.5 * std::hypot(c, s); }

DftContext::Continuous DftContext::dft_continuous(const std::vector<double>& q,
                                                  double f) const {
    if (static_cast<int>(q.size()) != n_)
        throw std::invalid_argument("signal length does not match the context");
    double acc[6] = {0.0};
    pairwise_accumulate<6>(
        0, static_cast<size_t>(n_),
        [&](size_t i, double* term) {
            const double t = times_[i];
            const double qh = q[i] * window_[i];
            const double co = std::cos(f * t);
            const double si = std::sin(f * t);
            term[0] = qh * co;
            term[1] = qh * si;
            term[2] = -t * qh * si;
            term[3] = t * qh * co;
            term[4] = -t * t * qh * co;
            term[5] = -t * t * qh * si;
        },
        acc);
    const double scale = 2.0 / n_;
    return Continuous{scale * acc[0], scale * acc[1], scale * acc[2],
                      scale * acc[3], scale * acc[4], scale * acc[5]};
}

DftContext::Basis DftContext::dft_basis(double nu, double f) const {
    // F_c(f) = (1/N) sum cos(nu t) h e^{-i f t}, F_s likewise with sin;
    // partials in nu hold f fixed.
    double acc[8] = {0.0};
    pairwise_accumulate<8>(
        0, static_cast<size_t>(n_),
        [&](size_t i, double* term) {
            const double t = times_[i];
            const double h = window_[i];
            const double cb = std::cos(nu * t), sb = std::sin(nu * t);
            const double cf = std::cos(f * t), sf = std::sin(f * t);
            term[0] = h * cb * cf;        // Cc
            term[1] = h * sb * cf;        // Cs
            term[2] = h * cb * sf;        // Sc
            term[3] = h * sb * sf;        // Ss
            term[4] = -t * h * sb * cf;   // dCc/dnu
            term[5] = t * h * cb * cf;    // dCs/dnu
            term[6] = -t * h * sb * sf;   // dSc/dnu
            term[7] = t * h * cb * sf;    // dSs/dnu
        },
        acc);
    const double scale = 2.0 / n_;
    Basis b;
    b.cc = scale * acc[0];
    b.cs = scale * acc[1];
    b.sc = scale * acc[2];
    b.ss = scale * acc[3];
    b.dcc = scale * acc[4];
    b.dcs = scale * acc[5];
    b.dsc = scale * acc[6];
    b.dss = scale * acc[7];
    return b;
}

DftContext::Basis DftContext::dft_basis_at_own_frequency(double nu) const {
    // Cc = (2/N) sum cos^2(nu t) h, etc., with total nu-derivatives since
    // both the basis and the evaluation frequency move together.
    double acc[6] = {0.0};
    pairwise_accumulate<6>(
        0, static_cast<size_t>(n_),
        [&](size_t i, double* term) {
            const double t = times_[i];
            const double h = window_[i];
            const double cb = std::cos(nu * t), sb = std::sin(nu * t);
            term[0] = h * cb * cb;             // Cc
            term[1] = h * cb * sb;             // Cs = Sc
            term[2] = h * sb * sb;             // Ss
            term[3] = -2.0 * t * h * sb * cb;  // dCc = -dSs
            term[4] = t * h * (cb * cb - sb * sb);  // dCs = dSc
            term[5] = 2.0 * t * h * sb * cb;   // dSs
        },
        acc);
    const double scale = 2.0 / n_;
    Basis b;
    b.cc = scale * acc[0];
    b.cs = scale * acc[1];
    b.sc = b.cs;
    b.ss = scale * acc[2];
    b.dcc = scale * acc[3];
    b.dcs = scale * acc[4];
    b.dsc = b.dcs;
    b.dss = scale * acc[5];
    return b;
}

void fft_radix2(std::vector<std::complex<double>>& a) {
    const size_t n = a.size();
    if (!is_power_of_two(n)) throw std::invalid_argument("radix-2 FFT needs a power of two");
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -kTwoPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

std::vector<std::complex<double>> fft_bluestein(const std::vector<std::complex<double>>& x) {
    const size_t n = x.size();
    size_t m = 1;
    while (m < 2 * n + 1) m <<= 1;
    std::vector<std::complex<double>> a(m, 0.0), b(m, 0.0), chirp(n);
    for (size_t i = 0; i < n; ++i) {
        // angle = pi * i^2 / n, computed mod 2n to avoid precision loss
        const size_t i2 = (i * i) % (2 * n);
        const double ang = 3.14159265358979323846 * static_cast<double>(i2) / n;
        chirp[i] = std::complex<double>(std::cos(ang), -std::sin(ang));
        a[i] = x[i] * chirp[i];
        b[i] = std::conj(chirp[i]);
        if (i > 0) b[m - i] = std::conj(chirp[i]);
    }
    fft_radix2(a);
    fft_radix2(b);
    for (size_t i = 0; i < m; ++i) a[i] *= b[i];
    // inverse FFT of a
    for (auto& v : a) v = std::conj(v);
    fft_radix2(a);
    std::vector<std::complex<double>> out(n);
    for (size_t i = 0; i < n; ++i)
        out[i] = std::conj(a[i]) / static_cast<double>(m) * chirp[i];
    return out;
}

WindowedDft dft_at_bins(const DftContext& ctx, const std::vector<double>& q) {
    const int n = ctx.n();
    if (static_cast<int>(q.size()) != n)
        throw std::invalid_argument("signal length does not match the context");
    std::vector<std::complex<double>> a(n);
    const auto& w = ctx.window();
    for (int i = 0; i < n; ++i) a[i] = q[i] * w[i];
    if (is_power_of_two(static_cast<size_t>(n)))
        fft_radix2(a);
    else
        a = fft_bluestein(a);
    WindowedDft out;
    out.bin_width = ctx.bin_width();
    out.n = n;
    out.amplitudes.resize(n / 2 + 1);
    for (int k = 0; k <= n / 2; ++k) out.amplitudes[k] = a[k] / static_cast<double>(n);
    return out;
}

WindowedDft dft_at_bins(const SampledSignal& signal) {
    DftContext ctx(signal.size(), signal.dt);
    return dft_at_bins(ctx, signal.values);
}

std::vector<Peak> detect_peaks(const WindowedDft& dft, int max_count, int guard_bins) {
    std::vector<Peak> peaks;
    const int kmax = static_cast<int>(dft.amplitudes.size()) - 1;
    double top = 0.0;
    for (int k = 0; k <= kmax; ++k) top = std::max(top, dft.magnitude(k));
    const double floor = top * 1e-13;  // machine-noise bins are not peaks
    for (int k = std::max(1, guard_bins); k <= kmax - std::max(1, guard_bins); ++k) {
        const double m = dft.magnitude(k);
        if (m <= floor) continue;
        if (m >= dft.magnitude(k - 1) && m >= dft.magnitude(k + 1)) {
            Peak p;
            p.k = k;
            p.nu_hat = dft.bin_width * k;
            p.f_prev = dft.amplitudes[k - 1];
            p.f_peak = dft.amplitudes[k];
            p.f_next = dft.amplitudes[k + 1];
            const double lo = std::abs(p.f_prev), hi = std::abs(p.f_next);
            p.nu_neighbor = (hi > lo) ? dft.bin_width * (k + 1) : dft.bin_width * (k - 1);
            peaks.push_back(p);
        }
    }
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const Peak& a, const Peak& b) { return a.magnitude() > b.magnitude(); });
    if (static_cast<int>(peaks.size()) > max_count) peaks.resize(max_count);
    return peaks;
}

FrequencyComponent initial_guess(const Peak& peak) {
    FrequencyComponent c;
    c.nu = peak.nu_hat;
    const double cq = 2.0 * peak.f_peak.real();
    const double sq = -2.0 * peak.f_peak.imag();
    c.amplitude = std::hypot(cq, sq);
    c.phase = std::atan2(-sq, cq);
    return c;
}

}  // namespace fdcorr
