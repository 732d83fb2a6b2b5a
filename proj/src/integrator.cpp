#include "fdcorr/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace fdcorr {

#include "dop853_coefficients.inc"

namespace {
constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;
constexpr double kErrorExponent = -1.0 / 8.0;
}  // namespace

Dop853::Dop853(OdeRhs rhs, int dim, double t0, const double* y0, double tf,
               const OdeOptions& opts)
    : rhs_(std::move(rhs)), dim_(dim), t0_(t0), tf_(tf), opts_(opts) {
    direction_ = (tf >= t0) ? 1.0 : -1.0;
    y_.assign(y0, y0 + dim);
    y_prev_ = y_;
    f_.resize(dim);
    f_prev_.resize(dim);
    k_.assign(static_cast<size_t>(16) * dim, 0.0);
    dense_.assign(static_cast<size_t>(7) * dim, 0.0);
    t_ = t_prev_ = t0;
    rhs_(t0, y_.data(), f_.data());
    ++n_rhs_;
    h_ = (opts.initial_step > 0.0) ? opts.initial_step : initial_step_size();
    h_ = std::min(h_, opts_.max_step);
    if (tf == t0) done_ = true;
}

double Dop853::initial_step_size() const {
    const int edim = (opts_.error_control_dim > 0)
                         ? std::min(opts_.error_control_dim, dim_)
                         : dim_;
    double d0 = 0.0, d1 = 0.0;
    for (int i = 0; i < edim; ++i) {
        const double scale = opts_.atol + opts_.rtol * std::abs(y_[i]);
        d0 += (y_[i] / scale) * (y_[i] / scale);
        d1 += (f_[i] / scale) * (f_[i] / scale);
    }
    d0 = std::sqrt(d0 / edim);
    d1 = std::sqrt(d1 / edim);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    std::vector<double> y1(dim_), f1(dim_);
    for (int i = 0; i < dim_; ++i) y1[i] = y_[i] + h0 * direction_ * f_[i];
    rhs_(t0_ + h0 * direction_, y1.data(), f1.data());
    double d2 = 0.0;
    for (int i = 0; i < edim; ++i) {
        const double scale = opts_.atol + opts_.rtol * std::abs(y_[i]);
        const double df = (f1[i] - f_[i]) / scale;
        d2 += df * df;
    }
    d2 = std::sqrt(d2 / edim) / h0;
    double h1;
    if (d1 <= 1e-15 && d2 <= 1e-15)
        h1 = std::max(1e-6, h0 * 1e-3);
    else
        h1 = std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
    return std::min({100.0 * h0, h1, opts_.max_step, std::abs(tf_ - t0_)});
}

double Dop853::error_norm(double h) const {
    const int edim = (opts_.error_control_dim > 0)
                         ? std::min(opts_.error_control_dim, dim_)
                         : dim_;
    double e5 = 0.0, e3 = 0.0;
    for (int i = 0; i < edim; ++i) {
        double s5 = 0.0, s3 = 0.0;
        for (int s = 0; s < 13; ++s) {
            const double ks = k_[static_cast<size_t>(s) * dim_ + i];
            s5 += dop853::kE5[s] * ks;
            s3 += dop853::kE3[s] * ks;
        }
        const double scale =
            opts_.atol + opts_.rtol * std::max(std::abs(y_prev_[i]), std::abs(y_[i]));
        s5 /= scale;
        s3 /= scale;
        e5 += s5 * s5;
        e3 += s3 * s3;
    }
    if (e5 == 0.0 && e3 == 0.0) return 0.0;
    const double denom = e5 + 0.01 * e3;
    return std::abs(h) * e5 / std::sqrt(denom * edim);
}

bool Dop853::step() {
    if (done_) return false;
    const double t_bound = tf_;
    double h_abs = std::min(h_, opts_.max_step);
    long guard = 0;
    std::vector<double> y_new(dim_);

    while (true) {
        if (++guard > 200)
            throw std::runtime_error("dop853: step size collapsed at t = " + std::to_string(t_));
        const double min_step =
            10.0 * std::abs(std::nextafter(t_, direction_ * 1e308) - t_);
        if (h_abs < min_step) h_abs = min_step;
        double h = h_abs * direction_;
        double t_new = t_ + h;
        if (direction_ * (t_new - t_bound) > 0.0) t_new = t_bound;
        h = t_new - t_;
        h_abs = std::abs(h);

        // stages
        std::memcpy(k_.data(), f_.data(), sizeof(double) * dim_);
        std::vector<double> y_stage(dim_);
        for (int s = 1; s < dop853::kStages; ++s) {
            for (int i = 0; i < dim_; ++i) {
                double acc = 0.0;
                for (int j = 0; j < s; ++j)
                    acc += dop853::kA[s][j] * k_[static_cast<size_t>(j) * dim_ + i];
                y_stage[i] = y_[i] + h * acc;
            }
            rhs_(t_ + dop853::kC[s] * h, y_stage.data(), k_.data() + static_cast<size_t>(s) * dim_);
            ++n_rhs_;
        }
        for (int i = 0; i < dim_; ++i) {
            double acc = 0.0;
            for (int s = 0; s < dop853::kStages; ++s)
                acc += dop853::kB[s] * k_[static_cast<size_t>(s) * dim_ + i];
            y_new[i] = y_[i] + h * acc;
        }
        // K row 12 holds f(t_new, y_new)
        rhs_(t_new, y_new.data(), k_.data() + static_cast<size_t>(12) * dim_);
        ++n_rhs_;

        y_prev_ = y_;
        std::swap(y_, y_new);
        const double err = error_norm(h);
        if (std::isnan(err))
            throw std::runtime_error("dop853: NaN detected at t = " + std::to_string(t_));

        if (err < 1.0) {
            t_prev_ = t_;
            t_ = t_new;
            h_prev_ = h;
            f_prev_ = f_;
            std::memcpy(f_.data(), k_.data() + static_cast<size_t>(12) * dim_,
                        sizeof(double) * dim_);
            double factor =
                (err == 0.0) ? kMaxFactor
                             : std::min(kMaxFactor, kSafety * std::pow(err, kErrorExponent));
            if (guard > 1) factor = std::min(1.0, factor);  // just rejected
            h_ = std::min(h_abs * factor, opts_.max_step);
            ++n_accepted_;
            if (n_accepted_ > opts_.max_steps)
                throw std::runtime_error("dop853: max step count exceeded");
            dense_ready_ = false;
            if (t_ == t_bound) done_ = true;
            return true;
        }
        // rejected: restore y_ and shrink
        std::swap(y_, y_new);
        y_ = y_prev_;
        h_abs *= std::max(kMinFactor, kSafety * std::pow(err, kErrorExponent));
    }
}

void Dop853::compute_dense_coefficients() {
    const double h = h_prev_;
    std::vector<double> y_stage(dim_);
    // three extra stages for the order-7 interpolant
    for (int s = 13; s < 16; ++s) {
        for (int i = 0; i < dim_; ++i) {
            double acc = 0.0;
            for (int j = 0; j < s; ++j)
                acc += dop853::kA[s][j] * k_[static_cast<size_t>(j) * dim_ + i];
            y_stage[i] = y_prev_[i] + h * acc;
        }
        rhs_(t_prev_ + dop853::kC[s] * h, y_stage.data(),
             k_.data() + static_cast<size_t>(s) * dim_);
        ++n_rhs_;
    }
    double* F = dense_.data();
    for (int i = 0; i < dim_; ++i) {
        const double delta = y_[i] - y_prev_[i];
        F[0 * dim_ + i] = delta;
        F[1 * dim_ + i] = h * f_prev_[i] - delta;
        F[2 * dim_ + i] = 2.0 * delta - h * (f_[i] + f_prev_[i]);
    }
    for (int r = 0; r < 4; ++r) {
        for (int i = 0; i < dim_; ++i) {
            double acc = 0.0;
            for (int s = 0; s < 16; ++s)
                acc += dop853::kD[r][s] * k_[static_cast<size_t>(s) * dim_ + i];
            F[(3 + r) * dim_ + i] = h * acc;
        }
    }
    dense_ready_ = true;
}

void Dop853::dense_eval(double t_eval, double* y_out) {
    if (!dense_ready_) compute_dense_coefficients();
    const double x = (t_eval - t_prev_) / h_prev_;
    const double* F = dense_.data();
    for (int i = 0; i < dim_; ++i) {
        double acc = 0.0;
        for (int r = 6; r >= 0; --r) {
            acc += F[r * dim_ + i];
            acc *= ((6 - r) % 2 == 0) ? x : (1.0 - x);
        }
        y_out[i] = acc + y_prev_[i];
    }
}

void Dop853::copy_dense(double* out) {
    if (!dense_ready_) compute_dense_coefficients();
    std::memcpy(out, dense_.data(), sizeof(double) * dense_.size());
}

void integrate_to(const OdeRhs& rhs, int dim, double t0, double tf, double* y,
                  const OdeOptions& opts) {
    Dop853 stepper(rhs, dim, t0, y, tf, opts);
    while (stepper.step()) {
    }
    std::memcpy(y, stepper.y(), sizeof(double) * dim);
}

}  // namespace fdcorr
