#pragma once

#include <functional>
#include <limits>
#include <vector>

namespace fdcorr {

struct OdeOptions {
    double rtol = 1e-12;
    double atol = 1e-12;
    double initial_step = 0.0;  ///< 0 = automatic
    double max_step = std::numeric_limits<double>::infinity();
    long max_steps = 50'000'000;
    /// Limit the error estimate to the first k components (0 = all).
    /// Joint state+STM integrations control on the state block so the
    /// step sequence matches the state-only run exactly.
    int error_control_dim = 0;
};

/// Right-hand side: f(t, y, dydt) with fixed dimension.
using OdeRhs = std::function<void(double, const double*, double*)>;

/// Adaptive Dormand-Prince 8(5,3) stepper with an order-7 continuous
/// extension. Drives one integration; call step() until done(), and use
/// dense_eval() for times inside the step just taken.
class Dop853 {
  public:
    Dop853(OdeRhs rhs, int dim, double t0, const double* y0, double tf,
           const OdeOptions& opts);

    /// Advance one accepted step. Returns false when tf has been reached.
    bool step();
    bool done() const { return done_; }

    double t_prev() const { return t_prev_; }
    double t() const { return t_; }
    const double* y() const { return y_.data(); }
    const double* y_prev() const { return y_prev_.data(); }

    /// Evaluate the continuous extension at t_eval in [t_prev, t].
    void dense_eval(double t_eval, double* y_out);

    /// Copy the 7 x dim continuous-extension vectors for the step just
    /// taken (computing them if necessary).
    void copy_dense(double* out);

    long n_steps() const { return n_accepted_; }
    long n_rhs_evals() const { return n_rhs_; }

  private:
    void compute_dense_coefficients();
    double error_norm(double h) const;
    double initial_step_size() const;

    OdeRhs rhs_;
    int dim_;
    double t0_, tf_, direction_;
    OdeOptions opts_;

    double t_prev_ = 0.0, t_ = 0.0, h_ = 0.0, h_prev_ = 0.0;
    std::vector<double> y_, y_prev_, f_, f_prev_;
    std::vector<double> k_;      // 16 x dim stage derivatives
    std::vector<double> dense_;  // 7 x dim continuous-extension vectors
    bool dense_ready_ = false;
    bool done_ = false;
    long n_accepted_ = 0;
    long n_rhs_ = 0;
};

/// Integrate to tf and return the final state in-place.
void integrate_to(const OdeRhs& rhs, int dim, double t0, double tf, double* y,
                  const OdeOptions& opts);

}  // namespace fdcorr
