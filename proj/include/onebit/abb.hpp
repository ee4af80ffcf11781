#pragma once

#include <cstdint>
#include <deque>
#include <optional>

#include "onebit/detectors.hpp"
#include "onebit/model.hpp"

namespace onebit::abb {

// Defaults: lambda_init = 0.1 N, lambda_max = 100, c = 5,
// rho = 0.3 + ln(1 + sigma), tau = 0.1, kappa = 4.
struct AbbParams {
  std::optional<double> lambda_init;  // default 0.1 N, clamped to lambda_max / c
  double lambda_max = 100.0;
  double growth_c = 5.0;
  std::optional<double> rho;  // default 0.3 + ln(1 + sigma)
  double tau = 0.1;
  int gll_memory_kappa = 4;
  std::optional<double> eps_stop;  // default 1e-6 sqrt(N)
  int max_inner_iters = 500;
  double backtrack_factor = 0.5;
  int max_backtracks = 40;

  // Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct SmoothedEval {
  double value = 0.0;
  Vector gradient;
};

// F(x) = phi_rho(x) - lambda ||x||^2, phi_rho the smoothed hinge sum, and
// grad F = -sum_i theta_i b_i - 2 lambda x.
SmoothedEval smoothed_value_and_grad(const RealInstance& instance, double rho, double lambda, const Vector& x);

// Per-row smoothed hinge v(t) and its inner maximizer theta_1(t).
double smoothed_hinge(double t, double rho);
double smoothed_weight(double t, double rho);

// Alternating BB step: even iter ||s||^2 / |<s,beta>|, odd iter
// |<s,beta>| / ||beta||^2. Returns `fallback` when the denominator is below
// 1e-14.
double abb_step_size(const Vector& s, const Vector& beta, std::int64_t iter, double fallback);

// [x]_{-1}^{1}
Vector project_box(const Vector& x);

struct LineSearchResult {
  double eta = 1.0;
  Vector x_next;
  double f_next = 0.0;
  Vector grad_next;
  bool exhausted = false;
  int backtracks = 0;
};

// Nonmonotone Armijo search: largest eta in {1, b, b^2, ...} with
// F(x + eta d) <= max(history) + tau eta <grad, d>.
LineSearchResult gll_line_search(const RealInstance& instance, double rho, double lambda, const Vector& x,
                                 const Vector& d, const Vector& grad, const std::deque<double>& f_history,
                                 const AbbParams& params);

// (1 / rho) sum_i ||b_i||^2
double lipschitz_bound(const RealInstance& instance, double rho);

struct AbbStats {
  std::int64_t iterations = 0;
  int stages = 0;
  int stage_iteration_limits = 0;
  int backtrack_exhausted = 0;
  int ascent_directions = 0;  // <grad, d> > 0 observed; should stay 0
  double extreme_fraction = 0.0;  // share of |x_j| >= 0.99 at the end
};

struct AbbResult {
  DetectionResult detection;
  Vector x_final;
  AbbStats stats;
};

AbbResult solve_abb(const RealInstance& instance, const AbbParams& params, const Vector& x0);

// Convenience: Bussgang-ZF start drawn from `seed`.
AbbResult solve_abb(const RealInstance& instance, const AbbParams& params, std::uint64_t seed);

}  // namespace onebit::abb
