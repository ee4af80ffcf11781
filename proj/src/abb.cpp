#include "onebit/abb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "onebit/links.hpp"

namespace onebit::abb {

void AbbParams::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string("abb: ") + what + " must be positive");
  };
  if (lambda_init) positive(*lambda_init, "lambda_init");
  positive(lambda_max, "lambda_max");
  if (!(growth_c > 1.0)) throw std::invalid_argument("abb: growth_c must exceed 1");
  if (rho) positive(*rho, "rho");
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("abb: tau must lie in (0, 1)");
  if (gll_memory_kappa < 1) throw std::invalid_argument("abb: kappa must be >= 1");
  if (eps_stop) positive(*eps_stop, "eps_stop");
  if (max_inner_iters < 1) throw std::invalid_argument("abb: max_inner_iters must be >= 1");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
    throw std::invalid_argument("abb: backtrack_factor must lie in (0, 1)");
  }
  if (max_backtracks < 1) throw std::invalid_argument("abb: max_backtracks must be >= 1");
}

double smoothed_weight(double t, double rho) { return std::clamp((rho - t) / (2.0 * rho), 0.0, 1.0); }

double smoothed_hinge(double t, double rho) {
  const double theta = smoothed_weight(t, rho);
  return theta * -t - 0.5 * rho * (theta * theta + (1.0 - theta) * (1.0 - theta));
}

SmoothedEval smoothed_value_and_grad(const RealInstance& instance, double rho, double lambda, const Vector& x) {
  const Vector t = instance.b * x;
  Vector theta(t.size());
  double value = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    theta(i) = smoothed_weight(t(i), rho);
    value += theta(i) * -t(i) - 0.5 * rho * (theta(i) * theta(i) + (1.0 - theta(i)) * (1.0 - theta(i)));
  }
  value -= lambda * x.squaredNorm();
  return {value, -(instance.b.transpose() * theta) - 2.0 * lambda * x};
}

double abb_step_size(const Vector& s, const Vector& beta, std::int64_t iter, double fallback) {
  constexpr double kDegenerate = 1e-14;
  const double sb = std::abs(s.dot(beta));
  if (iter % 2 == 0) {
    return sb < kDegenerate ? fallback : s.squaredNorm() / sb;
  }
  const double bb = beta.squaredNorm();
  return bb < kDegenerate ? fallback : sb / bb;
}

Vector project_box(const Vector& x) { return x.cwiseMax(-1.0).cwiseMin(1.0); }

LineSearchResult gll_line_search(const RealInstance& instance, double rho, double lambda, const Vector& x,
                                 const Vector& d, const Vector& grad, const std::deque<double>& f_history,
                                 const AbbParams& params) {
  const double f_ref = *std::max_element(f_history.begin(), f_history.end());
  const double slope = grad.dot(d);
  LineSearchResult res;
  double eta = 1.0;
  for (int k = 0; k <= params.max_backtracks; ++k) {
    Vector trial = x + eta * d;
    SmoothedEval ev = smoothed_value_and_grad(instance, rho, lambda, trial);
    res.eta = eta;
    res.x_next = std::move(trial);
    res.f_next = ev.value;
    res.grad_next = std::move(ev.gradient);
    res.backtracks = k;
    if (res.f_next <= f_ref + params.tau * eta * slope) return res;
    eta *= params.backtrack_factor;
  }
  res.exhausted = true;
  return res;
}

double lipschitz_bound(const RealInstance& instance, double rho) {
  return instance.b.rowwise().squaredNorm().sum() / rho;
}

AbbResult solve_abb(const RealInstance& instance, const AbbParams& params, const Vector& x0) {
  params.validate();
  const int n = instance.n();
  if (x0.size() != n) throw std::invalid_argument("solve_abb: x0 has wrong length");
  const auto start = std::chrono::steady_clock::now();

  const double rho = params.rho.value_or(0.3 + std::log1p(instance.sigma));
  const double eps = params.eps_stop.value_or(1e-6 * std::sqrt(static_cast<double>(n)));
  double lambda = std::min(params.lambda_init.value_or(0.1 * n), params.lambda_max / params.growth_c);
  const double first_step = 1.0 / lipschitz_bound(instance, rho);

  AbbStats stats;
  Vector x_prev = project_box(x0);
  Vector x_curr = x_prev;
  std::int64_t iter = 0;

  while (lambda < params.lambda_max) {
    ++stats.stages;
    SmoothedEval curr = smoothed_value_and_grad(instance, rho, lambda, x_curr);
    Vector grad_prev = smoothed_value_and_grad(instance, rho, lambda, x_prev).gradient;
    std::deque<double> history{curr.value};

    bool converged = false;
    for (int k = 0; k < params.max_inner_iters; ++k) {
      ++iter;
      const Vector s = x_curr - x_prev;
      const Vector beta = curr.gradient - grad_prev;
      double alpha = first_step;
      if (s.squaredNorm() > 0.0) {
        const double gmax = curr.gradient.cwiseAbs().maxCoeff();
        const double fallback = gmax > 0.0 ? std::min(1.0, 1.0 / gmax) : 1.0;
        alpha = abb_step_size(s, beta, iter, fallback);
      }
      const Vector d = project_box(x_curr - alpha * curr.gradient) - x_curr;
      if (curr.gradient.dot(d) > 0.0) ++stats.ascent_directions;

      LineSearchResult ls = gll_line_search(instance, rho, lambda, x_curr, d, curr.gradient, history, params);
      if (ls.exhausted) ++stats.backtrack_exhausted;

      x_prev = std::move(x_curr);
      grad_prev = std::move(curr.gradient);
      x_curr = project_box(ls.x_next);
      curr = {ls.f_next, std::move(ls.grad_next)};
      history.push_back(curr.value);
      while (static_cast<int>(history.size()) > params.gll_memory_kappa) history.pop_front();

      if ((x_curr - x_prev).norm() <= eps) {
        converged = true;
        break;
      }
    }
    stats.iterations = iter;
    if (!converged) ++stats.stage_iteration_limits;
    lambda *= params.growth_c;
  }

  AbbResult res;
  res.x_final = x_curr;
  stats.extreme_fraction =
      n == 0 ? 1.0 : static_cast<double>((x_curr.array().abs() >= 0.99).count()) / static_cast<double>(n);
  res.stats = stats;
  res.detection.method = "AR-L1-ABB";
  res.detection.x_hat = sign_of(x_curr);
  res.detection.objective = objective_value(instance, LinkFunction::ar_l1(), res.detection.x_hat);
  res.detection.wall_time = std::chrono::steady_clock::now() - start;
  res.detection.stats["iterations"] = static_cast<double>(stats.iterations);
  res.detection.stats["stages"] = stats.stages;
  res.detection.stats["extreme_fraction"] = stats.extreme_fraction;
  return res;
}

AbbResult solve_abb(const RealInstance& instance, const AbbParams& params, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  AbbResult res = solve_abb(instance, params, bussgang_zf_init(instance, seed));
  res.detection.wall_time = std::chrono::steady_clock::now() - start;
  return res;
}

}  // namespace onebit::abb
