#pragma once

#include <string_view>

#include "onebit/model.hpp"

namespace onebit {

// log Phi(z) for the standard normal CDF. Finite down to z = -1e150 or so.
double log_phi(double z);

// Inverse Mills ratio phi(z) / Phi(z). Positive everywhere, ~ -z as z -> -inf.
double mills_ratio(double z);

// Scaled complementary error function exp(x^2) erfc(x).
double erfcx(double x);

enum class LinkKind { ML, ArL1, ArL2 };

struct LinkValue {
  double g = 0.0;
  double slope = 0.0;  // g'(t); at the AR-L1 kink this is the flat-side 0
};

// Scalar convex, non-increasing link g applied to t = b_i^T x:
//   ML:    -log Phi(t / sigma)
//   AR-L1: max(-t, 0)
//   AR-L2: max(-t, 0)^2
class LinkFunction {
 public:
  static LinkFunction ml(double sigma);
  static LinkFunction ar_l1() { return LinkFunction(LinkKind::ArL1, 1.0); }
  static LinkFunction ar_l2() { return LinkFunction(LinkKind::ArL2, 1.0); }

  LinkKind kind() const { return kind_; }
  double sigma() const { return sigma_; }
  bool piecewise_linear() const { return kind_ == LinkKind::ArL1; }
  std::string_view name() const;

  LinkValue eval(double t) const;
  double value(double t) const { return eval(t).g; }

 private:
  LinkFunction(LinkKind kind, double sigma) : kind_(kind), sigma_(sigma) {}

  LinkKind kind_;
  double sigma_;
};

struct ObjectiveEval {
  double value = 0.0;
  Vector gradient;
};

// f(x) = sum_i g(b_i^T x) and its gradient sum_i g'(b_i^T x) b_i.
ObjectiveEval objective(const RealInstance& instance, const LinkFunction& link, const Vector& x);
double objective_value(const RealInstance& instance, const LinkFunction& link, const Vector& x);

}  // namespace onebit
