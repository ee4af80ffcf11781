#include "onebit/links.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace onebit {
namespace {

constexpr double kLeftTail = -8.0;
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kSqrt2OverPi = 0.79788456080286535588;  // sqrt(2/pi)

// Continued fraction of sqrt(pi) exp(x^2) erfc(x) for x >= 5, evaluated
// with the modified Lentz method:
//   1 / (x + (1/2) / (x + 1 / (x + (3/2) / (x + 2 / (x + ...)))))
double erfcx_continued_fraction(double x) {
  constexpr double tiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int k = 1; k < 500; ++k) {
    const double a = 0.5 * k;
    d = x + a * d;
    if (std::abs(d) < tiny) d = tiny;
    c = x + a / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / (f * std::sqrt(std::numbers::pi));
}

}  // namespace

double erfcx(double x) {
  if (x < 5.0) return std::exp(x * x) * std::erfc(x);
  return erfcx_continued_fraction(x);
}

double log_phi(double z) {
  if (z < kLeftTail) {
    const double x = -z / kSqrt2;
    return std::log(0.5 * erfcx(x)) - x * x;
  }
  if (z > 0.0) return std::log1p(-0.5 * std::erfc(z / kSqrt2));
  return std::log(0.5 * std::erfc(-z / kSqrt2));
}

double mills_ratio(double z) {
  if (z < kLeftTail) return kSqrt2OverPi / erfcx(-z / kSqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return pdf / (0.5 * std::erfc(-z / kSqrt2));
}

LinkFunction LinkFunction::ml(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("ML link needs sigma > 0");
  return LinkFunction(LinkKind::ML, sigma);
}

std::string_view LinkFunction::name() const {
  switch (kind_) {
    case LinkKind::ML: return "ML";
    case LinkKind::ArL1: return "AR-L1";
    case LinkKind::ArL2: return "AR-L2";
  }
  return "?";
}

LinkValue LinkFunction::eval(double t) const {
  switch (kind_) {
    case LinkKind::ML: {
      const double z = t / sigma_;
      return {-log_phi(z), -mills_ratio(z) / sigma_};
    }
    case LinkKind::ArL1:
      return t < 0.0 ? LinkValue{-t, -1.0} : LinkValue{0.0, 0.0};
    case LinkKind::ArL2: {
      const double hinge = std::max(-t, 0.0);
      return {hinge * hinge, -2.0 * hinge};
    }
  }
  return {};
}

ObjectiveEval objective(const RealInstance& instance, const LinkFunction& link, const Vector& x) {
  if (x.size() != instance.n()) throw std::invalid_argument("objective: x has wrong length");
  const Vector t = instance.b * x;
  Vector slopes(t.size());
  double value = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const LinkValue lv = link.eval(t(i));
    value += lv.g;
    slopes(i) = lv.slope;
  }
  return {value, instance.b.transpose() * slopes};
}

double objective_value(const RealInstance& instance, const LinkFunction& link, const Vector& x) {
  const Vector t = instance.b * x;
  double value = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) value += link.value(t(i));
  return value;
}

}  // namespace onebit
