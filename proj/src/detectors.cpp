#include "onebit/detectors.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "onebit/rng.hpp"

namespace onebit {

DetectionResult exhaustive_search(const RealInstance& instance, const LinkFunction& link) {
  const int n = instance.n();
  const int m = instance.m();
  if (n > kExhaustiveMaxN) {
    throw DimensionTooLarge("exhaustive_search: N = " + std::to_string(n) + " exceeds " +
                            std::to_string(kExhaustiveMaxN));
  }
  const auto start = std::chrono::steady_clock::now();

  // Enumerate by binary counting with bit (n-1-j) of k selecting x_j = +1, so
  // k = 0 is all -1 and increasing k walks lexicographic order. Each step
  // updates t = B x incrementally through the flipped coordinates.
  Vector x = Vector::Constant(n, -1.0);
  Vector t = instance.b * x;
  const Matrix bt = instance.b.transpose();
  auto value_of = [&](const Vector& tt) {
    double v = 0.0;
    for (int i = 0; i < m; ++i) v += link.value(tt(i));
    return v;
  };
  double best = value_of(t);
  std::uint64_t best_k = 0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t k = 1; k < total; ++k) {
    const std::uint64_t flipped = k ^ (k - 1);
    for (int j = 0; j < n; ++j) {
      if ((flipped >> (n - 1 - j)) & 1U) {
        const double next = x(j) > 0 ? -1.0 : 1.0;
        t.noalias() += (next - x(j)) * bt.row(j).transpose();
        x(j) = next;
      }
    }
    // Periodic exact refresh bounds the incremental drift.
    if ((k & 0xFFF) == 0) t = instance.b * x;
    const double v = value_of(t);
    if (v < best) {
      best = v;
      best_k = k;
    }
  }

  DetectionResult res;
  res.method = "exhaustive";
  res.x_hat.resize(n);
  for (int j = 0; j < n; ++j) res.x_hat(j) = ((best_k >> (n - 1 - j)) & 1U) ? 1.0 : -1.0;
  res.objective = objective_value(instance, link, res.x_hat);
  res.stats["points"] = static_cast<double>(total);
  res.wall_time = std::chrono::steady_clock::now() - start;
  return res;
}

Vector least_squares(const Matrix& h, const Vector& r) {
  const Matrix gram = h.transpose() * h;
  const Vector rhs = h.transpose() * r;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() == Eigen::Success) {
    return llt.solve(rhs);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(h);
  if (qr.rank() < h.cols()) throw RankDeficient("least_squares: channel matrix is rank deficient");
  return qr.solve(r);
}

DetectionResult quantized_zf(const RealInstance& instance) {
  const auto start = std::chrono::steady_clock::now();
  DetectionResult res;
  res.method = "quantZF";
  res.x_hat = sign_of(least_squares(instance.h, instance.r));
  res.wall_time = std::chrono::steady_clock::now() - start;
  res.objective = objective_value(instance, LinkFunction::ml(instance.sigma), res.x_hat);
  return res;
}

Vector bussgang_zf_raw(const RealInstance& instance, std::uint64_t seed) {
  const int n = instance.n();
  const double s2 = instance.sigma * instance.sigma;
  Rng rng(seed);
  const double d_std = std::sqrt(1.0 - 2.0 / std::numbers::pi);
  Vector d(instance.m());
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = d_std * rng.normal();

  Matrix reg = instance.h.transpose() * instance.h;
  reg.diagonal().array() += s2;
  const Vector rhs = instance.h.transpose() * (instance.r - d);
  const double gain = std::sqrt(std::numbers::pi * (n + s2)) / 2.0;
  return gain * Eigen::LDLT<Matrix>(reg).solve(rhs);
}

Vector bussgang_zf_init(const RealInstance& instance, std::uint64_t seed) {
  return bussgang_zf_raw(instance, seed).cwiseMax(-1.0).cwiseMin(1.0);
}

}  // namespace onebit
