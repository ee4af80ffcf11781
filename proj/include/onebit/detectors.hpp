#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "onebit/links.hpp"
#include "onebit/model.hpp"

namespace onebit {

class DimensionTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DetectionResult {
  Vector x_hat;  // entries exactly +-1
  double objective = 0.0;
  std::string method;
  std::map<std::string, double> stats;
  std::chrono::nanoseconds wall_time{0};
};

inline constexpr int kExhaustiveMaxN = 24;

// argmin over {-1,+1}^N of sum_i g(b_i^T x). Ties resolve to the
// lexicographically smallest vector with -1 < +1.
DetectionResult exhaustive_search(const RealInstance& instance, const LinkFunction& link);

// H^+ r via normal equations (Cholesky), falling back to column-pivoted QR.
// Throws RankDeficient when H has dependent columns.
Vector least_squares(const Matrix& h, const Vector& r);

// sgn(H^+ r). The reported objective is the ML objective of x_hat.
DetectionResult quantized_zf(const RealInstance& instance);

// sqrt(pi (N + sigma^2)) / 2 * (H^T H + sigma^2 I)^-1 H^T (r - d) with
// d ~ N(0, (1 - 2/pi) I) drawn from `seed`; unclipped.
Vector bussgang_zf_raw(const RealInstance& instance, std::uint64_t seed);
// As above, clipped to the box [-1, 1]^N.
Vector bussgang_zf_init(const RealInstance& instance, std::uint64_t seed);

}  // namespace onebit
