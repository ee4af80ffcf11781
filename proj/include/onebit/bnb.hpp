#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "onebit/links.hpp"
#include "onebit/model.hpp"

namespace onebit::bnb {

// Linear underestimator w_row >= offset + coeffs^T x of g(b_row^T x),
// tight at `anchor`. Exact pieces of the AR-L1 link carry an empty anchor.
struct Cut {
  int row = 0;
  Vector anchor;
  double offset = 0.0;
  Vector coeffs;
};

enum class Mode { Alg1, Alg2 };

struct SolverOptions {
  std::int64_t node_limit = 5'000'000;
  std::int64_t time_limit_ms = 0;  // 0 = none
  double integrality_tol = 1e-6;
  double violation_tol = 1e-7;
  // Evaluate the true objective at every integral LP point and use it as an
  // incumbent. Off reproduces the textbook node loop exactly.
  bool incumbent_shortcut = true;
  Mode mode = Mode::Alg2;
  int max_n = 64;
  // Overrides the quantized-ZF anchor of the initial pool (smooth links only).
  std::optional<Vector> initial_anchor;
};

struct SolveStats {
  std::int64_t nodes_processed = 0;
  std::int64_t lp_solves = 0;
  std::int64_t lp_iterations = 0;
  std::int64_t cuts_generated = 0;  // added by separation
  std::int64_t pool_size = 0;       // |S| at termination, initial pool included
  double cut_pool_ratio = 0.0;      // |S| / (M 2^N)
  int max_cut_rounds = 0;           // most re-solves of one node
  int outer_iterations = 1;         // Alg1 only
  double root_bound = 0.0;
  // min over processed nodes of (first LP value - inherited bound); should be
  // >= -1e-9 since children only tighten.
  double min_bound_increase = 0.0;
  std::chrono::nanoseconds wall_time{0};
};

struct GlobalResult {
  Vector x_opt;
  double objective = 0.0;
  bool proven_optimal = true;
  std::string termination = "optimal";  // optimal | node_limit | time_limit
  SolveStats stats;
};

class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Cut make_cut(const RealInstance& instance, const LinkFunction& link, int row, const Vector& anchor);

// One cut per row with w_bar[i] < g(b_i^T x_bar) - violation_tol.
std::vector<Cut> separate(const RealInstance& instance, const LinkFunction& link, const Vector& x_bar,
                          const Vector& w_bar, double violation_tol = 1e-7);

// Smooth links: M cuts anchored at `anchor` (quantized ZF when absent).
// AR-L1: the exact 2M pieces w_i >= -b_i^T x and w_i >= 0.
std::vector<Cut> initial_cut_pool(const RealInstance& instance, const LinkFunction& link,
                                  const std::optional<Vector>& anchor = std::nullopt);

// LP relaxation value over `pool` with x in [-1, 1]^N.
double relaxation_bound(const RealInstance& instance, const std::vector<Cut>& pool);

// Branch-and-bound with cut generation inside the node loop.
GlobalResult solve_global(const RealInstance& instance, const LinkFunction& link,
                          const SolverOptions& opts = {});

// Reference mode: solve the MILP over a fixed pool to optimality, separate
// at its optimum, repeat until nothing is violated.
GlobalResult solve_alg1(const RealInstance& instance, const LinkFunction& link,
                        const SolverOptions& opts = {});

// Dispatches on opts.mode.
GlobalResult solve(const RealInstance& instance, const LinkFunction& link, const SolverOptions& opts = {});

}  // namespace onebit::bnb
