#include "onebit/bnb.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <queue>

#include "onebit/detectors.hpp"
#include "onebit/lp.hpp"

namespace onebit::bnb {
namespace {

using Clock = std::chrono::steady_clock;

// sgn(H^+ r); a rank-deficient channel gets the minimum-norm solution instead.
Vector zf_anchor(const RealInstance& instance) {
  try {
    return sign_of(least_squares(instance.h, instance.r));
  } catch (const RankDeficient&) {
    return sign_of(Vector(instance.h.completeOrthogonalDecomposition().solve(instance.r)));
  }
}

lp::Row cut_to_row(const Cut& cut, int n) {
  lp::Row row;
  row.index.reserve(n + 1);
  row.value.reserve(n + 1);
  for (int j = 0; j < n; ++j) {
    if (cut.coeffs(j) != 0.0) {
      row.index.push_back(j);
      row.value.push_back(-cut.coeffs(j));
    }
  }
  row.index.push_back(n + cut.row);
  row.value.push_back(1.0);
  row.rhs = cut.offset;
  return row;
}

lp::Model base_model(int n, int m) {
  lp::Model model = lp::Model::with_vars(n + m);
  for (int j = 0; j < n; ++j) {
    model.lower[j] = -1.0;
    model.upper[j] = 1.0;
  }
  // every link is nonnegative, so w >= 0 is valid and keeps the LP bounded
  for (int i = 0; i < m; ++i) model.objective[n + i] = 1.0;
  return model;
}

double log_ratio(std::int64_t pool, int m, int n) {
  return std::log(static_cast<double>(pool)) - std::log(static_cast<double>(m)) - n * std::numbers::ln2;
}

struct TreeNode {
  std::vector<std::int8_t> fixing;  // 0 free, +1, -1
  double bound = -lp::kInfinity;
  int depth = 0;
  std::int64_t id = 0;
  std::int64_t parent = -1;
  std::shared_ptr<const lp::Basis> basis{};
};

struct NodeOrder {
  // best-first on bound, deeper first, then creation order
  bool operator()(const TreeNode& a, const TreeNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.id > b.id;
  }
};

// Outer-approximation branch-and-bound over a cut pool. With
// `generate_cuts` false the pool is frozen and the search solves the MILP
// min sum w subject to the pool exactly.
class Tree {
 public:
  Tree(const RealInstance& instance, const LinkFunction& link, const SolverOptions& opts,
       std::vector<Cut> pool, bool generate_cuts, Clock::time_point start)
      : inst_(instance),
        link_(link),
        opts_(opts),
        n_(instance.n()),
        m_(instance.m()),
        generate_cuts_(generate_cuts),
        start_(start),
        pool_(std::move(pool)),
        pool_by_row_(m_),
        solver_(base_model(n_, m_)) {
    std::vector<lp::Row> rows;
    rows.reserve(pool_.size());
    for (std::size_t k = 0; k < pool_.size(); ++k) {
      pool_by_row_[pool_[k].row].push_back(static_cast<int>(k));
      rows.push_back(cut_to_row(pool_[k], n_));
    }
    solver_.add_rows(rows);
  }

  void run() {
    std::priority_queue<TreeNode, std::vector<TreeNode>, NodeOrder> open;
    open.push(TreeNode{.fixing = std::vector<std::int8_t>(n_, 0), .id = next_id_++, .basis = nullptr});
    std::int64_t loaded = -1;  // node whose final basis the solver holds
    bool first = true;

    while (!open.empty()) {
      if (stats_.nodes_processed >= opts_.node_limit) {
        stop("node_limit");
        return;
      }
      if (opts_.time_limit_ms > 0 &&
          Clock::now() - start_ >= std::chrono::milliseconds(opts_.time_limit_ms)) {
        stop("time_limit");
        return;
      }
      TreeNode node = open.top();
      open.pop();
      if (node.bound >= upper_ - prune_tol()) continue;
      ++stats_.nodes_processed;

      for (int j = 0; j < n_; ++j) {
        const double lo = node.fixing[j] == 0 ? -1.0 : node.fixing[j];
        const double hi = node.fixing[j] == 0 ? 1.0 : node.fixing[j];
        solver_.set_bounds(j, lo, hi);
      }
      if (node.parent != loaded && node.basis) solver_.load_basis(*node.basis);

      int rounds = 0;
      bool first_lp = true;
      while (true) {
        const lp::Solution sol = solver_.solve();
        ++stats_.lp_solves;
        stats_.lp_iterations += sol.iterations;
        if (sol.status != lp::Status::Optimal) {
          throw SolverFailure("node LP ended with status " + std::string(lp::to_string(sol.status)));
        }
        loaded = node.id;
        const double f_lp = sol.objective_value;
        if (first) {
          stats_.root_bound = f_lp;
          first = false;
        }
        if (first_lp && std::isfinite(node.bound)) {
          stats_.min_bound_increase = std::min(stats_.min_bound_increase, f_lp - node.bound);
        }
        first_lp = false;

        if (f_lp >= upper_ - prune_tol()) break;  // (i)

        Vector x(n_);
        Vector w(m_);
        for (int j = 0; j < n_; ++j) x(j) = sol.primal[j];
        for (int i = 0; i < m_; ++i) w(i) = sol.primal[n_ + i];

        int branch_var = -1;
        double most_fractional = lp::kInfinity;
        for (int j = 0; j < n_; ++j) {
          if (node.fixing[j] != 0) continue;
          const double a = std::abs(x(j));
          if (a < 1.0 - opts_.integrality_tol && a < most_fractional) {
            most_fractional = a;
            branch_var = j;
          }
        }

        if (branch_var < 0) {
          const Vector x_int = sign_of(x);
          if (!generate_cuts_) {
            upper_ = f_lp;
            incumbent_ = x_int;
            break;
          }
          if (opts_.incumbent_shortcut) offer_incumbent(x_int);
          const int added = add_violated_cuts(x_int, w);
          if (added == 0) {  // (ii.1)
            offer_incumbent(x_int);
            break;
          }
          ++rounds;  // (ii.2): re-solve the same node
          stats_.max_cut_rounds = std::max(stats_.max_cut_rounds, rounds);
          continue;
        }

        // (iii)
        auto basis = std::make_shared<const lp::Basis>(sol.basis);
        for (const std::int8_t value : {std::int8_t{1}, std::int8_t{-1}}) {
          TreeNode child{.fixing = node.fixing, .bound = f_lp, .depth = node.depth + 1,
                         .id = next_id_++, .parent = node.id, .basis = basis};
          child.fixing[branch_var] = value;
          open.push(std::move(child));
        }
        break;
      }
    }
  }

  const std::vector<Cut>& pool() const { return pool_; }
  const std::optional<Vector>& incumbent() const { return incumbent_; }
  double upper() const { return upper_; }
  SolveStats& stats() { return stats_; }
  const std::string& termination() const { return termination_; }

  // Adds the separating cuts at (x, w) that are not duplicates of pool
  // members; returns the number added.
  int add_violated_cuts(const Vector& x, const Vector& w) {
    std::vector<lp::Row> rows;
    for (Cut& cut : separate(inst_, link_, x, w, opts_.violation_tol)) {
      if (is_duplicate(cut)) continue;
      pool_by_row_[cut.row].push_back(static_cast<int>(pool_.size()));
      rows.push_back(cut_to_row(cut, n_));
      pool_.push_back(std::move(cut));
    }
    solver_.add_rows(rows);
    stats_.cuts_generated += static_cast<std::int64_t>(rows.size());
    return static_cast<int>(rows.size());
  }

 private:
  double prune_tol() const { return 1e-9 * std::max(1.0, std::abs(upper_)); }

  void offer_incumbent(const Vector& x_int) {
    const double value = objective_value(inst_, link_, x_int);
    if (value < upper_) {
      upper_ = value;
      incumbent_ = x_int;
    }
  }

  bool is_duplicate(const Cut& cut) const {
    for (int k : pool_by_row_[cut.row]) {
      const Cut& other = pool_[k];
      if (other.anchor.size() == cut.anchor.size() &&
          (other.anchor - cut.anchor).cwiseAbs().maxCoeff() <= 1e-9) {
        return true;
      }
    }
    return false;
  }

  void stop(const char* why) { termination_ = why; }

  const RealInstance& inst_;
  const LinkFunction& link_;
  const SolverOptions& opts_;
  int n_;
  int m_;
  bool generate_cuts_;
  Clock::time_point start_;
  std::vector<Cut> pool_;
  std::vector<std::vector<int>> pool_by_row_;
  lp::Solver solver_;
  double upper_ = lp::kInfinity;
  std::optional<Vector> incumbent_;
  SolveStats stats_;
  std::int64_t next_id_ = 0;
  std::string termination_ = "optimal";
};

void check_size(const RealInstance& instance, const SolverOptions& opts) {
  if (instance.n() > opts.max_n) {
    throw DimensionTooLarge("branch-and-bound: N = " + std::to_string(instance.n()) + " exceeds cap " +
                            std::to_string(opts.max_n));
  }
}

GlobalResult finish(const RealInstance& instance, const LinkFunction& link, Tree& tree, Clock::time_point start) {
  GlobalResult res;
  res.stats = tree.stats();
  res.termination = tree.termination();
  res.proven_optimal = res.termination == "optimal";
  if (tree.incumbent()) {
    res.x_opt = *tree.incumbent();
  } else {
    // limits hit before any integral point: fall back to the ZF point
    res.x_opt = zf_anchor(instance);
    res.proven_optimal = false;
  }
  res.objective = objective_value(instance, link, res.x_opt);
  res.stats.pool_size = static_cast<std::int64_t>(tree.pool().size());
  res.stats.cut_pool_ratio = std::exp(log_ratio(res.stats.pool_size, instance.m(), instance.n()));
  res.stats.wall_time = Clock::now() - start;
  return res;
}

}  // namespace

Cut make_cut(const RealInstance& instance, const LinkFunction& link, int row, const Vector& anchor) {
  const double t = instance.b.row(row).dot(anchor);
  const LinkValue lv = link.eval(t);
  return Cut{.row = row, .anchor = anchor, .offset = lv.g - lv.slope * t,
             .coeffs = lv.slope * instance.b.row(row).transpose()};
}

std::vector<Cut> separate(const RealInstance& instance, const LinkFunction& link, const Vector& x_bar,
                          const Vector& w_bar, double violation_tol) {
  if (x_bar.size() != instance.n() || w_bar.size() != instance.m()) {
    throw std::invalid_argument("separate: x_bar / w_bar have wrong length");
  }
  std::vector<Cut> cuts;
  const Vector t = instance.b * x_bar;
  for (int i = 0; i < instance.m(); ++i) {
    if (w_bar(i) < link.value(t(i)) - violation_tol) cuts.push_back(make_cut(instance, link, i, x_bar));
  }
  return cuts;
}

std::vector<Cut> initial_cut_pool(const RealInstance& instance, const LinkFunction& link,
                                  const std::optional<Vector>& anchor) {
  const int m = instance.m();
  const int n = instance.n();
  std::vector<Cut> pool;
  if (link.piecewise_linear()) {
    pool.reserve(2 * m);
    for (int i = 0; i < m; ++i) {
      pool.push_back(Cut{.row = i, .anchor = Vector(), .offset = 0.0, .coeffs = -instance.b.row(i).transpose()});
      pool.push_back(Cut{.row = i, .anchor = Vector(), .offset = 0.0, .coeffs = Vector::Zero(n)});
    }
    return pool;
  }
  const Vector x_hat = anchor ? *anchor : zf_anchor(instance);
  pool.reserve(m);
  for (int i = 0; i < m; ++i) pool.push_back(make_cut(instance, link, i, x_hat));
  return pool;
}

double relaxation_bound(const RealInstance& instance, const std::vector<Cut>& pool) {
  const int n = instance.n();
  lp::Model model = base_model(n, instance.m());
  for (const Cut& cut : pool) model.rows.push_back(cut_to_row(cut, n));
  const lp::Solution sol = lp::solve(model);
  if (sol.status != lp::Status::Optimal) throw SolverFailure("relaxation LP not optimal");
  return sol.objective_value;
}

GlobalResult solve_global(const RealInstance& instance, const LinkFunction& link, const SolverOptions& opts) {
  check_size(instance, opts);
  const auto start = Clock::now();
  Tree tree(instance, link, opts, initial_cut_pool(instance, link, opts.initial_anchor), true, start);
  tree.run();
  return finish(instance, link, tree, start);
}

GlobalResult solve_alg1(const RealInstance& instance, const LinkFunction& link, const SolverOptions& opts) {
  check_size(instance, opts);
  const auto start = Clock::now();
  std::vector<Cut> pool = initial_cut_pool(instance, link, opts.initial_anchor);
  SolveStats totals;
  int outer = 0;
  while (true) {
    ++outer;
    Tree tree(instance, link, opts, pool, false, start);
    tree.run();
    const SolveStats& s = tree.stats();
    totals.nodes_processed += s.nodes_processed;
    totals.lp_solves += s.lp_solves;
    totals.lp_iterations += s.lp_iterations;
    totals.min_bound_increase = std::min(totals.min_bound_increase, s.min_bound_increase);
    if (outer == 1) totals.root_bound = s.root_bound;

    const bool limited = tree.termination() != "optimal";
    bool done = limited || !tree.incumbent();
    if (!done) {
      // recover w at the MILP optimum: the pool's pointwise max per row
      const Vector& x = *tree.incumbent();
      Vector w = Vector::Zero(instance.m());
      for (const Cut& cut : pool) w(cut.row) = std::max(w(cut.row), cut.offset + cut.coeffs.dot(x));
      const int added = tree.add_violated_cuts(x, w);
      totals.cuts_generated += added;
      done = added == 0;
      pool = tree.pool();
    }
    if (done) {
      tree.stats() = totals;
      tree.stats().outer_iterations = outer;
      return finish(instance, link, tree, start);
    }
  }
}

GlobalResult solve(const RealInstance& instance, const LinkFunction& link, const SolverOptions& opts) {
  return opts.mode == Mode::Alg1 ? solve_alg1(instance, link, opts) : solve_global(instance, link, opts);
}

}  // namespace onebit::bnb
