#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace onebit::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Bound violations above this are primal infeasible.
inline constexpr double kFeasibilityTol = 1e-9;
// Reduced costs of the wrong sign above this are dual infeasible.
inline constexpr double kOptimalityTol = 1e-9;
// Used only when a solve has to restart from the slack basis.
inline constexpr double kRecoveryOptimalityTol = 1e-7;
// Ratio tests prefer pivots above kPivotTol and accept down to kMinPivot only
// when nothing larger qualifies.
inline constexpr double kPivotTol = 1e-7;
inline constexpr double kMinPivot = 1e-11;

// coefficients^T u >= rhs, with coefficients given sparsely.
struct Row {
  std::vector<int> index;
  std::vector<double> value;
  double rhs = 0.0;
};

// min objective^T u  s.t.  rows,  lower <= u <= upper.
//
// Rows are stored densely inside the solver: memory is O(num_rows * num_vars),
// which for outer-approximation models is (cuts) x (N + M).
struct Model {
  int num_vars = 0;
  std::vector<double> objective;
  std::vector<Row> rows;
  std::vector<double> lower;
  std::vector<double> upper;

  // Empty bound vectors are expanded to [0, +inf).
  static Model with_vars(int num_vars);

  int num_rows() const { return static_cast<int>(rows.size()); }
  // Throws std::invalid_argument on malformed input.
  void validate() const;
};

// Returns `model` with `rows` appended. A basis taken from `model` remains a
// valid warm start for the result: new row logicals enter the basis.
Model add_rows(Model model, std::span<const Row> rows);

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };
std::string_view to_string(Status status);

enum class VarStatus : std::uint8_t { Basic, AtLower, AtUpper, AtZero };

// Warm-start token. Columns are the structural variables followed by one
// logical per row (the row activity). May describe fewer rows than the model
// it is loaded into.
struct Basis {
  std::vector<VarStatus> status;
  int num_vars = 0;
  bool empty() const { return status.empty(); }
};

struct Solution {
  Status status = Status::IterationLimit;
  std::vector<double> primal;
  double objective_value = 0.0;
  Basis basis;
  std::int64_t iterations = 0;
};

struct Options {
  // 0 means 50 * (num_vars + num_rows).
  std::int64_t iteration_limit = 0;
  // Pivots between fresh factorizations of the basis matrix.
  int refactor_interval = 64;
};

// Bounded-variable simplex on the computational form
//   A u - s = 0,  lower <= u <= upper,  rhs <= s.
// Cold starts run the dual simplex from the all-logical basis when it is dual
// feasible (any model whose objective is nonnegative on variables without a
// finite lower bound); otherwise a two-phase primal simplex runs. Warm starts
// reuse the current basis and pick dual or primal by the same test.
class Solver {
 public:
  explicit Solver(Model model, Options options = {});

  const Model& model() const { return model_; }
  int num_vars() const { return model_.num_vars; }
  int num_rows() const { return num_rows_; }

  void add_rows(std::span<const Row> rows);
  void set_bounds(int var, double lower, double upper);
  // Falls back to the all-logical basis when `basis` does not fit or is
  // singular.
  void load_basis(const Basis& basis);
  Basis basis() const;

  Solution solve();

 private:
  enum class Outcome { Optimal, Infeasible, Unbounded, IterationLimit, NeedsPrimal, Unverified };

  int num_cols() const { return model_.num_vars + num_rows_; }
  bool is_logical(int col) const { return col >= model_.num_vars; }
  double cost(int col) const { return is_logical(col) ? 0.0 : model_.objective[col]; }

  // Basis inverse. Column j of B^-1 is -e_{pos(logical j)} whenever row j's
  // logical is basic, so only the columns of the other ("kernel") rows are
  // stored: kernel_inv_ is num_rows x k with k = #basic structurals.
  Eigen::VectorXd binv_times(const Eigen::VectorXd& v) const;
  Eigen::VectorXd ftran(int col) const;
  Eigen::VectorXd binv_row(int pos) const;
  Eigen::VectorXd btran(const Eigen::VectorXd& cb) const;
  void drop_kernel_row(int row);

  void reset_to_slack_basis();
  bool refactor();
  void compute_primal();
  void compute_duals(const std::vector<double>& basic_costs);
  void compute_duals();
  void place_nonbasic(int col);
  bool make_dual_feasible();
  void pivot(int leaving_row, int entering_col, const Eigen::VectorXd& entering_column);

  // Simplex plus up to four refactor-and-verify rounds.
  Outcome run_to_verified_optimum(double dual_tol);
  Outcome dual_simplex();
  Outcome primal_simplex(bool phase_one);
  double max_primal_infeasibility() const;

  Model model_;
  Options options_;
  int num_rows_ = 0;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> a_;
  std::vector<double> lower_;  // all columns
  std::vector<double> upper_;
  std::vector<double> value_;
  std::vector<VarStatus> status_;
  std::vector<int> basis_head_;
  std::vector<int> basis_pos_;  // -1 for nonbasic
  std::vector<double> reduced_;
  Eigen::MatrixXd kernel_inv_;
  std::vector<int> kernel_rows_;  // row of each kernel_inv_ column
  std::vector<int> kernel_idx_;   // row -> kernel_inv_ column or -1
  bool factor_valid_ = false;
  int updates_since_refactor_ = 0;
  std::int64_t iterations_ = 0;
  std::int64_t iteration_cap_ = 0;
};

// One-shot convenience wrapper around Solver.
Solution solve(const Model& model, const Basis* warm_start = nullptr, Options options = {});

}  // namespace onebit::lp
