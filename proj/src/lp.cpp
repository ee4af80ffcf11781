#include "onebit/lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace onebit::lp {
namespace {

bool is_finite(double v) { return std::isfinite(v); }

}  // namespace

Model Model::with_vars(int num_vars) {
  Model model;
  model.num_vars = num_vars;
  model.objective.assign(num_vars, 0.0);
  model.lower.assign(num_vars, 0.0);
  model.upper.assign(num_vars, kInfinity);
  return model;
}

void Model::validate() const {
  if (num_vars < 0) throw std::invalid_argument("lp: negative variable count");
  const auto n = static_cast<std::size_t>(num_vars);
  if (objective.size() != n || lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("lp: objective/bound vectors must have num_vars entries");
  }
  for (int j = 0; j < num_vars; ++j) {
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j]) {
      throw std::invalid_argument("lp: inconsistent bounds on variable " + std::to_string(j));
    }
    if (!is_finite(objective[j])) throw std::invalid_argument("lp: non-finite objective");
  }
  for (const Row& row : rows) {
    if (row.index.size() != row.value.size()) {
      throw std::invalid_argument("lp: row index/value length mismatch");
    }
    for (int j : row.index) {
      if (j < 0 || j >= num_vars) throw std::invalid_argument("lp: row references invalid variable");
    }
    if (std::isnan(row.rhs)) throw std::invalid_argument("lp: NaN row rhs");
  }
}

Model add_rows(Model model, std::span<const Row> rows) {
  model.rows.insert(model.rows.end(), rows.begin(), rows.end());
  return model;
}

std::string_view to_string(Status status) {
  switch (status) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

Solver::Solver(Model model, Options options) : model_(std::move(model)), options_(options) {
  model_.validate();
  const int n = model_.num_vars;
  lower_.assign(model_.lower.begin(), model_.lower.end());
  upper_.assign(model_.upper.begin(), model_.upper.end());
  value_.assign(n, 0.0);
  status_.assign(n, VarStatus::AtLower);
  reduced_.assign(n, 0.0);
  a_.resize(0, n);
  std::vector<Row> rows = std::move(model_.rows);
  model_.rows.clear();
  reset_to_slack_basis();
  add_rows(rows);
}

void Solver::reset_to_slack_basis() {
  const int n = model_.num_vars;
  basis_head_.resize(num_rows_);
  basis_pos_.assign(num_cols(), -1);
  for (int j = 0; j < n; ++j) {
    status_[j] = is_finite(lower_[j])   ? VarStatus::AtLower
                 : is_finite(upper_[j]) ? VarStatus::AtUpper
                                        : VarStatus::AtZero;
    place_nonbasic(j);
  }
  for (int i = 0; i < num_rows_; ++i) {
    basis_head_[i] = n + i;
    basis_pos_[n + i] = i;
    status_[n + i] = VarStatus::Basic;
  }
  kernel_inv_.resize(num_rows_, 0);
  kernel_rows_.clear();
  kernel_idx_.assign(num_rows_, -1);
  factor_valid_ = true;
  updates_since_refactor_ = 0;
}

void Solver::add_rows(std::span<const Row> rows) {
  if (rows.empty()) return;
  const int n = model_.num_vars;
  const int old_m = num_rows_;
  const int add = static_cast<int>(rows.size());
  for (const Row& row : rows) {
    if (row.index.size() != row.value.size()) throw std::invalid_argument("lp: malformed row");
    for (int j : row.index) {
      if (j < 0 || j >= n) throw std::invalid_argument("lp: row references invalid variable");
    }
  }

  a_.conservativeResize(old_m + add, n);
  a_.bottomRows(add).setZero();
  for (int k = 0; k < add; ++k) {
    const Row& row = rows[k];
    for (std::size_t t = 0; t < row.index.size(); ++t) a_(old_m + k, row.index[t]) += row.value[t];
    model_.rows.push_back(row);
    lower_.push_back(row.rhs);
    upper_.push_back(kInfinity);
    value_.push_back(0.0);
    status_.push_back(VarStatus::Basic);
    reduced_.push_back(0.0);
    basis_pos_.push_back(old_m + k);
    basis_head_.push_back(n + old_m + k);
  }
  num_rows_ = old_m + add;

  // [[B, 0], [a_B, -I]]^-1 = [[B^-1, 0], [a_B B^-1, -I]]; only the kernel
  // columns gain entries, a_B * (their structural part).
  kernel_idx_.resize(num_rows_, -1);
  if (factor_valid_) {
    const int k = static_cast<int>(kernel_rows_.size());
    Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(num_rows_, k);
    grown.topRows(old_m) = kernel_inv_;
    for (int pos = 0; pos < old_m; ++pos) {
      const int col = basis_head_[pos];
      if (is_logical(col)) continue;
      grown.bottomRows(add).noalias() += a_.block(old_m, col, add, 1) * kernel_inv_.row(pos);
    }
    kernel_inv_ = std::move(grown);
  }
}

void Solver::set_bounds(int var, double lower, double upper) {
  if (var < 0 || var >= model_.num_vars) throw std::out_of_range("lp: set_bounds variable");
  if (lower > upper) throw std::invalid_argument("lp: set_bounds with lower > upper");
  lower_[var] = model_.lower[var] = lower;
  upper_[var] = model_.upper[var] = upper;
  if (status_[var] != VarStatus::Basic) {
    if (status_[var] == VarStatus::AtLower && !is_finite(lower)) status_[var] = VarStatus::AtUpper;
    if (status_[var] == VarStatus::AtUpper && !is_finite(upper)) status_[var] = VarStatus::AtLower;
    if (!is_finite(lower) && !is_finite(upper)) status_[var] = VarStatus::AtZero;
    place_nonbasic(var);
  }
}

void Solver::load_basis(const Basis& basis) {
  const bool fits = basis.num_vars == model_.num_vars &&
                    basis.status.size() <= static_cast<std::size_t>(num_cols()) &&
                    basis.status.size() >= static_cast<std::size_t>(model_.num_vars);
  if (!fits) {
    reset_to_slack_basis();
    return;
  }
  std::vector<VarStatus> status(num_cols(), VarStatus::Basic);
  std::copy(basis.status.begin(), basis.status.end(), status.begin());
  if (std::count(status.begin(), status.end(), VarStatus::Basic) != num_rows_) {
    reset_to_slack_basis();
    return;
  }
  status_ = std::move(status);
  basis_head_.clear();
  basis_pos_.assign(num_cols(), -1);
  for (int col = 0; col < num_cols(); ++col) {
    if (status_[col] == VarStatus::Basic) {
      basis_pos_[col] = static_cast<int>(basis_head_.size());
      basis_head_.push_back(col);
    } else {
      if (status_[col] == VarStatus::AtLower && !is_finite(lower_[col])) status_[col] = VarStatus::AtUpper;
      if (status_[col] == VarStatus::AtUpper && !is_finite(upper_[col])) status_[col] = VarStatus::AtLower;
      if (!is_finite(lower_[col]) && !is_finite(upper_[col])) status_[col] = VarStatus::AtZero;
      place_nonbasic(col);
    }
  }
  if (!refactor()) reset_to_slack_basis();
}

Basis Solver::basis() const {
  return Basis{.status = status_, .num_vars = model_.num_vars};
}

void Solver::place_nonbasic(int col) {
  switch (status_[col]) {
    case VarStatus::AtLower: value_[col] = lower_[col]; break;
    case VarStatus::AtUpper: value_[col] = upper_[col]; break;
    case VarStatus::AtZero: value_[col] = 0.0; break;
    case VarStatus::Basic: break;
  }
}

Eigen::VectorXd Solver::binv_times(const Eigen::VectorXd& v) const {
  const int n = model_.num_vars;
  const int k = static_cast<int>(kernel_rows_.size());
  Eigen::VectorXd g(k);
  for (int t = 0; t < k; ++t) g(t) = v(kernel_rows_[t]);
  Eigen::VectorXd out = kernel_inv_ * g;
  for (int j = 0; j < num_rows_; ++j) {
    if (kernel_idx_[j] < 0) out(basis_pos_[n + j]) -= v(j);
  }
  return out;
}

Eigen::VectorXd Solver::ftran(int col) const {
  const int n = model_.num_vars;
  if (is_logical(col)) {
    const int j = col - n;
    if (kernel_idx_[j] >= 0) return -kernel_inv_.col(kernel_idx_[j]);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(num_rows_);
    e(basis_pos_[col]) = 1.0;
    return e;
  }
  return binv_times(a_.col(col));
}

Eigen::VectorXd Solver::binv_row(int pos) const {
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(num_rows_);
  for (std::size_t t = 0; t < kernel_rows_.size(); ++t) rho(kernel_rows_[t]) = kernel_inv_(pos, t);
  const int col = basis_head_[pos];
  if (is_logical(col)) rho(col - model_.num_vars) = -1.0;
  return rho;
}

Eigen::VectorXd Solver::btran(const Eigen::VectorXd& cb) const {
  const int n = model_.num_vars;
  Eigen::VectorXd y(num_rows_);
  for (int j = 0; j < num_rows_; ++j) {
    y(j) = kernel_idx_[j] >= 0 ? kernel_inv_.col(kernel_idx_[j]).dot(cb) : -cb(basis_pos_[n + j]);
  }
  return y;
}

void Solver::drop_kernel_row(int row) {
  const int t = kernel_idx_[row];
  const int last = static_cast<int>(kernel_rows_.size()) - 1;
  if (t != last) {
    kernel_inv_.col(t) = kernel_inv_.col(last);
    kernel_rows_[t] = kernel_rows_[last];
    kernel_idx_[kernel_rows_[t]] = t;
  }
  kernel_rows_.pop_back();
  kernel_inv_.conservativeResize(Eigen::NoChange, last);
  kernel_idx_[row] = -1;
}

// B u = e_j for a kernel row j: with S the basic structurals and R the
// kernel rows, A[R,S] u_S = e_j and each basic logical takes A[i,S] u_S.
bool Solver::refactor() {
  updates_since_refactor_ = 0;
  const int n = model_.num_vars;
  std::vector<int> structurals;
  kernel_rows_.clear();
  kernel_idx_.assign(num_rows_, -1);
  for (int pos = 0; pos < num_rows_; ++pos) {
    if (!is_logical(basis_head_[pos])) structurals.push_back(pos);
  }
  for (int j = 0; j < num_rows_; ++j) {
    if (status_[n + j] != VarStatus::Basic) {
      kernel_idx_[j] = static_cast<int>(kernel_rows_.size());
      kernel_rows_.push_back(j);
    }
  }
  const int k = static_cast<int>(kernel_rows_.size());
  if (static_cast<int>(structurals.size()) != k) {
    factor_valid_ = false;
    return false;
  }
  kernel_inv_ = Eigen::MatrixXd::Zero(num_rows_, k);
  if (k == 0) {
    factor_valid_ = true;
    return true;
  }
  Eigen::MatrixXd kernel(k, k);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) kernel(a, b) = a_(kernel_rows_[a], basis_head_[structurals[b]]);
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(kernel);
  const auto diag = lu.matrixLU().diagonal().cwiseAbs();
  const double scale = std::max(1.0, kernel.cwiseAbs().maxCoeff());
  if (diag.minCoeff() <= 1e-12 * scale) {
    factor_valid_ = false;
    return false;
  }
  const Eigen::MatrixXd kinv = lu.inverse();
  for (int b = 0; b < k; ++b) kernel_inv_.row(structurals[b]) = kinv.row(b);
  Eigen::RowVectorXd arow(k);
  for (int i = 0; i < num_rows_; ++i) {
    if (kernel_idx_[i] >= 0) continue;
    for (int b = 0; b < k; ++b) arow(b) = a_(i, basis_head_[structurals[b]]);
    kernel_inv_.row(basis_pos_[n + i]).noalias() = arow * kinv;
  }
  factor_valid_ = true;
  return true;
}

void Solver::compute_primal() {
  const int n = model_.num_vars;
  Eigen::VectorXd xn = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (status_[j] != VarStatus::Basic) xn(j) = value_[j];
  }
  Eigen::VectorXd q = a_ * xn;
  for (int i = 0; i < num_rows_; ++i) {
    if (status_[n + i] != VarStatus::Basic) q(i) -= value_[n + i];
  }
  const Eigen::VectorXd xb = -binv_times(q);
  for (int i = 0; i < num_rows_; ++i) value_[basis_head_[i]] = xb(i);
}

void Solver::compute_duals(const std::vector<double>& basic_costs) {
  const int n = model_.num_vars;
  Eigen::VectorXd cb(num_rows_);
  for (int i = 0; i < num_rows_; ++i) cb(i) = basic_costs[i];
  const Eigen::VectorXd y = btran(cb);
  const Eigen::VectorXd ay = a_.transpose() * y;
  for (int j = 0; j < n; ++j) reduced_[j] = cost(j) - ay(j);
  for (int i = 0; i < num_rows_; ++i) reduced_[n + i] = y(i);
  for (int col : basis_head_) reduced_[col] = 0.0;
}

void Solver::compute_duals() {
  std::vector<double> cb(num_rows_);
  for (int i = 0; i < num_rows_; ++i) cb[i] = cost(basis_head_[i]);
  compute_duals(cb);
}

bool Solver::make_dual_feasible() {
  bool ok = true;
  for (int col = 0; col < num_cols(); ++col) {
    if (status_[col] == VarStatus::Basic) continue;
    const double d = reduced_[col];
    const bool has_lower = is_finite(lower_[col]);
    const bool has_upper = is_finite(upper_[col]);
    if (has_lower && lower_[col] == upper_[col]) {
      status_[col] = VarStatus::AtLower;
    } else if (d > kOptimalityTol) {
      if (has_lower) status_[col] = VarStatus::AtLower; else ok = false;
    } else if (d < -kOptimalityTol) {
      if (has_upper) status_[col] = VarStatus::AtUpper; else ok = false;
    } else if ((status_[col] == VarStatus::AtLower && !has_lower) ||
               (status_[col] == VarStatus::AtUpper && !has_upper) ||
               (status_[col] == VarStatus::AtZero && (has_lower || has_upper))) {
      status_[col] = has_lower ? VarStatus::AtLower : has_upper ? VarStatus::AtUpper : VarStatus::AtZero;
    }
    place_nonbasic(col);
  }
  return ok;
}

double Solver::max_primal_infeasibility() const {
  double worst = 0.0;
  for (int col : basis_head_) {
    worst = std::max({worst, lower_[col] - value_[col], value_[col] - upper_[col]});
  }
  return worst;
}

void Solver::pivot(int leaving_row, int entering_col, const Eigen::VectorXd& entering_column) {
  const int n = model_.num_vars;
  const int leaving_col = basis_head_[leaving_row];
  const double p = entering_column(leaving_row);
  // B_new^-1 = (I - (abar - e_r) e_r^T / p) B^-1
  Eigen::VectorXd eta = entering_column;
  eta(leaving_row) -= 1.0;
  const Eigen::RowVectorXd f = kernel_inv_.row(leaving_row) / p;
  kernel_inv_.noalias() -= eta * f;

  if (is_logical(entering_col)) drop_kernel_row(entering_col - n);
  if (is_logical(leaving_col)) {
    // its column was -e_r before the update
    const int row = leaving_col - n;
    const int t = static_cast<int>(kernel_rows_.size());
    kernel_inv_.conservativeResize(Eigen::NoChange, t + 1);
    kernel_inv_.col(t) = eta / p;
    kernel_inv_(leaving_row, t) -= 1.0;
    kernel_rows_.push_back(row);
    kernel_idx_[row] = t;
  }

  basis_head_[leaving_row] = entering_col;
  basis_pos_[entering_col] = leaving_row;
  basis_pos_[leaving_col] = -1;
  status_[entering_col] = VarStatus::Basic;
  ++updates_since_refactor_;
  ++iterations_;
}

Solver::Outcome Solver::dual_simplex() {
  const int n = model_.num_vars;
  int degenerate_run = 0;
  while (true) {
    if (iterations_ >= iteration_cap_) return Outcome::IterationLimit;
    if (updates_since_refactor_ >= options_.refactor_interval) {
      if (!refactor()) return Outcome::NeedsPrimal;
      compute_primal();
      compute_duals();
      if (!make_dual_feasible()) return Outcome::NeedsPrimal;
      compute_primal();
    }
    const bool bland = degenerate_run > 3 * std::max(num_rows_, 1);

    int r = -1;
    double worst = 0.0;
    for (int i = 0; i < num_rows_; ++i) {
      const int col = basis_head_[i];
      const double v = value_[col];
      double infeas = 0.0;
      if (v < lower_[col] - kFeasibilityTol) infeas = lower_[col] - v;
      else if (v > upper_[col] + kFeasibilityTol) infeas = v - upper_[col];
      else continue;
      if (bland) {
        if (r < 0 || col < basis_head_[r]) r = i;
      } else if (infeas > worst) {
        worst = infeas;
        r = i;
      }
    }
    if (r < 0) return Outcome::Optimal;

    const int leaving = basis_head_[r];
    const bool to_lower = value_[leaving] < lower_[leaving];
    const double target = to_lower ? lower_[leaving] : upper_[leaving];
    const Eigen::VectorXd rho = binv_row(r);
    Eigen::VectorXd alpha_struct = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < num_rows_; ++j) {
      if (rho(j) != 0.0) alpha_struct.noalias() += rho(j) * a_.row(j).transpose();
    }
    auto alpha_of = [&](int col) { return is_logical(col) ? -rho(col - n) : alpha_struct(col); };

    // Candidates move x_leaving toward its violated bound while keeping
    // reduced costs sign-feasible.
    struct Candidate { int col; double ratio; double abs_alpha; };
    std::vector<Candidate> cands;
    double largest = 0.0;
    for (int col = 0; col < num_cols(); ++col) {
      const VarStatus st = status_[col];
      if (st == VarStatus::Basic) continue;
      if (lower_[col] == upper_[col]) continue;
      const double a = alpha_of(col);
      if (std::abs(a) <= kMinPivot) continue;
      // x_leaving moves by -a per unit increase of x_col.
      const double s = to_lower ? -a : a;  // > 0: increasing col helps
      bool eligible = false;
      if (st == VarStatus::AtZero) eligible = true;
      else if (st == VarStatus::AtLower) eligible = s > 0;
      else if (st == VarStatus::AtUpper) eligible = s < 0;
      if (!eligible) continue;
      const double dd = (st == VarStatus::AtLower)   ? std::max(reduced_[col], 0.0)
                        : (st == VarStatus::AtUpper) ? std::max(-reduced_[col], 0.0)
                                                     : std::abs(reduced_[col]);
      cands.push_back({col, dd / std::abs(a), std::abs(a)});
      largest = std::max(largest, std::abs(a));
    }
    if (cands.empty()) return Outcome::Infeasible;
    // tiny pivots wreck the basis when coefficients span many magnitudes
    const double floor = largest > kPivotTol ? kPivotTol : kMinPivot;
    std::erase_if(cands, [&](const Candidate& c) { return c.abs_alpha <= floor; });
    double harris = kInfinity;
    for (const Candidate& c : cands) harris = std::min(harris, c.ratio + kOptimalityTol / c.abs_alpha);

    int q = -1;
    double best_alpha = 0.0;
    double best_ratio = kInfinity;
    if (bland) {
      for (const Candidate& c : cands) best_ratio = std::min(best_ratio, c.ratio);
      for (const Candidate& c : cands) {
        if (c.ratio <= best_ratio + 1e-15 && (q < 0 || c.col < q)) q = c.col;
      }
    } else {
      for (const Candidate& c : cands) {
        if (c.ratio <= harris && c.abs_alpha > best_alpha) {
          best_alpha = c.abs_alpha;
          q = c.col;
        }
      }
    }

    const Eigen::VectorXd abar = ftran(q);
    const double alpha_q = alpha_of(q);
    if (std::abs(abar(r) - alpha_q) > 1e-7 * (1.0 + std::abs(alpha_q)) || std::abs(abar(r)) <= kMinPivot) {
      if (updates_since_refactor_ == 0) return Outcome::NeedsPrimal;
      updates_since_refactor_ = options_.refactor_interval;
      continue;
    }

    // Dual update.
    double theta_d = reduced_[q] / alpha_q;
    if (to_lower ? theta_d > 0 : theta_d < 0) theta_d = 0.0;  // Harris shift
    for (int col = 0; col < num_cols(); ++col) {
      if (status_[col] != VarStatus::Basic) reduced_[col] -= theta_d * alpha_of(col);
    }
    reduced_[q] = 0.0;
    reduced_[leaving] = -theta_d;
    degenerate_run = (std::abs(theta_d) < 1e-12) ? degenerate_run + 1 : 0;

    // Primal update.
    const double delta = (value_[leaving] - target) / abar(r);
    value_[q] += delta;
    for (int i = 0; i < num_rows_; ++i) value_[basis_head_[i]] -= delta * abar(i);
    status_[leaving] = to_lower ? VarStatus::AtLower : VarStatus::AtUpper;
    value_[leaving] = target;
    pivot(r, q, abar);
  }
}

Solver::Outcome Solver::primal_simplex(bool phase_one) {
  int degenerate_run = 0;
  while (true) {
    if (iterations_ >= iteration_cap_) return Outcome::IterationLimit;
    if (updates_since_refactor_ >= options_.refactor_interval) {
      if (!refactor()) {
        reset_to_slack_basis();
      }
      compute_primal();
    }
    const bool bland = degenerate_run > 3 * std::max(num_rows_, 1);

    std::vector<double> cb(num_rows_, 0.0);
    bool any_infeasible = false;
    for (int i = 0; i < num_rows_; ++i) {
      const int col = basis_head_[i];
      if (phase_one) {
        if (value_[col] < lower_[col] - kFeasibilityTol) { cb[i] = -1.0; any_infeasible = true; }
        else if (value_[col] > upper_[col] + kFeasibilityTol) { cb[i] = 1.0; any_infeasible = true; }
      } else {
        cb[i] = cost(col);
      }
    }
    if (phase_one && !any_infeasible) return Outcome::Optimal;
    compute_duals(cb);
    if (phase_one) {
      // phase-one costs are zero off the basis
      for (int col = 0; col < num_cols(); ++col) {
        if (status_[col] != VarStatus::Basic) reduced_[col] -= cost(col);
      }
    }

    int q = -1;
    int dir = 0;
    double best = 0.0;
    for (int col = 0; col < num_cols(); ++col) {
      if (status_[col] == VarStatus::Basic) continue;
      const double d = reduced_[col];
      int cand_dir = 0;
      if (d < -kOptimalityTol && value_[col] < upper_[col]) cand_dir = 1;
      else if (d > kOptimalityTol && value_[col] > lower_[col]) cand_dir = -1;
      if (cand_dir == 0) continue;
      if (bland) {
        q = col;
        dir = cand_dir;
        break;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        q = col;
        dir = cand_dir;
      }
    }
    if (q < 0) {
      if (phase_one) return Outcome::Infeasible;
      return Outcome::Optimal;
    }

    const Eigen::VectorXd abar = ftran(q);
    const double flip = dir > 0 ? upper_[q] - value_[q] : value_[q] - lower_[q];

    // Harris two-pass: bounds relaxed by the feasibility tolerance give the
    // step cap; among rows blocking within the cap take the largest pivot.
    struct Block { int row; double limit; double relaxed; double target; double rate; };
    std::vector<Block> blocks;
    for (int i = 0; i < num_rows_; ++i) {
      const double rate = -dir * abar(i);
      if (std::abs(rate) <= kMinPivot) continue;
      const int col = basis_head_[i];
      const double v = value_[col];
      double bound = kInfinity;
      bool upward = false;
      if (phase_one && v < lower_[col] - kFeasibilityTol) {
        if (rate > 0) { bound = lower_[col]; upward = true; }
      } else if (phase_one && v > upper_[col] + kFeasibilityTol) {
        if (rate < 0) bound = upper_[col];
      } else if (rate > 0) {
        if (is_finite(upper_[col])) { bound = upper_[col]; upward = true; }
      } else if (is_finite(lower_[col])) {
        bound = lower_[col];
      }
      if (!is_finite(bound)) continue;
      const double gap = upward ? bound - v : v - bound;
      const double r = std::abs(rate);
      blocks.push_back({i, std::max(gap / r, 0.0), std::max((gap + kFeasibilityTol) / r, 0.0), bound, rate});
    }
    double cap = flip;
    for (const Block& blk : blocks) cap = std::min(cap, blk.relaxed);

    double step = flip;
    int leave_row = -1;
    double leave_target = 0.0;
    if (bland) {
      for (const Block& blk : blocks) {
        if (blk.limit < step - 1e-12 ||
            (blk.limit <= step + 1e-12 && leave_row >= 0 && basis_head_[blk.row] < basis_head_[leave_row])) {
          step = blk.limit;
          leave_row = blk.row;
          leave_target = blk.target;
        }
      }
    } else if (is_finite(cap)) {
      double best_rate = 0.0;
      const Block* chosen = nullptr;
      for (const Block& blk : blocks) {
        if (blk.limit <= cap && std::abs(blk.rate) > best_rate) {
          best_rate = std::abs(blk.rate);
          chosen = &blk;
        }
      }
      if (chosen != nullptr && !(flip <= cap && flip <= chosen->limit)) {
        step = chosen->limit;
        leave_row = chosen->row;
        leave_target = chosen->target;
      }
    }
    if (!is_finite(step)) {
      if (phase_one) {
        // Cannot happen in exact arithmetic: phase one is bounded below.
        if (updates_since_refactor_ == 0) return Outcome::Infeasible;
        updates_since_refactor_ = options_.refactor_interval;
        continue;
      }
      return Outcome::Unbounded;
    }
    degenerate_run = step < 1e-12 ? degenerate_run + 1 : 0;

    value_[q] += dir * step;
    for (int i = 0; i < num_rows_; ++i) value_[basis_head_[i]] -= dir * step * abar(i);
    if (leave_row < 0) {
      status_[q] = dir > 0 ? VarStatus::AtUpper : VarStatus::AtLower;
      place_nonbasic(q);
      ++iterations_;
      continue;
    }
    const int leaving = basis_head_[leave_row];
    value_[leaving] = leave_target;
    status_[leaving] = leave_target == lower_[leaving] ? VarStatus::AtLower : VarStatus::AtUpper;
    pivot(leave_row, q, abar);
  }
}

Solver::Outcome Solver::run_to_verified_optimum(double dual_tol) {
  compute_duals();
  bool dual_ok = make_dual_feasible();
  compute_primal();

  Outcome outcome = Outcome::IterationLimit;
  for (int attempt = 0; attempt < 4; ++attempt) {
    if (dual_ok) {
      outcome = dual_simplex();
      if (outcome == Outcome::NeedsPrimal) {
        if (!refactor()) reset_to_slack_basis();
        compute_duals();
        make_dual_feasible();
        compute_primal();
        outcome = primal_simplex(true);
        if (outcome == Outcome::Optimal) outcome = primal_simplex(false);
      }
    } else {
      outcome = primal_simplex(true);
      if (outcome == Outcome::Optimal) outcome = primal_simplex(false);
    }
    if (outcome != Outcome::Optimal) return outcome;

    if (!refactor()) {
      reset_to_slack_basis();
      compute_duals();
      dual_ok = make_dual_feasible();
      compute_primal();
      continue;
    }
    compute_primal();
    compute_duals();
    double dual_infeas = 0.0;
    for (int col = 0; col < num_cols(); ++col) {
      if (status_[col] == VarStatus::Basic) continue;
      const double d = reduced_[col];
      if (d < 0 && value_[col] < upper_[col]) dual_infeas = std::max(dual_infeas, -d);
      if (d > 0 && value_[col] > lower_[col]) dual_infeas = std::max(dual_infeas, d);
    }
    const double primal_infeas = max_primal_infeasibility();
    if (primal_infeas <= kFeasibilityTol && dual_infeas <= dual_tol) return Outcome::Optimal;
    dual_ok = dual_infeas <= dual_tol;
  }
  return Outcome::Unverified;
}

Solution Solver::solve() {
  iterations_ = 0;
  const std::int64_t cap = options_.iteration_limit > 0 ? options_.iteration_limit
                                                        : 50LL * (model_.num_vars + num_rows_);
  iteration_cap_ = cap;
  if (!factor_valid_ && !refactor()) reset_to_slack_basis();

  Outcome outcome = run_to_verified_optimum(kOptimalityTol);
  if (outcome == Outcome::Unverified) {
    // Nearly singular bases (condition ~1e10 on far-tail cuts) can bounce
    // between a tiny dual and a large primal violation forever. Start over
    // from the slack basis and accept reduced costs at the looser level.
    reset_to_slack_basis();
    iteration_cap_ = iterations_ + cap;
    outcome = run_to_verified_optimum(kRecoveryOptimalityTol);
  }

  Solution sol;
  sol.iterations = iterations_;
  switch (outcome) {
    case Outcome::Optimal: sol.status = Status::Optimal; break;
    case Outcome::Infeasible: sol.status = Status::Infeasible; break;
    case Outcome::Unbounded: sol.status = Status::Unbounded; break;
    default: sol.status = Status::IterationLimit; break;
  }
  const int n = model_.num_vars;
  sol.primal.assign(value_.begin(), value_.begin() + n);
  if (sol.status == Status::Optimal) {
    // snap basic structurals that sit a rounding error outside their box
    for (int j = 0; j < n; ++j) sol.primal[j] = std::clamp(sol.primal[j], lower_[j], upper_[j]);
  }
  double obj = 0.0;
  for (int j = 0; j < n; ++j) obj += model_.objective[j] * sol.primal[j];
  sol.objective_value = obj;
  sol.basis = basis();
  return sol;
}

Solution solve(const Model& model, const Basis* warm_start, Options options) {
  Solver solver(model, options);
  if (warm_start != nullptr && !warm_start->empty()) solver.load_basis(*warm_start);
  return solver.solve();
}

}  // namespace onebit::lp
