#include "onebit/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace onebit {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    const auto item = trim(s.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config: cannot parse value '" + std::string(text) + "' for key " + std::string(key));
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "on" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "off" || text == "no") return false;
  throw ConfigError("config: expected a boolean for key " + std::string(key));
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view text) {
  std::vector<T> out;
  for (auto item : split_list(text)) out.push_back(parse_number<T>(key, item));
  if (out.empty()) throw ConfigError("config: empty list for key " + std::string(key));
  return out;
}

}  // namespace

std::vector<std::string> config_keys() {
  return {"experiment", "m_tilde", "n_tilde", "snr_db", "trials", "methods", "base_seed", "output",
          "threads", "node_limit", "time_limit_ms", "integrality_tol", "violation_tol", "incumbent_shortcut",
          "mode", "lambda_init", "lambda_max", "growth_c", "rho", "tau", "kappa", "eps_stop",
          "max_inner_iters", "backtrack_factor"};
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "experiment") {
    static const std::vector<std::string_view> kinds{"signflip", "ber", "runtime_size", "runtime_snr",
                                                     "cutratio", "solve_one"};
    if (std::find(kinds.begin(), kinds.end(), value) == kinds.end()) {
      throw ConfigError("config: unknown experiment '" + std::string(value) + "'");
    }
    cfg.experiment = value;
  } else if (key == "m_tilde") {
    cfg.m_tilde = parse_list<int>(key, value);
  } else if (key == "n_tilde") {
    cfg.n_tilde = parse_list<int>(key, value);
  } else if (key == "snr_db") {
    cfg.snr_db = parse_list<double>(key, value);
  } else if (key == "trials") {
    cfg.trials = parse_number<int>(key, value);
  } else if (key == "methods") {
    cfg.methods.clear();
    for (auto item : split_list(value)) cfg.methods.emplace_back(item);
  } else if (key == "base_seed") {
    cfg.base_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "output") {
    cfg.output_path = value;
  } else if (key == "threads") {
    cfg.threads = parse_number<int>(key, value);
  } else if (key == "node_limit") {
    cfg.solver.node_limit = parse_number<std::int64_t>(key, value);
  } else if (key == "time_limit_ms") {
    cfg.solver.time_limit_ms = parse_number<std::int64_t>(key, value);
  } else if (key == "integrality_tol") {
    cfg.solver.integrality_tol = parse_number<double>(key, value);
  } else if (key == "violation_tol") {
    cfg.solver.violation_tol = parse_number<double>(key, value);
  } else if (key == "incumbent_shortcut") {
    cfg.solver.incumbent_shortcut = parse_bool(key, value);
  } else if (key == "mode") {
    if (value == "alg1") cfg.solver.mode = bnb::Mode::Alg1;
    else if (value == "alg2") cfg.solver.mode = bnb::Mode::Alg2;
    else throw ConfigError("config: mode must be alg1 or alg2");
  } else if (key == "lambda_init") {
    cfg.abb.lambda_init = parse_number<double>(key, value);
  } else if (key == "lambda_max") {
    cfg.abb.lambda_max = parse_number<double>(key, value);
  } else if (key == "growth_c") {
    cfg.abb.growth_c = parse_number<double>(key, value);
  } else if (key == "rho") {
    cfg.abb.rho = parse_number<double>(key, value);
  } else if (key == "tau") {
    cfg.abb.tau = parse_number<double>(key, value);
  } else if (key == "kappa") {
    cfg.abb.gll_memory_kappa = parse_number<int>(key, value);
  } else if (key == "eps_stop") {
    cfg.abb.eps_stop = parse_number<double>(key, value);
  } else if (key == "max_inner_iters") {
    cfg.abb.max_inner_iters = parse_number<int>(key, value);
  } else if (key == "backtrack_factor") {
    cfg.abb.backtrack_factor = parse_number<double>(key, value);
  } else {
    throw ConfigError("config: unknown key '" + std::string(key) + "'");
  }
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_setting(base, trim(view.substr(0, eq)), view.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), std::move(base));
}

std::vector<std::pair<int, int>> ExperimentConfig::sizes() const {
  std::vector<std::pair<int, int>> out;
  if (m_tilde.size() == n_tilde.size()) {
    for (std::size_t k = 0; k < m_tilde.size(); ++k) out.emplace_back(m_tilde[k], n_tilde[k]);
  } else if (m_tilde.size() == 1) {
    for (int n : n_tilde) out.emplace_back(m_tilde[0], n);
  } else if (n_tilde.size() == 1) {
    for (int m : m_tilde) out.emplace_back(m, n_tilde[0]);
  } else {
    throw ConfigError("config: m_tilde and n_tilde lists must have equal length or one entry");
  }
  return out;
}

std::vector<std::string> ExperimentConfig::effective_methods() const {
  if (!methods.empty()) return methods;
  if (experiment == "signflip") return {"gML", "AR-L1", "AR-L2"};
  if (experiment == "cutratio") return {"gML"};
  if (experiment == "runtime_size" || experiment == "runtime_snr") {
    return {"gML", "AR-L1", "AR-L2", "AR-L1-ABB", "exhaustive"};
  }
  if (experiment == "solve_one") return {"gML"};
  return {"gML", "AR-L1", "AR-L2", "AR-L1-ABB", "quantZF"};
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("config: trials must be >= 1");
  if (m_tilde.empty() || n_tilde.empty() || snr_db.empty()) throw ConfigError("config: lists must be non-empty");
  for (auto [m, n] : sizes()) {
    if (m < 1 || n < 1) throw ConfigError("config: sizes must be positive");
  }
  for (const auto& method : effective_methods()) {
    const auto& known = known_methods();
    if (std::find(known.begin(), known.end(), method) == known.end()) {
      throw ConfigError("config: unknown method '" + method + "'");
    }
  }
  if (threads < 0) throw ConfigError("config: threads must be >= 0");
  if (solver.node_limit < 1) throw ConfigError("config: node_limit must be >= 1");
  if (solver.time_limit_ms < 0) throw ConfigError("config: time_limit_ms must be >= 0");
  if (!(solver.integrality_tol > 0.0 && solver.integrality_tol < 0.5)) {
    throw ConfigError("config: integrality_tol must lie in (0, 0.5)");
  }
  if (!(solver.violation_tol > 0.0)) throw ConfigError("config: violation_tol must be positive");
  try {
    abb.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace onebit
