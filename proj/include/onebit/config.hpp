#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "onebit/abb.hpp"
#include "onebit/bnb.hpp"

namespace onebit {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Method tags accepted by the experiment driver.
inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> tags{"gML", "AR-L1", "AR-L2", "AR-L1-ABB", "quantZF", "exhaustive", "alg1-gML"};
  return tags;
}

struct ExperimentConfig {
  std::string experiment = "ber";  // signflip | ber | runtime_size | runtime_snr | cutratio | solve_one
  std::vector<int> m_tilde{18};
  std::vector<int> n_tilde{4};
  std::vector<double> snr_db{0.0, 5.0, 10.0, 15.0};
  int trials = 500;
  std::vector<std::string> methods;  // empty: the experiment's default set
  std::uint64_t base_seed = 1;
  std::string output_path = "sweep.csv";
  int threads = 0;  // 0: hardware concurrency
  bnb::SolverOptions solver;
  abb::AbbParams abb;

  // (m_tilde, n_tilde) cells. Lists of equal length pair up element-wise; a
  // single-entry list broadcasts.
  std::vector<std::pair<int, int>> sizes() const;
  std::vector<std::string> effective_methods() const;
  void validate() const;
};

// Sets one key from its textual value. Throws ConfigError for unknown keys
// or unparsable values.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

// Flat "key = value" lines; '#' starts a comment; lists are comma-separated.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

std::vector<std::string> config_keys();

}  // namespace onebit
