#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "onebit/config.hpp"
#include "onebit/detectors.hpp"
#include "onebit/model.hpp"

namespace onebit {

inline constexpr const char* kCsvHeader =
    "trial,method,snr_db,m_tilde,n_tilde,bit_errors,bits,wall_time_us,objective,status,extra_json";

struct BitErrors {
  int errors = 0;
  int bits = 0;
};

// Coordinates where x_hat and x_true differ; each real coordinate is one bit.
BitErrors ber(const Vector& x_hat, const Vector& x_true);

// #{i : b_i^T x < 0} / M
double signflip_ratio(const RealInstance& instance, const Vector& x);

struct TrialRecord {
  int trial = 0;
  std::string method;
  double snr_db = 0.0;
  int m_tilde = 0;
  int n_tilde = 0;
  int bit_errors = 0;
  int bits = 0;
  std::int64_t wall_time_us = 0;
  double objective = 0.0;
  std::string status = "ok";  // ok | not_proven_optimal | failed: <reason> | summary
  nlohmann::json extra = nlohmann::json::object();
};

struct MethodRun {
  DetectionResult detection;
  std::string status = "ok";
  nlohmann::json extra = nlohmann::json::object();
};

// Runs one method tag on an instance. `seed` feeds the randomized ABB start.
MethodRun run_method(const std::string& method, const RealInstance& instance, const ExperimentConfig& cfg,
                     std::uint64_t seed);

std::uint64_t trial_seed(std::uint64_t base_seed, int trial);

// For each (size, snr, trial) cell: one instance from trial_seed, every
// method on it. Records come back (and are streamed to `csv`, header first)
// in cell order regardless of worker scheduling; per-method summary rows
// follow the raw rows.
std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg, std::ostream* csv = nullptr);

struct SummaryRow {
  std::string method;
  double snr_db = 0.0;
  int m_tilde = 0;
  int n_tilde = 0;
  int trials = 0;
  std::int64_t bit_errors = 0;
  std::int64_t bits = 0;
  double mean_ber = 0.0;
  double mean_wall_time_us = 0.0;
  double mean_objective = 0.0;
  nlohmann::json mean_extra = nlohmann::json::object();
};

// Aggregates the non-summary, non-failed records per (method, snr, size).
std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records);
TrialRecord summary_record(const SummaryRow& row);

std::string csv_row(const TrialRecord& record);
// Parses one CSV line of the schema above (quoted extra_json allowed).
std::vector<std::string> split_csv_line(const std::string& line);

// Static SVG line chart from a sweep CSV: one series per method.
struct PlotSpec {
  std::string x_column = "snr_db";  // any numeric CSV column
  std::string metric = "ber";       // ber | wall_time_us | objective | a numeric extra_json key
  bool log_y = true;
  double y_floor = 1e-6;  // zero values on a log axis are drawn here and marked
  std::string title;
  int width = 640;
  int height = 420;
};

// Throws std::runtime_error naming the missing column.
std::string render_svg_plot(const std::string& csv_text, const PlotSpec& spec);
void emit_svg_plot(const std::string& csv_path, const PlotSpec& spec, const std::string& svg_path);

}  // namespace onebit
