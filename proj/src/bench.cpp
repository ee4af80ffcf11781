#include "onebit/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "onebit/abb.hpp"
#include "onebit/bnb.hpp"
#include "onebit/links.hpp"

namespace onebit {
namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

constexpr std::uint64_t kAbbSeedSalt = 0xA5A5F00DCAFEULL;

MethodRun from_global(const bnb::GlobalResult& g, const char* tag) {
  MethodRun run;
  run.detection.method = tag;
  run.detection.x_hat = g.x_opt;
  run.detection.objective = g.objective;
  run.detection.wall_time = g.stats.wall_time;
  run.status = g.proven_optimal ? "ok" : "not_proven_optimal";
  run.extra["nodes"] = g.stats.nodes_processed;
  run.extra["lp_solves"] = g.stats.lp_solves;
  run.extra["cuts_generated"] = g.stats.cuts_generated;
  run.extra["pool_size"] = g.stats.pool_size;
  run.extra["cut_pool_ratio"] = g.stats.cut_pool_ratio;
  run.extra["max_cut_rounds"] = g.stats.max_cut_rounds;
  if (g.stats.outer_iterations > 1 || std::string_view(tag) == "alg1-gML") {
    run.extra["outer_iterations"] = g.stats.outer_iterations;
  }
  return run;
}

}  // namespace

BitErrors ber(const Vector& x_hat, const Vector& x_true) {
  if (x_hat.size() != x_true.size()) throw std::invalid_argument("ber: length mismatch");
  BitErrors out;
  out.bits = static_cast<int>(x_true.size());
  for (Eigen::Index j = 0; j < x_true.size(); ++j) out.errors += x_hat(j) != x_true(j) ? 1 : 0;
  return out;
}

double signflip_ratio(const RealInstance& instance, const Vector& x) {
  if (x.size() != instance.n()) throw std::invalid_argument("signflip_ratio: x has wrong length");
  const Vector t = instance.b * x;
  return static_cast<double>((t.array() < 0.0).count()) / static_cast<double>(instance.m());
}

std::uint64_t trial_seed(std::uint64_t base_seed, int trial) { return base_seed + static_cast<std::uint64_t>(trial); }

MethodRun run_method(const std::string& method, const RealInstance& instance, const ExperimentConfig& cfg,
                     std::uint64_t seed) {
  const auto ml = LinkFunction::ml(instance.sigma);
  if (method == "gML") {
    bnb::SolverOptions opts = cfg.solver;
    opts.mode = bnb::Mode::Alg2;
    return from_global(bnb::solve_global(instance, ml, opts), "gML");
  }
  if (method == "alg1-gML") return from_global(bnb::solve_alg1(instance, ml, cfg.solver), "alg1-gML");
  if (method == "AR-L1") return from_global(bnb::solve_global(instance, LinkFunction::ar_l1(), cfg.solver), "AR-L1");
  if (method == "AR-L2") return from_global(bnb::solve_global(instance, LinkFunction::ar_l2(), cfg.solver), "AR-L2");
  if (method == "AR-L1-ABB") {
    abb::AbbResult res = abb::solve_abb(instance, cfg.abb, seed ^ kAbbSeedSalt);
    MethodRun run;
    run.detection = std::move(res.detection);
    run.extra["iterations"] = res.stats.iterations;
    run.extra["stages"] = res.stats.stages;
    run.extra["extreme_fraction"] = res.stats.extreme_fraction;
    if (res.stats.stage_iteration_limits > 0) run.extra["stage_iteration_limits"] = res.stats.stage_iteration_limits;
    return run;
  }
  if (method == "quantZF") {
    MethodRun run;
    run.detection = quantized_zf(instance);
    return run;
  }
  if (method == "exhaustive") {
    MethodRun run;
    run.detection = exhaustive_search(instance, ml);
    return run;
  }
  throw std::invalid_argument("unknown method '" + method + "'");
}

std::string csv_row(const TrialRecord& r) {
  std::string extra = r.extra.dump();
  std::string quoted = "\"";
  for (char ch : extra) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  quoted += '"';
  return std::to_string(r.trial) + "," + r.method + "," + format_short(r.snr_db) + "," +
         std::to_string(r.m_tilde) + "," + std::to_string(r.n_tilde) + "," + std::to_string(r.bit_errors) +
         "," + std::to_string(r.bits) + "," + std::to_string(r.wall_time_us) + "," + format_double(r.objective) +
         "," + r.status + "," + quoted;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (in_quotes) {
      if (ch == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur += '"';
          ++k;
        } else {
          in_quotes = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records) {
  using Key = std::tuple<int, int, double, std::string>;
  std::map<Key, SummaryRow> cells;
  std::map<Key, std::map<std::string, std::pair<double, int>>> extras;
  std::vector<Key> order;
  for (const TrialRecord& r : records) {
    if (r.status == "summary" || r.status.rfind("failed", 0) == 0) continue;
    const Key key{r.m_tilde, r.n_tilde, r.snr_db, r.method};
    auto [it, inserted] = cells.try_emplace(key);
    SummaryRow& s = it->second;
    if (inserted) {
      order.push_back(key);
      s.method = r.method;
      s.snr_db = r.snr_db;
      s.m_tilde = r.m_tilde;
      s.n_tilde = r.n_tilde;
    }
    ++s.trials;
    s.bit_errors += r.bit_errors;
    s.bits += r.bits;
    s.mean_wall_time_us += static_cast<double>(r.wall_time_us);
    s.mean_objective += r.objective;
    for (const auto& [name, value] : r.extra.items()) {
      if (!value.is_number()) continue;
      auto& acc = extras[key][name];
      acc.first += value.get<double>();
      acc.second += 1;
    }
  }
  std::vector<SummaryRow> out;
  for (const Key& key : order) {
    SummaryRow s = cells[key];
    s.mean_ber = s.bits > 0 ? static_cast<double>(s.bit_errors) / static_cast<double>(s.bits) : 0.0;
    s.mean_wall_time_us /= s.trials;
    s.mean_objective /= s.trials;
    for (const auto& [name, acc] : extras[key]) s.mean_extra[name] = acc.first / acc.second;
    out.push_back(std::move(s));
  }
  return out;
}

TrialRecord summary_record(const SummaryRow& s) {
  TrialRecord r;
  r.trial = -1;
  r.method = s.method;
  r.snr_db = s.snr_db;
  r.m_tilde = s.m_tilde;
  r.n_tilde = s.n_tilde;
  // bit totals keep the row within the schema's integer columns
  r.bit_errors = static_cast<int>(s.bit_errors);
  r.bits = static_cast<int>(s.bits);
  r.wall_time_us = std::llround(s.mean_wall_time_us);
  r.objective = s.mean_objective;
  r.status = "summary";
  r.extra = s.mean_extra;
  r.extra["trials"] = s.trials;
  r.extra["mean_ber"] = s.mean_ber;
  r.extra["mean_wall_time_us"] = s.mean_wall_time_us;
  return r;
}

std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg, std::ostream* csv) {
  cfg.validate();
  const auto sizes = cfg.sizes();
  const auto methods = cfg.effective_methods();
  const int trials = cfg.experiment == "solve_one" ? 1 : cfg.trials;

  struct Job {
    int m_tilde, n_tilde;
    double snr_db;
    int trial;
  };
  std::vector<Job> jobs;
  for (auto [m, n] : sizes) {
    for (double snr : cfg.snr_db) {
      for (int t = 0; t < trials; ++t) jobs.push_back({m, n, snr, t});
    }
  }

  auto run_job = [&](const Job& job) {
    std::vector<TrialRecord> out;
    const std::uint64_t seed = trial_seed(cfg.base_seed, job.trial);
    const RealInstance inst = generate_instance(job.m_tilde, job.n_tilde, job.snr_db, seed);
    const double true_flip = signflip_ratio(inst, *inst.x_true);
    for (const std::string& method : methods) {
      TrialRecord rec;
      rec.trial = job.trial;
      rec.method = method;
      rec.snr_db = job.snr_db;
      rec.m_tilde = job.m_tilde;
      rec.n_tilde = job.n_tilde;
      rec.bits = inst.n();
      try {
        MethodRun run = run_method(method, inst, cfg, seed);
        const BitErrors be = ber(run.detection.x_hat, *inst.x_true);
        rec.bit_errors = be.errors;
        rec.wall_time_us = std::chrono::duration_cast<std::chrono::microseconds>(run.detection.wall_time).count();
        rec.objective = run.detection.objective;
        rec.status = run.status;
        rec.extra = std::move(run.extra);
        rec.extra["signflip"] = signflip_ratio(inst, run.detection.x_hat);
        rec.extra["signflip_true"] = true_flip;
      } catch (const std::exception& e) {
        rec.status = std::string("failed: ") + e.what();
        for (char& ch : rec.status) {
          if (ch == ',' || ch == '\n') ch = ';';
        }
      }
      out.push_back(std::move(rec));
    }
    return out;
  };

  if (csv) *csv << kCsvHeader << '\n';
  std::vector<TrialRecord> records;
  records.reserve(jobs.size() * methods.size());
  auto emit = [&](std::vector<TrialRecord>& batch) {
    for (TrialRecord& r : batch) {
      if (csv) *csv << csv_row(r) << '\n';
      records.push_back(std::move(r));
    }
    if (csv) csv->flush();
  };

  int workers = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, std::max(1, static_cast<int>(jobs.size())));

  if (workers == 1) {
    for (const Job& job : jobs) {
      auto batch = run_job(job);
      emit(batch);
    }
  } else {
    // Workers claim jobs in order; the calling thread writes finished jobs
    // strictly in job order.
    std::vector<std::optional<std::vector<TrialRecord>>> done(jobs.size());
    std::mutex mu;
    std::condition_variable cv;
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const std::size_t k = next.fetch_add(1);
          if (k >= jobs.size()) return;
          auto batch = run_job(jobs[k]);
          {
            std::lock_guard lock(mu);
            done[k] = std::move(batch);
          }
          cv.notify_all();
        }
      });
    }
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return done[k].has_value(); });
      auto batch = std::move(*done[k]);
      done[k].reset();
      lock.unlock();
      emit(batch);
    }
  }

  std::vector<TrialRecord> summaries;
  for (const SummaryRow& s : summarize(records)) summaries.push_back(summary_record(s));
  emit(summaries);
  return records;
}

}  // namespace onebit
