// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "kernel_fixture.hpp"
#include "lp_oracle.hpp"
#include "onebit/abb.hpp"
#include "onebit/bench.hpp"
#include "onebit/bnb.hpp"
#include "onebit/detectors.hpp"
#include "onebit/links.hpp"
#include "onebit/rng.hpp"

using namespace onebit;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!v.pass) ++failures;
  std::printf("[%s] %2d %s | %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool close_to(double a, double b, double tol) { return std::abs(a - b) <= tol * (1.0 + std::abs(b)); }

// mean and standard error of one method's per-trial values at one cell
struct Moments {
  double mean = 0.0;
  double se = 0.0;
  int n = 0;
  int failed = 0;
};

Moments moments(const std::vector<TrialRecord>& recs, const std::string& method, double snr,
                const std::function<double(const TrialRecord&)>& value) {
  Moments m;
  std::vector<double> xs;
  for (const auto& r : recs) {
    if (r.status == "summary" || r.method != method || r.snr_db != snr) continue;
    if (r.status.rfind("failed", 0) == 0) {
      ++m.failed;
      continue;
    }
    xs.push_back(value(r));
  }
  m.n = static_cast<int>(xs.size());
  if (m.n == 0) return m;
  for (double x : xs) m.mean += x;
  m.mean /= m.n;
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.se = m.n > 1 ? std::sqrt(ss / (m.n - 1) / m.n) : 0.0;
  return m;
}

double rec_ber(const TrialRecord& r) { return static_cast<double>(r.bit_errors) / r.bits; }
double rec_time(const TrialRecord& r) { return static_cast<double>(r.wall_time_us); }

int count_failed(const std::vector<TrialRecord>& recs) {
  return static_cast<int>(std::count_if(recs.begin(), recs.end(), [](const TrialRecord& r) {
    return r.status.rfind("failed", 0) == 0 || r.status == "not_proven_optimal";
  }));
}

// "" when every trial solved to optimality, else a count and the first bad status
std::string unsolved_note(const std::vector<TrialRecord>& recs) {
  const int n = count_failed(recs);
  if (n == 0) return "";
  for (const auto& r : recs) {
    if (r.status.rfind("failed", 0) == 0 || r.status == "not_proven_optimal") {
      return fmt("; %d unsolved (first: %s %s %.0fdB trial %d)", n, r.method.c_str(), r.status.c_str(), r.snr_db,
                 r.trial);
    }
  }
  return "";
}

ExperimentConfig sweep(std::string kind, int mt, int nt, std::vector<double> snrs, int trials,
                       std::vector<std::string> methods, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.experiment = std::move(kind);
  cfg.m_tilde = {mt};
  cfg.n_tilde = {nt};
  cfg.snr_db = std::move(snrs);
  cfg.trials = trials;
  cfg.methods = std::move(methods);
  cfg.base_seed = seed;
  cfg.threads = 1;  // timings are compared across cells
  cfg.validate();
  return cfg;
}

// 200 instances at each SNR, shared by criteria 1 and 2
std::vector<RealInstance> small_instances() {
  std::vector<RealInstance> out;
  for (double snr : {0.0, 10.0, 20.0}) {
    for (int k = 0; k < 200; ++k) out.push_back(generate_instance(8, 3, snr, 1000 + k));
  }
  return out;
}

std::vector<LinkFunction> links_for(const RealInstance& inst) {
  return {LinkFunction::ml(inst.sigma), LinkFunction::ar_l1(), LinkFunction::ar_l2()};
}

}  // namespace

int main() {
  const auto instances = small_instances();

  report(1, "global solver matches exhaustive search (8x3, 3 links)", [&] {
    int bad = 0, total = 0;
    double worst = 0.0;
    for (const auto& inst : instances) {
      for (const auto& link : links_for(inst)) {
        const double want = exhaustive_search(inst, link).objective;
        const auto got = bnb::solve_global(inst, link);
        const double err = std::abs(got.objective - want) / (1.0 + std::abs(want));
        worst = std::max(worst, err);
        ++total;
        if (!got.proven_optimal || err > 1e-8) ++bad;
      }
    }
    return Verdict{bad == 0, fmt("%d/%d mismatches, worst rel err %.2e", bad, total, worst)};
  });

  report(2, "Alg1 and Alg2 objectives agree", [&] {
    int bad = 0, total = 0;
    double worst = 0.0;
    for (const auto& inst : instances) {
      for (const auto& link : links_for(inst)) {
        const auto a2 = bnb::solve_global(inst, link);
        const auto a1 = bnb::solve_alg1(inst, link);
        const double err = std::abs(a1.objective - a2.objective) / (1.0 + std::abs(a2.objective));
        worst = std::max(worst, err);
        ++total;
        if (err > 1e-8) ++bad;
      }
    }
    return Verdict{bad == 0, fmt("%d/%d disagreements, worst rel err %.2e", bad, total, worst)};
  });

  report(3, "-log Phi(t) - log Phi(-t) is minimised at t = 0", [] {
    const double step = 1e-3;
    double best = INFINITY, arg = NAN;
    for (int k = -5000; k <= 5000; ++k) {
      const double t = k * step;
      const double v = -log_phi(t) - log_phi(-t);
      if (v < best) {
        best = v;
        arg = t;
      }
    }
    const bool ok = std::abs(arg) <= step / 2 && std::abs(best - 2.0 * std::numbers::ln2) <= 1e-12;
    return Verdict{ok, fmt("argmin %.4f, min %.9f (2 ln 2 = %.9f)", arg, best, 2.0 * std::numbers::ln2)};
  });

  report(4, "cut pool stays a small share of all cuts (64xN, 10 dB)", [] {
    std::vector<double> ratios;
    int failed = 0;
    for (int nt : {4, 6, 8}) {
      const auto recs = run_experiment(sweep("cutratio", 64, nt, {10.0}, 50, {"gML"}, 4));
      failed += count_failed(recs);
      ratios.push_back(moments(recs, "gML", 10.0, [](const TrialRecord& r) {
                         return r.extra.at("cut_pool_ratio").get<double>();
                       }).mean);
    }
    const bool ok = failed == 0 && ratios[2] < 1e-2 && ratios[0] > ratios[1] && ratios[1] > ratios[2];
    return Verdict{ok, fmt("mean ratio N~=4: %.3e, 6: %.3e, 8: %.3e; %d unsolved", ratios[0], ratios[1], ratios[2],
                           failed)};
  });

  const std::vector<double> ber_snrs{0.0, 5.0, 10.0, 15.0};
  std::vector<TrialRecord> ber_recs;
  std::string ber_error;
  try {
    ber_recs = run_experiment(sweep("ber", 18, 4, ber_snrs, 500, {"gML", "AR-L1", "AR-L2", "quantZF", "AR-L1-ABB"}, 5));
  } catch (const std::exception& e) {
    ber_error = e.what();
  }

  report(5, "BER ordering and decrease with SNR (18x4, 500 trials)", [&] {
    if (!ber_error.empty()) return Verdict{false, "sweep failed: " + ber_error};
    std::string detail;
    bool ok = count_failed(ber_recs) == 0;
    // a <= b up to two standard errors of the difference
    auto leq = [&](const Moments& a, const Moments& b) { return a.mean <= b.mean + 2.0 * std::hypot(a.se, b.se); };
    std::map<std::string, std::vector<double>> by_method;
    for (double snr : ber_snrs) {
      const auto g = moments(ber_recs, "gML", snr, rec_ber);
      const auto l1 = moments(ber_recs, "AR-L1", snr, rec_ber);
      const auto l2 = moments(ber_recs, "AR-L2", snr, rec_ber);
      const auto zf = moments(ber_recs, "quantZF", snr, rec_ber);
      const bool cell = leq(g, l1) && leq(l1, zf) && leq(l1, l2);
      ok = ok && cell;
      for (const auto& [name, m] : {std::pair{"gML", g}, {"AR-L1", l1}, {"AR-L2", l2}, {"quantZF", zf}}) {
        by_method[name].push_back(m.mean);
      }
      detail += fmt("%s%.0fdB gML %.4f L1 %.4f L2 %.4f ZF %.4f%s", detail.empty() ? "" : "; ", snr, g.mean, l1.mean,
                    l2.mean, zf.mean, cell ? "" : " (order violated)");
    }
    for (const auto& [name, series] : by_method) {
      for (std::size_t k = 1; k < series.size(); ++k) {
        if (!(series[k] < series[k - 1] || (series[k] == 0.0 && series[k - 1] == 0.0))) {
          ok = false;
          detail += "; " + name + " not decreasing in SNR";
        }
      }
    }
    return Verdict{ok, detail + unsolved_note(ber_recs)};
  });

  report(6, "ABB close to global AR-L1 in BER and much faster", [&] {
    if (!ber_error.empty()) return Verdict{false, "sweep failed: " + ber_error};
    bool ok = true;
    std::string detail;
    for (double snr : {10.0, 15.0}) {
      const auto abb = moments(ber_recs, "AR-L1-ABB", snr, rec_ber);
      const auto glob = moments(ber_recs, "AR-L1", snr, rec_ber);
      ok = ok && abb.mean <= 1.5 * glob.mean;
      detail += fmt("%.0fdB BER ABB %.4f vs global %.4f; ", snr, abb.mean, glob.mean);
    }
    const std::vector<double> snrs{0.0, 10.0, 20.0};
    const auto recs = run_experiment(sweep("runtime_snr", 64, 8, snrs, 30, {"AR-L1", "AR-L1-ABB"}, 6));
    double t_abb = 0.0, t_glob = 0.0;
    for (double snr : snrs) {
      t_abb += moments(recs, "AR-L1-ABB", snr, rec_time).mean;
      t_glob += moments(recs, "AR-L1", snr, rec_time).mean;
    }
    ok = ok && count_failed(recs) == 0 && t_abb <= 0.1 * t_glob;
    detail += fmt("64x8 mean time ABB %.0fus vs global %.0fus (%.1f%%)", t_abb / snrs.size(), t_glob / snrs.size(),
                  100.0 * t_abb / t_glob);
    return Verdict{ok, detail + unsolved_note(recs)};
  });

  report(7, "sign-flip ratio falls with SNR; AR-L2 above AR-L1 at low SNR (64x8)", [] {
    const std::vector<double> snrs{0.0, 10.0, 20.0, 30.0};
    const auto recs = run_experiment(sweep("signflip", 64, 8, snrs, 200, {"gML", "AR-L1", "AR-L2"}, 7));
    auto flip = [](const TrialRecord& r) { return r.extra.at("signflip").get<double>(); };
    auto flip_true = [](const TrialRecord& r) { return r.extra.at("signflip_true").get<double>(); };
    std::map<std::string, std::vector<double>> series;
    for (double snr : snrs) {
      series["x_true"].push_back(moments(recs, "gML", snr, flip_true).mean);
      for (const char* m : {"gML", "AR-L1", "AR-L2"}) series[m].push_back(moments(recs, m, snr, flip).mean);
    }
    bool ok = count_failed(recs) == 0;
    std::string detail;
    for (const char* name : {"x_true", "gML", "AR-L1", "AR-L2"}) {
      const auto& s = series[name];
      const bool dec = s[0] > s[1] && s[1] > s[2] && s[2] > s[3];
      if (std::string(name) != "AR-L2") ok = ok && dec;
      detail += fmt("%s %.4f/%.4f/%.4f/%.4f; ", name, s[0], s[1], s[2], s[3]);
    }
    const bool l2_above = series["AR-L2"][0] >= series["AR-L1"][0];
    ok = ok && l2_above;
    detail += l2_above ? "AR-L2 >= AR-L1 at 0 dB" : "AR-L2 below AR-L1 at 0 dB";
    return Verdict{ok, detail + unsolved_note(recs)};
  });

  report(8, "numerical kernels, smoothed gradient, cut validity", [] {
    using onebit::testing::rel_err;
    const auto table = onebit::testing::load_kernel_table();
    double worst_lp = 0.0, worst_mills = 0.0;
    for (const auto& row : table) {
      worst_lp = std::max(worst_lp, rel_err(log_phi(row.z), row.log_phi));
      worst_mills = std::max(worst_mills, rel_err(mills_ratio(row.z), row.mills));
    }
    const bool kernels = table.size() >= 200 && worst_lp <= 1e-12 && worst_mills <= 1e-10;

    Rng rng(808);
    const auto inst = generate_instance(16, 4, 5.0, 8);
    const double rho = 0.3 + std::log1p(inst.sigma);
    double worst_fd = 0.0;
    for (int k = 0; k < 100; ++k) {
      Vector x(inst.n());
      for (int j = 0; j < inst.n(); ++j) x(j) = 1.8 * rng.uniform() - 0.9;
      const double lambda = 2.0 * rng.uniform();
      const auto ev = abb::smoothed_value_and_grad(inst, rho, lambda, x);
      Vector fd(inst.n());
      const double h = 1e-6;
      for (int j = 0; j < inst.n(); ++j) {
        Vector xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        fd(j) = (abb::smoothed_value_and_grad(inst, rho, lambda, xp).value -
                 abb::smoothed_value_and_grad(inst, rho, lambda, xm).value) /
                (2 * h);
      }
      worst_fd = std::max(worst_fd, (fd - ev.gradient).norm() / std::max(1.0, ev.gradient.norm()));
    }

    // cuts built by the solver, checked at random points
    double worst_cut = 0.0;
    for (const auto& link : links_for(inst)) {
      for (int k = 0; k < 1000; ++k) {
        Vector anchor(inst.n()), x(inst.n());
        for (int j = 0; j < inst.n(); ++j) {
          anchor(j) = 2.0 * rng.uniform() - 1.0;
          x(j) = 2.0 * rng.uniform() - 1.0;
        }
        const int i = static_cast<int>(rng() % inst.m());
        const auto cut = bnb::make_cut(inst, link, i, anchor);
        const double under = cut.offset + cut.coeffs.dot(x);
        worst_cut = std::max(worst_cut, under - link.value(inst.b.row(i).dot(x)));
      }
    }
    const bool ok = kernels && worst_fd <= 1e-5 && worst_cut <= 1e-9;
    return Verdict{ok, fmt("%zu table rows, worst rel err log_phi %.1e mills %.1e; fd gradient %.1e; "
                           "worst cut excess %.1e",
                           table.size(), worst_lp, worst_mills, worst_fd, worst_cut)};
  });

  report(9, "LP solver against vertex enumeration; warm vs cold after cuts", [] {
    Rng rng(909);
    int bad = 0, feasible = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const auto model = onebit::testing::random_tiny_model(rng);
      const auto oracle = onebit::testing::enumerate_vertices(model);
      const auto sol = lp::solve(model);
      if (!oracle.feasible) {
        if (sol.status != lp::Status::Infeasible) ++bad;
        continue;
      }
      ++feasible;
      if (sol.status != lp::Status::Optimal || !close_to(sol.objective_value, oracle.value, 1e-8)) ++bad;
    }
    int warm_bad = 0, warm_checked = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const auto model = onebit::testing::random_tiny_model(rng);
      lp::Solver solver(model);
      const auto first = solver.solve();
      if (first.status != lp::Status::Optimal) continue;
      std::vector<lp::Row> cuts(2);
      for (auto& r : cuts) {
        double activity = 0.0;
        for (int j = 0; j < model.num_vars; ++j) {
          r.index.push_back(j);
          r.value.push_back(rng.normal());
          activity += r.value.back() * first.primal[j];
        }
        r.rhs = activity + 0.1 + rng.uniform();
      }
      solver.add_rows(cuts);
      const auto warm = solver.solve();
      const auto cold = lp::solve(lp::add_rows(model, cuts));
      ++warm_checked;
      if (warm.status != cold.status ||
          (cold.status == lp::Status::Optimal && !close_to(warm.objective_value, cold.objective_value, 1e-8))) {
        ++warm_bad;
      }
    }
    return Verdict{bad == 0 && warm_bad == 0 && feasible > 300,
                   fmt("oracle mismatches %d/500 (%d feasible); warm/cold mismatches %d/%d", bad, feasible, warm_bad,
                       warm_checked)};
  });

  report(10, "gML time falls with SNR; ABB time flat (64x8)", [] {
    const std::vector<double> snrs{5.0, 10.0, 15.0, 20.0, 25.0};
    const auto recs = run_experiment(sweep("runtime_snr", 64, 8, snrs, 50, {"gML", "AR-L1-ABB"}, 10));
    std::vector<double> g, a;
    for (double snr : snrs) {
      g.push_back(moments(recs, "gML", snr, rec_time).mean);
      a.push_back(moments(recs, "AR-L1-ABB", snr, rec_time).mean);
    }
    bool dec = true;
    for (std::size_t k = 1; k < g.size(); ++k) dec = dec && g[k] < g[k - 1];
    const double spread = *std::max_element(a.begin(), a.end()) / *std::min_element(a.begin(), a.end());
    std::string detail = "gML us";
    for (double v : g) detail += fmt(" %.0f", v);
    detail += "; ABB us";
    for (double v : a) detail += fmt(" %.0f", v);
    detail += fmt("; ABB max/min %.2f", spread) + unsolved_note(recs);
    return Verdict{count_failed(recs) == 0 && dec && spread < 3.0, detail};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
