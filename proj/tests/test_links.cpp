#include <cmath>
#include <numbers>

#include "doctest.h"
#include "kernel_fixture.hpp"
#include "onebit/links.hpp"
#include "onebit/rng.hpp"

using namespace onebit;
using onebit::testing::rel_err;

TEST_CASE("log_phi and mills_ratio against the reference table") {
  const auto table = onebit::testing::load_kernel_table();
  REQUIRE(table.size() >= 200);
  double worst_lp = 0.0, worst_mills = 0.0;
  for (const auto& row : table) {
    CAPTURE(row.z);
    worst_lp = std::max(worst_lp, rel_err(log_phi(row.z), row.log_phi));
    worst_mills = std::max(worst_mills, rel_err(mills_ratio(row.z), row.mills));
    CHECK(rel_err(log_phi(row.z), row.log_phi) <= 1e-12);
    CHECK(rel_err(mills_ratio(row.z), row.mills) <= 1e-10);
  }
  MESSAGE("worst relative error log_phi=" << worst_lp << " mills=" << worst_mills);
}

TEST_CASE("kernel spot values") {
  CHECK(log_phi(0.0) == doctest::Approx(-std::numbers::ln2).epsilon(1e-15));
  CHECK(log_phi(-10.0) == doctest::Approx(-53.23128515051247).epsilon(1e-15));
  const double far = log_phi(38.0);
  CHECK(far < 0.0);
  CHECK(far > -1e-300);
  CHECK(std::isfinite(log_phi(-40.0)));
  CHECK(std::isfinite(log_phi(-1e6)));

  CHECK(mills_ratio(0.0) == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-15));
  CHECK(std::abs(mills_ratio(-30.0) - 30.03325966743368) < 1e-6);
  const double phi10 = std::exp(-50.0) / std::sqrt(2.0 * std::numbers::pi);
  CHECK(rel_err(mills_ratio(10.0), phi10) < 1e-12);
  // phi(z) underflows the double range past z ~ 38.5
  for (double z = -60.0; z <= 38.0; z += 0.37) CHECK(mills_ratio(z) > 0.0);
  CHECK(mills_ratio(40.0) >= 0.0);
}

TEST_CASE("tail branches join smoothly") {
  for (const double z0 : {-8.0, 0.0, 5.0}) {
    const double a = log_phi(std::nextafter(z0, -INFINITY));
    const double b = log_phi(z0);
    CHECK(std::abs(a - b) <= 1e-13 * std::abs(b) + 1e-15);
    const double ma = mills_ratio(std::nextafter(z0, -INFINITY));
    const double mb = mills_ratio(z0);
    CHECK(std::abs(ma - mb) <= 1e-12 * mb);
  }
}

TEST_CASE("link evaluation") {
  const auto l1 = LinkFunction::ar_l1();
  CHECK(l1.eval(-2.0).g == 2.0);
  CHECK(l1.eval(-2.0).slope == -1.0);
  CHECK(l1.eval(3.0).g == 0.0);
  CHECK(l1.eval(3.0).slope == 0.0);
  CHECK(l1.eval(0.0).g == 0.0);
  CHECK(l1.eval(0.0).slope == 0.0);
  CHECK(l1.piecewise_linear());

  const auto l2 = LinkFunction::ar_l2();
  CHECK(l2.eval(-2.0).g == 4.0);
  CHECK(l2.eval(-2.0).slope == -4.0);
  CHECK_FALSE(l2.piecewise_linear());

  const auto ml = LinkFunction::ml(1.0);
  CHECK(ml.eval(1.0).g == doctest::Approx(0.1727537790234499).epsilon(1e-14));
  const auto ml2 = LinkFunction::ml(2.0);
  CHECK(ml2.eval(1.0).g == doctest::Approx(-log_phi(0.5)).epsilon(1e-15));
  CHECK(ml2.eval(1.0).slope == doctest::Approx(-mills_ratio(0.5) / 2.0).epsilon(1e-15));
  CHECK_THROWS_AS(LinkFunction::ml(0.0), std::invalid_argument);
}

TEST_CASE("objective at the truth without noise") {
  // tiny sigma so that r = sgn(Hx) for the drawn instance
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = generate_instance(8, 2, 80.0, seed);
    const auto eval = objective(inst, LinkFunction::ar_l1(), *inst.x_true);
    CHECK(eval.value == 0.0);
  }
}

TEST_CASE("objective gradient against central differences") {
  Rng rng(11);
  const auto inst = generate_instance(6, 2, 5.0, 3);
  for (const auto& link : {LinkFunction::ml(inst.sigma), LinkFunction::ar_l2()}) {
    for (int trial = 0; trial < 20; ++trial) {
      Vector x(inst.n());
      for (int j = 0; j < inst.n(); ++j) x(j) = 2.0 * rng.uniform() - 1.0;
      const auto eval = objective(inst, link, x);
      const double h = 1e-5;
      Vector fd(inst.n());
      for (int j = 0; j < inst.n(); ++j) {
        Vector xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        fd(j) = (objective_value(inst, link, xp) - objective_value(inst, link, xm)) / (2 * h);
      }
      CHECK((fd - eval.gradient).norm() <= 1e-5 * std::max(1.0, eval.gradient.norm()));
    }
  }
}

TEST_CASE("links are convex and non-increasing") {
  Rng rng(12);
  for (const auto& link : {LinkFunction::ml(0.7), LinkFunction::ar_l1(), LinkFunction::ar_l2()}) {
    CAPTURE(link.name());
    for (int k = 0; k < 2000; ++k) {
      const double t1 = 20.0 * rng.uniform() - 10.0;
      const double t2 = 20.0 * rng.uniform() - 10.0;
      const double mid = link.value(0.5 * (t1 + t2));
      CHECK(mid <= 0.5 * (link.value(t1) + link.value(t2)) + 1e-12);
    }
    double prev_g = INFINITY, prev_slope = -INFINITY;
    for (double t = -10.0; t <= 10.0; t += 0.01) {
      const auto v = link.eval(t);
      CHECK(v.g <= prev_g);
      CHECK(v.slope <= 0.0);
      CHECK(v.slope >= prev_slope);
      prev_g = v.g;
      prev_slope = v.slope;
    }
  }
}

TEST_CASE("Jensen cuts underestimate the link") {
  Rng rng(13);
  const auto inst = generate_instance(8, 3, 0.0, 5);
  for (const auto& link : {LinkFunction::ml(inst.sigma), LinkFunction::ar_l1(), LinkFunction::ar_l2()}) {
    for (int k = 0; k < 1000; ++k) {
      Vector xh(inst.n()), x(inst.n());
      for (int j = 0; j < inst.n(); ++j) {
        xh(j) = 2.0 * rng.uniform() - 1.0;
        x(j) = 2.0 * rng.uniform() - 1.0;
      }
      const int i = static_cast<int>(rng() % inst.m());
      const double th = inst.b.row(i).dot(xh);
      const auto at = link.eval(th);
      const double lower = at.g + at.slope * inst.b.row(i).dot(x - xh);
      CHECK(link.value(inst.b.row(i).dot(x)) >= lower - 1e-9);
    }
  }
}

TEST_CASE("symmetric ML pair is minimised at zero") {
  double best = INFINITY, arg = NAN;
  for (int k = -5000; k <= 5000; ++k) {
    const double t = k * 1e-3;
    const double v = -log_phi(t) - log_phi(-t);
    if (v < best) {
      best = v;
      arg = t;
    }
  }
  CHECK(arg == 0.0);
  CHECK(best == doctest::Approx(2.0 * std::numbers::ln2).epsilon(1e-15));
}
