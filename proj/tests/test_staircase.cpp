#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "staircase_lab/staircase.hpp"

using namespace staircase_lab;
using Catch::Approx;

namespace {

BetaTable quadratic_table(long order) {
  return BetaTable("quadratic", [](long p, long q) {
    const double r = static_cast<double>(p) / static_cast<double>(q);
    return 0.5 * r * r;
  }, order);
}

BetaTable kinked_table(long order) {
  return BetaTable("kinked", [](long p, long q) {
    const double r = static_cast<double>(p) / static_cast<double>(q);
    return std::max(0.0, r - 0.5);
  }, order);
}

// Convex except for a raised value at 1/2.
BetaTable bumped_table(long order) {
  return BetaTable("bumped", [](long p, long q) {
    const double r = static_cast<double>(p) / static_cast<double>(q);
    return 0.5 * r * r + (p * 2 == q ? 0.01 : 0.0);
  }, order);
}

BetaEvaluator& fk_evaluator(double k) {
  static std::map<double, std::unique_ptr<BetaEvaluator>> cache;
  auto& slot = cache[k];
  if (!slot) slot = std::make_unique<BetaEvaluator>(GeneratingModel::frenkel_kontorova(k));
  return *slot;
}

}  // namespace

TEST_CASE("Farey enumeration", "[staircase][rational]") {
  const auto f5 = farey_enumerate(5, 0.0, 1.0);
  const std::vector<Fraction> expect{{0, 1}, {1, 5}, {1, 4}, {1, 3}, {2, 5}, {1, 2},
                                     {3, 5}, {2, 3}, {3, 4}, {4, 5}, {1, 1}};
  CHECK(f5 == expect);
  const auto [l, r] = farey_neighbors({1, 2}, 5);
  CHECK(l == Fraction{2, 5});
  CHECK(r == Fraction{3, 5});

  long count = 1;
  for (long q = 1; q <= 30; ++q) count += oracle::totient(q);
  const auto f30 = farey_enumerate(30, 0.0, 1.0);
  CHECK(static_cast<long>(f30.size()) == count);
  for (std::size_t i = 0; i + 1 < f30.size(); ++i) {
    CHECK(farey_adjacent(f30[i], f30[i + 1]));
    CHECK(farey_neighbors(f30[i], 30).second == f30[i + 1]);
    CHECK(farey_neighbors(f30[i + 1], 30).first == f30[i]);
  }
  CHECK_THROWS_AS(farey_enumerate(0, 0.0, 1.0), Error);
}

TEST_CASE("Farey bracket against brute force", "[staircase][rational]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  const long N = 60;
  const auto all = farey_enumerate(N, -2.0, 3.0);
  for (int trial = 0; trial < 300; ++trial) {
    const double x = u(rng);
    const auto [lo, hi] = farey_bracket(x, N);
    const auto it = std::upper_bound(all.begin(), all.end(), x,
                                     [](double v, const Fraction& f) { return v < f.value(); });
    CHECK(hi == *it);
    CHECK(lo == *(it - 1));
  }
  const auto [a, b] = farey_bracket(0.625, 1000);
  CHECK(a == Fraction{5, 8});
  CHECK(b == Fraction{5, 8});
}

TEST_CASE("continued fractions", "[staircase][rational]") {
  const auto c = convergents(golden_cf(12));
  long f0 = 0, f1 = 1;
  for (std::size_t i = 1; i < c.size(); ++i) {
    CHECK(c[i] == Fraction{f0 + f1 - f0 == 0 ? 1 : f1, f0 + f1});
    const long t = f0 + f1;
    f0 = f1;
    f1 = t;
  }
  CHECK(cf_value(golden_cf()) == Approx((std::sqrt(5.0) - 1) / 2).epsilon(1e-15));
  CHECK(continued_fraction(0.4375) == std::vector<long>{0, 2, 3, 2});
}

TEST_CASE("one-sided derivatives", "[staircase]") {
  SECTION("smooth quadratic") {
    auto t = quadratic_table(8);
    for (const auto& f : farey_enumerate(8, 0.0, 1.0)) {
      const auto d = one_sided_derivatives(t, f, 3);
      CHECK(d.c_minus == Approx(f.value()).margin(1e-12));
      CHECK(d.c_plus == Approx(f.value()).margin(1e-12));
      CHECK(d.secant_minus <= d.c_minus);
      CHECK(d.c_plus <= d.secant_plus);
      CHECK(std::abs(d.c_plus - f.value()) <= d.bracket_width());
    }
  }
  SECTION("kink at 1/2") {
    auto t = kinked_table(4);
    for (int depth = 1; depth <= 5; ++depth) {
      const auto d = one_sided_derivatives(t, 1, 2, depth);
      CHECK(d.c_minus == Approx(0.0).margin(1e-12));
      CHECK(d.c_plus == Approx(1.0).margin(1e-12));
    }
  }
  SECTION("FK k=2 at 0/1 is stable across depths") {
    BetaTable t = BetaTable::from_evaluator(fk_evaluator(2.0), 16);
    const auto d3 = one_sided_derivatives(t, 0, 1, 3);
    const auto d4 = one_sided_derivatives(t, 0, 1, 4);
    const auto d5 = one_sided_derivatives(t, 0, 1, 5);
    CHECK(d5.c_plus - d5.c_minus > 0.0);
    for (const auto* d : {&d3, &d4, &d5}) CHECK(d->bracket_width() < 1e-4);
    CHECK(std::abs(d3.c_plus - d5.c_plus) < 1e-4);
    CHECK(std::abs(d4.c_minus - d5.c_minus) < 1e-4);
    const auto e = t.find({0, 1});
    REQUIRE(e);
    CHECK(e->secant_window == 5);
  }
  SECTION("depth must be positive") {
    auto t = quadratic_table(4);
    CHECK_THROWS_AS(one_sided_derivatives(t, 1, 2, 0), Error);
  }
}

TEST_CASE("Legendre transform", "[staircase]") {
  SECTION("self-dual quadratic") {
    auto t = quadratic_table(20);
    t.populate(-0.5, 1.5);
    REQUIRE(t.verify_convexity());
    std::vector<double> cs;
    for (int i = 0; i <= 200; ++i) cs.push_back(i / 200.0);
    const auto a = legendre(t, cs);
    double prev = -1e300;
    for (const auto& s : a) {
      CHECK(s.alpha == Approx(0.5 * s.c * s.c).margin(1.0 / 400));
      CHECK(std::abs(s.rho() - s.c) <= 1.0 / 20);
      CHECK(s.fenchel_residual < 1e-9);
      CHECK(s.rho() >= prev);
      prev = s.rho();
    }
    const auto bb = biconjugate(t, legendre(t, hull_slopes(t)));
    for (const auto& [f, v] : bb) CHECK(v == Approx(t.find(f)->beta).margin(1e-9));
  }
  SECTION("kink gives a plateau") {
    auto t = kinked_table(12);
    t.populate(0.0, 1.0);
    one_sided_derivatives(t, 1, 2, 2);
    REQUIRE(t.verify_convexity());
    std::vector<double> cs;
    for (int i = 1; i < 100; ++i) cs.push_back(i / 100.0);
    for (const auto& s : legendre(t, cs)) {
      CHECK(s.argmax == Fraction{1, 2});
      CHECK(s.locked);
    }
  }
  SECTION("errors") {
    BetaTable empty("none", [](long, long) { return 0.0; });
    CHECK_THROWS_AS(legendre(empty, {0.0}), Error);
    try {
      legendre(empty, {0.0});
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::EmptyTable);
    }
    auto t = quadratic_table(4);
    t.populate(0.0, 1.0);
    CHECK_THROWS_AS(legendre(t, {0.0}), Error);  // not yet verified
  }
}

TEST_CASE("locking intervals", "[staircase]") {
  SECTION("integrable chain has no locking") {
    BetaTable t = BetaTable::from_evaluator(fk_evaluator(0.0), 8);
    for (const auto& li : locking_intervals(t, 8, 0.0, 1.0)) CHECK(li.width() < 1e-8);
  }
  SECTION("kinked beta locks everything at 1/2") {
    auto t = kinked_table(6);
    const auto iv = locking_intervals(t, 6, 0.0, 1.0);
    for (const auto& li : iv) {
      if (li.f == Fraction{1, 2}) {
        CHECK(li.c_minus == Approx(0.0).margin(1e-12));
        CHECK(li.c_plus == Approx(1.0).margin(1e-12));
      } else {
        CHECK(li.width() < 1e-12);
      }
    }
    CHECK(completeness_measure(iv, 0.0, 1.0) == Approx(1.0).margin(1e-12));
  }
  SECTION("overlap and convexity violation flag the same fraction") {
    auto t = bumped_table(6);
    try {
      locking_intervals(t, 6, 0.0, 1.0);
      FAIL("expected OverlapDetected");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::OverlapDetected);
      CHECK(std::string(e.what()).find("1/2") != std::string::npos);
    }
    const auto bad = t.convexity_violation();
    REQUIRE(bad);
    CHECK(*bad == Fraction{1, 2});
  }
  SECTION("FK k=2, Q=8: ordered, disjoint, total length re-summed independently") {
    BetaTable t = BetaTable::from_evaluator(fk_evaluator(2.0), 8);
    const auto [c1, c2] = default_cohomology_range(t);
    const auto iv = locking_intervals(t, 8, c1, c2);
    for (std::size_t i = 1; i < iv.size(); ++i) {
      CHECK(iv[i - 1].f < iv[i].f);
      CHECK(iv[i - 1].c_plus <= iv[i].c_minus);
    }
    // separate path: raw one-sided records, clipped and summed by hand
    long double total = 0.0L;
    for (const auto& f : farey_enumerate(8, 0.0, 1.0)) {
      const auto e = t.find(f);
      REQUIRE(e);
      const double lo = std::max(*e->c_minus, c1), hi = std::min(*e->c_plus, c2);
      if (hi > lo) total += hi - lo;
    }
    CHECK(completeness_measure(iv, c1, c2) ==
          Approx(static_cast<double>(total / (c2 - c1))).margin(1e-12));
  }
}

TEST_CASE("completeness measure", "[staircase]") {
  CHECK(completeness_measure({}, 0.0, 1.0) == 0.0);
  CHECK(completeness_measure({{{1, 2}, -1.0, 3.0}}, 0.0, 1.0) == 1.0);
  CHECK_THROWS_AS(completeness_measure({}, 1.0, 1.0), Error);

  BetaTable t = BetaTable::from_evaluator(fk_evaluator(2.0), 16);
  const auto [c1, c2] = default_cohomology_range(t);
  const double l4 = completeness_measure(locking_intervals(t, 4, c1, c2), c1, c2);
  const double l16 = completeness_measure(locking_intervals(t, 16, c1, c2), c1, c2);
  CHECK(l16 > l4);
  CHECK(l16 <= 1.0);
}

TEST_CASE("Aubry estimators on synthetic data", "[staircase]") {
  SECTION("quadratic closed form") {
    auto t = quadratic_table(4);
    const auto v = variation_estimator(t, 0.5, 3);
    double expect = 0.0;
    for (const auto& term : v.terms) {
      CHECK(term.term >= 0.0);
      const double closed = 0.5 * std::pow(static_cast<double>(term.f.q), -1.5);
      CHECK(term.term == Approx(closed).epsilon(1e-6));
      if (term.f.q == 4) CHECK(term.term == Approx(0.0625).epsilon(1e-9));
      expect += closed;
    }
    CHECK(v.value == Approx(expect).epsilon(1e-6));

    const auto h1 = hausdorff_estimator(t, 0.5, 1.0, 3);
    CHECK(h1.value == v.value);  // same accumulation order, exact equality

    const auto h = hausdorff_estimator(t, 0.5, 0.5, 3);
    double closed = 0.0;
    for (long q = 4; q <= 6; ++q) closed += oracle::totient(q) * std::sqrt(0.5 * std::pow(q, -1.5));
    CHECK(h.value == Approx(closed).epsilon(1e-6));
  }
  SECTION("concave data is rejected") {
    BetaTable t("concave", [](long p, long q) {
      const double r = static_cast<double>(p) / static_cast<double>(q);
      return -r * r;
    }, 2);
    try {
      variation_estimator(t, 0.5, 2);
      FAIL("expected NonconvexTerm");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NonconvexTerm);
    }
  }
  SECTION("parameter checks") {
    auto t = quadratic_table(4);
    CHECK_THROWS_AS(variation_estimator(t, 1.0, 3), Error);
    CHECK_THROWS_AS(hausdorff_estimator(t, 0.5, 0.0, 3), Error);
  }
}

TEST_CASE("Aubry estimators on FK k=2", "[staircase][slow]") {
  BetaTable t = BetaTable::from_evaluator(fk_evaluator(2.0), 16);
  const double v4 = variation_estimator(t, 0.5, 4).value;
  const double v8 = variation_estimator(t, 0.5, 8).value;
  CHECK(v8 < v4);
  const auto h6 = hausdorff_estimator(t, 0.5, 0.5, 6);
  const auto h12 = hausdorff_estimator(t, 0.5, 0.5, 12);
  CHECK(h12.value < h6.value);
  for (const auto& term : h12.terms) CHECK(term.term >= 0.0);
}

TEST_CASE("convexity probe", "[staircase]") {
  SECTION("quadratic") {
    auto t = quadratic_table(1);
    const auto pr = convexity_probe(t, golden_cf(), 0.1);
    CHECK(pr.c_low == Approx(0.5).margin(1e-6));
    CHECK(pr.C_high == Approx(0.5).margin(1e-6));
  }
  SECTION("exponentially flat near the target") {
    const double h = cf_value(golden_cf());
    BetaTable t("flat", [h](long p, long q) {
      const double d = std::abs(static_cast<double>(p) / static_cast<double>(q) - h);
      return d == 0.0 ? 0.0 : std::exp(-0.1 / d);
    }, 1);
    const auto pr = convexity_probe(t, golden_cf(), 0.1);
    CHECK(std::abs(pr.c_low) < 1e-3);
    CHECK(pr.C_high > 1.0);
  }
  SECTION("too few approximants") {
    auto t = quadratic_table(1);
    CHECK_THROWS_AS(convexity_probe(t, golden_cf(), 1e-4, 100), Error);
  }
  SECTION("FK k=0.01 at the golden mean") {
    BetaTable t = BetaTable::from_evaluator(fk_evaluator(0.01), 16);
    CHECK(convexity_probe(t, golden_cf(), 0.1).c_low > 0.0);
  }
}

TEST_CASE("absolutely continuous part probe", "[staircase]") {
  std::vector<std::pair<double, double>> identity, flat;
  for (int i = 0; i <= 1000; ++i) {
    identity.emplace_back(i / 1000.0, i / 1000.0);
    flat.emplace_back(i / 1000.0, 0.5);
  }
  const auto id = ac_part_probe(identity, {{0.0, 1.0}}, 0.01);
  CHECK(id.lipschitz == Approx(1.0).epsilon(1e-9));
  CHECK(id.measure == Approx(1.0).margin(1e-9));
  CHECK(ac_part_probe(flat, {{0.0, 1.0}}, 0.01).measure == 0.0);

  BetaTable t = BetaTable::from_evaluator(fk_evaluator(0.01), 16);
  const auto [c1, c2] = default_cohomology_range(t);
  locking_intervals(t, 16, c1, c2);
  t.populate(0.0, 1.0);
  REQUIRE(t.verify_convexity());
  std::vector<double> cs;
  for (int i = 0; i <= 1000; ++i) cs.push_back(c1 + (c2 - c1) * i / 1000.0);
  std::vector<std::pair<double, double>> da;
  double lo = c1, hi = c2;
  for (const auto& s : legendre(t, cs)) {
    da.emplace_back(s.c, s.rho());
    if (s.rho() < 0.5) lo = s.c;
    if (s.rho() <= 0.7) hi = s.c;
  }
  CHECK(ac_part_probe(da, {{lo, hi}}, 0.03).measure > 0.0);
}

TEST_CASE("convexity of FK tables", "[staircase][property]") {
  for (double k : {0.0, 0.5, 2.0}) {
    BetaTable t = BetaTable::from_evaluator(fk_evaluator(k), 12);
    t.populate(0.0, 1.0);
    CHECK(t.verify_convexity(1e-8));
    CHECK(t.convexity_verified());
  }
}
