#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "staircase_lab/linalg.hpp"
#include "staircase_lab/model.hpp"

using namespace staircase_lab;
using Catch::Approx;

TEST_CASE("eval_h on the Frenkel-Kontorova family", "[model]") {
  CHECK(eval_h(GeneratingModel::frenkel_kontorova(0.0), 0.25, 0.75) == Approx(0.125).margin(1e-15));
  CHECK(eval_h(GeneratingModel::frenkel_kontorova(1.0), 0.0, 0.0) == Approx(-1.0).margin(1e-15));
}

TEST_CASE("h is invariant under the diagonal unit shift", "[model][property]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  const std::vector<GeneratingModel> models = {
      GeneratingModel::frenkel_kontorova(0.7),
      GeneratingModel::fourier_potential(1.3, 0.25, {{1, 0.4, -0.2}, {3, 0.1, 0.05}}, 0.2)};
  for (const auto& m : models) {
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const double x = u(rng), y = u(rng);
      worst = std::max(worst, std::abs(eval_h(m, x + 1, y + 1) - eval_h(m, x, y)));
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("eval_h_delta matches differences of h", "[model][property]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> small(-1.0, 1.0);
  const std::vector<GeneratingModel> models = {
      GeneratingModel::frenkel_kontorova(2.0),
      GeneratingModel::fourier_potential(1.3, 0.25, {{1, 0.4, -0.2}, {3, 0.1, 0.05}}, 0.2)};
  for (const auto& m : models) {
    for (int i = 0; i < 2000; ++i) {
      const double x = u(rng), y = u(rng), dx = small(rng), dy = small(rng);
      REQUIRE(eval_h_delta(m, x, y, dx, dy) ==
              Approx(eval_h(m, x + dx, y + dy) - eval_h(m, x, y)).margin(1e-12));
    }
    // tiny displacements against the second-order Taylor expansion
    for (int i = 0; i < 2000; ++i) {
      const double x = u(rng), y = u(rng), dx = 1e-9 * small(rng), dy = 1e-9 * small(rng);
      const auto d = partials(m, x, y);
      const double taylor =
          d.d1 * dx + d.d2 * dy + 0.5 * (d.d11 * dx * dx + 2.0 * d.d12 * dx * dy + d.d22 * dy * dy);
      REQUIRE(eval_h_delta(m, x, y, dx, dy) == Approx(taylor).epsilon(1e-9).margin(1e-24));
    }
  }
}

TEST_CASE("partials agree with finite differences", "[model][property]") {
  SECTION("k = 0 spring only") {
    const auto p = partials(GeneratingModel::frenkel_kontorova(0.0), 0.37, -1.2);
    CHECK(p.d12 == -1.0);
    CHECK(p.d11 == 1.0);
    CHECK(p.d22 == 1.0);
  }
  SECTION("symmetry point") {
    CHECK(partials(GeneratingModel::frenkel_kontorova(1.0), 0.0, 0.0).d1 == 0.0);
  }
  SECTION("random samples, several models") {
    // First partials against central differences of eval_h; second partials
    // against central differences of the first partials (a direct second
    // difference of h at step 1e-5 is dominated by rounding at ~1e-5).
    const std::vector<GeneratingModel> models = {
        GeneratingModel::frenkel_kontorova(0.7),
        GeneratingModel::fourier_potential(0.9, 0.3, {{1, -1.0, 0.3}, {2, 0.2, 0.0}}, 0.25)};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const double s = 1e-5;
    for (const auto& m : models) {
      std::vector<std::pair<double, double>> pts{{0.3, 0.9}};
      for (int i = 0; i < 500; ++i) pts.emplace_back(u(rng), u(rng));
      for (auto [x, y] : pts) {
        const auto p = partials(m, x, y);
        const auto fd = oracle::fd_partials(m, x, y, s);
        CHECK(p.d1 == Approx(fd[0]).margin(1e-6));
        CHECK(p.d2 == Approx(fd[1]).margin(1e-6));
        const double d11 = (partials(m, x + s, y).d1 - partials(m, x - s, y).d1) / (2 * s);
        const double d12 = (partials(m, x, y + s).d1 - partials(m, x, y - s).d1) / (2 * s);
        const double d22 = (partials(m, x, y + s).d2 - partials(m, x, y - s).d2) / (2 * s);
        CHECK(p.d11 == Approx(d11).margin(1e-6));
        CHECK(p.d12 == Approx(d12).margin(1e-6));
        CHECK(p.d22 == Approx(d22).margin(1e-6));
      }
    }
  }
}

TEST_CASE("check_twist", "[model]") {
  for (double k : {0.0, 0.5, 2.0}) CHECK(check_twist(GeneratingModel::frenkel_kontorova(k)) == 1.0);
  CHECK(check_twist(GeneratingModel::fourier_potential(1.0, 0.25, {{1, 1.0, 0.0}})) == 2.0);
  const auto broken = GeneratingModel::fourier_potential(0.5, 0.5, {{1, -1.0, 0.0}}, 1.5);
  CHECK_THROWS_AS(check_twist(broken), Error);
  try {
    check_twist(broken);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TwistViolated);
  }
  CHECK_THROWS_AS(check_twist(GeneratingModel::frenkel_kontorova(1.0), 1), Error);
}

TEST_CASE("twist holds at random points for models passing the grid check", "[model][property]") {
  const auto m = GeneratingModel::fourier_potential(0.8, 0.5, {{1, -1.0, 0.0}}, 0.6);
  REQUIRE_NOTHROW(check_twist(m));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 10000; ++i) REQUIRE(partials(m, u(rng), u(rng)).d12 < 0.0);
}

TEST_CASE("model validation and hashing", "[model]") {
  CHECK_THROWS_AS(GeneratingModel::fourier_potential(1.0, 0.0, {}), Error);
  CHECK_THROWS_AS(GeneratingModel::frenkel_kontorova(-1.0), Error);
  CHECK(GeneratingModel::frenkel_kontorova(0.5).hash() ==
        GeneratingModel::frenkel_kontorova(0.5).hash());
  CHECK(GeneratingModel::frenkel_kontorova(0.5).hash() !=
        GeneratingModel::frenkel_kontorova(0.5000000000000001).hash());
  const auto a = GeneratingModel::fourier_potential(1.0, 0.5, {{2, 0.1, 0.0}, {1, 1.0, 0.0}});
  const auto b = GeneratingModel::fourier_potential(1.0, 0.5, {{1, 1.0, 0.0}, {2, 0.1, 0.0}});
  CHECK(a.hash() == b.hash());
}

TEST_CASE("standard map step", "[model]") {
  const auto s = standard_map_step(0.0, 0.3, 5.0);
  CHECK(s.x == Approx(0.3).margin(1e-15));
  CHECK(s.y == Approx(0.3).margin(1e-15));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int i = 0; i < 100; ++i) {
    const double y = u(rng);
    CHECK(standard_map_step(u(rng), y, 0.0).y == y);
  }
  const auto w = standard_map_step(6.0, 1.0, 0.0);
  CHECK(w.x_mod == Approx(7.0 - kTwoPi).margin(1e-12));
}

TEST_CASE("el_residual", "[model]") {
  PeriodicConfiguration c;
  c.p = 2;
  c.q = 5;
  for (int i = 0; i < 5; ++i) c.positions.push_back(0.13 + i * 0.4);
  CHECK(sup_norm(el_residual(GeneratingModel::frenkel_kontorova(0.0), c)) < 1e-14);

  PeriodicConfiguration z;
  z.p = 0;
  z.q = 1;
  z.positions = {0.0};
  CHECK(sup_norm(el_residual(GeneratingModel::frenkel_kontorova(2.0), z)) == 0.0);

  SECTION("matches the second-difference form of the FK equation") {
    const double k = 0.8;
    const auto m = GeneratingModel::frenkel_kontorova(k);
    PeriodicConfiguration r;
    r.p = 3;
    r.q = 7;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (int i = 0; i < 7; ++i) r.positions.push_back(i * 3.0 / 7 + u(rng));
    const auto res = el_residual(m, r);
    for (long i = 0; i < 7; ++i) {
      const double fk = (r.at(i + 1) - 2 * r.at(i) + r.at(i - 1)) - kTwoPi * k * std::sin(kTwoPi * r.at(i));
      CHECK(res[static_cast<std::size_t>(i)] == Approx(-fk).margin(1e-13));
    }
  }
}

TEST_CASE("periodic tridiagonal solve matches a dense solve", "[linalg]") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n : {1u, 2u, 3u, 4u, 9u, 40u}) {
    PeriodicTridiagonal a;
    for (std::size_t i = 0; i < n; ++i) {
      a.diag.push_back(4.0 + u(rng));
      a.bond.push_back(u(rng));
    }
    std::vector<double> rhs(n);
    for (auto& r : rhs) r = u(rng);
    const auto x = a.solve_spd(rhs);
    REQUIRE(x.has_value());
    Eigen::VectorXd b = Eigen::Map<Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(n));
    Eigen::VectorXd ref = a.dense().ldlt().solve(b);
    for (std::size_t i = 0; i < n; ++i) CHECK((*x)[i] == Approx(ref(static_cast<Eigen::Index>(i))).margin(1e-12));
    const auto back = a.multiply(*x);
    for (std::size_t i = 0; i < n; ++i) CHECK(back[i] == Approx(rhs[i]).margin(1e-12));
  }
  PeriodicTridiagonal indefinite{{1.0, 1.0, 1.0}, {-2.0, 0.0, 0.0}};
  CHECK_FALSE(indefinite.solve_spd(std::vector<double>{1, 1, 1}).has_value());
}
