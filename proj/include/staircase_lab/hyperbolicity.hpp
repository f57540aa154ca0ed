#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "staircase_lab/linalg.hpp"
#include "staircase_lab/newton.hpp"
#include "staircase_lab/variational.hpp"

namespace staircase_lab {

/// Row-major 2x2 matrix {a00, a01, a10, a11}.
using Mat2 = std::array<double, 4>;

inline Mat2 mat_mul(const Mat2& l, const Mat2& r) {
  return {l[0] * r[0] + l[1] * r[2], l[0] * r[1] + l[1] * r[3],
          l[2] * r[0] + l[3] * r[2], l[2] * r[1] + l[3] * r[3]};
}

inline double det(const Mat2& m) { return m[0] * m[3] - m[1] * m[2]; }

struct HyperbolicityReport {
  long p = 0;
  long q = 1;
  double trace = 0.0;
  double determinant = 1.0;
  std::complex<double> mu_large;  ///< eigenvalue of larger modulus
  std::complex<double> mu_small;
  double lyapunov = 0.0;  ///< per-step rate: max(0, log|mu|) / q
  std::optional<double> c0_estimate;
  double phonon_gap = 0.0;
  std::optional<double> pn_barrier;

  bool hyperbolic() const { return std::abs(trace) > 2.0; }
};

/// Linearized Euler-Lagrange recursion (xi_i, xi_{i-1}) -> (xi_{i+1}, xi_i), i = 0..q-1.
inline std::vector<Mat2> transfer_matrices(const GeneratingModel& m, const PeriodicConfiguration& c) {
  std::vector<Mat2> out;
  out.reserve(static_cast<std::size_t>(c.q));
  for (long i = 0; i < c.q; ++i) {
    const Partials left = partials(m, c.at(i - 1), c.at(i));
    const Partials right = partials(m, c.at(i), c.at(i + 1));
    if (std::abs(right.d12) < 1e-14 || std::abs(left.d12) < 1e-14) {
      throw Error(ErrorKind::DegenerateTwist, "d12 h vanishes on the orbit at site " + std::to_string(i));
    }
    const double diag = right.d11 + left.d22;
    out.push_back({-diag / right.d12, -left.d12 / right.d12, 1.0, 0.0});
  }
  return out;
}

inline HyperbolicityReport monodromy(const GeneratingModel& m, const PeriodicConfiguration& c) {
  // Accumulate the product as Q*R (Q orthogonal, R upper triangular) so the
  // determinant comes from the diagonal of R instead of a cancelling 2x2 minor.
  Mat2 qm{1.0, 0.0, 0.0, 1.0};
  Mat2 rm{1.0, 0.0, 0.0, 1.0};
  for (const auto& t : transfer_matrices(m, c)) {
    const Mat2 a = mat_mul(t, qm);
    const double h = std::hypot(a[0], a[2]);
    const double cs = h > 0 ? a[0] / h : 1.0;
    const double sn = h > 0 ? a[2] / h : 0.0;
    qm = {cs, -sn, sn, cs};
    const Mat2 step{h, cs * a[1] + sn * a[3], 0.0, -sn * a[1] + cs * a[3]};
    rm = mat_mul(step, rm);
  }
  const Mat2 prod = mat_mul(qm, rm);
  HyperbolicityReport r;
  r.p = c.p;
  r.q = c.q;
  r.trace = prod[0] + prod[3];
  r.determinant = rm[0] * rm[3];
  const std::complex<double> disc = std::sqrt(std::complex<double>(r.trace * r.trace - 4.0 * r.determinant));
  // Pick the root that avoids cancellation, then the other from the product.
  const std::complex<double> big = r.trace >= 0 ? 0.5 * (r.trace + disc) : 0.5 * (r.trace - disc);
  r.mu_large = big;
  r.mu_small = std::abs(big) > 0 ? r.determinant / big : std::complex<double>(0.0);
  if (std::abs(r.mu_small) > std::abs(r.mu_large)) std::swap(r.mu_small, r.mu_large);
  r.lyapunov = std::max(0.0, std::log(std::abs(r.mu_large))) / static_cast<double>(c.q);
  return r;
}

/// Ascending spectrum of the periodic second variation.
inline std::vector<double> second_variation_spectrum(const GeneratingModel& m,
                                                     const PeriodicConfiguration& c) {
  detail::RingProblem prob{m, c.p};
  return symmetric_eigenvalues(prob.hessian(c.positions).dense());
}

/// Monodromy data plus the phonon gap (smallest second-variation eigenvalue).
inline HyperbolicityReport hyperbolicity_report(const GeneratingModel& m,
                                                const PeriodicConfiguration& c) {
  auto r = monodromy(m, c);
  r.phonon_gap = second_variation_spectrum(m, c).front();
  return r;
}

struct PnSweep {
  std::vector<double> s;
  std::vector<double> energy;
  double barrier = 0.0;
};

/// Constrained energy E(s) = min { action of a (p,q) configuration with x_0 = s }
/// on an n-point grid of [0,1), and its oscillation max E - min E.
inline PnSweep pn_barrier_sweep(const GeneratingModel& m, long p, long q, int n,
                                const SolverOptions& opt = {}) {
  if (n < 16) throw Error(ErrorKind::ConfigError, "PN sweep resolution must be >= 16");
  require_coprime(p, q);
  const auto ground = minimize_periodic(m, p, q, opt);
  const auto qs = static_cast<std::size_t>(q);

  auto fresh_guess = [&](double s) {
    long best_site = 0;
    double best_d = 2.0, shift = 0.0;
    for (long i = 0; i < q; ++i) {
      const double v = ground.at(i);
      const double t = std::round(v - s);
      if (std::abs(v - t - s) < best_d) {
        best_d = std::abs(v - t - s);
        best_site = i;
        shift = t;
      }
    }
    std::vector<double> chain(qs + 1);
    for (std::size_t i = 0; i <= qs; ++i) chain[i] = ground.at(best_site + static_cast<long>(i)) - shift;
    return chain;
  };
  auto solve = [&](std::vector<double> chain, double s) {
    chain.front() = s;
    chain.back() = s + static_cast<double>(p);
    if (q == 1) return std::make_pair(chain_action(m, chain), chain);
    auto r = minimize_segment(m, chain, 1, 1, opt);
    if (!r.converged) {
      throw Error(ErrorKind::NoConvergence, "constrained PN solve failed at s = " + format_g17(s));
    }
    return std::make_pair(r.action, r.positions);
  };

  PnSweep out;
  out.s.resize(static_cast<std::size_t>(n));
  out.energy.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (int j = 0; j < n; ++j) out.s[static_cast<std::size_t>(j)] = static_cast<double>(j) / n;

  for (int j = 0; j < n; ++j) {
    const double s = out.s[static_cast<std::size_t>(j)];
    out.energy[static_cast<std::size_t>(j)] = solve(fresh_guess(s), s).first;
  }
  // Continuation chains in both directions catch branches the fresh guess misses.
  for (int dir : {1, -1}) {
    std::vector<double> chain = fresh_guess(0.0);
    for (int step = 0; step <= n; ++step) {
      const int j = dir > 0 ? step % n : (n - step % n) % n;
      const double s = dir > 0 ? static_cast<double>(step) / n : -static_cast<double>(step) / n;
      auto [e, sol] = solve(chain, s);
      auto& slot = out.energy[static_cast<std::size_t>(j)];
      slot = std::min(slot, e);
      chain = sol;
      for (auto& v : chain) v += static_cast<double>(dir) / n;
    }
  }
  const auto [lo, hi] = std::minmax_element(out.energy.begin(), out.energy.end());
  out.barrier = std::max(0.0, *hi - *lo);
  return out;
}

inline double pn_barrier(const GeneratingModel& m, long p, long q, int n = 64,
                         const SolverOptions& opt = {}) {
  return pn_barrier_sweep(m, p, q, n, opt).barrier;
}

}  // namespace staircase_lab
