#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "staircase_lab/linalg.hpp"
#include "staircase_lab/model.hpp"

namespace staircase_lab {

struct SolverOptions {
  double tolerance = 1e-12;  ///< sup-norm of the Euler-Lagrange residual
  int max_iterations = 200;
  int multistart = 8;
  unsigned long long seed = 0;
};

struct NewtonResult {
  std::vector<double> x;
  double action = 0.0;
  double residual = 0.0;
  double tolerance = 0.0;  ///< tolerance actually applied
  int iterations = 0;
  bool converged = false;
};

namespace detail {

/// Action, gradient and Hessian of a (p,q)-periodic chain in its q base sites.
struct RingProblem {
  const GeneratingModel& model;
  long p;

  double action(const std::vector<double>& x) const {
    const std::size_t q = x.size();
    CompensatedSum s;
    for (std::size_t i = 0; i < q; ++i) {
      const double next = (i + 1 < q) ? x[i + 1] : x[0] + static_cast<double>(p);
      s.add(eval_h(model, x[i], next));
    }
    return s.value();
  }

  std::vector<Partials> bonds(const std::vector<double>& x) const {
    const std::size_t q = x.size();
    std::vector<Partials> b(q);
    for (std::size_t i = 0; i < q; ++i) {
      const double next = (i + 1 < q) ? x[i + 1] : x[0] + static_cast<double>(p);
      b[i] = partials(model, x[i], next);
    }
    return b;
  }

  std::vector<double> gradient(const std::vector<double>& x) const {
    const auto b = bonds(x);
    const std::size_t q = x.size();
    std::vector<double> g(q);
    for (std::size_t j = 0; j < q; ++j) g[j] = b[(j + q - 1) % q].d2 + b[j].d1;
    return g;
  }

  PeriodicTridiagonal hessian(const std::vector<double>& x) const {
    const auto b = bonds(x);
    const std::size_t q = x.size();
    PeriodicTridiagonal h;
    h.diag.resize(q);
    h.bond.resize(q);
    for (std::size_t j = 0; j < q; ++j) {
      h.diag[j] = b[(j + q - 1) % q].d22 + b[j].d11;
      h.bond[j] = b[j].d12;
    }
    return h;
  }

  std::optional<std::vector<double>> solve(const std::vector<double>& x,
                                           const std::vector<double>& rhs, double shift) const {
    return hessian(x).solve_spd(rhs, shift);
  }

  double scale(const std::vector<double>& x) const {
    const auto h = hessian(x);
    double s = 0.0;
    for (double d : h.diag) s = std::max(s, std::abs(d));
    return std::max(s, 1.0);
  }
};

/// Open chain with clamped ends: sites [0, lo) and [n - hi, n) are fixed.
struct SegmentProblem {
  const GeneratingModel& model;
  std::vector<double> frame;  ///< full chain, clamped entries read from here
  std::size_t lo;
  std::size_t hi;

  std::size_t free_count() const { return frame.size() - lo - hi; }

  std::vector<double> full(const std::vector<double>& free) const {
    std::vector<double> y = frame;
    std::copy(free.begin(), free.end(), y.begin() + static_cast<std::ptrdiff_t>(lo));
    return y;
  }

  double action(const std::vector<double>& free) const {
    const auto y = full(free);
    CompensatedSum s;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) s.add(eval_h(model, y[i], y[i + 1]));
    return s.value();
  }

  std::vector<double> gradient(const std::vector<double>& free) const {
    const auto y = full(free);
    std::vector<double> g(free.size());
    for (std::size_t j = 0; j < free.size(); ++j) {
      const std::size_t i = j + lo;
      g[j] = partials(model, y[i - 1], y[i]).d2 + partials(model, y[i], y[i + 1]).d1;
    }
    return g;
  }

  Tridiagonal hessian(const std::vector<double>& free) const {
    const auto y = full(free);
    Tridiagonal t;
    const std::size_t m = free.size();
    t.diag.resize(m);
    t.off.resize(m > 0 ? m - 1 : 0);
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t i = j + lo;
      const Partials left = partials(model, y[i - 1], y[i]);
      const Partials right = partials(model, y[i], y[i + 1]);
      t.diag[j] = left.d22 + right.d11;
      if (j + 1 < m) t.off[j] = right.d12;
    }
    return t;
  }

  std::optional<std::vector<double>> solve(const std::vector<double>& x,
                                           const std::vector<double>& rhs, double shift) const {
    return hessian(x).solve_spd(rhs, shift);
  }

  double scale(const std::vector<double>& x) const {
    const auto h = hessian(x);
    double s = 0.0;
    for (double d : h.diag) s = std::max(s, std::abs(d));
    return std::max(s, 1.0);
  }
};

/// The requested tolerance, raised to the rounding floor of the gradient when
/// lift coordinates are large (ulp(x) times the Hessian scale).
inline double effective_tolerance(const SolverOptions& opt, const std::vector<double>& x,
                                  double hessian_scale) {
  double big = 0.0;
  for (double v : x) big = std::max(big, std::abs(v));
  const double floor = 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + big) * hessian_scale;
  return std::max(opt.tolerance, floor);
}

/// Damped Newton descent on the action. A Levenberg shift is added whenever the
/// Hessian is not positive definite, so every step is a descent direction.
template <class Problem>
NewtonResult newton_minimize(const Problem& prob, std::vector<double> x,
                             const SolverOptions& opt) {
  NewtonResult res;
  const std::size_t n = x.size();
  if (n == 0) {
    res.x = std::move(x);
    res.action = prob.action(res.x);
    res.converged = true;
    return res;
  }
  double action = prob.action(x);
  int polish = 0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it;
    const auto g = prob.gradient(x);
    const double r = sup_norm(g);
    if (r < effective_tolerance(opt, x, prob.scale(x))) {
      // Two extra Newton sweeps tighten exponentially small tails.
      if (polish++ >= 2) break;
    }
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = -g[i];
    double shift = 0.0;
    std::optional<std::vector<double>> step = prob.solve(x, rhs, shift);
    const double sc = prob.scale(x);
    for (int tries = 0; !step && tries < 60; ++tries) {
      shift = shift == 0.0 ? 1e-10 * sc : shift * 4.0;
      step = prob.solve(x, rhs, shift);
    }
    if (!step) break;
    const auto& d = *step;
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) slope += g[i] * d[i];
    double t = 1.0;
    std::vector<double> trial(n);
    bool accepted = false;
    const bool local = r < 1e-7 && shift == 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + t * d[i];
      const double a = prob.action(trial);
      if (local || a <= action + 1e-4 * t * slope) {
        x.swap(trial);
        action = a;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  const auto g = prob.gradient(x);
  res.residual = sup_norm(g);
  res.tolerance = effective_tolerance(opt, x, prob.scale(x));
  res.converged = res.residual < res.tolerance;
  res.action = prob.action(x);
  res.x = std::move(x);
  return res;
}

}  // namespace detail

struct SegmentResult {
  std::vector<double> positions;
  double action = 0.0;
  double residual = 0.0;
  bool converged = false;
};

/// Minimizes the open-chain action over interior sites with `lo` sites fixed at
/// the left end and `hi` at the right end (both >= 1).
inline SegmentResult minimize_segment(const GeneratingModel& model, std::vector<double> chain,
                                      std::size_t lo, std::size_t hi,
                                      const SolverOptions& opt = {}) {
  detail::SegmentProblem prob{model, chain, lo, hi};
  std::vector<double> free(chain.begin() + static_cast<std::ptrdiff_t>(lo),
                           chain.end() - static_cast<std::ptrdiff_t>(hi));
  auto nr = detail::newton_minimize(prob, std::move(free), opt);
  SegmentResult out;
  out.positions = prob.full(nr.x);
  out.action = nr.action;
  out.residual = nr.residual;
  out.converged = nr.converged;
  return out;
}

inline double chain_action(const GeneratingModel& model, std::span<const double> x) {
  CompensatedSum s;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) s.add(eval_h(model, x[i], x[i + 1]));
  return s.value();
}

}  // namespace staircase_lab
