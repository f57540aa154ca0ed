#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "staircase_lab/errors.hpp"
#include "staircase_lab/hyperbolicity.hpp"
#include "staircase_lab/linalg.hpp"
#include "staircase_lab/newton.hpp"
#include "staircase_lab/parallel.hpp"
#include "staircase_lab/staircase.hpp"
#include "staircase_lab/variational.hpp"

namespace staircase_lab {

/// Lift of a periodic orbit at level l: t -> x_{t+a} + b with a p + b q = l,
/// so consecutive levels are the ordered neighbours bounding the q gaps.
struct OrbitLift {
  const PeriodicConfiguration* orbit = nullptr;
  long shift = 0;
  long offset = 0;

  double at(long t) const { return orbit->at(t + shift) + static_cast<double>(offset); }
};

inline OrbitLift orbit_lift(const PeriodicConfiguration& c, long level) {
  // a0 p + b0 q = 1
  long r0 = c.p, r1 = c.q, s0 = 1, s1 = 0, t0 = 0, t1 = 1;
  while (r1 != 0) {
    const long k = r0 / r1;
    std::tie(r0, r1) = std::make_pair(r1, r0 - k * r1);
    std::tie(s0, s1) = std::make_pair(s1, s0 - k * s1);
    std::tie(t0, t1) = std::make_pair(t1, t0 - k * t1);
  }
  if (r0 < 0) {
    s0 = -s0;
    t0 = -t0;
  }
  return {&c, s0 * level, t0 * level};
}

struct HeteroclinicSegment {
  long p = 0;
  long q = 1;
  long gap = 1;
  long T = 1;              ///< half-length of the window
  long first_site = 0;     ///< time index of positions[0]
  std::vector<double> positions;
  std::vector<double> left_orbit;   ///< lift bounding the gap from below, same sites
  std::vector<double> right_orbit;  ///< lift bounding the gap from above
  std::vector<double> tail_deviation;  ///< distance to the left orbit before the centre, right orbit after
  double action = 0.0;
  double residual = 0.0;
  std::size_t multiplicity = 0;  ///< distinct local minima found over the multistart
  double decay_rate = 0.0;       ///< fitted lambda-hat in deviation ~ C exp(-lambda-hat |t|)
  double decay_prefactor = 0.0;
  bool ordered = false;

  double at(long t) const { return positions[static_cast<std::size_t>(t - first_site)]; }
};

namespace detail {

inline void require_hyperbolic(const GeneratingModel& m, const PeriodicConfiguration& c) {
  const auto ev = second_variation_spectrum(m, c);
  if (ev.front() <= 1e-8) {
    throw Error(ErrorKind::DegenerateFamily, "phonon gap " + format_g17(ev.front()) + " at " +
                                                 std::to_string(c.p) + "/" + std::to_string(c.q) +
                                                 ": no gap to cross");
  }
}

inline bool between(const std::vector<double>& x, const std::vector<double>& lo,
                    const std::vector<double>& hi) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double tol = 1e-12 * (1.0 + std::abs(x[i]));
    if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
  }
  return true;
}

/// Least-squares line y = a + b x; returns (a, b).
inline std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (x.size() < 2 || den == 0.0) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  const double b = (n * sxy - sx * sy) / den;
  return {(sy - b * sx) / n, b};
}

/// Heteroclinic across gap `gap` on sites [centre - half, centre + half], two
/// sites clamped on each side onto the bounding lifts.
inline HeteroclinicSegment heteroclinic_window(const GeneratingModel& m, const PeriodicConfiguration& c,
                                               long gap, long centre, long half,
                                               const SolverOptions& opt) {
  if (gap < 1 || gap > c.q) throw Error(ErrorKind::ConfigError, "gap index must lie in 1..q");
  if (half < 2) throw Error(ErrorKind::ConfigError, "segment half-length must be >= 2");
  const OrbitLift lo = orbit_lift(c, gap - 1);
  const OrbitLift hi = orbit_lift(c, gap);
  const long first = centre - half;
  const auto n = static_cast<std::size_t>(2 * half + 1);
  HeteroclinicSegment seg;
  seg.p = c.p;
  seg.q = c.q;
  seg.gap = gap;
  seg.T = half;
  seg.first_site = first;
  for (std::size_t i = 0; i < n; ++i) {
    seg.left_orbit.push_back(lo.at(first + static_cast<long>(i)));
    seg.right_orbit.push_back(hi.at(first + static_cast<long>(i)));
  }

  // multistart over where the chain switches from the lower to the upper lift
  std::vector<std::vector<double>> guesses;
  for (long s : {centre - 1, centre, centre + 1}) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = first + static_cast<long>(i) < s ? seg.left_orbit[i] : seg.right_orbit[i];
    }
    guesses.push_back(std::move(g));
  }
  {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = 0.5 * (1.0 + std::tanh(0.5 * static_cast<double>(first + static_cast<long>(i) - centre)));
      g[i] = seg.left_orbit[i] + w * (seg.right_orbit[i] - seg.left_orbit[i]);
    }
    for (std::size_t i : {std::size_t{0}, std::size_t{1}}) g[i] = seg.left_orbit[i];
    for (std::size_t i : {n - 2, n - 1}) g[i] = seg.right_orbit[i];
    guesses.push_back(std::move(g));
  }

  std::vector<SegmentResult> found;
  bool any_converged = false;
  for (const auto& g : guesses) {
    auto r = minimize_segment(m, g, 2, 2, opt);
    if (!r.converged) continue;
    any_converged = true;
    if (!between(r.positions, seg.left_orbit, seg.right_orbit)) continue;
    {
      detail::SegmentProblem prob{m, r.positions, 2, 2};
      std::vector<double> free(r.positions.begin() + 2, r.positions.end() - 2);
      if (!free.empty() && !prob.hessian(free).solve_spd(std::vector<double>(free.size(), 0.0), 0.0)) {
        continue;  // saddle
      }
    }
    bool seen = false;
    for (const auto& f : found) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d = std::max(d, std::abs(f.positions[i] - r.positions[i]));
      if (d < 1e-7) seen = true;
    }
    if (!seen) found.push_back(std::move(r));
  }
  if (found.empty()) {
    throw Error(ErrorKind::NoConvergence,
                std::string(any_converged ? "no ordered minimizing" : "no converged") +
                    " heteroclinic in gap " + std::to_string(gap));
  }
  const auto best = std::min_element(found.begin(), found.end(), [](const auto& a, const auto& b) {
    return a.action < b.action;
  });
  seg.positions = best->positions;
  seg.action = best->action;
  seg.residual = best->residual;
  seg.multiplicity = found.size();
  seg.ordered = true;

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n; ++i) {
    const long t = first + static_cast<long>(i);
    const bool left = t < centre;
    const double ref = left ? seg.left_orbit[i] : seg.right_orbit[i];
    const double dev = std::abs(seg.positions[i] - ref);
    seg.tail_deviation.push_back(dev);
    const bool clamped = i < 2 || i + 2 >= n;
    const double floor = 1024.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(ref));
    if (!clamped && std::abs(t - centre) >= 2 && dev > floor) {
      xs.push_back(static_cast<double>(std::abs(t - centre)));
      ys.push_back(std::log(dev));
    }
  }
  if (xs.size() >= 2) {
    const auto [a, b] = fit_line(xs, ys);
    seg.decay_rate = -b;
    seg.decay_prefactor = std::exp(a);
  }
  return seg;
}

}  // namespace detail

/// Heteroclinic across gap k (1..q) on the window [(2k-3)T, (2k-1)T].
inline HeteroclinicSegment heteroclinic_segment(const GeneratingModel& m, long p, long q, long gap,
                                                long T, const SolverOptions& opt = {}) {
  if (T < 2) throw Error(ErrorKind::ConfigError, "T must be >= 2 (two clamped sites per side)");
  const auto c = minimize_periodic(m, p, q, opt);
  detail::require_hyperbolic(m, c);
  return detail::heteroclinic_window(m, c, gap, 2 * (gap - 1) * T, T, opt);
}

/// S_c = sum h(x_i, x_{i+1}) - c (x_N - x_0) + N alpha(c) over an N-step segment.
inline double action_c(const GeneratingModel& m, std::span<const double> x, double c, double alpha) {
  if (x.size() < 2) throw Error(ErrorKind::ConfigError, "segment needs at least two sites");
  CompensatedSum s;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    s.add(eval_h(m, x[i], x[i + 1]));
    s.add(alpha);
  }
  s.add(-c * (x.back() - x.front()));
  return s.value();
}

struct ZetaLoop {
  long p = 0;
  long q = 1;
  long T = 1;
  long tau = 1;
  long advance = 1;  ///< lift advance 2Tp + 1 over the 2Tq sites
  std::vector<double> positions;  ///< sites -T .. (2q-1)T - 1
  double action_total = 0.0;
  double action_per_site = 0.0;
  double raw_segment_action = 0.0;  ///< undeformed sliced heteroclinics
  double deformation_cost = 0.0;    ///< action_total - raw_segment_action
  std::vector<HeteroclinicSegment> segments;

  std::size_t sites() const { return positions.size(); }
  double rotation_number() const {
    return static_cast<double>(advance) / static_cast<double>(positions.size());
  }
};

/// Closed loop of rotation number p/q + 1/(2Tq) built from the q heteroclinics.
/// Each heteroclinic is computed on the doubled window, cut to
/// [(2k-3)T, (2k-1)T] and blended linearly over tau = max(1, T/2) sites onto
/// the bounding lifts at both ends.
inline ZetaLoop concatenate_loop(const GeneratingModel& m, long p, long q, long T,
                                 const SolverOptions& opt = {}, int workers = 1) {
  if (T < 1) throw Error(ErrorKind::ConfigError, "T must be >= 1");
  const auto c = minimize_periodic(m, p, q, opt);
  detail::require_hyperbolic(m, c);
  ZetaLoop loop;
  loop.p = p;
  loop.q = q;
  loop.T = T;
  loop.tau = std::max<long>(1, T / 2);
  loop.advance = 2 * T * p + 1;
  loop.segments.resize(static_cast<std::size_t>(q));
  parallel_for(static_cast<std::size_t>(q), workers, [&](std::size_t i) {
    const long k = static_cast<long>(i) + 1;
    loop.segments[i] = detail::heteroclinic_window(m, c, k, 2 * (k - 1) * T, 2 * T, opt);
  });

  const auto N = static_cast<std::size_t>(2 * T * q);
  loop.positions.resize(N);
  CompensatedSum raw, cost;
  for (long k = 1; k <= q; ++k) {
    const auto& seg = loop.segments[static_cast<std::size_t>(k - 1)];
    const long start = 2 * (k - 1) * T - T;
    const OrbitLift lo = orbit_lift(c, k - 1);
    const OrbitLift hi = orbit_lift(c, k);
    std::vector<double> xi, zeta;
    for (long j = 0; j <= 2 * T; ++j) {
      const long t = start + j;
      const double x = seg.at(t);
      double z = x;
      if (j < loop.tau) {
        const double w = 1.0 - static_cast<double>(j) / static_cast<double>(loop.tau);
        z = x + w * (lo.at(t) - x);
      } else if (j > 2 * T - loop.tau) {
        const double w = 1.0 - static_cast<double>(2 * T - j) / static_cast<double>(loop.tau);
        z = x + w * (hi.at(t) - x);
      }
      xi.push_back(x);
      zeta.push_back(z);
      if (j < 2 * T) loop.positions[static_cast<std::size_t>(t + T)] = z;
    }
    raw.add(chain_action(m, xi));
    for (std::size_t j = 0; j + 1 < xi.size(); ++j) {
      cost.add(eval_h_delta(m, xi[j], xi[j + 1], zeta[j] - xi[j], zeta[j + 1] - xi[j + 1]));
    }
  }
  detail::RingProblem ring{m, loop.advance};
  loop.action_total = ring.action(loop.positions);
  loop.action_per_site = loop.action_total / static_cast<double>(N);
  loop.raw_segment_action = raw.value();
  loop.deformation_cost = cost.value();
  return loop;
}

struct LoopExcess {
  double minimum_per_site = 0.0;  ///< action per site of the minimizer reached from the loop
  double excess_per_site = 0.0;   ///< loop minus that minimizer, from site-wise differences
};

/// Relaxes the loop to the nearby periodic minimizer and measures the per-site
/// action excess through displacement-accurate differences.
inline LoopExcess loop_excess(const GeneratingModel& m, const ZetaLoop& loop, const SolverOptions& opt = {}) {
  detail::RingProblem ring{m, loop.advance};
  const auto nr = detail::newton_minimize(ring, loop.positions, opt);
  if (!nr.converged) throw Error(ErrorKind::NoConvergence, "loop relaxation did not converge");
  const auto& x = nr.x;
  const auto& z = loop.positions;
  const std::size_t N = x.size();
  CompensatedSum s;
  for (std::size_t i = 0; i < N; ++i) {
    const bool wrap = i + 1 == N;
    const double xn = wrap ? x[0] + static_cast<double>(loop.advance) : x[i + 1];
    const double zn = wrap ? z[0] + static_cast<double>(loop.advance) : z[i + 1];
    s.add(eval_h_delta(m, x[i], xn, z[i] - x[i], zn - xn));
  }
  LoopExcess out;
  out.minimum_per_site = nr.action / static_cast<double>(N);
  out.excess_per_site = s.value() / static_cast<double>(N);
  return out;
}

/// Sum of the c-actions of the q gap heteroclinics on the windows tiling
/// [-T, (2q-1)T]; alpha(c) = c p/q - beta(p/q).
inline double heteroclinic_c_action(const GeneratingModel& m, long p, long q, long T, double c,
                                    double beta_pq, const SolverOptions& opt = {}) {
  if (T < 2) throw Error(ErrorKind::ConfigError, "T must be >= 2");
  const auto orbit = minimize_periodic(m, p, q, opt);
  detail::require_hyperbolic(m, orbit);
  const double alpha = c * static_cast<double>(p) / static_cast<double>(q) - beta_pq;
  CompensatedSum s;
  for (long k = 1; k <= q; ++k) {
    const auto seg = detail::heteroclinic_window(m, orbit, k, 2 * (k - 1) * T, T, opt);
    s.add(action_c(m, seg.positions, c, alpha));
  }
  return s.value();
}

inline double flatness_bound(long q, double delta, double C, double lambda) {
  if (!(delta > 0.0)) throw Error(ErrorKind::ConfigError, "delta must be positive");
  const double qd = static_cast<double>(q) * delta;
  return C * qd * std::exp(-lambda / (4.0 * qd));
}

enum class FitKind { Unresolved, Exponential, Polynomial };

inline std::string to_string(FitKind k) {
  switch (k) {
    case FitKind::Unresolved: return "unresolved";
    case FitKind::Exponential: return "exponential";
    case FitKind::Polynomial: return "polynomial";
  }
  return "unknown";
}

struct FlatnessSample {
  double T = 0.0;
  double delta = 0.0;
  Fraction rho;
  double beta = 0.0;
  double u = 0.0;
  bool resolved = false;  ///< u above the rounding floor of the difference
  bool single_kink = true;  ///< (2Tp+1)/(2Tq) already in lowest terms
  std::optional<double> zeta_upper;
  double bound_value = std::numeric_limits<double>::quiet_NaN();
};

struct FlatnessCurve {
  long p = 0;
  long q = 1;
  double c_plus = 0.0;
  double lambda_monodromy = 0.0;
  std::vector<FlatnessSample> samples;
  FitKind kind = FitKind::Unresolved;
  double C_fit = std::numeric_limits<double>::quiet_NaN();
  double lambda_fit = std::numeric_limits<double>::quiet_NaN();
  double poly_exponent = std::numeric_limits<double>::quiet_NaN();
  double C_holdout = std::numeric_limits<double>::quiet_NaN();
  bool verdict = false;
};

struct FlatnessOptions {
  int depth = 4;
  double certify_width = 1e-5;  ///< required stability of c_plus
  std::size_t site_cap = 4096;  ///< skip loops with more sites than this
  bool zeta = true;
  int workers = 1;
  double holdout_margin = 2.0;  ///< C_holdout = margin * training envelope
  SolverOptions solver;
};

/// Default T grid: half-integer steps where u is resolvable at strong coupling,
/// then doublings.
inline std::vector<double> default_T_grid() {
  return {1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 8.0, 16.0, 32.0};
}

/// u(delta) = beta(p/q + delta) - beta(p/q) - c_plus delta at delta = 1/(2Tq)
/// for T in the grid (2T integer), with zeta upper bounds, the exponential and
/// power-law fits, and the held-out bound verdict.
inline FlatnessCurve flatness_curve(const GeneratingModel& m, BetaTable& table, long p, long q,
                                    const std::vector<double>& Ts, const FlatnessOptions& opt = {}) {
  require_coprime(p, q);
  const Fraction f{p, q};
  const auto d = one_sided_derivatives(table, f, opt.depth);
  if (d.extrapolation_change > opt.certify_width) {
    throw Error(ErrorKind::ConfigError, "c_plus at " + f.str() + " not certified: change " +
                                            format_g17(d.extrapolation_change));
  }
  FlatnessCurve curve;
  curve.p = p;
  curve.q = q;
  curve.c_plus = d.c_plus;
  const auto orbit = minimize_periodic(m, p, q, opt.solver);
  curve.lambda_monodromy = monodromy(m, orbit).lyapunov;

  const double b0 = table.beta(f);
  std::vector<Fraction> need;
  for (double T : Ts) {
    const double twoT = 2.0 * T;
    if (!(T > 0.0) || std::abs(twoT - std::round(twoT)) > 1e-12) {
      throw Error(ErrorKind::ConfigError, "T must be a positive multiple of 1/2");
    }
    const long mm = std::lround(twoT);
    need.push_back(Fraction::reduced(mm * p + 1, mm * q));
  }
  table.prefetch(need, opt.workers);

  std::map<long, std::optional<double>> loops;  // integer T -> per-site loop action
  auto loop_bound = [&](long T) -> std::optional<double> {
    if (auto it = loops.find(T); it != loops.end()) return it->second;
    std::optional<double> v;
    if (static_cast<std::size_t>(2 * T * q) <= opt.site_cap) {
      try {
        v = concatenate_loop(m, p, q, T, opt.solver, opt.workers).action_per_site;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateFamily) throw;
      }
    }
    loops[T] = v;
    return v;
  };

  for (double T : Ts) {
    FlatnessSample s;
    s.T = T;
    const long mm = std::lround(2.0 * T);
    s.delta = 1.0 / static_cast<double>(mm * q);
    s.rho = Fraction::reduced(mm * p + 1, mm * q);
    s.beta = table.beta(s.rho);
    s.u = s.beta - b0 - d.c_plus * s.delta;
    if (s.u < -1e-9) {
      throw Error(ErrorKind::NegativeU, "u(" + format_g17(s.delta) + ") = " + format_g17(s.u));
    }
    s.single_kink = std::gcd(mm * p + 1, mm * q) == 1;
    // rounding of the beta difference plus the c_plus uncertainty carried by delta
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                             std::max({1.0, std::abs(s.beta), std::abs(b0)}) +
                         2.0 * d.extrapolation_change * s.delta;
    s.resolved = s.u > floor;
    if (opt.zeta && mm >= 2) {
      if (mm % 2 == 0) {
        s.zeta_upper = loop_bound(mm / 2);
      } else {
        // convexity: beta on [delta(T+1/2), delta(T-1/2)] lies below the chord of upper bounds
        const long lo_T = mm / 2, hi_T = mm / 2 + 1;
        const auto a = loop_bound(lo_T);
        const auto b = loop_bound(hi_T);
        if (a && b) {
          const double da = 1.0 / static_cast<double>(2 * lo_T * q);
          const double db = 1.0 / static_cast<double>(2 * hi_T * q);
          const double w = (s.delta - db) / (da - db);
          // per-site loop actions bound beta at p/q + da and p/q + db
          s.zeta_upper = *b + w * (*a - *b);
        }
      }
    }
    curve.samples.push_back(s);
  }

  std::vector<const FlatnessSample*> res;
  for (const auto& s : curve.samples) {
    if (s.resolved && s.single_kink) res.push_back(&s);
  }
  std::sort(res.begin(), res.end(), [](auto* a, auto* b) { return a->delta < b->delta; });
  res.erase(std::unique(res.begin(), res.end(), [](auto* a, auto* b) { return a->delta == b->delta; }),
            res.end());
  if (res.size() < 2) return curve;

  const double qd = static_cast<double>(q);
  std::vector<double> ex, ey, px, py, ly;
  for (const auto* s : res) {
    ex.push_back(-1.0 / (4.0 * qd * s->delta));
    ey.push_back(std::log(s->u / s->delta));
    px.push_back(std::log(s->delta));
    ly.push_back(std::log(s->u));
  }
  const auto [ea, eb] = detail::fit_line(ex, ey);
  const auto [pa, pb] = detail::fit_line(px, ly);
  double rss_exp = 0.0, rss_poly = 0.0;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    rss_exp += std::pow(ey[i] - (ea + eb * ex[i]), 2);
    rss_poly += std::pow(ly[i] - (pa + pb * px[i]), 2);
  }
  curve.poly_exponent = pb;
  if (rss_poly < rss_exp || !(eb > 0.0)) {
    curve.kind = FitKind::Polynomial;
    return curve;
  }
  curve.kind = FitKind::Exponential;
  curve.lambda_fit = eb;
  curve.C_fit = std::exp(ea) / qd;
  for (auto& s : curve.samples) s.bound_value = flatness_bound(q, s.delta, curve.C_fit, curve.lambda_fit);

  // alternate resolved samples into training and held-out halves
  double envelope = 0.0;
  for (std::size_t i = 0; i < res.size(); i += 2) {
    envelope = std::max(envelope, res[i]->u / flatness_bound(q, res[i]->delta, 1.0, curve.lambda_fit));
  }
  curve.C_holdout = opt.holdout_margin * envelope;
  curve.verdict = true;
  for (std::size_t i = 1; i < res.size(); i += 2) {
    if (res[i]->u > flatness_bound(q, res[i]->delta, curve.C_holdout, curve.lambda_fit)) {
      curve.verdict = false;
    }
  }
  return curve;
}

}  // namespace staircase_lab
