#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "staircase_lab/errors.hpp"
#include "staircase_lab/linalg.hpp"
#include "staircase_lab/parallel.hpp"
#include "staircase_lab/rational.hpp"
#include "staircase_lab/variational.hpp"

namespace staircase_lab {

struct BetaEntry {
  double beta = 0.0;
  std::optional<double> c_minus;
  std::optional<double> c_plus;
  double bracket_width = 0.0;
  int secant_window = 0;  ///< mediant depth used for c_minus/c_plus
};

/// Sampled beta function keyed by reduced fractions. Values come from a
/// provider on demand and are cached; safe to query from several threads.
class BetaTable {
 public:
  using Provider = std::function<double(long, long)>;

  BetaTable(std::string model_hash, Provider provider, long farey_order = 1)
      : hash_(std::move(model_hash)), provider_(std::move(provider)), order_(farey_order) {
    if (order_ < 1) throw Error(ErrorKind::ConfigError, "Farey order must be >= 1");
  }

  static BetaTable from_evaluator(BetaEvaluator& ev, long farey_order) {
    return BetaTable(ev.model().hash(), [&ev](long p, long q) { return ev.beta(p, q); },
                     farey_order);
  }

  const std::string& model_hash() const { return hash_; }
  long farey_order() const { return order_; }

  double beta(const Fraction& f) {
    {
      std::lock_guard lock(mu_);
      if (auto it = entries_.find(f); it != entries_.end()) return it->second.beta;
    }
    const double b = provider_(f.p, f.q);
    std::lock_guard lock(mu_);
    verified_ = verified_ && entries_.count(f) != 0;
    BetaEntry e;
    e.beta = b;
    return entries_.emplace(f, e).first->second.beta;
  }
  double beta(long p, long q) { return beta(Fraction::reduced(p, q)); }

  void prefetch(const std::vector<Fraction>& fs, int workers = 1) {
    parallel_for(fs.size(), workers, [&](std::size_t i) { beta(fs[i]); });
  }

  /// Computes beta on the Farey sequence of the table's order over [lo, hi].
  void populate(double lo, double hi, int workers = 1) {
    prefetch(farey_enumerate(order_, lo, hi), workers);
  }

  std::map<Fraction, BetaEntry> snapshot() const {
    std::lock_guard lock(mu_);
    return entries_;
  }

  std::optional<BetaEntry> find(const Fraction& f) const {
    std::lock_guard lock(mu_);
    if (auto it = entries_.find(f); it != entries_.end()) return it->second;
    return std::nullopt;
  }

  void set_derivatives(const Fraction& f, double c_minus, double c_plus, double width, int depth) {
    std::lock_guard lock(mu_);
    auto& e = entries_.at(f);
    e.c_minus = c_minus;
    e.c_plus = c_plus;
    e.bracket_width = width;
    e.secant_window = depth;
  }

  /// Middle point of the first consecutive triple whose secant slopes decrease by more than tol.
  std::optional<Fraction> convexity_violation(double tol = 1e-8) const {
    const auto snap = snapshot();
    std::vector<std::pair<Fraction, double>> pts;
    for (const auto& [f, e] : snap) pts.emplace_back(f, e.beta);
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
      const double left = (pts[i].second - pts[i - 1].second) /
                          (pts[i].first.value() - pts[i - 1].first.value());
      const double right = (pts[i + 1].second - pts[i].second) /
                           (pts[i + 1].first.value() - pts[i].first.value());
      if (right < left - tol) return pts[i].first;
    }
    return std::nullopt;
  }

  bool verify_convexity(double tol = 1e-8) {
    const bool ok = !convexity_violation(tol).has_value();
    std::lock_guard lock(mu_);
    verified_ = ok;
    return ok;
  }

  bool convexity_verified() const {
    std::lock_guard lock(mu_);
    return verified_;
  }

 private:
  std::string hash_;
  Provider provider_;
  long order_;
  mutable std::mutex mu_;
  std::map<Fraction, BetaEntry> entries_;
  bool verified_ = false;
};

struct OneSidedDerivatives {
  Fraction f;
  double c_minus = 0.0;
  double c_plus = 0.0;
  double secant_minus = 0.0;  ///< left secant at full depth (lower bound for c_minus)
  double secant_plus = 0.0;   ///< right secant at full depth (upper bound for c_plus)
  double bracket_minus = 0.0;  ///< |secant_d - secant_{d-1}| on the left
  double bracket_plus = 0.0;
  double extrapolation_change = 0.0;  ///< change of the extrapolated values from depth d-1 to d
  int depth = 0;

  double bracket_width() const { return std::max(bracket_minus, bracket_plus); }
};

namespace detail {

/// Mediant chain r_j = (n.p + j f.p) / (n.q + j f.q), j = 0..depth, toward f from its neighbour n.
inline std::vector<Fraction> mediant_chain(const Fraction& f, const Fraction& n, int depth) {
  std::vector<Fraction> out;
  for (int j = 0; j <= depth; ++j) out.push_back({n.p + j * f.p, n.q + j * f.q});
  return out;
}

inline double richardson(double s_prev, double s_last, double e_prev, double e_last) {
  return s_last - e_last * (s_prev - s_last) / (e_prev - e_last);
}

}  // namespace detail

/// Fractions whose beta values one_sided_derivatives(f, depth) will read.
inline std::vector<Fraction> derivative_stencil(const BetaTable& table, const Fraction& f, int depth) {
  const long order = std::max(table.farey_order(), f.q);
  const auto [left, right] = farey_neighbors(f, order);
  std::vector<Fraction> out{f};
  for (const auto& r : detail::mediant_chain(f, right, depth)) out.push_back(r);
  for (const auto& l : detail::mediant_chain(f, left, depth)) out.push_back(l);
  return out;
}

/// One-sided derivatives of beta at f from secants to mediant-refined Farey
/// neighbours. The last two secants on each side are extrapolated to zero
/// spacing and the result is clamped to the convexity bounds
/// secant_minus <= c_minus <= c_plus <= secant_plus.
inline OneSidedDerivatives one_sided_derivatives(BetaTable& table, const Fraction& f, int depth) {
  if (depth < 1) throw Error(ErrorKind::ConfigError, "refinement depth must be >= 1");
  const long order = std::max(table.farey_order(), f.q);
  const auto [left, right] = farey_neighbors(f, order);
  const double b0 = table.beta(f);
  const double fq = static_cast<double>(f.q);

  std::vector<double> sp, ep, sm, em;
  for (const auto& r : detail::mediant_chain(f, right, depth)) {
    const double e = 1.0 / (fq * static_cast<double>(r.q));  // r - f exactly, neighbours
    sp.push_back((table.beta(r) - b0) / e);
    ep.push_back(e);
  }
  for (const auto& l : detail::mediant_chain(f, left, depth)) {
    const double e = 1.0 / (fq * static_cast<double>(l.q));
    sm.push_back((b0 - table.beta(l)) / e);
    em.push_back(e);
  }
  const auto d = static_cast<std::size_t>(depth);
  OneSidedDerivatives out;
  out.f = f;
  out.depth = depth;
  out.secant_plus = sp[d];
  out.secant_minus = sm[d];
  out.bracket_plus = std::abs(sp[d - 1] - sp[d]);
  out.bracket_minus = std::abs(sm[d - 1] - sm[d]);
  const double xp = detail::richardson(sp[d - 1], sp[d], ep[d - 1], ep[d]);
  const double xm = detail::richardson(sm[d - 1], sm[d], em[d - 1], em[d]);
  if (depth >= 2) {
    const double xp1 = detail::richardson(sp[d - 2], sp[d - 1], ep[d - 2], ep[d - 1]);
    const double xm1 = detail::richardson(sm[d - 2], sm[d - 1], em[d - 2], em[d - 1]);
    out.extrapolation_change = std::max(std::abs(xp - xp1), std::abs(xm - xm1));
  } else {
    out.extrapolation_change = out.bracket_width();
  }
  if (out.secant_minus > out.secant_plus) {
    // non-monotone secants: report them raw so interval checks flag f
    out.c_minus = out.secant_minus;
    out.c_plus = out.secant_plus;
  } else {
    out.c_plus = std::clamp(xp, out.secant_minus, out.secant_plus);
    out.c_minus = std::clamp(xm, out.secant_minus, out.secant_plus);
    if (out.c_minus > out.c_plus) out.c_minus = out.c_plus = 0.5 * (out.c_minus + out.c_plus);
  }
  table.set_derivatives(f, out.c_minus, out.c_plus, out.bracket_width(), depth);
  return out;
}

inline OneSidedDerivatives one_sided_derivatives(BetaTable& table, long p, long q, int depth) {
  return one_sided_derivatives(table, Fraction::reduced(p, q), depth);
}

// ---------------------------------------------------------------------------
// Legendre transform

struct LegendreSample {
  double c = 0.0;
  double alpha = 0.0;
  Fraction argmax;  ///< rho* = D alpha(c)
  bool tie = false;  ///< c is a hull slope: the maximizers form an interval
  bool locked = false;  ///< c lies inside the recorded locking interval of rho*
  double fenchel_residual = 0.0;

  double rho() const { return argmax.value(); }
};

/// alpha(c) = max over table entries of (c rho - beta(rho)); ties go to the smallest rho.
inline std::vector<LegendreSample> legendre(const BetaTable& table, const std::vector<double>& cs) {
  const auto snap = table.snapshot();
  if (snap.empty()) throw Error(ErrorKind::EmptyTable, "no beta samples");
  if (!table.convexity_verified()) {
    throw Error(ErrorKind::ConfigError, "beta table has not passed the convexity check");
  }
  std::vector<LegendreSample> out;
  out.reserve(cs.size());
  for (double c : cs) {
    LegendreSample s;
    s.c = c;
    s.alpha = -std::numeric_limits<double>::infinity();
    const BetaEntry* best = nullptr;
    for (const auto& [f, e] : snap) {
      const double v = c * f.value() - e.beta;
      const double tol = best ? 1e-12 * std::max({1.0, std::abs(v), std::abs(s.alpha)}) : 0.0;
      if (!best || v > s.alpha + tol) {
        s.alpha = v;
        s.argmax = f;
        s.tie = false;
        best = &e;
      } else if (std::abs(v - s.alpha) <= tol) {
        s.tie = true;
      }
    }
    s.fenchel_residual = std::abs(s.alpha + best->beta - c * s.rho());
    s.locked = best->c_minus && best->c_plus && *best->c_minus <= c && c <= *best->c_plus &&
               *best->c_plus > *best->c_minus;
    out.push_back(s);
  }
  return out;
}

/// beta**(rho) = max over the given alpha samples of (c rho - alpha(c)).
inline std::vector<std::pair<Fraction, double>> biconjugate(const BetaTable& table,
                                                            const std::vector<LegendreSample>& a) {
  if (a.empty()) throw Error(ErrorKind::EmptyTable, "no alpha samples");
  std::vector<std::pair<Fraction, double>> out;
  for (const auto& [f, e] : table.snapshot()) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& s : a) best = std::max(best, s.c * f.value() - s.alpha);
    out.emplace_back(f, best);
  }
  return out;
}

/// Slopes of the lower convex hull between consecutive table entries; using
/// them as the c grid makes the discrete biconjugate exact on hull points.
inline std::vector<double> hull_slopes(const BetaTable& table) {
  const auto snap = table.snapshot();
  std::vector<std::pair<double, double>> hull;
  for (const auto& [f, e] : snap) {
    const std::pair<double, double> pt{f.value(), e.beta};
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      const double cross = (b.first - a.first) * (pt.second - a.second) -
                           (b.second - a.second) * (pt.first - a.first);
      if (cross > 0) break;
      hull.pop_back();
    }
    hull.push_back(pt);
  }
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < hull.size(); ++i) {
    out.push_back((hull[i + 1].second - hull[i].second) / (hull[i + 1].first - hull[i].first));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Locking intervals

struct LockingInterval {
  Fraction f;
  double c_minus = 0.0;
  double c_plus = 0.0;

  double width() const { return c_plus - c_minus; }
};

struct StaircaseTable {
  double c1 = 0.0;
  double c2 = 1.0;
  std::vector<LockingInterval> intervals;
  std::vector<std::pair<double, double>> d_alpha;  ///< (c, rho)
  std::map<long, double> L_of_Q;
};

inline void require_range(double c1, double c2) {
  if (!(c1 < c2)) throw Error(ErrorKind::ConfigError, "empty cohomology range");
}

/// Locking intervals of all fractions in F_Q within [rho_lo, rho_hi], checked
/// for disjoint interiors and clipped to [c1, c2].
inline std::vector<LockingInterval> locking_intervals(BetaTable& table, long Q, double c1, double c2,
                                                      int depth = 4, double rho_lo = 0.0,
                                                      double rho_hi = 1.0, int workers = 1) {
  require_range(c1, c2);
  constexpr double kMerge = 1e-10;
  const auto fracs = farey_enumerate(Q, rho_lo, rho_hi);
  std::vector<Fraction> need;
  for (const auto& f : fracs) {
    const auto st = derivative_stencil(table, f, depth);
    need.insert(need.end(), st.begin(), st.end());
  }
  table.prefetch(need, workers);
  std::vector<LockingInterval> raw;
  for (const auto& f : fracs) {
    const auto d = one_sided_derivatives(table, f, depth);
    LockingInterval li{f, d.c_minus, d.c_plus};
    if (li.c_plus < li.c_minus - kMerge) {
      throw Error(ErrorKind::OverlapDetected, "inverted one-sided derivatives at " + f.str());
    }
    if (li.c_plus < li.c_minus) li.c_plus = li.c_minus;
    raw.push_back(li);
  }
  for (std::size_t i = 1; i < raw.size(); ++i) {
    auto& a = raw[i - 1];
    auto& b = raw[i];
    const double overlap = a.c_plus - b.c_minus;
    if (overlap > kMerge) {
      throw Error(ErrorKind::OverlapDetected,
                  "locking intervals of " + a.f.str() + " and " + b.f.str() + " overlap");
    }
    if (overlap > 0) {
      const double mid = 0.5 * (a.c_plus + b.c_minus);
      a.c_plus = std::max(a.c_minus, mid);
      b.c_minus = std::min(b.c_plus, mid);
    }
  }
  std::vector<LockingInterval> out;
  for (auto li : raw) {
    li.c_minus = std::clamp(li.c_minus, c1, c2);
    li.c_plus = std::clamp(li.c_plus, c1, c2);
    out.push_back(li);
  }
  return out;
}

inline double completeness_measure(const std::vector<LockingInterval>& intervals, double c1,
                                   double c2) {
  require_range(c1, c2);
  CompensatedSum s;
  for (const auto& li : intervals) {
    const double lo = std::clamp(li.c_minus, c1, c2);
    const double hi = std::clamp(li.c_plus, c1, c2);
    if (hi > lo) s.add(hi - lo);
  }
  return std::clamp(s.value() / (c2 - c1), 0.0, 1.0);
}

/// [c_plus(0/1), c_minus(1/1)]: the cohomology classes whose rotation number lies in [0, 1].
inline std::pair<double, double> default_cohomology_range(BetaTable& table, int depth = 4) {
  const double c1 = one_sided_derivatives(table, Fraction{0, 1}, depth).c_plus;
  const double c2 = one_sided_derivatives(table, Fraction{1, 1}, depth).c_minus;
  require_range(c1, c2);
  return {c1, c2};
}

// ---------------------------------------------------------------------------
// Aubry estimators

struct EstimatorTerm {
  Fraction f;
  double shift = 0.0;  ///< q^-(1+nu)
  double term = 0.0;   ///< q^(1+nu) [beta(f + shift) - beta(f) - c_plus shift], before the power theta
  double interpolation_gap = 0.0;  ///< weighted width of the convexity bracket on beta(f + shift)
};

struct EstimatorResult {
  double nu = 0.5;
  double theta = 1.0;
  long Q = 1;
  long Q_max = 2;
  double value = 0.0;
  double interpolation_bound = 0.0;  ///< sum of weighted bracket widths (theta = 1 scale)
  std::vector<EstimatorTerm> terms;
};

struct EstimatorOptions {
  long Q_max = 0;             ///< 0 selects 2 Q
  int depth = 4;              ///< mediant depth for c_plus
  long denominator_cap = 1000;  ///< rational approximation of shifted arguments
  int workers = 1;
};

namespace detail {

inline std::vector<Fraction> estimator_fractions(long Q, long Q_max) {
  std::vector<Fraction> out;
  for (long q = Q + 1; q <= Q_max; ++q) {
    for (long p = 1; p <= q; ++p) {
      if (std::gcd(p, q) == 1) out.push_back({p, q});
    }
  }
  return out;
}

}  // namespace detail

/// Truncated sum over Q < q <= Q_max and reduced p/q in (0, 1] of
/// [q^(1+nu) (beta(p/q + q^-(1+nu)) - beta(p/q) - c_plus q^-(1+nu))]^theta.
/// beta at the shifted argument is the chord between its Farey neighbours of
/// order denominator_cap, an upper bound by convexity.
inline EstimatorResult aubry_sum(BetaTable& table, double nu, double theta, long Q,
                                 const EstimatorOptions& opt = {}) {
  if (!(nu > 0.0 && nu < 1.0)) throw Error(ErrorKind::ConfigError, "nu must lie in (0,1)");
  if (!(theta > 0.0 && theta <= 1.0)) throw Error(ErrorKind::ConfigError, "theta must lie in (0,1]");
  if (Q < 1) throw Error(ErrorKind::ConfigError, "Q must be >= 1");
  EstimatorResult res;
  res.nu = nu;
  res.theta = theta;
  res.Q = Q;
  res.Q_max = opt.Q_max > 0 ? opt.Q_max : 2 * Q;
  if (res.Q_max <= Q) throw Error(ErrorKind::ConfigError, "Q_max must exceed Q");

  const auto fracs = detail::estimator_fractions(Q, res.Q_max);
  struct Plan {
    double shift, x;
    Fraction a, b;
  };
  std::vector<Plan> plans;
  std::vector<Fraction> need;
  for (const auto& f : fracs) {
    const double shift = std::pow(static_cast<double>(f.q), -(1.0 + nu));
    const double x = f.value() + shift;
    const auto [a, b] = farey_bracket(x, opt.denominator_cap);
    plans.push_back({shift, x, a, b});
    const auto st = derivative_stencil(table, f, opt.depth);
    need.insert(need.end(), st.begin(), st.end());
    need.push_back(a);
    need.push_back(b);
  }
  table.prefetch(need, opt.workers);

  CompensatedSum total, gaps;
  for (std::size_t i = 0; i < fracs.size(); ++i) {
    const auto& f = fracs[i];
    const auto& pl = plans[i];
    const double cp = one_sided_derivatives(table, f, opt.depth).c_plus;
    const double b0 = table.beta(f);
    const double ba = table.beta(pl.a);
    double upper = ba;
    double lower = ba;
    if (pl.a != pl.b) {
      const double bb = table.beta(pl.b);
      const double w = (pl.x - pl.a.value()) / (pl.b.value() - pl.a.value());
      upper = ba + w * (bb - ba);
      // chord from f through a, extended past a, stays below beta
      lower = b0 + cp * pl.shift;
      if (f < pl.a) {
        const double slope = (ba - b0) / (pl.a.value() - f.value());
        lower = std::max(lower, ba + slope * (pl.x - pl.a.value()));
      }
    }
    const double weight = std::pow(static_cast<double>(f.q), 1.0 + nu);
    const double bracketed = upper - b0 - cp * pl.shift;
    if (bracketed < -1e-9) {
      throw Error(ErrorKind::NonconvexTerm, "negative supporting-line term at " + f.str());
    }
    EstimatorTerm t;
    t.f = f;
    t.shift = pl.shift;
    t.term = weight * std::max(bracketed, 0.0);
    t.interpolation_gap = weight * std::max(upper - lower, 0.0);
    total.add(theta == 1.0 ? t.term : std::pow(t.term, theta));
    gaps.add(t.interpolation_gap);
    res.terms.push_back(t);
  }
  res.value = total.value();
  res.interpolation_bound = gaps.value();
  return res;
}

inline EstimatorResult variation_estimator(BetaTable& table, double nu, long Q,
                                           const EstimatorOptions& opt = {}) {
  return aubry_sum(table, nu, 1.0, Q, opt);
}

inline EstimatorResult hausdorff_estimator(BetaTable& table, double nu, double theta, long Q,
                                           const EstimatorOptions& opt = {}) {
  return aubry_sum(table, nu, theta, Q, opt);
}

// ---------------------------------------------------------------------------
// KAM-regime probes

struct ConvexityProbe {
  double h = 0.0;
  double c_low = 0.0;
  double C_high = 0.0;
  double beta_h = 0.0;  ///< fitted beta(h)
  double slope_h = 0.0;  ///< fitted supporting slope at h
  std::vector<Fraction> samples;
};

/// Quadratic envelope c_low t^2 <= beta(h+t) - l(t) <= C_high t^2 over the
/// continued-fraction approximants of h within the window. The supporting
/// line l is the tangent at h of the quadratic through the three innermost samples.
inline ConvexityProbe convexity_probe(BetaTable& table, const std::vector<long>& cf, double window,
                                      long denominator_cap = 500) {
  if (!(window > 0.0)) throw Error(ErrorKind::ConfigError, "probe window must be positive");
  ConvexityProbe out;
  out.h = cf_value(cf);
  std::vector<Fraction> samples;
  for (const auto& f : convergents(cf)) {
    if (f.q > denominator_cap) break;
    const double t = f.value() - out.h;
    if (t != 0.0 && std::abs(t) < window) samples.push_back(f);
  }
  if (samples.size() < 5) {
    throw Error(ErrorKind::InsufficientSamples,
                std::to_string(samples.size()) + " approximants inside the probe window, need 5");
  }
  table.prefetch(samples);
  std::vector<double> t, b;
  for (const auto& f : samples) {
    t.push_back(f.value() - out.h);
    b.push_back(table.beta(f));
  }
  // Quadratic through the three innermost approximants (central divided differences).
  std::vector<std::size_t> idx(t.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return std::abs(t[x]) < std::abs(t[y]); });
  const double t0 = t[idx[0]], t1 = t[idx[1]], t2 = t[idx[2]];
  const double f01 = (b[idx[1]] - b[idx[0]]) / (t1 - t0);
  const double f12 = (b[idx[2]] - b[idx[1]]) / (t2 - t1);
  const double f012 = (f12 - f01) / (t2 - t0);
  out.beta_h = b[idx[0]] - f01 * t0 + f012 * t0 * t1;
  out.slope_h = f01 - f012 * (t0 + t1);
  out.c_low = std::numeric_limits<double>::infinity();
  out.C_high = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = (b[i] - out.beta_h - out.slope_h * t[i]) / (t[i] * t[i]);
    out.c_low = std::min(out.c_low, r);
    out.C_high = std::max(out.C_high, r);
  }
  out.samples = std::move(samples);
  return out;
}

struct AcPartProbe {
  double measure = 0.0;    ///< c-measure with bounded positive difference quotients
  double lipschitz = 0.0;  ///< median positive difference quotient
  double threshold = 0.0;  ///< lipschitz * (1 + slack)
};

/// Lower bound on the unlocked c-measure inside the target windows: cells
/// [c_j, c_{j+1}] whose D alpha difference quotient over `span` is positive and
/// at most the fitted Lipschitz threshold.
inline AcPartProbe ac_part_probe(const std::vector<std::pair<double, double>>& d_alpha,
                                 const std::vector<std::pair<double, double>>& windows,
                                 double span, double slack = 0.5) {
  if (!(span > 0.0)) throw Error(ErrorKind::ConfigError, "difference span must be positive");
  struct Cell {
    double width, quotient;
  };
  std::vector<Cell> cells;
  for (const auto& [lo, hi] : windows) {
    for (std::size_t j = 0; j + 1 < d_alpha.size(); ++j) {
      const double c = d_alpha[j].first;
      if (c < lo || d_alpha[j + 1].first > hi) continue;
      std::size_t k = j + 1;
      while (k + 1 < d_alpha.size() && d_alpha[k].first < c + span) ++k;
      const double dc = d_alpha[k].first - c;
      if (dc <= 0) continue;
      cells.push_back({d_alpha[j + 1].first - c, (d_alpha[k].second - d_alpha[j].second) / dc});
    }
  }
  AcPartProbe out;
  std::vector<double> pos;
  for (const auto& cell : cells) {
    if (cell.quotient > 0) pos.push_back(cell.quotient);
  }
  if (pos.empty()) return out;
  std::sort(pos.begin(), pos.end());
  const std::size_t mid = pos.size() / 2;
  out.lipschitz = pos.size() % 2 ? pos[mid] : 0.5 * (pos[mid - 1] + pos[mid]);
  out.threshold = out.lipschitz * (1.0 + slack);
  CompensatedSum m;
  for (const auto& cell : cells) {
    if (cell.quotient > 0 && cell.quotient <= out.threshold) m.add(cell.width);
  }
  out.measure = m.value();
  return out;
}

}  // namespace staircase_lab
