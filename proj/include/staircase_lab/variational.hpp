#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "staircase_lab/configuration.hpp"
#include "staircase_lab/model.hpp"
#include "staircase_lab/newton.hpp"

namespace staircase_lab {

inline std::pair<long, long> reduce_fraction(long p, long q) {
  if (q <= 0) throw Error(ErrorKind::ConfigError, "denominator must be positive");
  const long g = std::gcd(p, q);
  return {p / g, q / g};
}

inline void require_coprime(long p, long q) {
  if (q <= 0 || std::gcd(p, q) != 1) {
    throw Error(ErrorKind::ConfigError,
                "expected coprime p/q, got " + std::to_string(p) + "/" + std::to_string(q));
  }
}

/// Location of the global minimum of the on-site potential in [0,1).
inline double potential_minimum(const GeneratingModel& m) {
  constexpr int kGrid = 1024;
  double best = 0.0, best_v = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    double v, dv, ddv;
    const double x = static_cast<double>(i) / kGrid;
    m.potential(x, v, dv, ddv);
    if (v < best_v - 1e-15) {
      best_v = v;
      best = x;
    }
  }
  for (int it = 0; it < 50; ++it) {
    double v, dv, ddv;
    m.potential(best, v, dv, ddv);
    if (!(ddv > 0.0) || std::abs(dv) < 1e-15) break;
    best -= dv / ddv;
  }
  best -= std::floor(best);
  return best;
}

/// Starting configurations: integrable, anti-integrable, then jittered.
inline std::vector<std::vector<double>> periodic_seeds(const GeneratingModel& m, long p, long q,
                                                       int count, unsigned long long seed) {
  const double rho = static_cast<double>(p) / static_cast<double>(q);
  const double well = potential_minimum(m);
  std::vector<std::vector<double>> seeds;
  auto integrable = [&](double x0) {
    std::vector<double> x(static_cast<std::size_t>(q));
    for (long i = 0; i < q; ++i) x[static_cast<std::size_t>(i)] = x0 + static_cast<double>(i) * rho;
    return x;
  };
  auto pinned = [&](double phase) {
    std::vector<double> x(static_cast<std::size_t>(q));
    for (long i = 0; i < q; ++i) {
      x[static_cast<std::size_t>(i)] =
          well + std::floor(static_cast<double>(i) * rho + phase);
    }
    return x;
  };
  const double half_cell = 0.5 / static_cast<double>(q);
  seeds.push_back(pinned(half_cell));
  seeds.push_back(integrable(well));
  seeds.push_back(integrable(well + half_cell));
  seeds.push_back(pinned(0.0));
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + static_cast<unsigned long long>(q) * 1000003ull +
                      static_cast<unsigned long long>(p + 1000000));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(seeds.size()) < count) {
    auto x = integrable(unit(rng));
    const double amp = 0.45 / static_cast<double>(q);
    for (auto& v : x) v += amp * (2.0 * unit(rng) - 1.0);
    seeds.push_back(std::move(x));
  }
  if (static_cast<int>(seeds.size()) > count) seeds.resize(static_cast<std::size_t>(std::max(count, 1)));
  return seeds;
}

/// Representative of the shift / integer-translation class with the smallest x_0 in [0,1).
inline std::vector<double> canonical_positions(const std::vector<double>& x, long p) {
  const long q = static_cast<long>(x.size());
  PeriodicConfiguration c;
  c.p = p;
  c.q = q;
  c.positions = x;
  long best = 0;
  double best_frac = 2.0;
  for (long j = 0; j < q; ++j) {
    const double v = x[static_cast<std::size_t>(j)];
    const double f = v - std::floor(v);
    if (f < best_frac - 1e-13) {
      best_frac = f;
      best = j;
    }
  }
  const double base = std::floor(c.at(best));
  std::vector<double> out(static_cast<std::size_t>(q));
  for (long i = 0; i < q; ++i) out[static_cast<std::size_t>(i)] = c.at(best + i) - base;
  return out;
}

/// True when the ring Hessian satisfies H + margin I > 0.
inline bool hessian_above(const GeneratingModel& m, long p, const std::vector<double>& x,
                          double margin) {
  detail::RingProblem prob{m, p};
  std::vector<double> zero(x.size(), 0.0);
  return prob.hessian(x).solve_spd(zero, margin).has_value();
}

inline PeriodicConfiguration make_configuration(const GeneratingModel& m, long p, long q,
                                                std::vector<double> x) {
  detail::RingProblem prob{m, p};
  PeriodicConfiguration c;
  c.p = p;
  c.q = q;
  c.positions = std::move(x);
  c.action_total = prob.action(c.positions);
  c.residual_sup = sup_norm(prob.gradient(c.positions));
  c.model_hash = m.hash();
  return c;
}

namespace detail {

struct CriticalPoint {
  std::vector<double> x;
  double action;
  bool minimum;
};

inline std::vector<CriticalPoint> periodic_critical_points(const GeneratingModel& m, long p, long q,
                                                           const std::vector<std::vector<double>>& seeds,
                                                           const SolverOptions& opt) {
  RingProblem prob{m, p};
  std::vector<CriticalPoint> out;
  for (const auto& s : seeds) {
    auto r = newton_minimize(prob, s, opt);
    if (!r.converged) continue;
    auto canon = canonical_positions(r.x, p);
    const bool minimum = hessian_above(m, p, canon, 1e-8);
    out.push_back({std::move(canon), prob.action(r.x), minimum});
  }
  (void)q;
  return out;
}

}  // namespace detail

/// Global (p,q)-periodic minimizer over a multistart of Newton descents.
inline PeriodicConfiguration minimize_periodic(const GeneratingModel& m, long p, long q,
                                               const SolverOptions& opt = {}) {
  require_coprime(p, q);
  const auto seeds = periodic_seeds(m, p, q, std::max(opt.multistart, 1), opt.seed);
  const auto crit = detail::periodic_critical_points(m, p, q, seeds, opt);
  if (crit.empty()) {
    throw Error(ErrorKind::NoConvergence, "no start converged for " + std::to_string(p) + "/" +
                                              std::to_string(q));
  }
  const detail::CriticalPoint* best = nullptr;
  const double tie = 1e-9 * static_cast<double>(q);
  for (const auto& c : crit) {
    if (!c.minimum) continue;
    if (!best || c.action < best->action - tie ||
        (std::abs(c.action - best->action) <= tie && c.x[0] < best->x[0])) {
      best = &c;
    }
  }
  if (!best) {
    throw Error(ErrorKind::SaddleOnly, "only saddles found for " + std::to_string(p) + "/" +
                                           std::to_string(q));
  }
  auto conf = make_configuration(m, p, q, best->x);
  conf.is_certified_minimal = true;
  return conf;
}

struct MinimizerSet {
  long p = 0;
  long q = 1;
  std::vector<PeriodicConfiguration> members;  ///< classes attaining the minimal action
  std::vector<PeriodicConfiguration> local_minima;
  std::size_t multiplicity = 0;
  bool uniqueness_flag = false;
  bool degenerate = false;  ///< zero mode in the second variation (continuous family)
  double min_action = 0.0;
};

inline MinimizerSet enumerate_minimizers(const GeneratingModel& m, long p, long q, int starts,
                                         SolverOptions opt = {}) {
  require_coprime(p, q);
  if (starts < q) throw Error(ErrorKind::ConfigError, "starts must be >= q");
  const auto seeds = periodic_seeds(m, p, q, starts, opt.seed);
  const auto crit = detail::periodic_critical_points(m, p, q, seeds, opt);
  MinimizerSet set;
  set.p = p;
  set.q = q;
  std::vector<const detail::CriticalPoint*> distinct;
  for (const auto& c : crit) {
    if (!c.minimum) continue;
    bool seen = false;
    for (const auto* d : distinct) {
      double diff = 0.0;
      for (std::size_t i = 0; i < c.x.size(); ++i) diff = std::max(diff, std::abs(c.x[i] - d->x[i]));
      if (diff < 1e-7) {
        seen = true;
        break;
      }
    }
    if (!seen) distinct.push_back(&c);
  }
  if (distinct.empty()) {
    throw Error(ErrorKind::NoConvergence, "no start converged to a minimum for " +
                                              std::to_string(p) + "/" + std::to_string(q));
  }
  std::sort(distinct.begin(), distinct.end(),
            [](const auto* a, const auto* b) { return a->x[0] < b->x[0]; });
  set.min_action = std::numeric_limits<double>::infinity();
  for (const auto* d : distinct) set.min_action = std::min(set.min_action, d->action);
  const double tie = 1e-9 * static_cast<double>(q);
  for (const auto* d : distinct) {
    auto conf = make_configuration(m, p, q, d->x);
    conf.is_certified_minimal = d->action <= set.min_action + tie;
    if (conf.is_certified_minimal) set.members.push_back(conf);
    set.local_minima.push_back(std::move(conf));
  }
  set.multiplicity = set.members.size();
  set.degenerate = !hessian_above(m, p, set.members.front().positions, -1e-9);
  set.uniqueness_flag = set.multiplicity == 1 && !set.degenerate;
  return set;
}

/// Mean advance (x_{N-1} - x_0) / (N - 1).
inline double rotation_number(std::span<const double> x) {
  if (x.size() < 2) throw Error(ErrorKind::ConfigError, "rotation number needs >= 2 sites");
  return (x.back() - x.front()) / static_cast<double>(x.size() - 1);
}

struct OrderResult {
  bool ordered = true;
  std::size_t first = 0;   ///< indices of the crossing pair
  std::size_t second = 0;
  std::size_t index = 0;   ///< first site where the order flips
};

/// Aubry non-crossing test on sequences sharing an index window.
inline OrderResult order_check(const std::vector<std::vector<double>>& seqs, double eps = 1e-12) {
  OrderResult res;
  for (std::size_t a = 0; a < seqs.size(); ++a) {
    for (std::size_t b = a + 1; b < seqs.size(); ++b) {
      const auto& x = seqs[a];
      const auto& y = seqs[b];
      const std::size_t n = std::min(x.size(), y.size());
      int sign = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - y[i];
        const int s = d > eps ? 1 : (d < -eps ? -1 : 0);
        if (s == 0) continue;
        if (sign == 0) {
          sign = s;
        } else if (s != sign) {
          return {false, a, b, i};
        }
      }
    }
  }
  return res;
}

struct MinimalityReport {
  bool minimal = true;
  long window_start = 0;
  long window_length = 0;
  double action_drop = 0.0;
};

/// Re-minimizes every window of length <= w with its endpoints fixed; fails
/// when some window action drops by more than 1e-9.
inline MinimalityReport verify_minimality(const GeneratingModel& m, const PeriodicConfiguration& c,
                                          long w, const SolverOptions& opt = {}) {
  if (w > 3 * c.q) throw Error(ErrorKind::ConfigError, "window longer than 3q");
  MinimalityReport rep;
  for (long start = 0; start < c.q; ++start) {
    for (long len = 2; len <= w; ++len) {
      const auto seg = c.window(start, len + 1);
      const double base = chain_action(m, seg);
      std::vector<std::vector<double>> guesses{seg};
      std::vector<double> lin(seg.size());
      for (std::size_t i = 0; i < seg.size(); ++i) {
        lin[i] = seg.front() + (seg.back() - seg.front()) * static_cast<double>(i) /
                                   static_cast<double>(seg.size() - 1);
      }
      guesses.push_back(std::move(lin));
      for (const auto& g : guesses) {
        const auto r = minimize_segment(m, g, 1, 1, opt);
        const double drop = base - r.action;
        if (drop > 1e-9 && drop > rep.action_drop) {
          rep = {false, start, len, drop};
        }
      }
    }
  }
  return rep;
}

/// Largest circular gap of all orbit points of the set projected to [0,1).
/// A degenerate (continuous) family covers the circle and reports 0.
inline double mather_gaps(const MinimizerSet& set) {
  if (set.degenerate) return 0.0;
  std::vector<double> pts;
  for (const auto& c : set.members) {
    for (double v : c.positions) pts.push_back(v - std::floor(v));
  }
  if (pts.empty()) return 1.0;
  std::sort(pts.begin(), pts.end());
  double gap = pts.front() + 1.0 - pts.back();
  for (std::size_t i = 1; i < pts.size(); ++i) gap = std::max(gap, pts[i] - pts[i - 1]);
  return gap;
}

/// Thread-safe memo of certified minimizers keyed by reduced (p,q). An optional
/// persistent store is consulted before solving and fed after.
class BetaEvaluator {
 public:
  using Loader = std::function<std::optional<PeriodicConfiguration>(long, long)>;
  using Storer = std::function<void(const PeriodicConfiguration&)>;

  BetaEvaluator(GeneratingModel model, SolverOptions opt = {})
      : model_(std::move(model)), opt_(opt), hash_(model_.hash()) {}

  void set_store(Loader load, Storer store) {
    load_ = std::move(load);
    store_ = std::move(store);
  }

  const GeneratingModel& model() const { return model_; }
  const SolverOptions& options() const { return opt_; }

  PeriodicConfiguration configuration(long p, long q) {
    std::tie(p, q) = reduce_fraction(p, q);
    {
      std::lock_guard lock(mu_);
      if (auto it = memo_.find({p, q}); it != memo_.end()) return it->second;
    }
    std::optional<PeriodicConfiguration> c;
    if (load_) c = load_(p, q);
    if (!c) {
      c = minimize_for(p, q);
      if (store_) store_(*c);
    }
    std::lock_guard lock(mu_);
    return memo_.emplace(std::make_pair(p, q), *c).first->second;
  }

  double beta(long p, long q) { return configuration(p, q).beta(); }

 private:
  PeriodicConfiguration minimize_for(long p, long q) const {
    return minimize_periodic(model_, p, q, opt_);
  }

  GeneratingModel model_;
  SolverOptions opt_;
  std::string hash_;
  Loader load_;
  Storer store_;
  std::mutex mu_;
  std::map<std::pair<long, long>, PeriodicConfiguration> memo_;
};

}  // namespace staircase_lab
