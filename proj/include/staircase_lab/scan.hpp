#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "staircase_lab/cache.hpp"
#include "staircase_lab/config.hpp"
#include "staircase_lab/flatness.hpp"
#include "staircase_lab/parallel.hpp"
#include "staircase_lab/report.hpp"
#include "staircase_lab/staircase.hpp"

namespace staircase_lab {

/// Canonical text of the settings that determine results (directories excluded).
inline std::string config_canonical(const ScanConfig& c) {
  std::string s = c.model.canonical();
  auto list = [](const auto& v) {
    std::string out;
    for (const auto& x : v) {
      if (!out.empty()) out += ",";
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(x)>>) out += format_g17(x);
      else out += std::to_string(x);
    }
    return out;
  };
  s += "|Q_max=" + std::to_string(c.Q_max) + "|depth=" + std::to_string(c.depth);
  if (c.c_range) s += "|c_range=" + format_g17(c.c_range->first) + "," + format_g17(c.c_range->second);
  s += "|h_range=" + format_g17(c.h_range.first) + "," + format_g17(c.h_range.second);
  s += "|nu=" + list(c.nu) + "|theta=" + list(c.theta) + "|estimator_Q=" + list(c.estimator_Q);
  s += "|cap=" + std::to_string(c.denominator_cap) + "|samples=" + std::to_string(c.staircase_samples);
  s += "|ac_span=" + format_g17(c.ac_span) + "|seed=" + std::to_string(c.seed);
  for (const auto& f : c.flatness) s += "|flatness=" + std::to_string(f.p) + "/" + std::to_string(f.q) + ":" + list(f.T);
  for (const auto& p : c.probes) s += "|probe=" + p.name + ":" + list(p.cf) + ":" + format_g17(p.window);
  return s;
}

/// Evaluator wired to the disk cache. Corrupt records are quarantined and recomputed.
inline std::unique_ptr<BetaEvaluator> cached_evaluator(const GeneratingModel& m, const SolverOptions& opt,
                                                       BetaCache* cache) {
  auto ev = std::make_unique<BetaEvaluator>(m, opt);
  if (cache) {
    const std::string hash = m.hash();
    ev->set_store(
        [cache, hash](long p, long q) -> std::optional<PeriodicConfiguration> {
          try {
            return cache->get(hash, p, q);
          } catch (const Error& e) {
            if (e.kind() == ErrorKind::CorruptRecord) return std::nullopt;
            throw;
          }
        },
        [cache](const PeriodicConfiguration& c) { cache->put(c); });
  }
  return ev;
}

namespace detail {

template <class Fn>
bool guarded(ReportBundle& b, const std::string& stage, const std::string& target, Fn&& fn) {
  try {
    fn();
    return true;
  } catch (const Error& e) {
    b.failures.push_back({stage, target, to_string(e.kind()), e.what()});
  } catch (const std::exception& e) {
    b.failures.push_back({stage, target, "Internal", e.what()});
  }
  return false;
}

}  // namespace detail

/// Full experiment: beta over F_{Q_max}, locking intervals and L(Q) along the
/// dyadic ladder, the Legendre staircase, estimators, flatness curves and probes.
/// Failures are recorded per stage and per rational; later stages still run.
inline ReportBundle run_scan(const ScanConfig& cfg) {
  check_twist(cfg.model);
  ReportBundle b;
  b.model_canonical = cfg.model.canonical();
  b.model_hash = cfg.model.hash();
  b.config_digest = fnv1a_hex(config_canonical(cfg));

  std::unique_ptr<BetaCache> cache;
  if (const auto dir = BetaCache::resolve_dir(cfg.cache_dir); !dir.empty()) {
    cache = std::make_unique<BetaCache>(dir);
  }
  SolverOptions sopt;
  sopt.seed = cfg.seed;
  auto ev = cached_evaluator(cfg.model, sopt, cache.get());
  BetaTable table = BetaTable::from_evaluator(*ev, cfg.Q_max);

  // beta over the Farey grid, isolated per rational
  const auto grid = farey_enumerate(cfg.Q_max, cfg.h_range.first, cfg.h_range.second);
  std::vector<std::optional<Failure>> grid_fail(grid.size());
  parallel_for(grid.size(), cfg.workers, [&](std::size_t i) {
    try {
      table.beta(grid[i]);
    } catch (const Error& e) {
      grid_fail[i] = Failure{"beta", grid[i].str(), to_string(e.kind()), e.what()};
    }
  });
  for (auto& f : grid_fail) {
    if (f) b.failures.push_back(std::move(*f));
  }

  double c1 = 0.0, c2 = 1.0;
  const bool have_range = detail::guarded(b, "cohomology_range", "", [&] {
    std::tie(c1, c2) = cfg.c_range ? *cfg.c_range : default_cohomology_range(table, cfg.depth);
    require_range(c1, c2);
    b.c_range = {c1, c2};
  });

  if (have_range) {
    for (long Q : dyadic_ladder(cfg.Q_max)) {
      detail::guarded(b, "locking", "Q=" + std::to_string(Q), [&] {
        auto iv = locking_intervals(table, Q, c1, c2, cfg.depth, cfg.h_range.first, cfg.h_range.second,
                                    cfg.workers);
        b.estimators.push_back({"completeness", std::nullopt, std::nullopt, Q, completeness_measure(iv, c1, c2)});
        if (Q == cfg.Q_max) b.locking = std::move(iv);
      });
    }
    detail::guarded(b, "staircase", "", [&] {
      if (!table.verify_convexity()) {
        const auto bad = table.convexity_violation();
        throw Error(ErrorKind::NonconvexTerm, "beta table not convex" +
                                                  (bad ? " at " + bad->str() : std::string{}));
      }
      std::vector<double> cs;
      const auto n = cfg.staircase_samples;
      for (std::size_t i = 0; i < n; ++i) {
        cs.push_back(c1 + (c2 - c1) * static_cast<double>(i) / static_cast<double>(n - 1));
      }
      for (const auto& s : legendre(table, cs)) b.staircase.emplace_back(s.c, s.rho());
    });
  }

  const auto estimator_Q = cfg.estimator_Q.empty() ? dyadic_ladder(cfg.Q_max) : cfg.estimator_Q;
  EstimatorOptions eopt;
  eopt.depth = cfg.depth;
  eopt.denominator_cap = cfg.denominator_cap;
  eopt.workers = cfg.workers;
  for (double nu : cfg.nu) {
    for (long Q : estimator_Q) {
      detail::guarded(b, "variation", "Q=" + std::to_string(Q), [&] {
        b.estimators.push_back({"variation", nu, 1.0, Q, variation_estimator(table, nu, Q, eopt).value});
      });
      for (double theta : cfg.theta) {
        detail::guarded(b, "hausdorff", "Q=" + std::to_string(Q), [&] {
          b.estimators.push_back({"hausdorff", nu, theta, Q, hausdorff_estimator(table, nu, theta, Q, eopt).value});
        });
      }
    }
  }

  for (const auto& t : cfg.flatness) {
    detail::guarded(b, "flatness", Fraction{t.p, t.q}.str(), [&] {
      FlatnessOptions fo;
      fo.depth = cfg.depth;
      fo.workers = cfg.workers;
      fo.solver = sopt;
      b.flatness.push_back(flatness_curve(cfg.model, table, t.p, t.q, t.T.empty() ? default_T_grid() : t.T, fo));
    });
  }

  for (const auto& pt : cfg.probes) {
    detail::guarded(b, "probe", pt.name, [&] {
      ProbeResult r;
      r.name = pt.name;
      r.convexity = convexity_probe(table, pt.cf, pt.window);
      if (!b.staircase.empty()) {
        const double h = r.convexity.h;
        double lo = INFINITY, hi = -INFINITY;
        for (const auto& [c, rho] : b.staircase) {
          if (std::abs(rho - h) <= pt.window) {
            lo = std::min(lo, c);
            hi = std::max(hi, c);
          }
        }
        if (lo < hi) r.ac = ac_part_probe(b.staircase, {{lo, hi}}, cfg.ac_span);
      }
      b.probes.push_back(std::move(r));
    });
  }

  b.beta = table.snapshot();
  return b;
}

}  // namespace staircase_lab
