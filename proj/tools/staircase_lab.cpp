#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "staircase_lab/hyperbolicity.hpp"
#include "staircase_lab/scan.hpp"

using namespace staircase_lab;

namespace {

// exit codes: 0 ok, 1 partial failure, 2 configuration error, 3 computational error
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCompute = 3;

struct Common {
  std::string model_file;
  std::optional<double> k;
  std::string cache_dir;
  std::string out_dir;
  int workers = 1;
  unsigned long long seed = 0;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--model", c.model_file, "model definition file");
  app->add_option("--k", c.k, "Frenkel-Kontorova coupling (instead of --model)");
  app->add_option("--cache-dir", c.cache_dir, "beta cache directory");
  app->add_option("--out-dir", c.out_dir, "output directory");
  app->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("--seed", c.seed, "solver seed");
}

GeneratingModel resolve_model(const Common& c) {
  if (!c.model_file.empty() && c.k) throw Error(ErrorKind::ConfigError, "give either --model or --k");
  if (!c.model_file.empty()) return load_model(c.model_file);
  if (c.k) return GeneratingModel::frenkel_kontorova(*c.k);
  throw Error(ErrorKind::ConfigError, "a model is required (--model or --k)");
}

void print_error(const Error& e) {
  const nlohmann::json j = {{"error", to_string(e.kind())}, {"message", e.what()}};
  std::cerr << j.dump() << "\n";
}

ScanConfig scan_config(const std::string& path, const Common& c) {
  ScanConfig cfg = load_scan_config(path);
  if (!c.model_file.empty()) cfg.model = load_model(c.model_file);
  if (c.k) cfg.model = GeneratingModel::frenkel_kontorova(*c.k);
  if (!c.cache_dir.empty()) cfg.cache_dir = c.cache_dir;
  if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
  if (c.workers != 1) cfg.workers = c.workers;
  if (c.seed != 0) cfg.seed = c.seed;
  return cfg;
}

int finish_scan(const ScanConfig& cfg) {
  const auto bundle = run_scan(cfg);
  export_bundle(bundle, cfg.output_dir);
  for (const auto& f : bundle.failures) {
    std::cerr << f.stage << " " << f.target << ": " << f.message << "\n";
  }
  std::cout << cfg.output_dir << "/report.json\n";
  return bundle.failures.empty() ? 0 : kExitPartial;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aubry-Mather beta/alpha functions, locking intervals and flatness probes"};
  app.require_subcommand(1);
  Common common;
  std::string config;
  long p = 0, q = 1;
  std::vector<double> Ts;
  int resolution = 64;
  long order = 16;
  int depth = 4;

  auto* scan = app.add_subcommand("scan", "full scan driven by a config file");
  scan->add_option("config", config, "scan config")->required();
  add_common(scan, common);

  auto* probe = app.add_subcommand("probe-kam", "locking, staircase and KAM probes only");
  probe->add_option("config", config, "scan config")->required();
  add_common(probe, common);

  auto* beta = app.add_subcommand("beta", "beta and one-sided derivatives at p/q");
  auto* flat = app.add_subcommand("flatness", "u(delta) curve and fits at p/q");
  auto* hyp = app.add_subcommand("hyperbolicity", "monodromy, Lyapunov rate and phonon gap at p/q");
  auto* pn = app.add_subcommand("pn-barrier", "Peierls-Nabarro barrier at p/q");
  for (auto* sub : {beta, flat, hyp, pn}) {
    sub->add_option("-p", p, "numerator")->required();
    sub->add_option("-q", q, "denominator")->required();
    add_common(sub, common);
  }
  for (auto* sub : {beta, flat}) {
    sub->add_option("--order", order, "Farey order bounding the mediant chains")->check(CLI::PositiveNumber);
    sub->add_option("--depth", depth, "mediant depth of the one-sided derivatives")->check(CLI::PositiveNumber);
  }
  flat->add_option("--T", Ts, "T grid (multiples of 1/2)")->delimiter(',');
  pn->add_option("--resolution", resolution, "sweep points");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*scan) return finish_scan(scan_config(config, common));
    if (*probe) {
      auto cfg = scan_config(config, common);
      cfg.nu.clear();
      cfg.flatness.clear();
      return finish_scan(cfg);
    }

    const auto model = resolve_model(common);
    SolverOptions sopt;
    sopt.seed = common.seed;
    std::unique_ptr<BetaCache> cache;
    if (const auto dir = BetaCache::resolve_dir(common.cache_dir); !dir.empty()) {
      cache = std::make_unique<BetaCache>(dir);
    }
    require_coprime(p, q);

    if (*hyp) {
      const auto r = hyperbolicity_report(model, minimize_periodic(model, p, q, sopt));
      std::cout << dump_json({{"p", p},
                              {"q", q},
                              {"trace", r.trace},
                              {"determinant", r.determinant},
                              {"mu_large", std::abs(r.mu_large)},
                              {"lyapunov", r.lyapunov},
                              {"phonon_gap", r.phonon_gap},
                              {"hyperbolic", r.hyperbolic()}});
      return 0;
    }
    if (*pn) {
      std::cout << dump_json({{"p", p}, {"q", q}, {"barrier", pn_barrier(model, p, q, resolution, sopt)}});
      return 0;
    }

    auto ev = cached_evaluator(model, sopt, cache.get());
    BetaTable table = BetaTable::from_evaluator(*ev, order);
    if (*beta) {
      const auto d = one_sided_derivatives(table, p, q, depth);
      std::cout << dump_json({{"p", p},
                              {"q", q},
                              {"beta", table.beta(p, q)},
                              {"c_minus", d.c_minus},
                              {"c_plus", d.c_plus},
                              {"bracket_width", d.bracket_width()},
                              {"extrapolation_change", d.extrapolation_change}});
      return 0;
    }
    FlatnessOptions fo;
    fo.workers = common.workers;
    fo.depth = depth;
    fo.solver = sopt;
    const auto curve = flatness_curve(model, table, p, q, Ts.empty() ? default_T_grid() : Ts, fo);
    if (!common.out_dir.empty()) {
      std::filesystem::create_directories(common.out_dir);
      detail::write_file(std::filesystem::path(common.out_dir) /
                             ("flatness_" + std::to_string(p) + "_" + std::to_string(q) + ".csv"),
                         flatness_csv(curve));
    }
    std::cout << flatness_csv(curve) << dump_json(flatness_json(curve));
    return 0;
  } catch (const Error& e) {
    print_error(e);
    return e.kind() == ErrorKind::ConfigError ? kExitConfig : kExitCompute;
  }
}
