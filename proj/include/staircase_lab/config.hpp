#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "staircase_lab/errors.hpp"
#include "staircase_lab/model.hpp"
#include "staircase_lab/rational.hpp"

namespace staircase_lab {

/// One `[name]` block of an INI-style file. Sections may repeat.
struct IniSection {
  std::string name;
  int line = 0;
  std::vector<std::pair<std::string, std::string>> entries;

  std::optional<std::string> get(const std::string& key) const {
    for (const auto& [k, v] : entries) {
      if (k == key) return v;
    }
    return std::nullopt;
  }
};

struct IniDocument {
  std::vector<IniSection> sections;

  std::vector<const IniSection*> all(const std::string& name) const {
    std::vector<const IniSection*> out;
    for (const auto& s : sections) {
      if (s.name == name) out.push_back(&s);
    }
    return out;
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] inline void config_error(const std::string& msg) {
  throw Error(ErrorKind::ConfigError, msg);
}

}  // namespace detail

/// Parses `[section]` headers and `key = value` lines; `#` and `;` start comments.
inline IniDocument parse_ini(const std::string& text) {
  IniDocument doc;
  std::istringstream in(text);
  std::string raw;
  int n = 0;
  while (std::getline(in, raw)) {
    ++n;
    if (const auto c = raw.find_first_of("#;"); c != std::string::npos) raw.erase(c);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') detail::config_error("line " + std::to_string(n) + ": unterminated section header");
      doc.sections.push_back({detail::trim(line.substr(1, line.size() - 2)), n, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) detail::config_error("line " + std::to_string(n) + ": expected key = value");
    if (doc.sections.empty()) detail::config_error("line " + std::to_string(n) + ": entry outside any section");
    auto& sec = doc.sections.back();
    const std::string key = detail::trim(line.substr(0, eq));
    if (sec.get(key)) detail::config_error("line " + std::to_string(n) + ": duplicate key '" + key + "'");
    sec.entries.emplace_back(key, detail::trim(line.substr(eq + 1)));
  }
  return doc;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

namespace detail {

inline void require_keys(const IniSection& s, std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : s.entries) {
    if (!ok.count(k)) {
      config_error("line " + std::to_string(s.line) + ": unknown key '" + k + "' in [" + s.name + "]");
    }
  }
}

inline double to_double(const std::string& v, const std::string& key) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) config_error("'" + key + "' is not a number: '" + v + "'");
  return out;
}

inline long to_long(const std::string& v, const std::string& key) {
  long out = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) config_error("'" + key + "' is not an integer: '" + v + "'");
  return out;
}

inline std::vector<double> to_doubles(const std::string& v, const std::string& key) {
  std::vector<double> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(to_double(trim(item), key));
  if (out.empty()) config_error("'" + key + "' is empty");
  return out;
}

inline std::vector<long> to_longs(const std::string& v, const std::string& key) {
  std::vector<long> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(to_long(trim(item), key));
  if (out.empty()) config_error("'" + key + "' is empty");
  return out;
}

inline std::string required(const IniSection& s, const std::string& key) {
  auto v = s.get(key);
  if (!v) config_error("[" + s.name + "] is missing '" + key + "'");
  return *v;
}

}  // namespace detail

/// `[model]` with family = frenkel_kontorova | fourier, k, a (and optional cross
/// for the fourier family), plus repeated `[harmonic]` order, cos_amp, sin_amp.
inline GeneratingModel model_from_ini(const IniDocument& doc) {
  const auto ms = doc.all("model");
  if (ms.empty()) detail::config_error("missing [model] section");
  if (ms.size() > 1) detail::config_error("more than one [model] section");
  const auto& s = *ms.front();
  detail::require_keys(s, {"family", "k", "a", "cross"});
  const std::string family = detail::required(s, "family");
  const double k = detail::to_double(detail::required(s, "k"), "k");
  const auto hs = doc.all("harmonic");
  if (family == "frenkel_kontorova" || family == "fk") {
    if (auto a = s.get("a"); a && detail::to_double(*a, "a") != 0.5) {
      detail::config_error("frenkel_kontorova fixes a = 0.5");
    }
    if (s.get("cross")) detail::config_error("'cross' applies to the fourier family only");
    if (!hs.empty()) detail::config_error("[harmonic] sections apply to the fourier family only");
    return GeneratingModel::frenkel_kontorova(k);
  }
  if (family != "fourier") detail::config_error("unknown model family '" + family + "'");
  std::vector<Harmonic> harmonics;
  for (const auto* h : hs) {
    detail::require_keys(*h, {"order", "cos_amp", "sin_amp"});
    Harmonic x;
    x.order = static_cast<int>(detail::to_long(detail::required(*h, "order"), "order"));
    x.cos_amp = h->get("cos_amp") ? detail::to_double(*h->get("cos_amp"), "cos_amp") : 0.0;
    x.sin_amp = h->get("sin_amp") ? detail::to_double(*h->get("sin_amp"), "sin_amp") : 0.0;
    harmonics.push_back(x);
  }
  const double a = detail::to_double(detail::required(s, "a"), "a");
  const double cross = s.get("cross") ? detail::to_double(*s.get("cross"), "cross") : 0.0;
  return GeneratingModel::fourier_potential(k, a, std::move(harmonics), cross);
}

inline GeneratingModel load_model(const std::filesystem::path& path) {
  return model_from_ini(parse_ini(read_text_file(path)));
}

struct FlatnessTarget {
  long p = 0;
  long q = 1;
  std::vector<double> T;
};

struct ProbeTarget {
  std::string name;
  std::vector<long> cf;
  double window = 0.05;
};

struct ScanConfig {
  GeneratingModel model = GeneratingModel::frenkel_kontorova(0.0);
  long Q_max = 16;
  int depth = 4;
  std::optional<std::pair<double, double>> c_range;  ///< default: [c+(0/1), c-(1/1)]
  std::pair<double, double> h_range{0.0, 1.0};
  std::vector<double> nu{0.5};
  std::vector<double> theta{0.5};
  std::vector<long> estimator_Q;  ///< default: the dyadic ladder without its top rung
  long denominator_cap = 1000;
  std::size_t staircase_samples = 2001;
  double ac_span = 0.03;
  std::vector<FlatnessTarget> flatness;
  std::vector<ProbeTarget> probes;
  int workers = 1;
  unsigned long long seed = 0;
  std::string cache_dir;
  std::string output_dir = "out";
};

/// Q ladder 4, 8, 16, ... up to and including Q_max (Q_max itself closes the ladder).
inline std::vector<long> dyadic_ladder(long Q_max) {
  std::vector<long> out;
  for (long Q = 4; Q < Q_max; Q *= 2) out.push_back(Q);
  out.push_back(Q_max);
  return out;
}

inline ScanConfig scan_config_from_ini(const IniDocument& doc) {
  ScanConfig cfg;
  cfg.model = model_from_ini(doc);
  for (const auto& s : doc.sections) {
    if (s.name != "model" && s.name != "harmonic" && s.name != "scan" && s.name != "flatness" &&
        s.name != "probe") {
      detail::config_error("line " + std::to_string(s.line) + ": unknown section [" + s.name + "]");
    }
  }
  const auto scans = doc.all("scan");
  if (scans.size() > 1) detail::config_error("more than one [scan] section");
  if (!scans.empty()) {
    const auto& s = *scans.front();
    detail::require_keys(s, {"Q_max", "depth", "c_range", "h_range", "nu", "theta", "estimator_Q",
                             "denominator_cap", "staircase_samples", "ac_span", "workers", "seed",
                             "cache_dir", "output_dir"});
    if (auto v = s.get("Q_max")) cfg.Q_max = detail::to_long(*v, "Q_max");
    if (auto v = s.get("depth")) cfg.depth = static_cast<int>(detail::to_long(*v, "depth"));
    for (const char* key : {"c_range", "h_range"}) {
      if (auto v = s.get(key)) {
        const auto r = detail::to_doubles(*v, key);
        if (r.size() != 2 || !(r[0] < r[1])) {
          detail::config_error(std::string(key) + " must be two increasing numbers");
        }
        if (std::string(key) == "c_range") cfg.c_range = {r[0], r[1]};
        else cfg.h_range = {r[0], r[1]};
      }
    }
    if (auto v = s.get("nu")) cfg.nu = detail::to_doubles(*v, "nu");
    if (auto v = s.get("theta")) cfg.theta = detail::to_doubles(*v, "theta");
    if (auto v = s.get("estimator_Q")) cfg.estimator_Q = detail::to_longs(*v, "estimator_Q");
    if (auto v = s.get("denominator_cap")) cfg.denominator_cap = detail::to_long(*v, "denominator_cap");
    if (auto v = s.get("staircase_samples")) {
      cfg.staircase_samples = static_cast<std::size_t>(detail::to_long(*v, "staircase_samples"));
    }
    if (auto v = s.get("ac_span")) cfg.ac_span = detail::to_double(*v, "ac_span");
    if (auto v = s.get("workers")) cfg.workers = static_cast<int>(detail::to_long(*v, "workers"));
    if (auto v = s.get("seed")) cfg.seed = static_cast<unsigned long long>(detail::to_long(*v, "seed"));
    if (auto v = s.get("cache_dir")) cfg.cache_dir = *v;
    if (auto v = s.get("output_dir")) cfg.output_dir = *v;
  }
  for (const auto* s : doc.all("flatness")) {
    detail::require_keys(*s, {"p", "q", "T"});
    FlatnessTarget t;
    t.p = detail::to_long(detail::required(*s, "p"), "p");
    t.q = detail::to_long(detail::required(*s, "q"), "q");
    if (auto v = s->get("T")) t.T = detail::to_doubles(*v, "T");
    cfg.flatness.push_back(std::move(t));
  }
  for (const auto* s : doc.all("probe")) {
    detail::require_keys(*s, {"name", "cf", "window"});
    ProbeTarget t;
    t.name = s->get("name").value_or("probe");
    const std::string cf = detail::required(*s, "cf");
    t.cf = cf == "golden" ? golden_cf() : detail::to_longs(cf, "cf");
    if (auto v = s->get("window")) t.window = detail::to_double(*v, "window");
    cfg.probes.push_back(std::move(t));
  }

  if (cfg.Q_max < 1) detail::config_error("Q_max must be >= 1");
  if (cfg.depth < 1) detail::config_error("depth must be >= 1");
  if (cfg.workers < 1) detail::config_error("workers must be >= 1");
  if (cfg.staircase_samples < 2) detail::config_error("staircase_samples must be >= 2");
  if (cfg.h_range.first < 0.0 || cfg.h_range.second > 1.0) {
    detail::config_error("h_range must lie in [0, 1]");
  }
  for (double v : cfg.nu) {
    if (!(v > 0.0 && v < 1.0)) detail::config_error("nu must lie in (0, 1)");
  }
  for (double v : cfg.theta) {
    if (!(v > 0.0 && v <= 1.0)) detail::config_error("theta must lie in (0, 1]");
  }
  for (long Q : cfg.estimator_Q) {
    if (Q < 1) detail::config_error("estimator_Q entries must be >= 1");
  }
  for (const auto& t : cfg.flatness) {
    if (t.q < 1 || std::gcd(t.p, t.q) != 1) detail::config_error("flatness target must be a reduced p/q");
  }
  for (const auto& t : cfg.probes) {
    if (t.cf.size() < 3) detail::config_error("probe '" + t.name + "' needs at least three partial quotients");
    if (!(t.window > 0.0)) detail::config_error("probe window must be positive");
  }
  return cfg;
}

inline ScanConfig load_scan_config(const std::filesystem::path& path) {
  return scan_config_from_ini(parse_ini(read_text_file(path)));
}

}  // namespace staircase_lab
