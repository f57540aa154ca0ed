#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "staircase_lab/cache.hpp"
#include "staircase_lab/errors.hpp"
#include "staircase_lab/flatness.hpp"
#include "staircase_lab/model.hpp"
#include "staircase_lab/staircase.hpp"

namespace staircase_lab {

struct EstimatorRow {
  std::string kind;  ///< completeness | variation | hausdorff
  std::optional<double> nu;
  std::optional<double> theta;
  long Q = 0;
  double value = 0.0;
};

struct Failure {
  std::string stage;
  std::string target;
  std::string kind;
  std::string message;
};

struct ProbeResult {
  std::string name;
  ConvexityProbe convexity;
  std::optional<AcPartProbe> ac;
};

/// Everything a scan produces; exported as CSV tables plus report.json.
struct ReportBundle {
  std::string model_canonical;
  std::string model_hash;
  std::string config_digest;
  std::map<Fraction, BetaEntry> beta;
  std::vector<LockingInterval> locking;
  std::vector<std::pair<double, double>> staircase;  ///< (c, d_alpha)
  std::vector<EstimatorRow> estimators;
  std::vector<FlatnessCurve> flatness;
  std::vector<ProbeResult> probes;
  std::optional<std::pair<double, double>> c_range;
  std::vector<Failure> failures;
};

namespace detail {

inline std::string csv_num(double v) { return std::isfinite(v) ? format_g17(v) : std::string{}; }
inline std::string csv_num(const std::optional<double>& v) { return v ? csv_num(*v) : std::string{}; }

/// Serializer with every double at 17 significant digits and non-finite values as null.
inline void write_json(std::ostream& out, const nlohmann::json& j, int indent, int level) {
  const std::string pad(static_cast<std::size_t>(indent * (level + 1)), ' ');
  const std::string end_pad(static_cast<std::size_t>(indent * level), ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out << ",\n";
        first = false;
        out << pad << nlohmann::json(it.key()).dump() << ": ";
        write_json(out, it.value(), indent, level + 1);
      }
      out << "\n" << end_pad << "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      out << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out << ",\n";
        out << pad;
        write_json(out, j[i], indent, level + 1);
      }
      out << "\n" << end_pad << "]";
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double v = j.get<double>();
      out << (std::isfinite(v) ? format_g17(v) : std::string("null"));
      return;
    }
    default:
      out << j.dump();
  }
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out.flush()) throw Error(ErrorKind::IoError, "cannot write " + path.string());
}

inline nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

inline std::string dump_json(const nlohmann::json& j) {
  std::ostringstream s;
  detail::write_json(s, j, 2, 0);
  s << "\n";
  return s.str();
}

inline std::string beta_csv(const ReportBundle& b) {
  std::string s = "p,q,rho,beta,c_minus,c_plus,bracket_width\n";
  for (const auto& [f, e] : b.beta) {
    const bool has = e.c_minus.has_value();
    s += std::to_string(f.p) + "," + std::to_string(f.q) + "," + detail::csv_num(f.value()) + "," +
         detail::csv_num(e.beta) + "," + detail::csv_num(e.c_minus) + "," + detail::csv_num(e.c_plus) + "," +
         (has ? detail::csv_num(e.bracket_width) : std::string{}) + "\n";
  }
  return s;
}

inline std::string locking_csv(const ReportBundle& b) {
  std::string s = "p,q,c_minus,c_plus,width\n";
  for (const auto& i : b.locking) {
    s += std::to_string(i.f.p) + "," + std::to_string(i.f.q) + "," + detail::csv_num(i.c_minus) + "," +
         detail::csv_num(i.c_plus) + "," + detail::csv_num(i.width()) + "\n";
  }
  return s;
}

inline std::string staircase_csv(const ReportBundle& b) {
  std::string s = "c,d_alpha\n";
  for (const auto& [c, r] : b.staircase) s += detail::csv_num(c) + "," + detail::csv_num(r) + "\n";
  return s;
}

inline std::string estimators_csv(const ReportBundle& b) {
  std::string s = "kind,nu,theta,Q,value\n";
  for (const auto& e : b.estimators) {
    s += e.kind + "," + detail::csv_num(e.nu) + "," + detail::csv_num(e.theta) + "," + std::to_string(e.Q) +
         "," + detail::csv_num(e.value) + "\n";
  }
  return s;
}

inline std::string flatness_csv(const FlatnessCurve& c) {
  std::string s = "T,delta,u,zeta_upper,bound_value\n";
  for (const auto& x : c.samples) {
    s += detail::csv_num(x.T) + "," + detail::csv_num(x.delta) + "," + detail::csv_num(x.u) + "," +
         detail::csv_num(x.zeta_upper) + "," + detail::csv_num(x.bound_value) + "\n";
  }
  return s;
}

inline nlohmann::json flatness_json(const FlatnessCurve& c) {
  return {{"p", c.p},
          {"q", c.q},
          {"c_plus", c.c_plus},
          {"C_fit", c.C_fit},
          {"lambda_fit", c.lambda_fit},
          {"lambda_monodromy", c.lambda_monodromy},
          {"verdict", c.verdict},
          {"fit", to_string(c.kind)},
          {"poly_exponent", c.poly_exponent},
          {"C_holdout", c.C_holdout}};
}

inline nlohmann::json report_json(const ReportBundle& b) {
  nlohmann::json results;
  results["beta_samples"] = b.beta.size();
  results["locking_intervals"] = b.locking.size();
  if (b.c_range) results["c_range"] = {b.c_range->first, b.c_range->second};
  nlohmann::json L = nlohmann::json::array(), est = nlohmann::json::array();
  for (const auto& e : b.estimators) {
    nlohmann::json row = {{"kind", e.kind}, {"nu", detail::opt_json(e.nu)},
                          {"theta", detail::opt_json(e.theta)}, {"Q", e.Q}, {"value", e.value}};
    (e.kind == "completeness" ? L : est).push_back(std::move(row));
  }
  results["completeness"] = L;
  results["estimators"] = est;
  nlohmann::json fl = nlohmann::json::array();
  for (const auto& c : b.flatness) fl.push_back(flatness_json(c));
  results["flatness"] = fl;
  nlohmann::json pr = nlohmann::json::array();
  for (const auto& p : b.probes) {
    nlohmann::json row = {{"name", p.name},
                          {"h", p.convexity.h},
                          {"c_low", p.convexity.c_low},
                          {"C_high", p.convexity.C_high},
                          {"beta_h", p.convexity.beta_h},
                          {"slope_h", p.convexity.slope_h},
                          {"samples", p.convexity.samples.size()}};
    if (p.ac) {
      row["ac_measure"] = p.ac->measure;
      row["ac_lipschitz"] = p.ac->lipschitz;
    }
    pr.push_back(std::move(row));
  }
  results["probes"] = pr;
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : b.failures) {
    fails.push_back({{"stage", f.stage}, {"target", f.target}, {"kind", f.kind}, {"message", f.message}});
  }
  results["failures"] = fails;
  return {{"tool_version", kToolVersion},
          {"model", {{"canonical", b.model_canonical}, {"hash", b.model_hash}}},
          {"config_digest", b.config_digest},
          {"results", results}};
}

/// Writes beta.csv, locking.csv, staircase.csv, estimators.csv, flatness_<p>_<q>.csv
/// and report.json into `dir`.
inline std::vector<std::filesystem::path> export_bundle(const ReportBundle& b, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string());
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& text) {
    detail::write_file(dir / name, text);
    written.push_back(dir / name);
  };
  put("beta.csv", beta_csv(b));
  put("locking.csv", locking_csv(b));
  put("staircase.csv", staircase_csv(b));
  put("estimators.csv", estimators_csv(b));
  for (const auto& c : b.flatness) {
    put("flatness_" + std::to_string(c.p) + "_" + std::to_string(c.q) + ".csv", flatness_csv(c));
  }
  put("report.json", dump_json(report_json(b)));
  return written;
}

}  // namespace staircase_lab
