#pragma once

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "json.hpp"

#include "staircase_lab/configuration.hpp"
#include "staircase_lab/errors.hpp"
#include "staircase_lab/model.hpp"

namespace staircase_lab {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kRecordVersion = 1;

struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t writes = 0;
  std::size_t quarantined = 0;
};

/// On-disk store of periodic minimizers keyed by (model hash, p, q). Records
/// are immutable JSON files written through a temp file and an atomic
/// no-overwrite link, so concurrent writers of one key leave exactly one record.
class BetaCache {
 public:
  explicit BetaCache(std::filesystem::path root) : root_(std::move(root)) {}

  /// Resolves the directory: explicit value, else STAIRCASE_LAB_CACHE, else empty (no cache).
  static std::string resolve_dir(const std::string& explicit_dir) {
    if (const char* env = std::getenv("STAIRCASE_LAB_CACHE"); env && *env) return env;
    return explicit_dir;
  }

  const std::filesystem::path& root() const { return root_; }

  std::filesystem::path path_for(const std::string& model_hash, long p, long q) const {
    return root_ / model_hash / (std::to_string(p) + "_" + std::to_string(q) + ".json");
  }

  static std::string checksum(const nlohmann::json& payload) { return fnv1a_hex(payload.dump()); }

  static nlohmann::json payload(const PeriodicConfiguration& c) {
    return {{"model_hash", c.model_hash},
            {"p", c.p},
            {"q", c.q},
            {"beta", c.beta()},
            {"action_total", c.action_total},
            {"residual_sup", c.residual_sup},
            {"is_certified_minimal", c.is_certified_minimal},
            {"positions", c.positions},
            {"tool_version", kToolVersion},
            {"record_version", kRecordVersion}};
  }

  /// Reads and validates a record. A damaged record is moved to quarantine/
  /// and reported as CorruptRecord.
  std::optional<PeriodicConfiguration> get(const std::string& model_hash, long p, long q) {
    const auto path = path_for(model_hash, p, q);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
      bump(&CacheStats::misses);
      return std::nullopt;
    }
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    nlohmann::json rec;
    std::string why;
    try {
      rec = nlohmann::json::parse(s.str());
      if (!rec.contains("payload") || !rec.contains("checksum")) why = "missing fields";
      else if (rec["checksum"].get<std::string>() != checksum(rec["payload"])) why = "checksum mismatch";
    } catch (const nlohmann::json::exception& e) {
      why = e.what();
    }
    if (why.empty()) {
      const auto& pl = rec["payload"];
      if (pl.value("record_version", 0) != kRecordVersion) {
        throw Error(ErrorKind::VersionConflict, path.string() + ": record version " +
                                                    std::to_string(pl.value("record_version", 0)));
      }
      if (pl["model_hash"] != model_hash || pl["p"] != p || pl["q"] != q) why = "key mismatch";
    }
    if (!why.empty()) {
      quarantine(path);
      throw Error(ErrorKind::CorruptRecord, path.string() + ": " + why);
    }
    const auto& pl = rec["payload"];
    PeriodicConfiguration c;
    c.p = p;
    c.q = q;
    c.model_hash = model_hash;
    c.positions = pl["positions"].get<std::vector<double>>();
    c.action_total = pl["action_total"].get<double>();
    c.residual_sup = pl["residual_sup"].get<double>();
    c.is_certified_minimal = pl["is_certified_minimal"].get<bool>();
    bump(&CacheStats::hits);
    return c;
  }

  /// Stores a record unless one exists. An existing record whose values differ
  /// by more than 1e-12 is a VersionConflict.
  void put(const PeriodicConfiguration& c) {
    const auto path = path_for(c.model_hash, c.p, c.q);
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + path.parent_path().string());
    const nlohmann::json pl = payload(c);
    const nlohmann::json rec = {{"payload", pl}, {"checksum", checksum(pl)}};

    static std::atomic<unsigned long> counter{0};
    std::ostringstream name;
    name << path.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
         << "." << counter++;
    const auto tmp = path.parent_path() / name.str();
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << rec.dump();
      if (!out.flush()) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
    }
    std::filesystem::create_hard_link(tmp, path, ec);
    std::filesystem::remove(tmp);
    if (!ec) {
      bump(&CacheStats::writes);
      return;
    }
    std::optional<PeriodicConfiguration> old;
    try {
      old = get(c.model_hash, c.p, c.q);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::CorruptRecord) throw;
    }
    if (!old) {
      put(c);  // the damaged record was quarantined
      return;
    }
    if (!same(*old, c)) {
      throw Error(ErrorKind::VersionConflict, path.string() + ": stored record differs from the new result");
    }
  }

  CacheStats stats() const {
    std::lock_guard lock(mu_);
    return stats_;
  }

 private:
  void bump(std::size_t CacheStats::*field) {
    std::lock_guard lock(mu_);
    ++(stats_.*field);
  }

  static bool same(const PeriodicConfiguration& a, const PeriodicConfiguration& b) {
    if (a.positions.size() != b.positions.size()) return false;
    for (std::size_t i = 0; i < a.positions.size(); ++i) {
      if (std::abs(a.positions[i] - b.positions[i]) > 1e-12) return false;
    }
    return std::abs(a.action_total - b.action_total) <= 1e-12 * std::max(1.0, std::abs(a.action_total));
  }

  void quarantine(const std::filesystem::path& path) {
    std::error_code ec;
    const auto dir = root_ / "quarantine";
    std::filesystem::create_directories(dir, ec);
    auto target = dir / path.filename();
    for (int i = 1; std::filesystem::exists(target, ec); ++i) {
      target = dir / (path.filename().string() + "." + std::to_string(i));
    }
    std::filesystem::rename(path, target, ec);
    if (ec) std::filesystem::remove(path, ec);
    bump(&CacheStats::quarantined);
  }

  std::filesystem::path root_;
  mutable std::mutex mu_;
  CacheStats stats_;
};

}  // namespace staircase_lab
