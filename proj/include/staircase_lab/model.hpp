#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "staircase_lab/configuration.hpp"
#include "staircase_lab/errors.hpp"

namespace staircase_lab {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class Family { FrenkelKontorova, FourierPotential };

inline const char* to_string(Family f) {
  return f == Family::FrenkelKontorova ? "frenkel-kontorova" : "fourier-potential";
}

struct Harmonic {
  int order = 1;
  double cos_amp = 0.0;
  double sin_amp = 0.0;
};

struct Partials {
  double d1 = 0.0;
  double d2 = 0.0;
  double d11 = 0.0;
  double d12 = 0.0;
  double d22 = 0.0;
};

/// Renders a double with 17 significant digits (round-trip exact).
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// 64-bit FNV-1a digest rendered as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Twist generating function h(x,x') = a(x-x')^2 + V(x) + cross-coupling.
///
/// Frenkel-Kontorova: a = 1/2, V(x) = -k cos(2 pi x).
/// Fourier potential: V(x) = k * sum_n [c_n cos(2 pi n x) + s_n sin(2 pi n x)],
/// plus an optional cross term (g / 4pi^2) sin(2 pi x) sin(2 pi x') whose mixed
/// partial g cos(2 pi x) cos(2 pi x') can break the twist condition.
/// The standard-map constant is K = 4 pi^2 k.
class GeneratingModel {
 public:
  static GeneratingModel frenkel_kontorova(double k) {
    GeneratingModel m;
    m.family_ = Family::FrenkelKontorova;
    m.k_ = k;
    m.a_ = 0.5;
    m.validate();
    return m;
  }

  static GeneratingModel fourier_potential(double k, double a, std::vector<Harmonic> harmonics,
                                           double cross = 0.0) {
    GeneratingModel m;
    m.family_ = Family::FourierPotential;
    m.k_ = k;
    m.a_ = a;
    m.cross_ = cross;
    std::sort(harmonics.begin(), harmonics.end(),
              [](const Harmonic& l, const Harmonic& r) { return l.order < r.order; });
    m.harmonics_ = std::move(harmonics);
    m.validate();
    return m;
  }

  Family family() const { return family_; }
  double k() const { return k_; }
  double a() const { return a_; }
  double cross() const { return cross_; }
  const std::vector<Harmonic>& harmonics() const { return harmonics_; }

  /// Canonical serialization; the model hash digests exactly this string.
  std::string canonical() const {
    std::string s = "family=";
    s += to_string(family_);
    s += ";k=" + format_g17(k_) + ";a=" + format_g17(a_) + ";cross=" + format_g17(cross_);
    for (const auto& h : harmonics_) {
      s += ";h=" + std::to_string(h.order) + ":" + format_g17(h.cos_amp) + ":" +
           format_g17(h.sin_amp);
    }
    return s;
  }

  std::string hash() const { return fnv1a_hex(canonical()); }

  /// V, V', V'' of the on-site potential.
  void potential(double x, double& v, double& dv, double& ddv) const {
    if (family_ == Family::FrenkelKontorova) {
      const double c = std::cos(kTwoPi * x);
      const double s = std::sin(kTwoPi * x);
      v = -k_ * c;
      dv = k_ * kTwoPi * s;
      ddv = k_ * kTwoPi * kTwoPi * c;
      return;
    }
    v = dv = ddv = 0.0;
    for (const auto& h : harmonics_) {
      const double w = kTwoPi * h.order;
      const double c = std::cos(w * x);
      const double s = std::sin(w * x);
      v += h.cos_amp * c + h.sin_amp * s;
      dv += w * (-h.cos_amp * s + h.sin_amp * c);
      ddv += -w * w * (h.cos_amp * c + h.sin_amp * s);
    }
    v *= k_;
    dv *= k_;
    ddv *= k_;
  }

  /// V(x + d) - V(x) without cancellation for small d.
  double potential_delta(double x, double d) const {
    if (family_ == Family::FrenkelKontorova) {
      return k_ * 2.0 * std::sin(kTwoPi * x + 0.5 * kTwoPi * d) * std::sin(0.5 * kTwoPi * d);
    }
    double out = 0.0;
    for (const auto& h : harmonics_) {
      const double w = kTwoPi * h.order;
      const double half = std::sin(0.5 * w * d);
      const double mid = w * x + 0.5 * w * d;
      out += -2.0 * h.cos_amp * std::sin(mid) * half + 2.0 * h.sin_amp * std::cos(mid) * half;
    }
    return k_ * out;
  }

 private:
  void validate() const {
    if (!(a_ > 0.0) || !std::isfinite(a_)) throw Error(ErrorKind::ConfigError, "a must be > 0");
    if (!(k_ >= 0.0) || !std::isfinite(k_)) throw Error(ErrorKind::ConfigError, "k must be >= 0");
    if (!std::isfinite(cross_)) throw Error(ErrorKind::ConfigError, "cross must be finite");
    for (const auto& h : harmonics_) {
      if (h.order < 1) throw Error(ErrorKind::ConfigError, "harmonic order must be >= 1");
    }
  }

  Family family_ = Family::FrenkelKontorova;
  double k_ = 0.0;
  double a_ = 0.5;
  double cross_ = 0.0;
  std::vector<Harmonic> harmonics_;
};

inline double eval_h(const GeneratingModel& m, double x, double xp) {
  double v, dv, ddv;
  m.potential(x, v, dv, ddv);
  const double d = x - xp;
  double h = m.a() * d * d + v;
  if (m.cross() != 0.0) {
    h += m.cross() / (kTwoPi * kTwoPi) * std::sin(kTwoPi * x) * std::sin(kTwoPi * xp);
  }
  return h;
}

/// h(x + dx, xp + dxp) - h(x, xp), accurate relative to the displacements.
inline double eval_h_delta(const GeneratingModel& m, double x, double xp, double dx, double dxp) {
  const double dd = dx - dxp;
  double out = m.a() * dd * (2.0 * (x - xp) + dd) + m.potential_delta(x, dx);
  if (const double g = m.cross(); g != 0.0) {
    const double sx = std::sin(kTwoPi * x), sy = std::sin(kTwoPi * xp);
    const double ex = 2.0 * std::cos(kTwoPi * x + 0.5 * kTwoPi * dx) * std::sin(0.5 * kTwoPi * dx);
    const double ey = 2.0 * std::cos(kTwoPi * xp + 0.5 * kTwoPi * dxp) * std::sin(0.5 * kTwoPi * dxp);
    out += g / (kTwoPi * kTwoPi) * (ex * sy + sx * ey + ex * ey);
  }
  return out;
}

inline Partials partials(const GeneratingModel& m, double x, double xp) {
  double v, dv, ddv;
  m.potential(x, v, dv, ddv);
  const double a2 = 2.0 * m.a();
  Partials out;
  out.d1 = a2 * (x - xp) + dv;
  out.d2 = -a2 * (x - xp);
  out.d11 = a2 + ddv;
  out.d12 = -a2;
  out.d22 = a2;
  if (const double g = m.cross(); g != 0.0) {
    const double sx = std::sin(kTwoPi * x), cx = std::cos(kTwoPi * x);
    const double sy = std::sin(kTwoPi * xp), cy = std::cos(kTwoPi * xp);
    out.d1 += g / kTwoPi * cx * sy;
    out.d2 += g / kTwoPi * sx * cy;
    out.d11 += -g * sx * sy;
    out.d22 += -g * sx * sy;
    out.d12 += g * cx * cy;
  }
  return out;
}

/// Tightest b with d12 h <= -1/b over the n x n grid on [0,1)^2.
inline double check_twist(const GeneratingModel& m, int n = 256) {
  if (n < 2) throw Error(ErrorKind::ConfigError, "twist grid resolution must be >= 2");
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double x = static_cast<double>(i) / n;
      const double xp = static_cast<double>(j) / n;
      const double m12 = partials(m, x, xp).d12;
      if (m12 >= 0.0) {
        throw Error(ErrorKind::TwistViolated,
                    "d12 h = " + format_g17(m12) + " at (" + format_g17(x) + ", " +
                        format_g17(xp) + ")");
      }
      worst = std::max(worst, m12);
    }
  }
  return -1.0 / worst;
}

struct StandardMapState {
  double x = 0.0;      ///< lift
  double x_mod = 0.0;  ///< x reduced to [0, 2 pi)
  double y = 0.0;
};

/// (x, y) -> (x + y + k sin x, y + k sin x).
inline StandardMapState standard_map_step(double x, double y, double k) {
  const double kick = k * std::sin(x);
  StandardMapState s;
  s.y = y + kick;
  s.x = x + s.y;
  s.x_mod = std::fmod(s.x, kTwoPi);
  if (s.x_mod < 0) s.x_mod += kTwoPi;
  return s;
}

/// Euler-Lagrange residual d2h(x_{i-1},x_i) + d1h(x_i,x_{i+1}) for i = 0..q-1.
inline std::vector<double> el_residual(const GeneratingModel& m, const PeriodicConfiguration& c) {
  const long q = static_cast<long>(c.positions.size());
  std::vector<double> r(static_cast<std::size_t>(q));
  for (long i = 0; i < q; ++i) {
    const double xm = c.at(i - 1), x = c.at(i), xp = c.at(i + 1);
    r[static_cast<std::size_t>(i)] = partials(m, xm, x).d2 + partials(m, x, xp).d1;
  }
  return r;
}

inline double sup_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double e : v) s = std::max(s, std::abs(e));
  return s;
}

}  // namespace staircase_lab
