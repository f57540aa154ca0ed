#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "staircase_lab/errors.hpp"

namespace staircase_lab {

/// Reduced fraction p/q with q > 0, ordered by value.
struct Fraction {
  long p = 0;
  long q = 1;

  static Fraction reduced(long p, long q) {
    if (q == 0) throw Error(ErrorKind::ConfigError, "zero denominator");
    if (q < 0) { p = -p; q = -q; }
    const long g = std::gcd(p, q);
    return {p / g, q / g};
  }

  double value() const { return static_cast<double>(p) / static_cast<double>(q); }
  std::string str() const { return std::to_string(p) + "/" + std::to_string(q); }

  friend bool operator<(const Fraction& a, const Fraction& b) {
    return static_cast<__int128>(a.p) * b.q < static_cast<__int128>(b.p) * a.q;
  }
  friend bool operator==(const Fraction& a, const Fraction& b) { return a.p == b.p && a.q == b.q; }
  friend bool operator!=(const Fraction& a, const Fraction& b) { return !(a == b); }
};

inline Fraction mediant(const Fraction& a, const Fraction& b) { return {a.p + b.p, a.q + b.q}; }

inline bool farey_adjacent(const Fraction& a, const Fraction& b) {
  const __int128 d = static_cast<__int128>(a.p) * b.q - static_cast<__int128>(b.p) * a.q;
  return d == 1 || d == -1;
}

/// Reduced fractions with denominator <= Q in [lo, hi], ascending.
inline std::vector<Fraction> farey_enumerate(long Q, double lo, double hi) {
  if (Q < 1) throw Error(ErrorKind::ConfigError, "Farey order must be >= 1");
  if (!(lo < hi)) throw Error(ErrorKind::ConfigError, "empty homology range");
  std::vector<Fraction> out;
  for (long q = 1; q <= Q; ++q) {
    const long first = static_cast<long>(std::ceil(lo * static_cast<double>(q) - 1e-12));
    const long last = static_cast<long>(std::floor(hi * static_cast<double>(q) + 1e-12));
    for (long p = first; p <= last; ++p) {
      if (std::gcd(p, q) == 1) out.push_back({p, q});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline long mod_inverse(long a, long m) {
  long r0 = m, r1 = ((a % m) + m) % m, t0 = 0, t1 = 1;
  while (r1 != 0) {
    const long k = r0 / r1;
    std::tie(r0, r1) = std::make_pair(r1, r0 - k * r1);
    std::tie(t0, t1) = std::make_pair(t1, t0 - k * t1);
  }
  return ((t0 % m) + m) % m;
}

/// Neighbours of p/q in the Farey sequence of order Q >= q.
inline std::pair<Fraction, Fraction> farey_neighbors(const Fraction& f, long Q) {
  if (Q < f.q) throw Error(ErrorKind::ConfigError, "Farey order below denominator of " + f.str());
  // left a/b: p b - a q = 1; right c/d: c q - d p = 1; largest admissible denominators
  const long inv = f.q == 1 ? 0 : mod_inverse(f.p, f.q);
  const long b0 = inv;
  const long d0 = f.q == 1 ? 0 : (f.q - inv) % f.q;
  const long b = b0 + ((Q - b0) / f.q) * f.q;
  const long d = d0 + ((Q - d0) / f.q) * f.q;
  const long a = static_cast<long>((static_cast<__int128>(f.p) * b - 1) / f.q);
  const long c = static_cast<long>((static_cast<__int128>(f.p) * d + 1) / f.q);
  return {Fraction{a, b}, Fraction{c, d}};
}

/// Closest fractions below and above x with denominator <= N (equal when x is one of them).
inline std::pair<Fraction, Fraction> farey_bracket(double x, long N) {
  if (N < 1) throw Error(ErrorKind::ConfigError, "denominator cap must be >= 1");
  const long n = static_cast<long>(std::floor(x));
  Fraction lo{n, 1}, hi{n + 1, 1};
  if (static_cast<double>(n) == x) return {lo, lo};
  // Stern-Brocot descent with batched steps.
  while (true) {
    const Fraction m = mediant(lo, hi);
    if (m.q > N) break;
    const double mv = m.value();
    if (mv == x) return {m, m};
    if (mv < x) {
      // advance lo toward hi as far as stays below x
      long k = 1;
      if (x * static_cast<double>(hi.q) - static_cast<double>(hi.p) != 0.0) {
        const double t = (static_cast<double>(lo.p) - x * static_cast<double>(lo.q)) /
                         (x * static_cast<double>(hi.q) - static_cast<double>(hi.p));
        k = std::max<long>(1, static_cast<long>(std::floor(t)));
      }
      k = std::min(k, (N - lo.q) / hi.q);
      Fraction cand{lo.p + k * hi.p, lo.q + k * hi.q};
      while (k > 1 && !(cand.value() < x)) { --k; cand = {lo.p + k * hi.p, lo.q + k * hi.q}; }
      lo = cand;
    } else {
      long k = 1;
      if (static_cast<double>(lo.p) - x * static_cast<double>(lo.q) != 0.0) {
        const double t = (x * static_cast<double>(hi.q) - static_cast<double>(hi.p)) /
                         (static_cast<double>(lo.p) - x * static_cast<double>(lo.q));
        k = std::max<long>(1, static_cast<long>(std::floor(t)));
      }
      k = std::min(k, (N - hi.q) / lo.q);
      Fraction cand{hi.p + k * lo.p, hi.q + k * lo.q};
      while (k > 1 && !(cand.value() > x)) { --k; cand = {hi.p + k * lo.p, hi.q + k * lo.q}; }
      hi = cand;
    }
  }
  return {lo, hi};
}

inline std::vector<long> continued_fraction(double x, int max_terms = 40) {
  std::vector<long> out;
  for (int i = 0; i < max_terms; ++i) {
    double a = std::floor(x);
    if (x - a > 1.0 - 1e-9) a += 1.0;  // 1.9999999 is 2 up to rounding
    out.push_back(static_cast<long>(a));
    const double frac = x - a;
    if (std::abs(frac) < 1e-9) break;
    x = 1.0 / frac;
    if (x > 1e12) break;
  }
  return out;
}

/// Convergents of [a0; a1, a2, ...].
inline std::vector<Fraction> convergents(const std::vector<long>& cf) {
  std::vector<Fraction> out;
  long p0 = 1, q0 = 0, p1 = 0, q1 = 1;
  for (long a : cf) {
    const long p2 = a * p0 + p1;
    const long q2 = a * q0 + q1;
    out.push_back({p2, q2});
    p1 = p0; q1 = q0;
    p0 = p2; q0 = q2;
  }
  return out;
}

inline double cf_value(const std::vector<long>& cf) {
  if (cf.empty()) throw Error(ErrorKind::ConfigError, "empty continued fraction");
  double x = static_cast<double>(cf.back());
  for (auto it = cf.rbegin() + 1; it != cf.rend(); ++it) x = static_cast<double>(*it) + 1.0 / x;
  return x;
}

/// [0; 1, 1, 1, ...] truncated to n partial quotients after the integer part.
inline std::vector<long> golden_cf(int n = 40) {
  std::vector<long> cf{0};
  cf.insert(cf.end(), static_cast<std::size_t>(n), 1L);
  return cf;
}

}  // namespace staircase_lab
