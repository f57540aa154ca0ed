#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace staircase_lab {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Symmetric matrix of a ring of n sites: diag[i] on the diagonal and bond[i]
/// coupling site i to site (i+1) mod n. For n = 2 both bonds couple the same
/// pair; for n = 1 the single bond couples the site to itself (counted twice).
struct PeriodicTridiagonal {
  std::vector<double> diag;
  std::vector<double> bond;

  std::size_t size() const { return diag.size(); }

  Eigen::MatrixXd dense() const {
    const auto n = static_cast<Eigen::Index>(diag.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      a(i, i) += diag[static_cast<std::size_t>(i)];
      const Eigen::Index j = (i + 1) % n;
      const double b = bond[static_cast<std::size_t>(i)];
      if (i == j) {
        a(i, i) += 2.0 * b;
      } else {
        a(i, j) += b;
        a(j, i) += b;
      }
    }
    return a;
  }

  /// Solves (A + shift I) x = rhs by an O(n) LDL^T sweep. Returns nullopt when a
  /// pivot is not positive, i.e. A + shift I is not positive definite.
  std::optional<std::vector<double>> solve_spd(std::span<const double> rhs,
                                               double shift = 0.0) const {
    const std::size_t n = diag.size();
    std::vector<double> x(rhs.begin(), rhs.end());
    if (n == 1) {
      const double a = diag[0] + 2.0 * bond[0] + shift;
      if (!(a > 0.0)) return std::nullopt;
      x[0] /= a;
      return x;
    }
    if (n == 2) {
      const double a = diag[0] + shift, c = diag[1] + shift, b = bond[0] + bond[1];
      if (!(a > 0.0)) return std::nullopt;
      const double d = c - b * b / a;
      if (!(d > 0.0)) return std::nullopt;
      x[1] = (x[1] - b / a * x[0]) / d;
      x[0] = (x[0] - b * x[1]) / a;
      return x;
    }
    // Rows 0..n-2 form a tridiagonal block; column v couples them to row n-1.
    std::vector<double> piv(n - 1), v(n - 1, 0.0);
    v[0] = bond[n - 1];
    v[n - 2] += bond[n - 2];
    double dlast = diag[n - 1] + shift;
    double rlast = x[n - 1];
    double d = diag[0] + shift;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!(d > 0.0)) return std::nullopt;
      piv[i] = d;
      dlast -= v[i] * v[i] / d;
      rlast -= v[i] / d * x[i];
      if (i + 2 < n) {
        const double l = bond[i] / d;
        d = diag[i + 1] + shift - bond[i] * l;
        v[i + 1] -= l * v[i];
        x[i + 1] -= l * x[i];
      }
    }
    if (!(dlast > 0.0)) return std::nullopt;
    x[n - 1] = rlast / dlast;
    for (std::size_t ii = n - 1; ii-- > 0;) {
      double r = x[ii] - v[ii] * x[n - 1];
      if (ii + 2 < n) r -= bond[ii] * x[ii + 1];
      x[ii] = r / piv[ii];
    }
    return x;
  }

  std::vector<double> multiply(std::span<const double> y) const {
    const std::size_t n = diag.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] += diag[i] * y[i];
      const std::size_t j = (i + 1) % n;
      out[i] += bond[i] * y[j];
      out[j] += bond[i] * y[i];
    }
    return out;
  }
};

/// Open chain: diag[i], off[i] couples i and i+1 (off.size() == n-1).
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;

  std::optional<std::vector<double>> solve_spd(std::span<const double> rhs,
                                               double shift = 0.0) const {
    const std::size_t n = diag.size();
    std::vector<double> x(rhs.begin(), rhs.end());
    if (n == 0) return x;
    std::vector<double> piv(n);
    double d = diag[0] + shift;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(d > 0.0)) return std::nullopt;
      piv[i] = d;
      if (i + 1 < n) {
        const double l = off[i] / d;
        d = diag[i + 1] + shift - off[i] * l;
        x[i + 1] -= l * x[i];
      }
    }
    x[n - 1] /= piv[n - 1];
    for (std::size_t ii = n - 1; ii-- > 0;) x[ii] = (x[ii] - off[ii] * x[ii + 1]) / piv[ii];
    return x;
  }
};

/// Ascending eigenvalues of a symmetric dense matrix.
inline std::vector<double> symmetric_eigenvalues(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::vector<double>(ev.data(), ev.data() + ev.size());
}

}  // namespace staircase_lab
