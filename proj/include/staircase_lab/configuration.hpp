#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace staircase_lab {

/// A (p,q)-periodic configuration stored by its q base sites.
/// The lift convention is x_{i+q} = x_i + p for every integer i.
struct PeriodicConfiguration {
  long p = 0;
  long q = 1;
  std::vector<double> positions;
  double action_total = 0.0;
  double residual_sup = 0.0;
  std::string model_hash;
  bool is_certified_minimal = false;

  /// Lifted coordinate of site i (any integer, negative allowed).
  double at(long i) const {
    const long n = static_cast<long>(positions.size());
    long r = i % n;
    long wraps = i / n;
    if (r < 0) {
      r += n;
      wraps -= 1;
    }
    return positions[static_cast<std::size_t>(r)] + static_cast<double>(p * wraps);
  }

  double beta() const { return action_total / static_cast<double>(q); }

  /// Lift sequence x_first .. x_{first+count-1}.
  std::vector<double> window(long first, long count) const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) out.push_back(at(first + i));
    return out;
  }
};

}  // namespace staircase_lab
