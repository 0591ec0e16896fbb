#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace thc::detail {

// Row i: lower[i] * x[i-1] + diag[i] * x[i] + upper[i] * x[i+1].
// lower[0] and upper[n-1] are ignored.
struct Tridiagonal {
  std::vector<double> lower, diag, upper;

  explicit Tridiagonal(std::size_t n) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}

  std::size_t size() const { return diag.size(); }

  Tridiagonal transposed() const {
    Tridiagonal t(size());
    t.diag = diag;
    for (std::size_t i = 0; i + 1 < size(); ++i) {
      t.upper[i] = lower[i + 1];
      t.lower[i + 1] = upper[i];
    }
    return t;
  }

  /// identity + scale * this
  Tridiagonal shifted_identity(double scale) const {
    Tridiagonal t(size());
    for (std::size_t i = 0; i < size(); ++i) {
      t.lower[i] = scale * lower[i];
      t.diag[i] = 1.0 + scale * diag[i];
      t.upper[i] = scale * upper[i];
    }
    return t;
  }

  void multiply(std::span<const double> x, std::span<double> out) const {
    const std::size_t n = size();
    if (n == 1) {
      out[0] = diag[0] * x[0];
      return;
    }
    out[0] = diag[0] * x[0] + upper[0] * x[1];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      out[i] = lower[i] * x[i - 1] + diag[i] * x[i] + upper[i] * x[i + 1];
    }
    out[n - 1] = lower[n - 1] * x[n - 2] + diag[n - 1] * x[n - 1];
  }
};

// Thomas algorithm with the forward sweep factored once.
class ThomasSolver {
 public:
  explicit ThomasSolver(const Tridiagonal& m)
      : lower_(m.lower), inv_pivot_(m.size()), upper_(m.size()) {
    const std::size_t n = m.size();
    double pivot = m.diag[0];
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) pivot = m.diag[i] - m.lower[i] * upper_[i - 1];
      if (pivot == 0.0) throw std::runtime_error("singular tridiagonal system");
      inv_pivot_[i] = 1.0 / pivot;
      upper_[i] = i + 1 < n ? m.upper[i] * inv_pivot_[i] : 0.0;
    }
  }

  /// Solves in place.
  void solve(std::span<double> x) const {
    const std::size_t n = inv_pivot_.size();
    x[0] *= inv_pivot_[0];
    for (std::size_t i = 1; i < n; ++i) x[i] = (x[i] - lower_[i] * x[i - 1]) * inv_pivot_[i];
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= upper_[i] * x[i + 1];
  }

 private:
  std::vector<double> lower_;
  std::vector<double> inv_pivot_;
  std::vector<double> upper_;
};

}  // namespace thc::detail
