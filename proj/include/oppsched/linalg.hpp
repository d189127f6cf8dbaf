#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace oppsched {

// Solves A x = b for a dense row-major n-by-n matrix by Gaussian elimination
// with partial pivoting. Returns nullopt when the matrix is singular to
// working precision. A and b are taken by value; the systems solved here are
// tiny (chain states, user counts).
inline std::optional<std::vector<double>> solve_linear(
    std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  if (a.size() != n * n) return std::nullopt;

  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return std::nullopt;
  const double tol = 1e-13 * scale;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (std::abs(a[piv * n + col]) <= tol) return std::nullopt;
    if (piv != col) {
      for (std::size_t c = col; c < n; ++c)
        std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    const double inv = 1.0 / a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a[r * n + col] * inv;
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= factor * a[col * n + c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i * n + c] * x[c];
    x[i] = s / a[i * n + i];
  }
  return x;
}

}  // namespace oppsched
