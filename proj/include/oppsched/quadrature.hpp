#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oppsched {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;   // estimated absolute error
  bool converged = false;
};

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK dqk15).
inline constexpr double kGk15Nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000};
inline constexpr double kGk15Weights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr double kGauss7Weights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

template <class F>
void gk15(F&& f, double a, double b, double& value, double& error) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(mid);
  double kronrod = kGk15Weights[7] * fc;
  double gauss = kGauss7Weights[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kGk15Nodes[i];
    const double fsum = f(mid - dx) + f(mid + dx);
    kronrod += kGk15Weights[i] * fsum;
    if (i % 2 == 1) gauss += kGauss7Weights[i / 2] * fsum;
  }
  value = kronrod * half;
  error = std::abs((kronrod - gauss) * half);
}

struct Interval {
  double a, b, value, error;
  bool operator<(const Interval& o) const { return error < o.error; }
};

}  // namespace detail

// Globally adaptive integration of f over [a, b]: the interval with the
// largest error estimate is bisected until the total estimate falls below
// abs_tol or the interval budget is exhausted (converged=false in that case).
template <class F>
QuadratureResult integrate(F&& f, double a, double b, double abs_tol,
                           int max_intervals = 2000) {
  QuadratureResult res;
  if (a == b) {
    res.converged = true;
    return res;
  }
  std::vector<detail::Interval> heap;
  double v, e;
  detail::gk15(f, a, b, v, e);
  heap.push_back({a, b, v, e});
  double total_v = v, total_e = e;
  while (total_e > abs_tol && static_cast<int>(heap.size()) < max_intervals) {
    std::pop_heap(heap.begin(), heap.end());
    detail::Interval worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // interval no longer splittable at double precision
      heap.push_back(worst);
      std::push_heap(heap.begin(), heap.end());
      break;
    }
    detail::Interval left{worst.a, mid, 0, 0}, right{mid, worst.b, 0, 0};
    detail::gk15(f, left.a, left.b, left.value, left.error);
    detail::gk15(f, right.a, right.b, right.value, right.error);
    total_v += left.value + right.value - worst.value;
    total_e += left.error + right.error - worst.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end());
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end());
  }
  // Recompute totals to avoid drift from incremental updates.
  total_v = 0;
  total_e = 0;
  for (const auto& iv : heap) {
    total_v += iv.value;
    total_e += iv.error;
  }
  res.value = total_v;
  res.error = total_e;
  res.converged = total_e <= abs_tol;
  return res;
}

// Integration with known interior break points (kinks of the integrand).
// Points outside (a, b) are ignored.
template <class F>
QuadratureResult integrate_segmented(F&& f, double a, double b,
                                     const std::vector<double>& breaks,
                                     double abs_tol, int max_intervals = 2000) {
  std::vector<double> edges;
  edges.push_back(a);
  for (double t : breaks)
    if (t > a && t < b) edges.push_back(t);
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  const double panel_tol =
      abs_tol / static_cast<double>(std::max<std::size_t>(edges.size() - 1, 1));
  QuadratureResult total;
  total.converged = true;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    QuadratureResult r = integrate(f, edges[i], edges[i + 1], panel_tol,
                                   max_intervals);
    total.value += r.value;
    total.error += r.error;
    total.converged = total.converged && r.converged;
  }
  total.converged = total.converged && total.error <= abs_tol;
  return total;
}

}  // namespace oppsched
