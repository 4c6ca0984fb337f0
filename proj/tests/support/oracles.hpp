#pragma once

// Independent reference computations shared by the unit and acceptance
// tests. Nothing here calls into the library's numerics; each function is a
// deliberately naive evaluation of the quantity it names.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace oracle {

/// Mass at values <= x.
inline double step_cdf(const std::vector<double>& values, const std::vector<double>& weights, double x) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    den += weights[i];
    if (values[i] <= x) num += weights[i];
  }
  return num / den;
}

inline std::vector<double> ones(std::size_t n) { return std::vector<double>(n, 1.0); }

/// Breakpoints of two step functions on [0, 1], with 0 and 1 added.
inline std::vector<double> breakpoints(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> x{0.0, 1.0};
  x.insert(x.end(), a.begin(), a.end());
  x.insert(x.end(), b.begin(), b.end());
  std::sort(x.begin(), x.end());
  x.erase(std::unique(x.begin(), x.end()), x.end());
  return x;
}

/// Integral over [0, 1] of (F - H)^2, evaluating both step cdfs at the left
/// end of every piece between breakpoints.
inline double isd(const std::vector<double>& f_values, const std::vector<double>& f_weights,
                  const std::vector<double>& h_values, const std::vector<double>& h_weights) {
  const auto x = breakpoints(f_values, h_values);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double d = step_cdf(f_values, f_weights, x[i]) - step_cdf(h_values, h_weights, x[i]);
    total += (x[i + 1] - x[i]) * d * d;
  }
  return total;
}

/// sup |F - H| over all breakpoints.
inline double ks(const std::vector<double>& f_values, const std::vector<double>& f_weights,
                 const std::vector<double>& h_values, const std::vector<double>& h_weights) {
  double best = 0.0;
  for (double x : breakpoints(f_values, h_values)) {
    best = std::max(best, std::abs(step_cdf(f_values, f_weights, x) - step_cdf(h_values, h_weights, x)));
  }
  return best;
}

/// Solves A x = b by Gaussian elimination with partial pivoting. Returns
/// false when A is numerically singular.
inline bool solve(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[pivot][c])) pivot = r;
    }
    if (std::abs(a[pivot][c]) < 1e-14) return false;
    std::swap(a[c], a[pivot]);
    std::swap(b[c], b[pivot]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t c = n; c-- > 0;) {
    double s = b[c];
    for (std::size_t k = c + 1; k < n; ++k) s -= a[c][k] * x[k];
    x[c] = s / a[c][c];
  }
  return true;
}

/// Exact minimiser of ISD(map, weighted sims) over the probability simplex.
///
/// ISD(w) = const - 2 c.w + w' Q w with Q_jk = 1 - max(p_j, p_k) and
/// c_j = integral of F over [p_j, 1]. The problem is a convex QP; every
/// support set is tried, the equality-constrained KKT system solved, and the
/// best feasible point kept. Only suitable for a handful of simulations.
inline std::vector<double> simplex_isd_minimiser(const std::vector<double>& map, const std::vector<double>& sims) {
  const std::size_t j = sims.size();
  const auto mw = ones(map.size());
  std::vector<double> c(j);
  for (std::size_t a = 0; a < j; ++a) {
    auto x = breakpoints(map, {sims[a]});
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      if (x[i] >= sims[a]) integral += (x[i + 1] - x[i]) * step_cdf(map, mw, x[i]);
    }
    c[a] = integral;
  }
  auto q = [&](std::size_t a, std::size_t b) { return 1.0 - std::max(sims[a], sims[b]); };
  auto objective = [&](const std::vector<double>& w) {
    double v = 0.0;
    for (std::size_t a = 0; a < j; ++a) {
      v -= 2.0 * c[a] * w[a];
      for (std::size_t b = 0; b < j; ++b) v += w[a] * w[b] * q(a, b);
    }
    return v;
  };

  std::vector<double> best;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 1; mask < (std::size_t{1} << j); ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t a = 0; a < j; ++a) {
      if (mask & (std::size_t{1} << a)) s.push_back(a);
    }
    // KKT: 2 Q_ss w_s - lambda 1 = 2 c_s, 1' w_s = 1.
    const std::size_t n = s.size() + 1;
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    std::vector<double> b(n, 0.0);
    for (std::size_t r = 0; r < s.size(); ++r) {
      for (std::size_t k = 0; k < s.size(); ++k) a[r][k] = 2.0 * q(s[r], s[k]);
      a[r][s.size()] = -1.0;
      b[r] = 2.0 * c[s[r]];
      a[s.size()][r] = 1.0;
    }
    b[s.size()] = 1.0;
    std::vector<double> x;
    if (!solve(a, b, x)) continue;
    std::vector<double> w(j, 0.0);
    bool feasible = true;
    for (std::size_t r = 0; r < s.size(); ++r) {
      if (x[r] < -1e-12) feasible = false;
      w[s[r]] = std::max(0.0, x[r]);
    }
    if (!feasible) continue;
    const double v = objective(w);
    if (v < best_value) {
      best_value = v;
      best = w;
    }
  }
  return best;
}

/// Smallest value whose weighted cdf reaches q, found by evaluating the cdf
/// at every candidate. Cdf levels within 1e-12 of q (relative to the total
/// weight) count as reaching it, matching the library's stated convention.
inline double weighted_quantile(const std::vector<double>& values, const std::vector<double>& weights, double q) {
  double total = 0.0;
  for (double w : weights) total += w;
  double answer = std::numeric_limits<double>::infinity();
  double largest = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    largest = std::max(largest, values[i]);
    double below = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (values[k] <= values[i]) below += weights[k];
    }
    if (below >= q * total - 1e-12 * total) answer = std::min(answer, values[i]);
  }
  return std::isinf(answer) ? largest : answer;
}

/// Composite Simpson rule on [a, b] with n (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace oracle
