#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dosps {

/// d_k = N^-1 ||a - a*||^2.
inline double divergence(const std::vector<double>& a, const std::vector<double>& a_star) {
  if (a.size() != a_star.size()) throw std::invalid_argument("divergence: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - a_star[i]) * (a[i] - a_star[i]);
  return s / static_cast<double>(a.size());
}

inline double spread(const std::vector<double>& a) {
  const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
  return *hi - *lo;
}

struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& v) {
  MeanStderr out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.std_error = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct SlopeFit {
  double slope = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares of log(value) on log(k) over points with k >= k_min.
inline SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& series, double k_min) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& [k, v] : series) {
    if (k < k_min) continue;
    if (!(v > 0.0) || !(k > 0.0)) throw std::invalid_argument("log-log fit needs positive k and values");
    x.push_back(std::log(k));
    y.push_back(std::log(v));
  }
  if (x.size() < 10) throw std::invalid_argument("log-log fit needs at least 10 points with k >= k_min");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("log-log fit needs distinct k values");
  SlopeFit f;
  f.points = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    rss += r * r;
  }
  f.std_error = std::sqrt(rss / (n - 2.0) / sxx);
  return f;
}

}  // namespace dosps
