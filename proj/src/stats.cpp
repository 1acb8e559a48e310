#include "glbg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

namespace glbg {

double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 16) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  std::size_t h = x.size() / 2;
  return pairwise_sum(x.subspan(0, h)) + pairwise_sum(x.subspan(h));
}

double order_free_sum(std::span<const double> x) {
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  return pairwise_sum(v);
}

MeanSE mean_se(std::span<const double> x) {
  MeanSE r;
  r.n = x.size();
  if (x.empty()) return r;
  r.mean = pairwise_sum(x) / static_cast<double>(x.size());
  if (x.size() < 2) return r;
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = (x[i] - r.mean) * (x[i] - r.mean);
  double var = pairwise_sum(d) / static_cast<double>(x.size() - 1);
  r.se = std::sqrt(var / static_cast<double>(x.size()));
  return r;
}

void RunningStats::add(double x) {
  ++n_;
  double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

double RunningStats::stderr_mean() const {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    f.slope_se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return f;
}

double ks_distance(std::vector<double> s, const std::function<double(double)>& cdf) {
  std::sort(s.begin(), s.end());
  double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double F = cdf(s[i]);
    d = std::max({d, F - i / n, (i + 1) / n - F});
  }
  return d;
}

double ks_distance_2(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0, na = a.size(), nb = b.size();
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(i / na - j / nb));
  }
  return d;
}

double integrated_autocorr(std::span<const double> x) {
  std::size_t n = x.size();
  if (n < 4) return 1.0;
  double m = pairwise_sum(x) / n;
  // autocovariance through a zero-padded FFT
  std::size_t L = 1;
  while (L < 2 * n) L <<= 1;
  std::vector<double> buf(L, 0.0);
  for (std::size_t i = 0; i < n; ++i) buf[i] = x[i] - m;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> F;
  fft.fwd(F, buf);
  for (auto& c : F) c = std::norm(c);
  std::vector<double> ac;
  fft.inv(ac, F);
  if (ac[0] <= 0) return 1.0;
  double tau = 1.0;
  for (std::size_t t = 1; t < n; ++t) {
    tau += 2.0 * ac[t] / ac[0];
    if (static_cast<double>(t) >= 5.0 * tau) break;
  }
  return std::max(tau, 1.0);
}

double bootstrap_se(std::span<const double> x,
                    const std::function<double(std::span<const double>)>& stat, int reps,
                    std::uint64_t seed) {
  if (x.size() < 2 || reps < 2) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  std::vector<double> sample(x.size()), stats(reps);
  for (int r = 0; r < reps; ++r) {
    for (auto& s : sample) s = x[pick(rng)];
    stats[r] = stat(sample);
  }
  return mean_se(stats).se * std::sqrt(static_cast<double>(reps));
}

}  // namespace glbg
