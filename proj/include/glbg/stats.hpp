#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace glbg {

// Pairwise summation: O(log n) error growth, deterministic for a given order.
double pairwise_sum(std::span<const double> x);
// Sorts a copy first, so the result does not depend on input order.
double order_free_sum(std::span<const double> x);

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};
MeanSE mean_se(std::span<const double> x);

// Welford running moments.
class RunningStats {
 public:
  void add(double x);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stderr_mean() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Kolmogorov distance between the empirical law of `samples` and `cdf`.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);
// Two-sample Kolmogorov distance.
double ks_distance_2(std::vector<double> a, std::vector<double> b);

// Integrated autocorrelation time with Sokal's adaptive window (c = 5).
double integrated_autocorr(std::span<const double> x);

// Bootstrap SE of stat(resample) with a fixed seed.
double bootstrap_se(std::span<const double> x,
                    const std::function<double(std::span<const double>)>& stat, int reps,
                    std::uint64_t seed);

}  // namespace glbg
