#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace urbanpulse {

struct DeviationModelParams {
  // Tail cut multiplier: theta = mean + h * stddev.
  double h = 2.32;
  std::size_t min_samples = 10080;
  // Below this many exceedances the tail is an exponential.
  std::size_t min_gamma_exceedances = 30;
  int max_mle_iterations = 50;
};

struct GammaFit {
  double shape = 1.0;
  double scale = 1.0;
  bool exponential_fallback = false;
  int mle_iterations = 0;
};

// Method-of-moments Gamma estimate refined by Newton iterations on the
// profile likelihood in the shape. `values` must be positive for the MLE
// step; zeros disable refinement and keep the moment estimate.
GammaFit fit_gamma(std::span<const double> values, int max_mle_iterations = 50);

// Survival of Gamma(shape, scale) at x >= 0, and its natural log computed
// without underflow for large x.
double gamma_survival(double x, double shape, double scale);
double gamma_log_survival(double x, double shape, double scale);

// Compound distribution of training deviations: the empirical survival below
// the tail cut theta, and p_tail times a Gamma survival fitted to the
// exceedances (eps - theta) at and above it.
class DeviationModel {
 public:
  DeviationModel() = default;

  // Throws InsufficientDataError below params.min_samples and
  // DegenerateModelError on zero variance.
  static DeviationModel fit(std::vector<double> sample, const DeviationModelParams& params = {});

  // Rebuilds a persisted model; `sorted_sample` must be ascending.
  static DeviationModel from_parts(std::vector<double> sorted_sample, double h, double theta,
                                   double p_tail, GammaFit tail);

  // Exceedance likelihood P[X >= eps], in (0, 1].
  double exceedance_likelihood(double eps) const;
  // Natural log of exceedance_likelihood, finite for every finite eps.
  double log_exceedance_likelihood(double eps) const;

  double mean() const { return mean_; }
  double stddev() const { return stddev_; }
  double h() const { return h_; }
  double threshold() const { return theta_; }
  double p_tail() const { return p_tail_; }
  const GammaFit& tail() const { return tail_; }
  std::size_t sample_size() const { return sorted_.size(); }
  std::size_t exceedance_count() const { return exceedances_; }
  std::span<const double> sorted_sample() const { return sorted_; }

 private:
  // count(sample >= eps) / n
  double empirical_survival(double eps) const;

  std::vector<double> sorted_;
  double mean_ = 0, stddev_ = 0, h_ = 2.32, theta_ = 0, p_tail_ = 0;
  std::size_t exceedances_ = 0;
  GammaFit tail_;
};

inline double exceedance_likelihood(const DeviationModel& model, double eps) {
  return model.exceedance_likelihood(eps);
}

}  // namespace urbanpulse
