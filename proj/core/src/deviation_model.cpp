#include "urbanpulse/deviation_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "urbanpulse/error.hpp"

namespace urbanpulse {

GammaFit fit_gamma(std::span<const double> values, int max_mle_iterations) {
  if (values.empty()) throw InsufficientDataError("Gamma fit on an empty sample");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (const double v : values) var += (v - mean) * (v - mean);
  var /= n;
  GammaFit fit;
  if (!(mean > 0.0) || !(var > 0.0)) {
    // All exceedances equal: fall back to an exponential with that mean.
    fit.shape = 1.0;
    fit.scale = mean > 0.0 ? mean : 1.0;
    fit.exponential_fallback = true;
    return fit;
  }
  fit.shape = mean * mean / var;
  fit.scale = var / mean;

  const bool all_positive = std::all_of(values.begin(), values.end(), [](double v) { return v > 0; });
  if (!all_positive || max_mle_iterations <= 0) return fit;

  double mean_log = 0.0;
  for (const double v : values) mean_log += std::log(v);
  mean_log /= n;
  // Profile-likelihood equation in the shape: log a - digamma(a) = s.
  const double s = std::log(mean) - mean_log;
  if (!(s > 0.0)) return fit;
  double a = fit.shape;
  for (int it = 0; it < max_mle_iterations; ++it) {
    const double f = std::log(a) - boost::math::digamma(a) - s;
    const double df = 1.0 / a - boost::math::trigamma(a);
    double next = a - f / df;
    if (!(next > 0.0)) next = a / 2.0;
    fit.mle_iterations = it + 1;
    const bool converged = std::abs(next - a) <= 1e-12 * a;
    a = next;
    if (converged) break;
  }
  fit.shape = a;
  fit.scale = mean / a;
  return fit;
}

double gamma_log_survival(double x, double shape, double scale) {
  if (!(x > 0.0)) return 0.0;
  const double z = x / scale;
  const double q = boost::math::gamma_q(shape, z);
  if (q > 1e-290) return std::log(q);
  // Leading terms of the asymptotic expansion of the upper incomplete gamma.
  const double am1 = shape - 1.0;
  const double series = 1.0 + am1 / z + am1 * (shape - 2.0) / (z * z);
  return am1 * std::log(z) - z - boost::math::lgamma(shape) + std::log(std::max(series, 1e-300));
}

double gamma_survival(double x, double shape, double scale) {
  return std::exp(gamma_log_survival(x, shape, scale));
}

DeviationModel DeviationModel::fit(std::vector<double> sample, const DeviationModelParams& params) {
  if (sample.size() < std::max<std::size_t>(params.min_samples, 2)) {
    throw InsufficientDataError("deviation model needs " + std::to_string(params.min_samples) +
                                " samples, got " + std::to_string(sample.size()));
  }
  for (const double v : sample) {
    if (!std::isfinite(v)) throw ValidationError("non-finite deviation sample");
  }
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / n;
  double var = 0.0;
  for (const double v : sample) var += (v - mean) * (v - mean);
  var /= n;
  if (!(var > 0.0) || sample.front() == sample.back()) {
    throw DegenerateModelError("deviation sample has zero variance");
  }

  DeviationModel model;
  model.mean_ = mean;
  model.stddev_ = std::sqrt(var);
  model.h_ = params.h;
  model.theta_ = mean + params.h * model.stddev_;
  const auto first = std::lower_bound(sample.begin(), sample.end(), model.theta_);
  std::vector<double> exceed;
  for (auto it = first; it != sample.end(); ++it) exceed.push_back(*it - model.theta_);
  model.exceedances_ = exceed.size();

  if (exceed.empty()) {
    // Nothing reaches the cut; keep a half-count tail so likelihoods above
    // theta stay positive and continuous.
    model.p_tail_ = 0.5 / n;
    model.tail_ = GammaFit{1.0, model.stddev_, true, 0};
  } else {
    model.p_tail_ = static_cast<double>(exceed.size()) / n;
    if (exceed.size() < params.min_gamma_exceedances) {
      const double m = std::accumulate(exceed.begin(), exceed.end(), 0.0) /
                       static_cast<double>(exceed.size());
      model.tail_ = GammaFit{1.0, m > 0.0 ? m : model.stddev_, true, 0};
    } else {
      model.tail_ = fit_gamma(exceed, params.max_mle_iterations);
    }
  }
  model.sorted_ = std::move(sample);
  return model;
}

DeviationModel DeviationModel::from_parts(std::vector<double> sorted_sample, double h, double theta,
                                          double p_tail, GammaFit tail) {
  if (sorted_sample.empty()) throw ValidationError("deviation model without samples");
  if (!std::is_sorted(sorted_sample.begin(), sorted_sample.end())) {
    throw ValidationError("deviation sample is not sorted");
  }
  if (!(p_tail > 0.0 && p_tail <= 1.0) || !(tail.shape > 0.0) || !(tail.scale > 0.0) ||
      !std::isfinite(theta)) {
    throw ValidationError("invalid deviation model parameters");
  }
  DeviationModel model;
  const double n = static_cast<double>(sorted_sample.size());
  model.mean_ = std::accumulate(sorted_sample.begin(), sorted_sample.end(), 0.0) / n;
  double var = 0.0;
  for (const double v : sorted_sample) var += (v - model.mean_) * (v - model.mean_);
  model.stddev_ = std::sqrt(var / n);
  model.h_ = h;
  model.theta_ = theta;
  model.p_tail_ = p_tail;
  model.tail_ = tail;
  model.exceedances_ = static_cast<std::size_t>(
      sorted_sample.end() - std::lower_bound(sorted_sample.begin(), sorted_sample.end(), theta));
  model.sorted_ = std::move(sorted_sample);
  return model;
}

double DeviationModel::empirical_survival(double eps) const {
  const auto it = std::lower_bound(sorted_.begin(), sorted_.end(), eps);
  return static_cast<double>(sorted_.end() - it) / static_cast<double>(sorted_.size());
}

double DeviationModel::log_exceedance_likelihood(double eps) const {
  if (eps < theta_) return std::log(std::max(empirical_survival(eps), p_tail_));
  return std::log(p_tail_) + gamma_log_survival(eps - theta_, tail_.shape, tail_.scale);
}

double DeviationModel::exceedance_likelihood(double eps) const {
  return std::max(std::exp(log_exceedance_likelihood(eps)),
                  std::numeric_limits<double>::denorm_min());
}

}  // namespace urbanpulse
