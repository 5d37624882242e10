#include "urbanpulse/fusion.hpp"

#include <bit>
#include <cmath>

#include "urbanpulse/error.hpp"

namespace urbanpulse {

double LikelihoodScore::value() const { return std::exp(log_value); }

int LikelihoodScore::service_count() const { return std::popcount(services); }

std::optional<LikelihoodScore> fuse_likelihoods(std::span<const ServiceLikelihood> factors) {
  if (factors.empty()) return std::nullopt;
  LikelihoodScore score;
  for (const auto& f : factors) {
    if (f.service >= kMaxServices) throw ValidationError("service index exceeds fusion mask width");
    score.log_value += f.log_likelihood;
    score.services |= ServiceMask{1} << f.service;
  }
  return score;
}

std::optional<LikelihoodScore> fuse_likelihood_values(std::span<const double> values) {
  std::vector<ServiceLikelihood> factors;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0 && values[i] <= 1.0)) {
      throw ValidationError("likelihood factor outside (0, 1]");
    }
    factors.push_back({i, std::log(values[i])});
  }
  return fuse_likelihoods(factors);
}

std::string service_label(ServiceMask mask, const std::vector<std::string>& services) {
  std::string out;
  for (std::size_t i = 0; i < services.size() && i < kMaxServices; ++i) {
    if (!(mask & (ServiceMask{1} << i))) continue;
    if (!out.empty()) out += '+';
    out += services[i];
  }
  return out;
}

}  // namespace urbanpulse
