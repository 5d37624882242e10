#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace urbanpulse {

// Bit i set when service i of the pipeline's service list contributed.
using ServiceMask = std::uint64_t;
inline constexpr std::size_t kMaxServices = 64;

struct ServiceLikelihood {
  std::size_t service = 0;
  double log_likelihood = 0.0;  // natural log, <= 0
};

// Product of per-service exceedance likelihoods, held as a natural log so
// that many small factors cannot underflow. Lower is rarer.
struct LikelihoodScore {
  double log_value = 0.0;
  ServiceMask services = 0;

  double value() const;
  int service_count() const;
};

// Sum of the present factors' logs. Returns nullopt when nothing contributed:
// absent services are skipped, never imputed as 1.
std::optional<LikelihoodScore> fuse_likelihoods(std::span<const ServiceLikelihood> factors);

// Same, from plain likelihood values (each in (0, 1]).
std::optional<LikelihoodScore> fuse_likelihood_values(std::span<const double> values);

// "call4g+sms4g" style label of a mask against the pipeline's service names.
std::string service_label(ServiceMask mask, const std::vector<std::string>& services);

}  // namespace urbanpulse
