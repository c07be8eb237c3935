#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "vtc/features.hpp"

namespace vtc::cost {

enum class RouteVariant { standard, bounded };

RouteVariant parse_route_variant(std::string_view name);  // throws ConfigError
std::string_view to_string(RouteVariant v);

struct CostParams {
  double alpha = 0;
  double beta = 0;
  double gamma = 0;
  double tau = 1.0;
  std::optional<double> vcr_cap;  // required by the bounded variant

  void validate() const;  // throws ConfigError
};

// Named parameter presets for the three calibrated model scales.
struct PresetSpec {
  const char* name;
  CostParams params;
  RouteVariant variant;
};
const PresetSpec& preset(std::string_view name);  // "4b" | "8b" | "32b"

struct CostBreakdown {
  double intra = 0;  // alpha * W
  double inter = 0;  // beta * L * (1 - TRR)
  double total = 0;  // exact sum of the two
};

enum class PathChoice { visual, text };
std::string_view to_string(PathChoice p);

struct Decision {
  PathChoice path = PathChoice::text;
  double te = 0;
  double isr = 0;
  double vcr_used = 0;
  CostBreakdown breakdown;
  std::string reason;
};

// C(x) = alpha*W + beta*L*(1-TRR), reported with both addends.
CostBreakdown transport_cost(const features::FeatureVector& fv,
                             const CostParams& params);

// ISR = 1 + gamma - C. Never clamped; may be <= 0 or > 1.
double information_survival(double total_cost, double gamma);

// TE = ISR * VCR.
double transport_efficiency(double isr, double vcr);

// Bounded variant: 1 + min(vcr - 1, cap). Caps only the gain above 1.
double effective_vcr(double vcr, double cap);

// Visual path iff TE >= tau (ties go visual). Degenerate VCR (m = 0) routes
// text with a flagged reason.
Decision route(const features::FeatureVector& fv, const CostParams& params,
               RouteVariant variant = RouteVariant::standard);

// ISR level set of TE = tau: isr = tau / vcr. vcr <= 0 -> DataError.
double decision_contour(double tau, double vcr);

}  // namespace vtc::cost
