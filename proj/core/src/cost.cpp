#include "vtc/cost.hpp"

#include <algorithm>

#include "vtc/errors.hpp"

namespace vtc::cost {

RouteVariant parse_route_variant(std::string_view name) {
  if (name == "standard") return RouteVariant::standard;
  if (name == "bounded") return RouteVariant::bounded;
  throw ConfigError("unknown route variant '" + std::string(name) + "'");
}

std::string_view to_string(RouteVariant v) {
  return v == RouteVariant::standard ? "standard" : "bounded";
}

std::string_view to_string(PathChoice p) {
  return p == PathChoice::visual ? "visual" : "text";
}

void CostParams::validate() const {
  if (alpha < 0 || beta < 0 || gamma < 0)
    throw ConfigError("cost params must be nonnegative");
  if (tau <= 0) throw ConfigError("tau must be > 0");
  if (vcr_cap && *vcr_cap < 0) throw ConfigError("vcr_cap must be >= 0");
}

const PresetSpec& preset(std::string_view name) {
  static const PresetSpec presets[] = {
      {"4b", {0.213, 0.627, 0.069, 1.28, std::nullopt}, RouteVariant::standard},
      {"8b", {0.455, 0.061, 0.000, 1.28, std::nullopt}, RouteVariant::standard},
      {"32b", {0.053, 0.233, 0.241, 1.55, 0.30}, RouteVariant::bounded},
  };
  for (const auto& p : presets) {
    if (name == p.name) return p;
  }
  throw ConfigError("unknown preset '" + std::string(name) +
                    "' (expected 4b, 8b or 32b)");
}

CostBreakdown transport_cost(const features::FeatureVector& fv,
                             const CostParams& params) {
  CostBreakdown b;
  b.intra = params.alpha * fv.w;
  b.inter = params.beta * fv.l * (1.0 - fv.trr);
  b.total = b.intra + b.inter;
  return b;
}

double information_survival(double total_cost, double gamma) {
  return 1.0 + gamma - total_cost;
}

double transport_efficiency(double isr, double vcr) { return isr * vcr; }

double effective_vcr(double vcr, double cap) {
  return 1.0 + std::min(vcr - 1.0, cap);
}

Decision route(const features::FeatureVector& fv, const CostParams& params,
               RouteVariant variant) {
  params.validate();
  Decision d;
  d.breakdown = transport_cost(fv, params);
  d.isr = information_survival(d.breakdown.total, params.gamma);

  if (!fv.vcr_defined || fv.m == 0) {
    d.path = PathChoice::text;
    d.reason = "vcr-undefined";
    return d;
  }
  if (variant == RouteVariant::bounded) {
    if (!params.vcr_cap)
      throw ConfigError("bounded routing requires vcr_cap");
    d.vcr_used = effective_vcr(fv.vcr, *params.vcr_cap);
  } else {
    d.vcr_used = fv.vcr;
  }
  d.te = transport_efficiency(d.isr, d.vcr_used);
  if (d.te >= params.tau) {
    d.path = PathChoice::visual;
    d.reason = "te>=tau";
  } else {
    d.path = PathChoice::text;
    d.reason = "te<tau";
  }
  return d;
}

double decision_contour(double tau, double vcr) {
  if (vcr <= 0) throw DataError("decision_contour: vcr must be > 0");
  return tau / vcr;
}

}  // namespace vtc::cost
