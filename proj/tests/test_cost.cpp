#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "vtc/cost.hpp"
#include "vtc/errors.hpp"
#include "vtc/features.hpp"

using namespace vtc;
using cost::CostParams;
using cost::PathChoice;
using cost::RouteVariant;
using features::FeatureVector;

namespace {

FeatureVector fv_of(double w, double l, double trr, std::int64_t n,
                    std::int64_t m) {
  FeatureVector fv;
  fv.w = w;
  fv.l = l;
  fv.trr = trr;
  fv.n = n;
  fv.m = m;
  if (m > 0) {
    fv.vcr = static_cast<double>(n) / static_cast<double>(m);
    fv.vcr_defined = true;
  }
  return fv;
}

CostParams params_of(double a, double b, double g, double tau) {
  CostParams p;
  p.alpha = a;
  p.beta = b;
  p.gamma = g;
  p.tau = tau;
  return p;
}

}  // namespace

TEST_CASE("transport cost is the two-term affine form") {
  std::mt19937_64 rng(41);
  auto u = [&] { return (rng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i < 2000; ++i) {
    const double w = u(), l = u(), trr = u();
    const auto p = params_of(u(), u(), u(), 1.0);
    const auto fv = fv_of(w, l, trr, 100, 50);
    const auto b = cost::transport_cost(fv, p);
    CHECK(b.intra == doctest::Approx(p.alpha * w).epsilon(1e-15));
    CHECK(b.inter == doctest::Approx(p.beta * l * (1.0 - trr)).epsilon(1e-15));
    CHECK(b.total == doctest::Approx(b.intra + b.inter).epsilon(1e-15));
  }
}

TEST_CASE("information survival is never clamped") {
  CHECK(cost::information_survival(0.2, 0.069) ==
        doctest::Approx(1.0 + 0.069 - 0.2));
  // A cost above 1 + gamma drives survival negative and stays negative.
  CHECK(cost::information_survival(1.5, 0.0) == doctest::Approx(-0.5));
  CHECK(cost::information_survival(0.0, 0.241) == doctest::Approx(1.241));
}

TEST_CASE("transport efficiency is the product") {
  CHECK(cost::transport_efficiency(0.9, 2.0) == doctest::Approx(1.8));
  CHECK(cost::transport_efficiency(-0.1, 2.0) == doctest::Approx(-0.2));
}

TEST_CASE("bounded variant caps the compression ratio") {
  CHECK(cost::effective_vcr(2.5, 0.30) == doctest::Approx(1.30));
  CHECK(cost::effective_vcr(1.1, 0.30) == doctest::Approx(1.1));
  CHECK(cost::effective_vcr(1.0, 0.30) == doctest::Approx(1.0));
  // Below 1 the cap never raises the value.
  CHECK(cost::effective_vcr(0.7, 0.30) == doctest::Approx(0.7));
}

TEST_CASE("route: threshold tie selects the visual path") {
  // Construct TE == tau exactly: W=L=0 so C=0, gamma=0 -> ISR=1, VCR=n/m.
  const auto fv = fv_of(0.0, 0.0, 0.0, 128, 100);  // VCR = 1.28 exactly
  const auto p = params_of(0.5, 0.5, 0.0, 1.28);
  const auto d = cost::route(fv, p);
  CHECK(d.te == doctest::Approx(1.28).epsilon(1e-15));
  CHECK(d.path == PathChoice::visual);
}

TEST_CASE("route: undefined compression ratio falls back to text") {
  const auto fv = fv_of(0.2, 0.2, 0.0, 50, 0);
  const auto p = params_of(0.5, 0.5, 0.0, 0.01);  // tiny tau would pass anything
  const auto d = cost::route(fv, p);
  CHECK(d.path == PathChoice::text);
}

TEST_CASE("route: bounded variant requires a cap") {
  const auto fv = fv_of(0.2, 0.2, 0.1, 100, 50);
  auto p = params_of(0.5, 0.5, 0.0, 1.28);
  CHECK_THROWS_AS(cost::route(fv, p, RouteVariant::bounded), ConfigError);
  p.vcr_cap = 0.30;
  CHECK_NOTHROW(cost::route(fv, p, RouteVariant::bounded));
}

TEST_CASE("route agrees with the explicit sign test") {
  std::mt19937_64 rng(99);
  auto u = [&] { return (rng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i < 5000; ++i) {
    const auto fv = fv_of(u(), u(), u(), 1 + static_cast<std::int64_t>(rng() % 4000),
                          1 + static_cast<std::int64_t>(rng() % 2000));
    auto p = params_of(u(), u(), 0.3 * u(), 0.9 + 0.5 * u());
    const auto d = cost::route(fv, p);
    const double c = p.alpha * fv.w + p.beta * fv.l * (1.0 - fv.trr);
    const double te = (1.0 + p.gamma - c) * fv.vcr;
    CHECK(d.te == doctest::Approx(te).epsilon(1e-12));
    CHECK((d.path == PathChoice::visual) == (te >= p.tau));
  }
}

TEST_CASE("bounded efficiency never exceeds standard when VCR >= 1") {
  std::mt19937_64 rng(7);
  auto u = [&] { return (rng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i < 5000; ++i) {
    const double vcr = 1.0 + 3.0 * u();
    const std::int64_t m = 1 + static_cast<std::int64_t>(rng() % 1000);
    const auto n = static_cast<std::int64_t>(std::llround(vcr * m));
    const auto fv = fv_of(0.3 * u(), u(), u(), n, m);
    auto p = params_of(0.4 * u(), 0.4 * u(), 0.3 * u(), 1.28);
    p.vcr_cap = 0.30;
    const auto std_d = cost::route(fv, p, RouteVariant::standard);
    const auto bnd_d = cost::route(fv, p, RouteVariant::bounded);
    if (std_d.isr >= 0.0 && fv.vcr >= 1.0) {
      CHECK(bnd_d.te <= std_d.te + 1e-12);
    }
  }
}

TEST_CASE("decision contour multiplies back to the threshold") {
  std::mt19937_64 rng(13);
  auto u = [&] { return (rng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i < 2000; ++i) {
    const double tau = 0.9 + u();
    const double vcr = 0.05 +        4.0 * u();
    const double isr = cost::decision_contour(tau, vcr);
    CHECK(std::abs(isr * vcr - tau) <= 1e-12);
  }
}

TEST_CASE("presets carry the published operating points") {
  const auto p4 = cost::preset("4b");
  CHECK(p4.params.alpha == doctest::Approx(0.213));
  CHECK(p4.params.beta == doctest::Approx(0.627));
  CHECK(p4.params.gamma == doctest::Approx(0.069));
  CHECK(p4.params.tau == doctest::Approx(1.28));
  CHECK(p4.variant == RouteVariant::standard);
  CHECK_FALSE(p4.params.vcr_cap.has_value());

  const auto p8 = cost::preset("8b");
  CHECK(p8.params.alpha == doctest::Approx(0.455));
  CHECK(p8.params.beta == doctest::Approx(0.061));
  CHECK(p8.params.gamma == doctest::Approx(0.0));
  CHECK(p8.params.tau == doctest::Approx(1.28));
  CHECK(p8.variant == RouteVariant::standard);

  const auto p32 = cost::preset("32b");
  CHECK(p32.params.alpha == doctest::Approx(0.053));
  CHECK(p32.params.beta == doctest::Approx(0.233));
  CHECK(p32.params.gamma == doctest::Approx(0.241));
  CHECK(p32.params.tau == doctest::Approx(1.55));
  CHECK(p32.variant == RouteVariant::bounded);
  REQUIRE(p32.params.vcr_cap.has_value());
  CHECK(*p32.params.vcr_cap == doctest::Approx(0.30));

  CHECK_THROWS_AS(cost::preset("70b"), ConfigError);
}

TEST_CASE("parameter validation rejects out-of-range values") {
  auto p = params_of(0.2, 0.2, 0.0, 1.28);
  CHECK_NOTHROW(p.validate());
  p.alpha = -0.1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = params_of(0.2, 0.2, -0.1, 1.28);
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = params_of(0.2, 0.2, 0.0, 0.0);
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = params_of(0.2, 0.2, 0.0, 1.28);
  p.vcr_cap = -0.2;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("variant names round-trip") {
  CHECK(cost::parse_route_variant("standard") == RouteVariant::standard);
  CHECK(cost::parse_route_variant("bounded") == RouteVariant::bounded);
  CHECK(cost::to_string(RouteVariant::standard) == "standard");
  CHECK(cost::to_string(RouteVariant::bounded) == "bounded");
  CHECK_THROWS_AS(cost::parse_route_variant("loose"), ConfigError);
}
