#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "vtc/calibrate.hpp"
#include "vtc/errors.hpp"
#include "vtc/text.hpp"

using namespace vtc;
using calibrate::PathTag;
using calibrate::ProbeFormat;
using calibrate::ProbeItem;
using calibrate::ProbeKind;
using calibrate::ScoringMode;

namespace {

std::vector<std::string> words_of(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == '\n' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

TEST_CASE("probe sets have the declared shape") {
  const auto alpha = calibrate::generate_alpha_probe(17);
  const auto beta = calibrate::generate_beta_probe(17);
  const auto gamma = calibrate::generate_gamma_probe(17);
  CHECK(alpha.size() == 480);
  CHECK(beta.size() == 360);
  CHECK(gamma.size() == 240);

  std::map<double, int> alpha_tiers, beta_tiers;
  for (const auto& it : alpha) alpha_tiers[it.tier]++;
  for (const auto& it : beta) beta_tiers[it.tier]++;
  REQUIRE(alpha_tiers.size() == 3);
  REQUIRE(beta_tiers.size() == 3);
  for (const auto& [tier, count] : alpha_tiers) CHECK(count == 160);
  for (const auto& [tier, count] : beta_tiers) CHECK(count == 120);
  CHECK(alpha_tiers.count(0.10) == 1);
  CHECK(alpha_tiers.count(0.35) == 1);
  CHECK(alpha_tiers.count(0.65) == 1);
  CHECK(beta_tiers.count(0.10) == 1);
  CHECK(beta_tiers.count(0.40) == 1);
  CHECK(beta_tiers.count(0.70) == 1);

  int structured = 0, flat = 0;
  for (const auto& it : gamma) {
    if (it.format == ProbeFormat::structured) ++structured;
    if (it.format == ProbeFormat::flat) ++flat;
  }
  CHECK(structured == 120);
  CHECK(flat == 120);
}

TEST_CASE("probe generation is seed-deterministic") {
  std::ostringstream a17a, a17b, a99;
  calibrate::export_probes_jsonl(a17a, calibrate::generate_alpha_probe(17));
  calibrate::export_probes_jsonl(a17b, calibrate::generate_alpha_probe(17));
  calibrate::export_probes_jsonl(a99, calibrate::generate_alpha_probe(99));
  CHECK(a17a.str() == a17b.str());
  CHECK(a17a.str() != a99.str());
}

TEST_CASE("alpha probes: needle and summary word budgets") {
  const auto alpha = calibrate::generate_alpha_probe(21);
  for (const auto& it : alpha) {
    CHECK(!it.gold.empty());
    if (it.mode == ScoringMode::rouge_l) {
      const auto n = words_of(it.gold).size();
      // Medium tier golds are one 10-word sentence; high tier 50-word
      // restatements.
      CHECK((n == 10 || n == 50));
    }
    // The haystack should be near its nominal length.
    const auto prompt_len = it.prompt.size();
    CHECK(prompt_len > static_cast<std::size_t>(it.haystack_len));
    CHECK(prompt_len <
          static_cast<std::size_t>(it.haystack_len) + 400);
  }
}

TEST_CASE("beta probes: planted facts sit at their declared offsets") {
  // Placement contract: the fact's first word starts within one word of the
  // word that contains the character at frac * haystack_length. (A pure
  // word-index comparison would drift by several words on long haystacks
  // because filler words are longer on average than fact words.)
  const auto beta = calibrate::generate_beta_probe(33);
  int checked = 0;
  for (const auto& it : beta) {
    if (it.tier != 0.70) continue;  // high tier: five declared offsets
    const auto qpos = it.prompt.rfind("\n\nQuestion:");
    REQUIRE(qpos != std::string::npos);
    const std::string hay = it.prompt.substr(0, qpos);

    // Whitespace-split with starting character positions.
    std::vector<std::size_t> starts;
    std::vector<std::string> toks;
    for (std::size_t i = 0; i < hay.size();) {
      while (i < hay.size() &&
             std::isspace(static_cast<unsigned char>(hay[i]))) {
        ++i;
      }
      if (i >= hay.size()) break;
      starts.push_back(i);
      std::string t;
      while (i < hay.size() &&
             !std::isspace(static_cast<unsigned char>(hay[i]))) {
        t += hay[i++];
      }
      toks.push_back(std::move(t));
    }

    // Every fact sentence begins "The temperature ..."; the filler
    // vocabulary never produces that token.
    std::vector<std::size_t> fact_word_positions;
    for (std::size_t w = 0; w + 1 < toks.size(); ++w) {
      if (toks[w] == "The" && toks[w + 1] == "temperature") {
        fact_word_positions.push_back(w);
      }
    }
    REQUIRE(fact_word_positions.size() == 5);
    const double expected[5] = {0.1, 0.3, 0.5, 0.7, 0.9};
    for (int f = 0; f < 5; ++f) {
      const double ideal_char =
          expected[f] * static_cast<double>(hay.size());
      std::size_t j = 0;
      for (std::size_t w = 0; w < starts.size(); ++w) {
        if (static_cast<double>(starts[w]) <= ideal_char) j = w;
      }
      const auto diff = static_cast<long long>(fact_word_positions[
                            static_cast<std::size_t>(f)]) -
                        static_cast<long long>(j);
      CHECK(diff >= -1);
      CHECK(diff <= 1);
    }
    ++checked;
  }
  CHECK(checked == 120);
}

TEST_CASE("gamma probes pair a table rendering with flat prose") {
  const auto gamma = calibrate::generate_gamma_probe(5);
  for (const auto& it : gamma) {
    CHECK(it.kind == ProbeKind::gamma);
    if (it.format == ProbeFormat::structured) {
      CHECK(it.prompt.find('|') != std::string::npos);  // table markup
    } else {
      CHECK(it.format == ProbeFormat::flat);
    }
    CHECK(words_of(it.gold).size() == 2);  // "First Last"
  }
}

TEST_CASE("rouge: hand values and oracle agreement") {
  CHECK(calibrate::rouge_l_f1("", "") == doctest::Approx(1.0));
  CHECK(calibrate::rouge_l_f1("a b", "") == doctest::Approx(0.0));
  CHECK(calibrate::rouge_l_f1("", "a b") == doctest::Approx(0.0));
  CHECK(calibrate::rouge_l_f1("a b c", "a b c") == doctest::Approx(1.0));
  // pred "a c", gold "a b c d": LCS=2, P=1, R=0.5 -> F1 = 2/3.
  CHECK(calibrate::rouge_l_f1("a c", "a b c d") ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  std::mt19937_64 rng(7);
  static const char* pool[] = {"red", "green", "blue", "gray", "gold"};
  for (int iter = 0; iter < 400; ++iter) {
    std::string pred, gold;
    const int np = static_cast<int>(rng() % 8);
    const int ng = static_cast<int>(rng() % 8);
    for (int i = 0; i < np; ++i) {
      if (i) pred += ' ';
      pred += pool[rng() % 5];
    }
    for (int i = 0; i < ng; ++i) {
      if (i) gold += ' ';
      gold += pool[rng() % 5];
    }
    const auto pt = text::word_tokens_utf8(pred);
    const auto gt = text::word_tokens_utf8(gold);
    double want;
    if (pt.empty() && gt.empty()) {
      want = 1.0;
    } else if (pt.empty() || gt.empty()) {
      want = 0.0;
    } else {
      const double lcs = static_cast<double>(oracles::lcs_ref(pt, gt));
      if (lcs == 0) {
        want = 0.0;
      } else {
        const double p = lcs / static_cast<double>(pt.size());
        const double r = lcs / static_cast<double>(gt.size());
        want = 2.0 * p * r / (p + r);
      }
    }
    CHECK(calibrate::rouge_l_f1(pred, gold) ==
          doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("scoring modes behave per contract") {
  ProbeItem item;
  item.mode = ScoringMode::exact_substring;
  item.gold = "Medal";
  CHECK(calibrate::score_response(item, "she won the medal in 1999") == 1.0);
  CHECK(calibrate::score_response(item, "unknown") == 0.0);

  item.mode = ScoringMode::name_match;
  item.gold = "Oslo";
  CHECK(calibrate::score_response(item, "the city was OSLO.") == 1.0);
  CHECK(calibrate::score_response(item, "bergen") == 0.0);

  item.mode = ScoringMode::numeric_tolerance;
  item.gold = "40";
  CHECK(calibrate::score_response(item, "about 40 degrees") == 1.0);
  CHECK(calibrate::score_response(item, "46") == 1.0);   // exactly +15%
  CHECK(calibrate::score_response(item, "47") == 0.0);   // outside
  CHECK(calibrate::score_response(item, "34") == 1.0);   // exactly -15%
  CHECK(calibrate::score_response(item, "33") == 0.0);
  CHECK(calibrate::score_response(item, "no idea") == 0.0);
}

TEST_CASE("tier gap formula and guards") {
  CHECK(calibrate::tier_gap(0.8, 1.0) == doctest::Approx(0.2));
  CHECK(calibrate::tier_gap(1.1, 1.0) == doctest::Approx(0.0));  // clamped
  CHECK_THROWS_AS(calibrate::tier_gap(0.5, 0.0), CalibrationError);
}

TEST_CASE("no-intercept fit matches ternary search") {
  std::mt19937_64 rng(13);
  auto u = [&] { return (rng() >> 11) * 0x1.0p-53; };
  for (int iter = 0; iter < 500; ++iter) {
    const std::size_t n = 2 + rng() % 6;
    std::vector<double> x(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = 0.05 + u();
      g[i] = u() * 0.5;
    }
    const auto fit = calibrate::fit_no_intercept(x, g);
    CHECK(fit.value == doctest::Approx(oracles::fit_slope_ref(x, g)).epsilon(1e-7));
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ss_res += (g[i] - fit.value * x[i]) * (g[i] - fit.value * x[i]);
      ss_tot += g[i] * g[i];
    }
    if (ss_tot > 0) {
      REQUIRE(fit.r2_defined);
      CHECK(fit.r2 == doctest::Approx(1.0 - ss_res / ss_tot).epsilon(1e-12));
    }
  }
}

TEST_CASE("no-intercept fit guards") {
  CHECK_THROWS_AS(calibrate::fit_no_intercept({}, {}), DataError);
  CHECK_THROWS_AS(calibrate::fit_no_intercept({1.0}, {1.0, 2.0}), DataError);
  CHECK_THROWS_AS(calibrate::fit_no_intercept({0.0, 0.0}, {1.0, 1.0}),
                  DataError);
  const auto fit = calibrate::fit_no_intercept({0.1, 0.4}, {0.0, 0.0});
  CHECK(fit.value == 0.0);
  CHECK_FALSE(fit.r2_defined);
}

TEST_CASE("structured bonus clamps at zero") {
  CHECK(calibrate::fit_structured_bonus(0.961, 0.892) ==
        doctest::Approx(0.069).epsilon(1e-12));
  CHECK(calibrate::fit_structured_bonus(0.887, 0.889) == 0.0);
}

TEST_CASE("identical mock scorer produces zero gaps everywhere") {
  calibrate::MockScorer scorer;
  const auto report = calibrate::run_calibration(scorer, 17);
  CHECK(report.alpha_fit.value == doctest::Approx(0.0));
  CHECK(report.beta_fit.value == doctest::Approx(0.0));
  CHECK(report.gamma == doctest::Approx(0.0));
  for (const auto& t : report.alpha_tiers) CHECK(t.gap == doctest::Approx(0.0));
  for (const auto& t : report.beta_tiers) CHECK(t.gap == doctest::Approx(0.0));
}

TEST_CASE("slope mock scorer is recovered exactly by the fit") {
  for (double slope : {0.1, 0.3, 0.5}) {
    calibrate::MockScorer scorer(slope);
    const auto report = calibrate::run_calibration(scorer, 17);
    CHECK(report.alpha_fit.value == doctest::Approx(slope).epsilon(1e-9));
    CHECK(report.beta_fit.value == doctest::Approx(slope).epsilon(1e-9));
    REQUIRE(report.alpha_fit.r2_defined);
    REQUIRE(report.beta_fit.r2_defined);
    CHECK(report.alpha_fit.r2 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.beta_fit.r2 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.gamma == doctest::Approx(0.0));
  }
}

TEST_CASE("replay scorer: parsing and strictness") {
  std::istringstream good(
      R"({"item": "x1", "path": "vlm", "response": "a"})"
      "\n"
      R"({"item": "x1", "path": "llm", "response": "b"})"
      "\n");
  calibrate::ReplayScorer scorer(good);
  CHECK(scorer.size() == 2);
  ProbeItem item;
  item.id = "x1";
  CHECK(scorer.respond(item, PathTag::vlm) == "a");
  CHECK(scorer.respond(item, PathTag::llm) == "b");
  item.id = "missing";
  CHECK_THROWS_AS(scorer.respond(item, PathTag::vlm), CalibrationError);

  std::istringstream dup(
      R"({"item": "x1", "path": "vlm", "response": "a"})"
      "\n"
      R"({"item": "x1", "path": "vlm", "response": "b"})"
      "\n");
  CHECK_THROWS_AS(calibrate::ReplayScorer{dup}, DataError);

  std::istringstream badpath(
      R"({"item": "x1", "path": "gpu", "response": "a"})"
      "\n");
  CHECK_THROWS_AS(calibrate::ReplayScorer{badpath}, DataError);

  std::istringstream notjson("not json at all\n");
  CHECK_THROWS_AS(calibrate::ReplayScorer{notjson}, DataError);
}

TEST_CASE("remote stub refuses to run") {
  calibrate::RemoteStubScorer scorer;
  ProbeItem item;
  CHECK_THROWS_AS(scorer.respond(item, PathTag::vlm), ConfigError);
}

TEST_CASE("calibration report serializes fit values and tau source") {
  calibrate::MockScorer scorer(0.3);
  const auto report = calibrate::run_calibration(scorer, 17);
  const auto j = report.to_json(1.28);
  CHECK(j.find("vtc-calibration-report/1") != std::string::npos);
  CHECK(j.find("\"tau_source\": \"config\"") != std::string::npos);
  const auto params = report.to_params(1.28);
  CHECK(params.alpha == doctest::Approx(report.alpha_fit.value));
  CHECK(params.beta == doctest::Approx(report.beta_fit.value));
  CHECK(params.gamma == doctest::Approx(report.gamma));
  CHECK(params.tau == doctest::Approx(1.28));
}

TEST_CASE("probe export emits one json object per item") {
  const auto alpha = calibrate::generate_alpha_probe(3);
  std::ostringstream out;
  calibrate::export_probes_jsonl(out, alpha);
  const auto s = out.str();
  std::size_t lines = 0;
  for (char c : s) {
    if (c == '\n') ++lines;
  }
  CHECK(lines == alpha.size());
  CHECK(s.find("\"id\"") != std::string::npos);
  CHECK(s.find("\"gold\"") != std::string::npos);
}
