#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vtc/cost.hpp"

namespace vtc::calibrate {

enum class ProbeKind { alpha, beta, gamma };
enum class ProbeFormat { none, structured, flat };
enum class ScoringMode { exact_substring, rouge_l, numeric_tolerance, name_match };

std::string_view to_string(ProbeKind k);
std::string_view to_string(ProbeFormat f);
std::string_view to_string(ScoringMode m);

// One self-contained scoring task. tier is the design anchor used as the
// regression abscissa (W anchors for alpha probes, L anchors for beta; 0 for
// gamma, which varies format instead).
struct ProbeItem {
  std::string id;
  ProbeKind kind = ProbeKind::alpha;
  double tier = 0;
  ProbeFormat format = ProbeFormat::none;
  int haystack_len = 1000;  // nominal target: 1000 or 4000 chars
  std::string prompt;       // haystack followed by the question
  std::string gold;
  ScoringMode mode = ScoringMode::exact_substring;
  // Generation metadata (not exported): series = needle/task/set number,
  // length_index in {0,1}, tier_index in {0..2}.
  int series = 0;
  int length_index = 0;
  int tier_index = 0;
};

// Retrieval-precision probe: 80 needles x 3 W-tiers x 2 lengths = 480 items,
// 160 per tier. Low tier asks for a keyword (exact substring), medium for a
// one-sentence summary, high for a full restatement (ROUGE-L scored).
std::vector<ProbeItem> generate_alpha_probe(std::uint64_t seed);

// Aggregation probe: 60 city-temperature tasks x 3 L-tiers x 2 lengths = 360,
// 120 per tier. Facts are planted at declared document offsets (high tier:
// 10/30/50/70/90%). Tasks alternate numeric (+-15%) and city-name scoring.
std::vector<ProbeItem> generate_beta_probe(std::uint64_t seed);

// Structure probe: 60 fact sets x {structured table, flat prose} x 2 lengths
// = 240 items; the question asks for the most recent award recipient.
std::vector<ProbeItem> generate_gamma_probe(std::uint64_t seed);

// ROUGE-L F1 over lowercased word tokens. Both empty -> 1; one empty -> 0.
double rouge_l_f1(std::string_view pred, std::string_view gold);

// Applies the item's scoring mode to a raw response; returns [0,1].
double score_response(const ProbeItem& item, std::string_view response);

// g = max(0, 1 - vlm_mean/llm_mean). llm_mean <= 0 -> CalibrationError.
double tier_gap(double vlm_mean, double llm_mean);

struct Fit {
  double value = 0;
  double r2 = 0;
  bool r2_defined = false;  // false when all gaps are zero
};

// Least squares through the origin: value = sum(x*g)/sum(x^2),
// r2 = 1 - sum((g - value*x)^2)/sum(g^2).
Fit fit_no_intercept(const std::vector<double>& x,
                     const std::vector<double>& g);

// gamma = max(0, r_struct - r_flat).
double fit_structured_bonus(double r_struct, double r_flat);

enum class PathTag { vlm, llm };
std::string_view to_string(PathTag p);

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string respond(const ProbeItem& item, PathTag path) = 0;
  virtual std::string name() const = 0;
};

// Deterministic templated responses. "identical" answers gold on both paths
// (all gaps zero). "gap_slope" engineers per-tier score ratios of exactly
// 1 - slope*tier, via correct-count ratios for binary modes and k-of-G
// partial-overlap responses for ROUGE modes.
class MockScorer final : public Scorer {
 public:
  MockScorer();                        // identical
  explicit MockScorer(double slope);   // gap_slope
  std::string respond(const ProbeItem& item, PathTag path) override;
  std::string name() const override;

 private:
  bool identical_ = true;
  double slope_ = 0;
};

// Replays responses from a JSONL file: {"item": id, "path": "vlm"|"llm",
// "response": str}. A missing response aborts with the failing item id.
class ReplayScorer final : public Scorer {
 public:
  explicit ReplayScorer(std::istream& in);
  static ReplayScorer from_file(const std::string& path);
  std::string respond(const ProbeItem& item, PathTag path) override;
  std::string name() const override;
  std::size_t size() const { return responses_.size(); }

 private:
  std::vector<std::pair<std::string, std::string>> responses_;  // sorted key -> response
};

// Placeholder for a live scoring endpoint; always throws ConfigError.
class RemoteStubScorer final : public Scorer {
 public:
  std::string respond(const ProbeItem& item, PathTag path) override;
  std::string name() const override;
};

struct TierStats {
  double tier = 0;
  int count = 0;
  double vlm_mean = 0;
  double llm_mean = 0;
  double gap = 0;
  bool included = true;  // false when llm_mean degenerated to zero
};

struct CalibrationReport {
  std::uint64_t seed = 0;
  std::string scorer;
  std::vector<TierStats> alpha_tiers, beta_tiers;
  Fit alpha_fit, beta_fit;
  double r_struct = 0, r_flat = 0;
  double gamma = 0;
  std::vector<std::string> notes;

  // tau never comes from calibration; it is supplied by config/preset.
  cost::CostParams to_params(double tau,
                             std::optional<double> vcr_cap = {}) const;
  std::string to_json(std::optional<double> tau) const;
};

// Runs all three probes through the scorer and fits alpha, beta, gamma.
CalibrationReport run_calibration(Scorer& scorer, std::uint64_t seed);

// JSONL export with keys id, kind, tier, format, prompt, gold, mode.
void export_probes_jsonl(std::ostream& out,
                         const std::vector<ProbeItem>& items);

}  // namespace vtc::calibrate
