#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vtc/cost.hpp"
#include "vtc/features.hpp"
#include "vtc/foveate.hpp"
#include "vtc/render.hpp"

namespace vtc::harness {

struct SampleScores {
  std::optional<double> text, vis, fov;
};

struct SampleRecord {
  std::string id;
  std::string dataset;
  std::string text;          // UTF-8 source
  features::TaskSpec task;   // answer format, W override, question
  SampleScores scores;       // native metric, declared scale per record
  double scale = 100.0;
  bool score_out_of_scale = false;  // kept, but flagged at load time
  std::size_t line = 0;             // 1-based JSONL line for error messages
};

struct LoadResult {
  std::vector<SampleRecord> records;
  std::vector<std::string> warnings;
};

// JSONL, one record per line: {"id", "dataset", "text", "question"?,
// "task"?: {"answer_format"?, "w_override"?}, "scores"?: {"text","vis","fov"},
// "scale"?}. Malformed lines raise DataError citing the line number;
// duplicate ids are rejected; out-of-scale scores warn but load.
LoadResult load_samples(std::istream& in);
LoadResult load_samples_file(const std::string& path);

struct PairedGap {
  double delta = 0;      // s_text - s_vis (positive = text wins)
  double advantage = 0;  // -delta
};
PairedGap paired_gap(double s_text, double s_vis);

struct QuantileBucket {
  double c_lo = 0, c_hi = 0;
  std::int64_t n = 0;
  double mean_advantage = 0;
  double win_rate = 0;  // fraction with advantage strictly > 0
};

// k quantile buckets by cost; a value equal to an edge falls into the lower
// bucket. Heavy ties can leave upper buckets empty (n = 0), which the caller
// should surface as degenerate.
std::vector<QuantileBucket> quantile_buckets(
    const std::vector<double>& cost_values,
    const std::vector<double>& advantages, int k);

struct SpearmanResult {
  double rho = 0;
  bool defined = false;  // false when either series is constant
};
// Rank correlation with average ranks for ties. Length mismatch or n < 2 ->
// DataError.
SpearmanResult spearman(const std::vector<double>& xs,
                        const std::vector<double>& ys);

struct GridCell {
  std::int64_t n = 0;
  double mean_advantage = 0;
};

struct JointGrid {
  std::array<GridCell, 9> cells;  // row = VCR tertile, col = cost tertile

  const GridCell& at(int vcr_tertile, int c_tertile) const {
    return cells[static_cast<std::size_t>(vcr_tertile) * 3 +
                 static_cast<std::size_t>(c_tertile)];
  }
  GridCell& at(int vcr_tertile, int c_tertile) {
    return cells[static_cast<std::size_t>(vcr_tertile) * 3 +
                 static_cast<std::size_t>(c_tertile)];
  }
};
// Tertiles on both axes (same tie rule as quantile_buckets). n < 9 -> DataError.
JointGrid joint_grid(const std::vector<double>& vcr_values,
                     const std::vector<double>& cost_values,
                     const std::vector<double>& advantages);

struct OracleInput {
  cost::PathChoice decision = cost::PathChoice::text;
  double s_text = 0;
  double s_vis = 0;
  std::optional<double> s_fov;
};
struct OracleResult {
  int matches = 0;
  int total = 0;
};
// Oracle label: visual iff max(s_vis, s_fov) > s_text; exact ties match
// either decision.
OracleResult oracle_accuracy(const std::vector<OracleInput>& inputs);

enum class OracleLabel { text, visual, tie };

struct SweepPoint {
  double tau = 0;
  double accuracy = 0;
};
struct Plateau {
  double lo = 0, hi = 0;
  double accuracy = 0;
};
struct TauSweep {
  std::vector<SweepPoint> points;
  std::vector<Plateau> plateaus;  // maximal runs of constant accuracy
  double best_tau = 0;            // left edge of the best plateau
  double best_accuracy = 0;
};
// Decision at each grid point is visual iff te >= tau; ties match both.
TauSweep tau_sweep(const std::vector<double>& te_values,
                   const std::vector<OracleLabel>& labels, double lo = 0.90,
                   double hi = 1.40, double step = 0.01);

struct TriggerStats {
  std::int64_t total = 0;
  std::int64_t triggered = 0;
  double rate = 0;
  double delta_fov = 0;     // mean foveation score delta; +0.00 forced at rate 0
  bool forced_zero = false;
};
TriggerStats trigger_stats(const std::vector<bool>& triggered,
                           const std::vector<double>& fov_deltas);

// Mean W/L/TRR with VCR = mean(n)/mean(m); DataError on empty input.
features::FeatureVector macro_features(
    const std::vector<features::FeatureVector>& fvs);

struct EvalOptions {
  cost::CostParams params;
  cost::RouteVariant variant = cost::RouteVariant::standard;
  render::RenderConfig render;
  features::FeatureConfig features;
  foveate::FovConfig fov;
  int bucket_count = 4;
  double sweep_lo = 0.90, sweep_hi = 1.40, sweep_step = 0.01;
  bool per_sample_routing = false;  // dataset decision from row majority
  bool run_foveation = true;
};

struct SampleRow {
  std::string id, dataset;
  features::FeatureVector fv;
  cost::CostBreakdown cost;
  double isr = 0, te = 0;
  cost::PathChoice decision = cost::PathChoice::text;
  std::string decision_reason;
  bool fov_triggered = false;
  std::int64_t fov_n_c = 0;
  double fov_sum_dc = 0;
  double te_fov = 0;
  std::optional<double> delta, advantage;
  bool score_out_of_scale = false;
};

struct DatasetSummary {
  std::string dataset;
  std::int64_t n = 0;
  features::FeatureVector macro;
  cost::CostBreakdown cost;
  double isr = 0, te = 0;
  cost::PathChoice decision = cost::PathChoice::text;
  std::optional<double> mean_s_text, mean_s_vis, mean_s_fov;
  std::optional<double> mean_advantage;
  std::optional<OracleLabel> oracle;  // absent without paired scores
  bool oracle_match = false;
  TriggerStats trigger;
};

struct EvalReport {
  std::string timestamp;  // sole nondeterministic field
  cost::CostParams params;
  cost::RouteVariant variant = cost::RouteVariant::standard;
  std::vector<SampleRow> rows;           // ordered by sample id
  std::vector<DatasetSummary> datasets;  // ordered by dataset name
  std::vector<QuantileBucket> buckets;   // dataset-level, by macro cost
  SpearmanResult spearman;
  std::optional<JointGrid> grid;
  OracleResult oracle;
  TauSweep sweep;
  std::vector<std::string> notes;
};

EvalReport run_evaluation(const std::vector<SampleRecord>& records,
                          const EvalOptions& opts);

// include_timestamp=false gives the byte-reproducible form.
std::string report_to_json(const EvalReport& report,
                           bool include_timestamp = true);
std::string report_rows_csv(const EvalReport& report);

// Writes report.<fmt> under out_dir for each format in {"json", "csv"};
// returns the written paths. Unknown format -> ConfigError; I/O failure ->
// DataError.
std::vector<std::string> emit_report(const EvalReport& report,
                                     const std::string& out_dir,
                                     const std::vector<std::string>& formats);

std::string utc_timestamp();

}  // namespace vtc::harness
