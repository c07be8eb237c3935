#include "vtc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "vtc/errors.hpp"

namespace vtc::harness {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void line_error(std::size_t line, const std::string& what) {
  throw DataError("samples line " + std::to_string(line) + ": " + what);
}

double require_finite_number(const json& v, std::size_t line,
                             const std::string& field) {
  if (!v.is_number()) line_error(line, "field '" + field + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) line_error(line, "field '" + field + "' is not finite");
  return d;
}

std::string require_string(const json& v, std::size_t line,
                           const std::string& field) {
  if (!v.is_string()) line_error(line, "field '" + field + "' must be a string");
  return v.get<std::string>();
}

// Quantile edges e_j = sorted[ceil(j*n/k) - 1]; a value equal to an edge is
// assigned to the lower bucket.
std::vector<double> quantile_edges(std::vector<double> values, int k) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::vector<double> edges;
  edges.reserve(static_cast<std::size_t>(k) - 1);
  for (int j = 1; j < k; ++j) {
    const std::size_t idx =
        (static_cast<std::size_t>(j) * n + static_cast<std::size_t>(k) - 1) /
            static_cast<std::size_t>(k) -
        1;
    edges.push_back(values[idx]);
  }
  return edges;
}

int bucket_of(const std::vector<double>& edges, double v) {
  int b = 0;
  for (double e : edges) {
    if (e < v) ++b;
  }
  return b;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = static_cast<double>(i + j + 2) / 2.0;  // 1-based mean
    for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = r;
    i = j + 1;
  }
  return rank;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

OracleLabel oracle_label(double s_text, double s_vis,
                         const std::optional<double>& s_fov) {
  const double best = std::max(s_vis, s_fov.value_or(s_vis));
  if (best > s_text) return OracleLabel::visual;
  if (best < s_text) return OracleLabel::text;
  return OracleLabel::tie;
}

bool label_matches(OracleLabel label, cost::PathChoice decision) {
  if (label == OracleLabel::tie) return true;
  return (label == OracleLabel::visual) ==
         (decision == cost::PathChoice::visual);
}

}  // namespace

LoadResult load_samples(std::istream& in) {
  LoadResult result;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      line_error(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!row.is_object()) line_error(line_no, "record must be a JSON object");

    SampleRecord rec;
    rec.line = line_no;
    bool have_id = false, have_dataset = false, have_text = false;
    for (const auto& [key, value] : row.items()) {
      if (key == "id") {
        rec.id = require_string(value, line_no, "id");
        have_id = true;
      } else if (key == "dataset") {
        rec.dataset = require_string(value, line_no, "dataset");
        have_dataset = true;
      } else if (key == "text") {
        rec.text = require_string(value, line_no, "text");
        have_text = true;
      } else if (key == "question") {
        rec.task.query = require_string(value, line_no, "question");
      } else if (key == "scale") {
        rec.scale = require_finite_number(value, line_no, "scale");
        if (!(rec.scale > 0)) line_error(line_no, "scale must be positive");
      } else if (key == "task") {
        if (!value.is_object()) line_error(line_no, "'task' must be an object");
        for (const auto& [tk, tv] : value.items()) {
          if (tk == "answer_format") {
            rec.task.answer_format = features::parse_answer_format(
                require_string(tv, line_no, "task.answer_format"));
          } else if (tk == "w_override") {
            rec.task.w_override =
                require_finite_number(tv, line_no, "task.w_override");
          } else {
            line_error(line_no, "unknown key 'task." + tk + "'");
          }
        }
      } else if (key == "scores") {
        if (!value.is_object()) {
          line_error(line_no, "'scores' must be an object");
        }
        for (const auto& [sk, sv] : value.items()) {
          const double d =
              require_finite_number(sv, line_no, "scores." + sk);
          if (sk == "text") rec.scores.text = d;
          else if (sk == "vis") rec.scores.vis = d;
          else if (sk == "fov") rec.scores.fov = d;
          else line_error(line_no, "unknown key 'scores." + sk + "'");
        }
      } else {
        line_error(line_no, "unknown key '" + key + "'");
      }
    }
    if (!have_id) line_error(line_no, "missing required field 'id'");
    if (rec.id.empty()) line_error(line_no, "'id' must be non-empty");
    if (!have_dataset) line_error(line_no, "missing required field 'dataset'");
    if (!have_text) line_error(line_no, "missing required field 'text'");
    if (!seen_ids.insert(rec.id).second) {
      line_error(line_no, "duplicate id '" + rec.id + "'");
    }

    const std::pair<const char*, std::optional<double>> checks[] = {
        {"text", rec.scores.text}, {"vis", rec.scores.vis},
        {"fov", rec.scores.fov}};
    for (const auto& [name, score] : checks) {
      if (score && (*score < 0 || *score > rec.scale)) {
        rec.score_out_of_scale = true;
        std::ostringstream os;
        os << "line " << line_no << ": score '" << name << "' (" << *score
           << ") outside declared scale [0, " << rec.scale << "] for sample "
           << rec.id;
        result.warnings.push_back(os.str());
      }
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

LoadResult load_samples_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open samples file: " + path);
  return load_samples(in);
}

PairedGap paired_gap(double s_text, double s_vis) {
  PairedGap g;
  g.delta = s_text - s_vis;
  g.advantage = -g.delta;
  return g;
}

std::vector<QuantileBucket> quantile_buckets(
    const std::vector<double>& cost_values,
    const std::vector<double>& advantages, int k) {
  if (k < 2) throw ConfigError("bucket count must be at least 2");
  if (cost_values.size() != advantages.size()) {
    throw DataError("cost and advantage series differ in length");
  }
  const std::size_t n = cost_values.size();
  if (n < static_cast<std::size_t>(k)) {
    throw DataError("need at least k samples for k quantile buckets");
  }
  const std::vector<double> edges = quantile_edges(cost_values, k);
  const auto [min_it, max_it] =
      std::minmax_element(cost_values.begin(), cost_values.end());

  std::vector<QuantileBucket> buckets(static_cast<std::size_t>(k));
  std::vector<std::int64_t> wins(static_cast<std::size_t>(k), 0);
  for (int j = 0; j < k; ++j) {
    QuantileBucket& b = buckets[static_cast<std::size_t>(j)];
    b.c_lo = j == 0 ? *min_it : edges[static_cast<std::size_t>(j) - 1];
    b.c_hi = j == k - 1 ? *max_it : edges[static_cast<std::size_t>(j)];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int j = bucket_of(edges, cost_values[i]);
    QuantileBucket& b = buckets[static_cast<std::size_t>(j)];
    ++b.n;
    b.mean_advantage += advantages[i];
    if (advantages[i] > 0) ++wins[static_cast<std::size_t>(j)];
  }
  for (int j = 0; j < k; ++j) {
    QuantileBucket& b = buckets[static_cast<std::size_t>(j)];
    if (b.n > 0) {
      b.mean_advantage /= static_cast<double>(b.n);
      b.win_rate = static_cast<double>(wins[static_cast<std::size_t>(j)]) /
                   static_cast<double>(b.n);
    }
  }
  return buckets;
}

SpearmanResult spearman(const std::vector<double>& xs,
                        const std::vector<double>& ys) {
  if (xs.size() != ys.size()) {
    throw DataError("rank correlation needs series of equal length");
  }
  if (xs.size() < 2) {
    throw DataError("rank correlation needs at least two points");
  }
  const std::vector<double> rx = average_ranks(xs);
  const std::vector<double> ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = rx[i] - mx, dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  SpearmanResult r;
  if (sxx <= 0 || syy <= 0) {
    r.defined = false;  // constant series: correlation undefined
    return r;
  }
  r.rho = sxy / std::sqrt(sxx * syy);
  r.defined = true;
  return r;
}

JointGrid joint_grid(const std::vector<double>& vcr_values,
                     const std::vector<double>& cost_values,
                     const std::vector<double>& advantages) {
  if (vcr_values.size() != cost_values.size() ||
      cost_values.size() != advantages.size()) {
    throw DataError("joint grid needs aligned series");
  }
  if (vcr_values.size() < 9) {
    throw DataError("joint grid needs at least 9 samples");
  }
  const std::vector<double> vcr_edges = quantile_edges(vcr_values, 3);
  const std::vector<double> c_edges = quantile_edges(cost_values, 3);
  JointGrid grid;
  for (std::size_t i = 0; i < vcr_values.size(); ++i) {
    GridCell& cell = grid.at(bucket_of(vcr_edges, vcr_values[i]),
                             bucket_of(c_edges, cost_values[i]));
    ++cell.n;
    cell.mean_advantage += advantages[i];
  }
  for (GridCell& cell : grid.cells) {
    if (cell.n > 0) cell.mean_advantage /= static_cast<double>(cell.n);
  }
  return grid;
}

OracleResult oracle_accuracy(const std::vector<OracleInput>& inputs) {
  OracleResult r;
  r.total = static_cast<int>(inputs.size());
  for (const OracleInput& in : inputs) {
    if (label_matches(oracle_label(in.s_text, in.s_vis, in.s_fov),
                      in.decision)) {
      ++r.matches;
    }
  }
  return r;
}

TauSweep tau_sweep(const std::vector<double>& te_values,
                   const std::vector<OracleLabel>& labels, double lo,
                   double hi, double step) {
  if (te_values.size() != labels.size()) {
    throw DataError("sweep needs aligned efficiency and label series");
  }
  if (!(step > 0) || hi < lo) throw ConfigError("invalid sweep grid");
  TauSweep sweep;
  const long long steps = std::llround((hi - lo) / step);
  const double n = static_cast<double>(te_values.size());
  for (long long i = 0; i <= steps; ++i) {
    const double tau = lo + static_cast<double>(i) * step;
    int matches = 0;
    for (std::size_t s = 0; s < te_values.size(); ++s) {
      const bool visual = te_values[s] >= tau;
      const bool match =
          labels[s] == OracleLabel::tie ||
          (labels[s] == OracleLabel::visual ? visual : !visual);
      if (match) ++matches;
    }
    const double acc = n > 0 ? static_cast<double>(matches) / n : 0.0;
    sweep.points.push_back({tau, acc});
  }
  for (const SweepPoint& p : sweep.points) {
    if (!sweep.plateaus.empty() &&
        sweep.plateaus.back().accuracy == p.accuracy) {
      sweep.plateaus.back().hi = p.tau;
    } else {
      sweep.plateaus.push_back({p.tau, p.tau, p.accuracy});
    }
  }
  if (!sweep.plateaus.empty()) {
    sweep.best_accuracy = sweep.plateaus.front().accuracy;
    sweep.best_tau = sweep.plateaus.front().lo;
    for (const Plateau& p : sweep.plateaus) {
      if (p.accuracy > sweep.best_accuracy) {
        sweep.best_accuracy = p.accuracy;
        sweep.best_tau = p.lo;
      }
    }
  }
  return sweep;
}

TriggerStats trigger_stats(const std::vector<bool>& triggered,
                           const std::vector<double>& fov_deltas) {
  TriggerStats s;
  s.total = static_cast<std::int64_t>(triggered.size());
  for (bool t : triggered) {
    if (t) ++s.triggered;
  }
  s.rate = s.total > 0
               ? static_cast<double>(s.triggered) / static_cast<double>(s.total)
               : 0.0;
  if (s.triggered == 0) {
    // Reported as exactly +0.00 regardless of incidental score noise.
    s.delta_fov = 0.0;
    s.forced_zero = true;
  } else if (!fov_deltas.empty()) {
    s.delta_fov = std::accumulate(fov_deltas.begin(), fov_deltas.end(), 0.0) /
                  static_cast<double>(fov_deltas.size());
  }
  return s;
}

features::FeatureVector macro_features(
    const std::vector<features::FeatureVector>& fvs) {
  if (fvs.empty()) throw DataError("macro features need at least one sample");
  const double n = static_cast<double>(fvs.size());
  double w = 0, l = 0, trr = 0, tn = 0, tm = 0;
  for (const auto& fv : fvs) {
    w += fv.w;
    l += fv.l;
    trr += fv.trr;
    tn += static_cast<double>(fv.n);
    tm += static_cast<double>(fv.m);
  }
  features::FeatureVector macro;
  macro.w = w / n;
  macro.l = l / n;
  macro.trr = trr / n;
  const double mean_n = tn / n, mean_m = tm / n;
  macro.n = std::llround(mean_n);
  macro.m = mean_m > 0 ? std::max<std::int64_t>(1, std::llround(mean_m)) : 0;
  if (mean_m > 0) {
    macro.vcr = mean_n / mean_m;
    macro.vcr_defined = true;
  }
  return macro;
}

namespace {

struct DatasetAccum {
  std::vector<features::FeatureVector> fvs;
  std::vector<double> s_text, s_vis, s_fov;
  std::vector<double> advantages;  // per-sample, where text+vis present
  std::vector<bool> triggered;
  std::vector<double> fov_deltas;  // s_fov - s_vis, where both present
  std::int64_t visual_rows = 0;
  std::int64_t rows = 0;
};

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

}  // namespace

EvalReport run_evaluation(const std::vector<SampleRecord>& records,
                          const EvalOptions& opts) {
  opts.params.validate();
  opts.render.validate();
  opts.fov.validate();
  if (opts.bucket_count < 2) {
    throw ConfigError("bucket count must be at least 2");
  }
  const auto counter = features::make_token_counter(opts.features.tokenizer);
  foveate::InkVarianceProvider provider(opts.render);

  EvalReport rep;
  rep.timestamp = utc_timestamp();
  rep.params = opts.params;
  rep.variant = opts.variant;

  std::vector<const SampleRecord*> ordered;
  ordered.reserve(records.size());
  for (const auto& r : records) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const SampleRecord* a, const SampleRecord* b) {
              return a->id < b->id;
            });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i]->id == ordered[i - 1]->id) {
      throw DataError("duplicate sample id '" + ordered[i]->id + "'");
    }
  }

  std::map<std::string, DatasetAccum> groups;
  for (const SampleRecord* rec : ordered) {
    const render::RenderedDocument doc =
        render::layout_document_utf8(rec->text, opts.render);
    const features::FeatureVector fv =
        features::extract_features(doc, rec->task, opts.features, *counter);
    const cost::Decision dec = cost::route(fv, opts.params, opts.variant);

    SampleRow row;
    row.id = rec->id;
    row.dataset = rec->dataset;
    row.fv = fv;
    row.cost = dec.breakdown;
    row.isr = dec.isr;
    row.te = dec.te;
    row.decision = dec.path;
    row.decision_reason = dec.reason;
    row.te_fov = dec.te;
    row.score_out_of_scale = rec->score_out_of_scale;

    if (opts.run_foveation && fv.m > 0 && !doc.pages.empty()) {
      const render::AlignmentIndex alignment = render::build_alignment(doc);
      const foveate::PatchCostMap map = foveate::patch_cost_map(
          doc, alignment, rec->task.query, opts.params, provider);
      const foveate::FoveationPlan plan =
          foveate::select_regions(map, opts.fov, dec.isr, fv.m, fv.n);
      row.fov_triggered = plan.triggered;
      row.fov_n_c = plan.n_c;
      row.fov_sum_dc = plan.sum_dc;
      row.te_fov = plan.te_fov;
    }

    if (rec->scores.text && rec->scores.vis) {
      const PairedGap gap = paired_gap(*rec->scores.text, *rec->scores.vis);
      row.delta = gap.delta;
      row.advantage = gap.advantage;
    }

    DatasetAccum& acc = groups[rec->dataset];
    acc.fvs.push_back(fv);
    ++acc.rows;
    if (dec.path == cost::PathChoice::visual) ++acc.visual_rows;
    if (rec->scores.text) acc.s_text.push_back(*rec->scores.text);
    if (rec->scores.vis) acc.s_vis.push_back(*rec->scores.vis);
    if (rec->scores.fov) acc.s_fov.push_back(*rec->scores.fov);
    if (row.advantage) acc.advantages.push_back(*row.advantage);
    acc.triggered.push_back(row.fov_triggered);
    if (rec->scores.vis && rec->scores.fov) {
      acc.fov_deltas.push_back(*rec->scores.fov - *rec->scores.vis);
    }
    rep.rows.push_back(std::move(row));
  }

  std::vector<double> agg_c, agg_adv, agg_vcr;
  std::vector<double> sweep_te;
  std::vector<OracleLabel> sweep_labels;
  int oracle_matches = 0, oracle_total = 0;

  for (auto& [name, acc] : groups) {
    DatasetSummary ds;
    ds.dataset = name;
    ds.n = acc.rows;
    ds.macro = macro_features(acc.fvs);
    const cost::Decision dec = cost::route(ds.macro, opts.params, opts.variant);
    ds.cost = dec.breakdown;
    ds.isr = dec.isr;
    ds.te = dec.te;
    ds.decision = dec.path;
    if (opts.per_sample_routing) {
      // Majority of per-sample decisions; an exact split goes visual, in the
      // same spirit as the tie-goes-visual threshold rule.
      ds.decision = (2 * acc.visual_rows >= acc.rows)
                        ? cost::PathChoice::visual
                        : cost::PathChoice::text;
    }
    ds.mean_s_text = mean_of(acc.s_text);
    ds.mean_s_vis = mean_of(acc.s_vis);
    ds.mean_s_fov = mean_of(acc.s_fov);
    ds.mean_advantage = mean_of(acc.advantages);
    if (ds.mean_s_text && ds.mean_s_vis) {
      const OracleLabel label =
          oracle_label(*ds.mean_s_text, *ds.mean_s_vis, ds.mean_s_fov);
      ds.oracle = label;
      ds.oracle_match = label_matches(label, ds.decision);
      ++oracle_total;
      if (ds.oracle_match) ++oracle_matches;
      sweep_te.push_back(ds.te);
      sweep_labels.push_back(label);
    }
    ds.trigger = trigger_stats(acc.triggered, acc.fov_deltas);
    if (ds.mean_advantage) {
      agg_c.push_back(ds.cost.total);
      agg_adv.push_back(*ds.mean_advantage);
      agg_vcr.push_back(ds.macro.vcr);
    }
    rep.datasets.push_back(std::move(ds));
  }

  rep.oracle.matches = oracle_matches;
  rep.oracle.total = oracle_total;

  if (agg_c.size() >= static_cast<std::size_t>(opts.bucket_count)) {
    rep.buckets = quantile_buckets(agg_c, agg_adv, opts.bucket_count);
  } else {
    rep.notes.push_back(
        "quantile buckets skipped: fewer paired datasets than buckets");
  }
  if (agg_c.size() >= 2) {
    rep.spearman = spearman(agg_c, agg_adv);
  } else {
    rep.notes.push_back(
        "rank correlation skipped: fewer than two paired datasets");
  }
  if (agg_c.size() >= 9) {
    rep.grid = joint_grid(agg_vcr, agg_c, agg_adv);
  } else {
    rep.notes.push_back("joint grid skipped: fewer than nine paired datasets");
  }
  if (!sweep_te.empty()) {
    rep.sweep = tau_sweep(sweep_te, sweep_labels, opts.sweep_lo, opts.sweep_hi,
                          opts.sweep_step);
  } else {
    rep.notes.push_back("threshold sweep skipped: no datasets with an oracle");
  }
  return rep;
}

namespace {

json fv_to_json(const features::FeatureVector& fv) {
  json j;
  j["w"] = fv.w;
  j["l"] = fv.l;
  j["trr"] = fv.trr;
  j["n"] = fv.n;
  j["m"] = fv.m;
  if (fv.vcr_defined) {
    j["vcr"] = fv.vcr;
  } else {
    j["vcr"] = nullptr;
  }
  return j;
}

json cost_to_json(const cost::CostBreakdown& c) {
  return json{{"intra", c.intra}, {"inter", c.inter}, {"total", c.total}};
}

json opt_to_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

const char* label_name(OracleLabel l) {
  switch (l) {
    case OracleLabel::text: return "text";
    case OracleLabel::visual: return "visual";
    case OracleLabel::tie: return "tie";
  }
  return "text";
}

}  // namespace

std::string report_to_json(const EvalReport& report, bool include_timestamp) {
  json j;
  j["kind"] = "vtc-eval-report/1";
  if (include_timestamp) j["timestamp"] = report.timestamp;
  j["params"] = {{"alpha", report.params.alpha},
                 {"beta", report.params.beta},
                 {"gamma", report.params.gamma},
                 {"tau", report.params.tau},
                 {"vcr_cap", opt_to_json(report.params.vcr_cap)},
                 {"variant", std::string(cost::to_string(report.variant))}};

  j["rows"] = json::array();
  for (const SampleRow& r : report.rows) {
    json row;
    row["id"] = r.id;
    row["dataset"] = r.dataset;
    row["features"] = fv_to_json(r.fv);
    row["cost"] = cost_to_json(r.cost);
    row["isr"] = r.isr;
    row["te"] = r.te;
    row["decision"] = std::string(cost::to_string(r.decision));
    row["reason"] = r.decision_reason;
    row["foveation"] = {{"triggered", r.fov_triggered},
                        {"n_c", r.fov_n_c},
                        {"sum_dc", r.fov_sum_dc},
                        {"te_fov", r.te_fov}};
    row["delta"] = opt_to_json(r.delta);
    row["advantage"] = opt_to_json(r.advantage);
    row["score_out_of_scale"] = r.score_out_of_scale;
    j["rows"].push_back(std::move(row));
  }

  j["datasets"] = json::array();
  for (const DatasetSummary& d : report.datasets) {
    json ds;
    ds["dataset"] = d.dataset;
    ds["n"] = d.n;
    ds["macro"] = fv_to_json(d.macro);
    ds["cost"] = cost_to_json(d.cost);
    ds["isr"] = d.isr;
    ds["te"] = d.te;
    ds["decision"] = std::string(cost::to_string(d.decision));
    ds["scores"] = {{"text", opt_to_json(d.mean_s_text)},
                    {"vis", opt_to_json(d.mean_s_vis)},
                    {"fov", opt_to_json(d.mean_s_fov)}};
    ds["mean_advantage"] = opt_to_json(d.mean_advantage);
    ds["oracle"] = d.oracle ? json(label_name(*d.oracle)) : json(nullptr);
    ds["oracle_match"] = d.oracle_match;
    ds["trigger"] = {{"total", d.trigger.total},
                     {"triggered", d.trigger.triggered},
                     {"rate", d.trigger.rate},
                     {"delta_fov", d.trigger.delta_fov},
                     {"forced_zero", d.trigger.forced_zero}};
    j["datasets"].push_back(std::move(ds));
  }

  json agg;
  agg["buckets"] = json::array();
  for (const QuantileBucket& b : report.buckets) {
    agg["buckets"].push_back({{"c_lo", b.c_lo},
                              {"c_hi", b.c_hi},
                              {"n", b.n},
                              {"mean_advantage", b.mean_advantage},
                              {"win_rate", b.win_rate}});
  }
  agg["spearman"] = {{"rho", report.spearman.rho},
                     {"defined", report.spearman.defined}};
  if (report.grid) {
    json rows = json::array();
    for (int vr = 0; vr < 3; ++vr) {
      json cols = json::array();
      for (int cc = 0; cc < 3; ++cc) {
        const GridCell& cell = report.grid->at(vr, cc);
        cols.push_back(
            {{"n", cell.n}, {"mean_advantage", cell.mean_advantage}});
      }
      rows.push_back(std::move(cols));
    }
    agg["grid"] = std::move(rows);
  } else {
    agg["grid"] = nullptr;
  }
  agg["oracle"] = {{"matches", report.oracle.matches},
                   {"total", report.oracle.total}};
  json sweep;
  sweep["points"] = json::array();
  for (const SweepPoint& p : report.sweep.points) {
    sweep["points"].push_back({{"tau", p.tau}, {"accuracy", p.accuracy}});
  }
  sweep["plateaus"] = json::array();
  for (const Plateau& p : report.sweep.plateaus) {
    sweep["plateaus"].push_back(
        {{"lo", p.lo}, {"hi", p.hi}, {"accuracy", p.accuracy}});
  }
  sweep["best_tau"] = report.sweep.best_tau;
  sweep["best_accuracy"] = report.sweep.best_accuracy;
  agg["sweep"] = std::move(sweep);
  j["aggregates"] = std::move(agg);
  j["notes"] = report.notes;
  return j.dump(2);
}

std::string report_rows_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "id,dataset,w,l,trr,n,m,vcr,cost_intra,cost_inter,cost_total,isr,te,"
         "decision,fov_triggered,fov_n_c,fov_sum_dc,te_fov,delta,advantage,"
         "score_out_of_scale\n";
  for (const SampleRow& r : report.rows) {
    out << csv_escape(r.id) << ',' << csv_escape(r.dataset) << ','
        << fmt_double(r.fv.w) << ',' << fmt_double(r.fv.l) << ','
        << fmt_double(r.fv.trr) << ',' << r.fv.n << ',' << r.fv.m << ','
        << (r.fv.vcr_defined ? fmt_double(r.fv.vcr) : std::string()) << ','
        << fmt_double(r.cost.intra) << ',' << fmt_double(r.cost.inter) << ','
        << fmt_double(r.cost.total) << ',' << fmt_double(r.isr) << ','
        << fmt_double(r.te) << ',' << cost::to_string(r.decision) << ','
        << (r.fov_triggered ? "true" : "false") << ',' << r.fov_n_c << ','
        << fmt_double(r.fov_sum_dc) << ',' << fmt_double(r.te_fov) << ','
        << (r.delta ? fmt_double(*r.delta) : std::string()) << ','
        << (r.advantage ? fmt_double(*r.advantage) : std::string()) << ','
        << (r.score_out_of_scale ? "true" : "false") << '\n';
  }
  return out.str();
}

std::vector<std::string> emit_report(const EvalReport& report,
                                     const std::string& out_dir,
                                     const std::vector<std::string>& formats) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory: " + out_dir);
  std::vector<std::string> written;
  for (const std::string& fmt : formats) {
    std::string path, payload;
    if (fmt == "json") {
      path = (fs::path(out_dir) / "report.json").string();
      payload = report_to_json(report, true);
    } else if (fmt == "csv") {
      path = (fs::path(out_dir) / "report.csv").string();
      payload = report_rows_csv(report);
    } else {
      throw ConfigError("unknown report format: " + fmt);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << payload;
    if (!out) throw DataError("failed while writing " + path);
    written.push_back(path);
  }
  return written;
}

std::string utc_timestamp() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace vtc::harness
