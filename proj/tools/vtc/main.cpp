// Command-line surface for the routing engine and foveation planner.
//
// Exit codes: 0 success, 1 usage/config error, 2 data validation error,
// 3 internal invariant violation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vtc/calibrate.hpp"
#include "vtc/config.hpp"
#include "vtc/cost.hpp"
#include "vtc/errors.hpp"
#include "vtc/features.hpp"
#include "vtc/foveate.hpp"
#include "vtc/harness.hpp"
#include "vtc/render.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw vtc::DataError("cannot open input file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& payload) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) {
      throw vtc::DataError("cannot create directory: " +
                           p.parent_path().string());
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw vtc::DataError("cannot write " + path);
  out << payload;
  if (!out) throw vtc::DataError("failed while writing " + path);
}

std::string env_out_dir() {
  if (const char* env = std::getenv("VTC_OUT_DIR")) {
    if (*env != '\0') return env;
  }
  return "";
}

// Single-file outputs: --out wins; else the directory override plus a default
// name; else stdout (empty return).
std::string resolve_output_file(const std::string& out_flag,
                                const std::string& default_name) {
  if (!out_flag.empty()) return out_flag;
  const std::string dir = env_out_dir();
  if (!dir.empty()) return (fs::path(dir) / default_name).string();
  return "";
}

// Multi-file outputs always need a directory.
std::string resolve_output_dir(const std::string& out_flag) {
  if (!out_flag.empty()) return out_flag;
  const std::string dir = env_out_dir();
  if (!dir.empty()) return dir;
  return "vtc-out";
}

void emit_single(const std::string& out_flag, const std::string& default_name,
                 const std::string& payload) {
  const std::string path = resolve_output_file(out_flag, default_name);
  if (path.empty()) {
    std::cout << payload;
    if (payload.empty() || payload.back() != '\n') std::cout << '\n';
  } else {
    write_text_file(path, payload);
    std::cerr << "wrote " << path << "\n";
  }
}

std::vector<std::string> split_formats(const std::string& format) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : format) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  if (out.empty()) throw vtc::ConfigError("empty --format");
  return out;
}

void check_formats(const std::vector<std::string>& formats,
                   const std::vector<std::string>& allowed) {
  for (const auto& f : formats) {
    bool ok = false;
    for (const auto& a : allowed) {
      if (f == a) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      std::string msg = "unsupported format '" + f + "' (expected one of";
      for (const auto& a : allowed) msg += " " + a;
      msg += ")";
      throw vtc::ConfigError(msg);
    }
  }
}

struct CommonFlags {
  std::string config_path;
  std::string preset;
  std::string out;
  std::string format = "json";
  std::uint64_t seed = 0;
  bool seed_given = false;
};

vtc::config::RunConfig build_config(const CommonFlags& flags) {
  vtc::config::RunConfig cfg = flags.config_path.empty()
                                   ? vtc::config::default_run_config()
                                   : vtc::config::load_run_config(
                                         flags.config_path);
  if (!flags.preset.empty()) vtc::config::apply_preset(cfg, flags.preset);
  if (flags.seed_given) cfg.seed = flags.seed;
  return cfg;
}

std::unique_ptr<vtc::calibrate::Scorer> make_scorer(const std::string& spec) {
  using namespace vtc::calibrate;
  if (spec == "mock") return std::make_unique<MockScorer>();
  if (spec.rfind("mock-slope=", 0) == 0) {
    const std::string v = spec.substr(std::string("mock-slope=").size());
    try {
      return std::make_unique<MockScorer>(std::stod(v));
    } catch (const std::exception&) {
      throw vtc::ConfigError("invalid mock slope: " + v);
    }
  }
  if (spec.rfind("replay=", 0) == 0) {
    return std::make_unique<ReplayScorer>(
        ReplayScorer::from_file(spec.substr(std::string("replay=").size())));
  }
  if (spec == "remote-stub") return std::make_unique<RemoteStubScorer>();
  throw vtc::ConfigError(
      "unknown scorer '" + spec +
      "' (expected mock, mock-slope=<v>, replay=<path>, remote-stub)");
}

json feature_row(const vtc::harness::SampleRecord& rec,
                 const vtc::features::FeatureVector& fv) {
  json j;
  j["id"] = rec.id;
  j["dataset"] = rec.dataset;
  j["w"] = fv.w;
  j["l"] = fv.l;
  j["trr"] = fv.trr;
  j["n"] = fv.n;
  j["m"] = fv.m;
  if (fv.vcr_defined) j["vcr"] = fv.vcr;
  else j["vcr"] = nullptr;
  return j;
}

int cmd_render(const CommonFlags& flags, const std::string& in_path) {
  const auto cfg = build_config(flags);
  check_formats(split_formats(flags.format), {"json"});
  const std::string text = read_input(in_path);
  const auto doc = vtc::render::layout_document_utf8(text, cfg.render);
  emit_single(flags.out, "render.json", vtc::render::document_to_json(doc));
  return 0;
}

int cmd_features(const CommonFlags& flags, const std::string& in_path) {
  const auto cfg = build_config(flags);
  check_formats(split_formats(flags.format), {"json"});
  const auto loaded = vtc::harness::load_samples_file(in_path);
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << "\n";
  const auto counter =
      vtc::features::make_token_counter(cfg.features.tokenizer);
  std::ostringstream out;
  for (const auto& rec : loaded.records) {
    const auto doc = vtc::render::layout_document_utf8(rec.text, cfg.render);
    const auto fv =
        vtc::features::extract_features(doc, rec.task, cfg.features, *counter);
    out << feature_row(rec, fv).dump() << "\n";
  }
  emit_single(flags.out, "features.jsonl", out.str());
  return 0;
}

int cmd_route(const CommonFlags& flags, const std::string& in_path) {
  const auto cfg = build_config(flags);
  check_formats(split_formats(flags.format), {"json"});
  const auto loaded = vtc::harness::load_samples_file(in_path);
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << "\n";
  const auto counter =
      vtc::features::make_token_counter(cfg.features.tokenizer);
  std::ostringstream out;
  for (const auto& rec : loaded.records) {
    const auto doc = vtc::render::layout_document_utf8(rec.text, cfg.render);
    const auto fv =
        vtc::features::extract_features(doc, rec.task, cfg.features, *counter);
    const auto dec = vtc::cost::route(fv, cfg.params, cfg.variant);
    json j = feature_row(rec, fv);
    j["cost"] = dec.breakdown.total;
    j["isr"] = dec.isr;
    j["te"] = dec.te;
    j["decision"] = std::string(vtc::cost::to_string(dec.path));
    j["reason"] = dec.reason;
    out << j.dump() << "\n";
  }
  emit_single(flags.out, "route.jsonl", out.str());
  return 0;
}

int cmd_foveate(const CommonFlags& flags, const std::string& in_path,
                const std::string& question) {
  const auto cfg = build_config(flags);
  const auto formats = split_formats(flags.format);
  check_formats(formats, {"json", "pgm", "svg"});
  const std::string text = read_input(in_path);
  const auto doc = vtc::render::layout_document_utf8(text, cfg.render);

  vtc::features::TaskSpec task;
  task.query = question;
  const auto counter =
      vtc::features::make_token_counter(cfg.features.tokenizer);
  const auto fv =
      vtc::features::extract_features(doc, task, cfg.features, *counter);
  const auto dec = vtc::cost::route(fv, cfg.params, cfg.variant);

  vtc::foveate::PatchCostMap map;
  vtc::foveate::FoveationPlan plan;
  if (fv.m > 0 && !doc.pages.empty()) {
    const auto alignment = vtc::render::build_alignment(doc);
    vtc::foveate::InkVarianceProvider provider(cfg.render);
    map = vtc::foveate::patch_cost_map(doc, alignment, question, cfg.params,
                                       provider);
    plan = vtc::foveate::select_regions(map, cfg.fov, dec.isr, fv.m, fv.n);
  } else {
    plan.reason = "document renders no visual tokens";
  }

  const bool wants_heatmaps =
      std::any_of(formats.begin(), formats.end(),
                  [](const std::string& f) { return f != "json"; });
  if (!wants_heatmaps) {
    emit_single(flags.out, "plan.json", vtc::foveate::plan_to_json(plan));
    return 0;
  }
  const std::string dir = resolve_output_dir(flags.out);
  for (const auto& fmt : formats) {
    if (fmt == "json") {
      write_text_file((fs::path(dir) / "plan.json").string(),
                      vtc::foveate::plan_to_json(plan));
      std::cerr << "wrote " << (fs::path(dir) / "plan.json").string() << "\n";
    } else {
      for (std::size_t p = 0; p < map.pages.size(); ++p) {
        std::ostringstream payload;
        std::string name;
        if (fmt == "pgm") {
          vtc::foveate::write_pgm(map, p, payload);
          name = "cost-map-page" + std::to_string(p) + ".pgm";
        } else {
          vtc::foveate::write_svg(map, plan, p, payload);
          name = "overlay-page" + std::to_string(p) + ".svg";
        }
        write_text_file((fs::path(dir) / name).string(), payload.str());
        std::cerr << "wrote " << (fs::path(dir) / name).string() << "\n";
      }
    }
  }
  return 0;
}

int cmd_calibrate(const CommonFlags& flags, const std::string& scorer_spec,
                  const std::string& export_probes) {
  const auto cfg = build_config(flags);
  check_formats(split_formats(flags.format), {"json"});
  if (!export_probes.empty()) {
    std::ostringstream out;
    const auto alpha = vtc::calibrate::generate_alpha_probe(cfg.seed);
    const auto beta = vtc::calibrate::generate_beta_probe(cfg.seed);
    const auto gamma = vtc::calibrate::generate_gamma_probe(cfg.seed);
    vtc::calibrate::export_probes_jsonl(out, alpha);
    vtc::calibrate::export_probes_jsonl(out, beta);
    vtc::calibrate::export_probes_jsonl(out, gamma);
    write_text_file(export_probes, out.str());
    std::cerr << "wrote " << export_probes << "\n";
  }
  const auto scorer = make_scorer(scorer_spec);
  const auto report = vtc::calibrate::run_calibration(*scorer, cfg.seed);
  emit_single(flags.out, "calibration.json", report.to_json(cfg.params.tau));
  return 0;
}

int cmd_evaluate(const CommonFlags& flags, const std::string& in_path) {
  const auto cfg = build_config(flags);
  auto formats = split_formats(flags.format);
  check_formats(formats, {"json", "csv"});
  const auto loaded = vtc::harness::load_samples_file(in_path);
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << "\n";
  const auto report = vtc::harness::run_evaluation(
      loaded.records, vtc::config::to_eval_options(cfg));
  const std::string dir = resolve_output_dir(flags.out);
  const auto written = vtc::harness::emit_report(report, dir, formats);
  for (const auto& p : written) std::cerr << "wrote " << p << "\n";
  std::cout << "samples: " << report.rows.size()
            << "  datasets: " << report.datasets.size()
            << "  oracle: " << report.oracle.matches << "/"
            << report.oracle.total << "\n";
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& in_path) {
  const auto cfg = build_config(flags);
  const auto formats = split_formats(flags.format);
  check_formats(formats, {"json", "csv"});
  if (formats.size() != 1) {
    throw vtc::ConfigError("sweep emits a single file; pass one format");
  }
  const auto loaded = vtc::harness::load_samples_file(in_path);
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << "\n";
  const auto report = vtc::harness::run_evaluation(
      loaded.records, vtc::config::to_eval_options(cfg));
  if (formats[0] == "csv") {
    std::ostringstream out;
    out << "tau,accuracy\n";
    for (const auto& p : report.sweep.points) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.2f,%.10g\n", p.tau, p.accuracy);
      out << buf;
    }
    emit_single(flags.out, "sweep.csv", out.str());
  } else {
    json j;
    j["kind"] = "vtc-threshold-sweep/1";
    j["points"] = json::array();
    for (const auto& p : report.sweep.points) {
      j["points"].push_back({{"tau", p.tau}, {"accuracy", p.accuracy}});
    }
    j["plateaus"] = json::array();
    for (const auto& p : report.sweep.plateaus) {
      j["plateaus"].push_back(
          {{"lo", p.lo}, {"hi", p.hi}, {"accuracy", p.accuracy}});
    }
    j["best_tau"] = report.sweep.best_tau;
    j["best_accuracy"] = report.sweep.best_accuracy;
    emit_single(flags.out, "sweep.json", j.dump(2));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "vtc: transport-cost routing and foveation planning for rendered text"};
  app.require_subcommand(1);

  CommonFlags flags;
  app.add_option("--config", flags.config_path, "JSON config file");
  app.add_option("--preset", flags.preset,
                 "parameter preset (4b, 8b, or 32b)")
      ->check(CLI::IsMember({"4b", "8b", "32b"}));
  auto* seed_opt = app.add_option("--seed", flags.seed, "probe/random seed");
  app.add_option("--out", flags.out, "output file or directory");
  app.add_option("--format", flags.format,
                 "output format(s), comma separated: json,csv,pgm,svg");

  std::string in_path = "-", question, scorer_spec = "mock", export_probes;

  auto* render_cmd =
      app.add_subcommand("render", "lay out a text file; print layout JSON");
  render_cmd->add_option("--in", in_path, "text file, or - for stdin");
  render_cmd->fallthrough();

  auto* features_cmd = app.add_subcommand(
      "features", "extract feature vectors from a samples JSONL file");
  features_cmd->add_option("--in", in_path, "samples JSONL")->required();
  features_cmd->fallthrough();

  auto* route_cmd = app.add_subcommand(
      "route", "route every sample in a JSONL file; print decisions");
  route_cmd->add_option("--in", in_path, "samples JSONL")->required();
  route_cmd->fallthrough();

  auto* foveate_cmd = app.add_subcommand(
      "foveate", "build a patch cost map and crop plan for one document");
  foveate_cmd->add_option("--in", in_path, "text file, or - for stdin");
  foveate_cmd->add_option("--question", question, "relevance query");
  foveate_cmd->fallthrough();

  auto* calibrate_cmd = app.add_subcommand(
      "calibrate", "run the probe battery through a scorer and fit parameters");
  calibrate_cmd->add_option(
      "--scorer", scorer_spec,
      "mock | mock-slope=<v> | replay=<path> | remote-stub");
  calibrate_cmd->add_option("--export-probes", export_probes,
                            "also write the probe set to this JSONL path");
  calibrate_cmd->fallthrough();

  auto* evaluate_cmd = app.add_subcommand(
      "evaluate", "full pipeline over a samples file; write a report");
  evaluate_cmd->add_option("--in", in_path, "samples JSONL")->required();
  evaluate_cmd->fallthrough();

  auto* sweep_cmd = app.add_subcommand(
      "sweep", "accuracy across the decision-threshold grid");
  sweep_cmd->add_option("--in", in_path, "samples JSONL")->required();
  sweep_cmd->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  flags.seed_given = seed_opt->count() > 0;

  try {
    if (render_cmd->parsed()) return cmd_render(flags, in_path);
    if (features_cmd->parsed()) return cmd_features(flags, in_path);
    if (route_cmd->parsed()) return cmd_route(flags, in_path);
    if (foveate_cmd->parsed()) return cmd_foveate(flags, in_path, question);
    if (calibrate_cmd->parsed()) {
      return cmd_calibrate(flags, scorer_spec, export_probes);
    }
    if (evaluate_cmd->parsed()) return cmd_evaluate(flags, in_path);
    if (sweep_cmd->parsed()) return cmd_sweep(flags, in_path);
    std::cerr << "error: no subcommand selected\n";
    return 1;
  } catch (const vtc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const vtc::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
