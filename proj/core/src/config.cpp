#include "vtc/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vtc/errors.hpp"
#include "vtc/font_table.hpp"

namespace vtc::config {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void unknown_key(const std::string& path) {
  throw ConfigError("config: unknown key '" + path + "'");
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) {
    throw ConfigError("config: '" + path + "' must be a number");
  }
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) {
    throw ConfigError("config: '" + path + "' must be an integer");
  }
  return v.get<int>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) {
    throw ConfigError("config: '" + path + "' must be a boolean");
  }
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) {
    throw ConfigError("config: '" + path + "' must be a string");
  }
  return v.get<std::string>();
}

void parse_params(const json& block, RunConfig& cfg) {
  for (const auto& [key, value] : block.items()) {
    if (key == "alpha") cfg.params.alpha = as_number(value, "params.alpha");
    else if (key == "beta") cfg.params.beta = as_number(value, "params.beta");
    else if (key == "gamma") cfg.params.gamma = as_number(value, "params.gamma");
    else if (key == "tau") cfg.params.tau = as_number(value, "params.tau");
    else if (key == "vcr_cap") {
      if (value.is_null()) cfg.params.vcr_cap.reset();
      else cfg.params.vcr_cap = as_number(value, "params.vcr_cap");
    } else if (key == "variant") {
      cfg.variant =
          cost::parse_route_variant(as_string(value, "params.variant"));
    } else {
      unknown_key("params." + key);
    }
  }
}

void parse_render(const json& block, RunConfig& cfg) {
  for (const auto& [key, value] : block.items()) {
    if (key == "font_size_pt") {
      cfg.render.font_size_pt = as_int(value, "render.font_size_pt");
    } else if (key == "line_spacing") {
      cfg.render.line_spacing = as_number(value, "render.line_spacing");
    } else if (key == "page_cap_px") {
      cfg.render.page_cap_px = as_int(value, "render.page_cap_px");
    } else if (key == "raw_patch_px") {
      cfg.render.raw_patch_px = as_int(value, "render.raw_patch_px");
    } else if (key == "merge_factor") {
      cfg.render.merge_factor = as_int(value, "render.merge_factor");
    } else if (key == "margin_px") {
      cfg.render.margin_px = as_int(value, "render.margin_px");
    } else if (key == "font_table") {
      cfg.font_table_path = as_string(value, "render.font_table");
    } else {
      unknown_key("render." + key);
    }
  }
}

void parse_features(const json& block, RunConfig& cfg) {
  for (const auto& [key, value] : block.items()) {
    if (key == "k_ref") {
      cfg.features.k_ref = as_number(value, "features.k_ref");
    } else if (key == "tokenizer") {
      cfg.features.tokenizer = as_string(value, "features.tokenizer");
    } else if (key == "w_table") {
      if (!value.is_object()) {
        throw ConfigError("config: 'features.w_table' must be an object");
      }
      for (const auto& [fk, fv] : value.items()) {
        const features::AnswerFormat fmt = features::parse_answer_format(fk);
        const double w = as_number(fv, "features.w_table." + fk);
        if (w < 0 || w > 1) {
          throw ConfigError("config: 'features.w_table." + fk +
                            "' must lie in [0, 1]");
        }
        cfg.features.w_table.at(fmt) = w;
      }
    } else if (key == "segment") {
      for (const auto& [sk, sv] : value.items()) {
        if (sk == "window_chars") {
          const int w = as_int(sv, "features.segment.window_chars");
          if (w < 1) {
            throw ConfigError(
                "config: 'features.segment.window_chars' must be positive");
          }
          cfg.features.segmentation.window_chars =
              static_cast<std::uint32_t>(w);
        } else if (sk == "boundary_slack") {
          const int s = as_int(sv, "features.segment.boundary_slack");
          if (s < 0) {
            throw ConfigError(
                "config: 'features.segment.boundary_slack' must be >= 0");
          }
          cfg.features.segmentation.boundary_slack =
              static_cast<std::uint32_t>(s);
        } else {
          unknown_key("features.segment." + sk);
        }
      }
    } else if (key == "bm25") {
      for (const auto& [bk, bv] : value.items()) {
        if (bk == "k1") cfg.features.bm25.k1 = as_number(bv, "features.bm25.k1");
        else if (bk == "b") cfg.features.bm25.b = as_number(bv, "features.bm25.b");
        else unknown_key("features.bm25." + bk);
      }
    } else {
      unknown_key("features." + key);
    }
  }
}

void parse_fov(const json& block, RunConfig& cfg) {
  for (const auto& [key, value] : block.items()) {
    if (key == "hot_ratio") {
      cfg.fov.hot_ratio = as_number(value, "fov.hot_ratio");
    } else if (key == "nms_radius_cells") {
      cfg.fov.nms_radius_cells = as_int(value, "fov.nms_radius_cells");
    } else if (key == "region_side_cells") {
      cfg.fov.region_side_cells = as_int(value, "fov.region_side_cells");
    } else if (key == "budget_fraction") {
      cfg.fov.budget_fraction = as_number(value, "fov.budget_fraction");
    } else if (key == "upsample_factor") {
      cfg.fov.upsample_factor = as_int(value, "fov.upsample_factor");
    } else if (key == "recovery_fraction") {
      cfg.fov.recovery_fraction = as_number(value, "fov.recovery_fraction");
    } else {
      unknown_key("fov." + key);
    }
  }
}

void parse_harness(const json& block, RunConfig& cfg) {
  for (const auto& [key, value] : block.items()) {
    if (key == "bucket_count") {
      cfg.bucket_count = as_int(value, "harness.bucket_count");
    } else if (key == "sweep_lo") {
      cfg.sweep_lo = as_number(value, "harness.sweep_lo");
    } else if (key == "sweep_hi") {
      cfg.sweep_hi = as_number(value, "harness.sweep_hi");
    } else if (key == "sweep_step") {
      cfg.sweep_step = as_number(value, "harness.sweep_step");
    } else if (key == "per_sample_routing") {
      cfg.per_sample_routing = as_bool(value, "harness.per_sample_routing");
    } else if (key == "run_foveation") {
      cfg.run_foveation = as_bool(value, "harness.run_foveation");
    } else {
      unknown_key("harness." + key);
    }
  }
}

}  // namespace

RunConfig default_run_config() { return RunConfig{}; }

void apply_preset(RunConfig& cfg, std::string_view name) {
  const cost::PresetSpec& spec = cost::preset(name);
  cfg.preset = std::string(name);
  cfg.params = spec.params;
  cfg.variant = spec.variant;
}

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: root must be an object");

  RunConfig cfg;
  // Preset first so explicit params can override its values.
  if (root.contains("preset")) {
    apply_preset(cfg, as_string(root["preset"], "preset"));
  }
  for (const auto& [key, value] : root.items()) {
    if (key == "preset") {
      continue;  // applied above
    } else if (key == "params") {
      parse_params(value, cfg);
    } else if (key == "render") {
      parse_render(value, cfg);
    } else if (key == "features") {
      parse_features(value, cfg);
    } else if (key == "fov") {
      parse_fov(value, cfg);
    } else if (key == "harness") {
      parse_harness(value, cfg);
    } else if (key == "seed") {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
        throw ConfigError("config: 'seed' must be a non-negative integer");
      }
      cfg.seed = value.get<std::uint64_t>();
    } else {
      unknown_key(key);
    }
  }

  cfg.params.validate();
  cfg.render.validate();
  cfg.fov.validate();
  if (cfg.variant == cost::RouteVariant::bounded && !cfg.params.vcr_cap) {
    throw ConfigError("config: bounded variant requires params.vcr_cap");
  }
  if (cfg.bucket_count < 2) {
    throw ConfigError("config: 'harness.bucket_count' must be at least 2");
  }
  if (!(cfg.sweep_step > 0) || cfg.sweep_hi < cfg.sweep_lo) {
    throw ConfigError("config: harness sweep grid is invalid");
  }
  if (cfg.font_table_path) {
    cfg.render.font = render::load_font_table(*cfg.font_table_path);
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

harness::EvalOptions to_eval_options(const RunConfig& cfg) {
  harness::EvalOptions opts;
  opts.params = cfg.params;
  opts.variant = cfg.variant;
  opts.render = cfg.render;
  opts.features = cfg.features;
  opts.fov = cfg.fov;
  opts.bucket_count = cfg.bucket_count;
  opts.sweep_lo = cfg.sweep_lo;
  opts.sweep_hi = cfg.sweep_hi;
  opts.sweep_step = cfg.sweep_step;
  opts.per_sample_routing = cfg.per_sample_routing;
  opts.run_foveation = cfg.run_foveation;
  return opts;
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  if (cfg.preset) j["preset"] = *cfg.preset;
  j["params"] = {{"alpha", cfg.params.alpha},
                 {"beta", cfg.params.beta},
                 {"gamma", cfg.params.gamma},
                 {"tau", cfg.params.tau},
                 {"vcr_cap", cfg.params.vcr_cap
                                 ? json(*cfg.params.vcr_cap)
                                 : json(nullptr)},
                 {"variant", std::string(cost::to_string(cfg.variant))}};
  j["render"] = {{"font_size_pt", cfg.render.font_size_pt},
                 {"line_spacing", cfg.render.line_spacing},
                 {"page_cap_px", cfg.render.page_cap_px},
                 {"raw_patch_px", cfg.render.raw_patch_px},
                 {"merge_factor", cfg.render.merge_factor},
                 {"margin_px", cfg.render.margin_px}};
  if (cfg.font_table_path) j["render"]["font_table"] = *cfg.font_table_path;
  json wt;
  for (int f = 0; f < features::kAnswerFormatCount; ++f) {
    const auto fmt = static_cast<features::AnswerFormat>(f);
    wt[std::string(features::to_string(fmt))] = cfg.features.w_table.at(fmt);
  }
  j["features"] = {{"k_ref", cfg.features.k_ref},
                   {"tokenizer", cfg.features.tokenizer},
                   {"w_table", std::move(wt)},
                   {"segment",
                    {{"window_chars", cfg.features.segmentation.window_chars},
                     {"boundary_slack",
                      cfg.features.segmentation.boundary_slack}}},
                   {"bm25", {{"k1", cfg.features.bm25.k1},
                             {"b", cfg.features.bm25.b}}}};
  j["fov"] = {{"hot_ratio", cfg.fov.hot_ratio},
              {"nms_radius_cells", cfg.fov.nms_radius_cells},
              {"region_side_cells", cfg.fov.region_side_cells},
              {"budget_fraction", cfg.fov.budget_fraction},
              {"upsample_factor", cfg.fov.upsample_factor},
              {"recovery_fraction", cfg.fov.recovery_fraction}};
  j["harness"] = {{"bucket_count", cfg.bucket_count},
                  {"sweep_lo", cfg.sweep_lo},
                  {"sweep_hi", cfg.sweep_hi},
                  {"sweep_step", cfg.sweep_step},
                  {"per_sample_routing", cfg.per_sample_routing},
                  {"run_foveation", cfg.run_foveation}};
  j["seed"] = cfg.seed;
  return j.dump(2);
}

}  // namespace vtc::config
