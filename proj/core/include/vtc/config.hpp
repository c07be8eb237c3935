#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "vtc/cost.hpp"
#include "vtc/features.hpp"
#include "vtc/foveate.hpp"
#include "vtc/harness.hpp"
#include "vtc/render.hpp"

namespace vtc::config {

// Full run configuration. A preset ("4b" | "8b" | "32b") seeds params and
// variant; explicit fields in the params block override preset values.
struct RunConfig {
  std::optional<std::string> preset;
  cost::CostParams params;
  cost::RouteVariant variant = cost::RouteVariant::standard;
  render::RenderConfig render;
  features::FeatureConfig features;
  foveate::FovConfig fov;
  std::optional<std::string> font_table_path;  // replaces the builtin metrics
  int bucket_count = 4;
  double sweep_lo = 0.90, sweep_hi = 1.40, sweep_step = 0.01;
  bool per_sample_routing = false;
  bool run_foveation = true;
  std::uint64_t seed = 17;
};

RunConfig default_run_config();

// Overwrites params and variant from the named preset. Unknown -> ConfigError.
void apply_preset(RunConfig& cfg, std::string_view name);

// Strict JSON parsing: unknown keys anywhere raise ConfigError naming the key
// path. Blocks: preset, params {alpha, beta, gamma, tau, vcr_cap, variant},
// render {font_size_pt, line_spacing, page_cap_px, raw_patch_px, merge_factor,
// margin_px, font_table}, features {k_ref, tokenizer, w_table {<format>: w},
// segment {window_chars, boundary_slack}, bm25 {k1, b}}, fov {hot_ratio,
// nms_radius_cells, region_side_cells, budget_fraction, upsample_factor,
// recovery_fraction}, harness {bucket_count, sweep_lo, sweep_hi, sweep_step,
// per_sample_routing, run_foveation}, seed.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

harness::EvalOptions to_eval_options(const RunConfig& cfg);

std::string run_config_to_json(const RunConfig& cfg);

}  // namespace vtc::config
