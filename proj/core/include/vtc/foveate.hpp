#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "vtc/cost.hpp"
#include "vtc/render.hpp"

namespace vtc::foveate {

struct FovConfig {
  double hot_ratio = 2.5;       // max/mean gate before any region is selected
  int nms_radius_cells = 2;     // Chebyshev suppression radius between seeds
  int region_side_cells = 3;    // square crop side, clipped to the page
  double budget_fraction = 0.25;  // n_c <= floor(budget_fraction * n_v)
  int upsample_factor = 2;      // tokens per re-encoded cell = factor^2
  double recovery_fraction = 1.0;  // kappa: share of local cost a crop recovers

  void validate() const;  // throws ConfigError
};

struct PatchCell {
  double w_q = 0;    // page-max-normalized feature variance, [0,1]
  double l_q = 0;    // share of relevance mass routed into this cell
  double trr_q = 0;  // redundancy of the cell's aligned text
  double c_q = 0;    // alpha*w_q + beta*l_q*(1-trr_q)
};

struct PatchPage {
  int grid_w = 0, grid_h = 0;
  std::vector<PatchCell> cells;  // row-major grid_h x grid_w

  const PatchCell& at(int row, int col) const {
    return cells[static_cast<std::size_t>(row) * grid_w + col];
  }
  PatchCell& at(int row, int col) {
    return cells[static_cast<std::size_t>(row) * grid_w + col];
  }
};

struct PatchCostMap {
  std::vector<PatchPage> pages;
  double max_c = 0;
  double mean_c = 0;  // over every cell of every page
  std::int64_t cell_count = 0;
};

// Per-cell activity feeding W_q. The default implementation measures raster
// ink variance; a real vision encoder can be plugged in without touching the
// planner.
class PatchFeatureProvider {
 public:
  virtual ~PatchFeatureProvider() = default;
  // Raw nonnegative activity per cell, row-major grid_h x grid_w.
  virtual std::vector<double> cell_activity(const render::RenderedDocument& doc,
                                            std::size_t page_index) = 0;
  virtual std::string name() const = 0;
};

class InkVarianceProvider final : public PatchFeatureProvider {
 public:
  explicit InkVarianceProvider(render::RenderConfig cfg) : cfg_(std::move(cfg)) {}
  std::vector<double> cell_activity(const render::RenderedDocument& doc,
                                    std::size_t page_index) override;
  std::string name() const override { return "ink-variance"; }

 private:
  render::RenderConfig cfg_;
};

// Spatializes the global cost: W_q from provider activity (normalized by the
// page max), L_q by distributing segment relevance mass through the alignment
// proportionally to overlapping word-token characters, TRR_q from the cell's
// aligned text (cells with <16 aligned chars inherit their dominant line's
// redundancy). Uses the same alpha/beta as the global cost.
PatchCostMap patch_cost_map(const render::RenderedDocument& doc,
                            const render::AlignmentIndex& alignment,
                            std::string_view question,
                            const cost::CostParams& params,
                            PatchFeatureProvider& provider);

// true iff mean > 0 and max/mean > hot_ratio (all-zero map is never hot).
bool hot_region_present(const PatchCostMap& map, double hot_ratio);

struct CropRegion {
  int page = 0;
  int seed_row = 0, seed_col = 0;
  std::vector<std::pair<int, int>> cells;  // (row, col), previously uncounted
  double dc = 0;        // kappa * sum of C_q over cells
  std::int64_t n_c = 0; // upsample_factor^2 * cells.size()
};

struct FoveationPlan {
  std::vector<CropRegion> regions;
  double sum_dc = 0;
  std::int64_t n_c = 0;
  std::int64_t n_v = 0;
  bool triggered = false;
  double te_base = 0;  // filled when n_t is supplied
  double te_fov = 0;
  std::string reason;  // why the plan is empty / untriggered, when it is
};

// true iff sum_dc/isr > n_c/n_v strictly; isr <= 0 or n_v == 0 -> false.
bool foveation_trigger(double sum_dc, double isr, std::int64_t n_c,
                       std::int64_t n_v, std::string* reason = nullptr);

// TE_fov = (isr + sum_dc) * n_t / (n_v + n_c). n_v + n_c == 0 -> DataError.
double post_foveation_te(double isr, double sum_dc, std::int64_t n_t,
                         std::int64_t n_v, std::int64_t n_c);

// Greedy descending-C_q selection under NMS and the token budget. Stops as
// soon as the trigger fires; an untriggered loop yields an EMPTY plan (the
// base visual encoding is used unchanged). n_t (text tokens) is optional and
// only feeds the te_base/te_fov report fields.
FoveationPlan select_regions(const PatchCostMap& map, const FovConfig& cfg,
                             double isr, std::int64_t n_v,
                             std::int64_t n_t = 0);

// Grayscale heatmap of one page's C_q grid (PGM "P2", 0..255, max-scaled).
void write_pgm(const PatchCostMap& map, std::size_t page_index,
               std::ostream& out);

// Self-contained SVG: cell shading by C_q plus outlines of accepted regions.
void write_svg(const PatchCostMap& map, const FoveationPlan& plan,
               std::size_t page_index, std::ostream& out);

std::string plan_to_json(const FoveationPlan& plan);

}  // namespace vtc::foveate
