#include "vtc/foveate.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "vtc/errors.hpp"
#include "vtc/features.hpp"
#include "vtc/text.hpp"

namespace vtc::foveate {
namespace {

using json = nlohmann::ordered_json;

constexpr std::uint32_t kMinCellCharsForLocalTrr = 16;

}  // namespace

void FovConfig::validate() const {
  if (!(hot_ratio > 0)) throw ConfigError("hot_ratio must be positive");
  if (nms_radius_cells < 1) throw ConfigError("nms_radius_cells must be >= 1");
  if (region_side_cells < 1) {
    throw ConfigError("region_side_cells must be >= 1");
  }
  if (!(budget_fraction > 0) || budget_fraction > 1.0) {
    throw ConfigError("budget_fraction must lie in (0, 1]");
  }
  if (upsample_factor < 1) throw ConfigError("upsample_factor must be >= 1");
  if (!(recovery_fraction > 0)) {
    throw ConfigError("recovery_fraction must be positive");
  }
}

std::vector<double> InkVarianceProvider::cell_activity(
    const render::RenderedDocument& doc, std::size_t page_index) {
  if (page_index >= doc.pages.size()) {
    throw DataError("page index out of range");
  }
  const render::RenderedPage& page = doc.pages[page_index];
  const render::RasterPage raster = render::rasterize_page(page, cfg_);
  const int cell = cfg_.token_cell_px();
  std::vector<double> out(static_cast<std::size_t>(page.grid_w) *
                          static_cast<std::size_t>(page.grid_h));
  for (int r = 0; r < page.grid_h; ++r) {
    const int y0 = r * cell;
    const int y1 = std::min(y0 + cell, raster.height_px);
    for (int c = 0; c < page.grid_w; ++c) {
      const int x0 = c * cell;
      const int x1 = std::min(x0 + cell, raster.width_px);
      double sum = 0, sumsq = 0;
      std::int64_t count = 0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const double v = raster.at(x, y);
          sum += v;
          sumsq += v * v;
          ++count;
        }
      }
      double var = 0;
      if (count > 0) {
        const double mean = sum / static_cast<double>(count);
        var = std::max(0.0, sumsq / static_cast<double>(count) - mean * mean);
      }
      out[static_cast<std::size_t>(r) * page.grid_w + c] = var;
    }
  }
  return out;
}

namespace {

// Locates the segment covering a codepoint offset (segments tile the text).
std::size_t segment_of(const std::vector<features::Segment>& segments,
                       std::uint32_t offset) {
  std::size_t lo = 0, hi = segments.size();
  while (lo + 1 < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (segments[mid].begin <= offset) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

struct CellSegmentOverlap {
  std::size_t segment = 0;
  std::int64_t chars = 0;  // word-token characters of that segment in the cell
};

double line_redundancy(const std::u32string& text,
                       const render::LineBox& line) {
  const std::u32string_view slice(text.data() + line.begin,
                                  line.end - line.begin);
  return features::redundancy(text::encode_utf8(slice));
}

}  // namespace

PatchCostMap patch_cost_map(const render::RenderedDocument& doc,
                            const render::AlignmentIndex& alignment,
                            std::string_view question,
                            const cost::CostParams& params,
                            PatchFeatureProvider& provider) {
  PatchCostMap map;
  if (doc.pages.empty()) return map;
  if (alignment.pages.size() != doc.pages.size()) {
    throw DataError("alignment does not match the rendered document");
  }

  const auto segments = features::segment_text(doc.text);
  const auto scores = features::bm25_scores(question, segments);
  double score_total = 0;
  for (double s : scores) score_total += s;

  // Pass 1: how many word-token characters of each segment are rendered into
  // any cell (straddling characters count once per touched cell, which is
  // also how they are distributed, so mass is conserved).
  std::vector<double> segment_rendered(segments.size(), 0.0);
  // Per page, per cell: overlap counts per segment.
  std::vector<std::vector<std::vector<CellSegmentOverlap>>> overlaps(
      doc.pages.size());
  for (std::size_t p = 0; p < doc.pages.size(); ++p) {
    const render::PageAlignment& pa = alignment.pages[p];
    overlaps[p].resize(pa.cells.size());
    for (std::size_t ci = 0; ci < pa.cells.size(); ++ci) {
      const render::AlignmentCell& cell = pa.cells[ci];
      std::vector<CellSegmentOverlap>& cell_overlaps = overlaps[p][ci];
      for (const render::CellSpan& span : cell.spans) {
        for (std::uint32_t o = span.begin; o < span.end; ++o) {
          if (!text::is_word_char(doc.text[o])) continue;
          const std::size_t s = segment_of(segments, o);
          if (!cell_overlaps.empty() && cell_overlaps.back().segment == s) {
            ++cell_overlaps.back().chars;
          } else {
            cell_overlaps.push_back({s, 1});
          }
          segment_rendered[s] += 1.0;
        }
      }
    }
  }

  // Segment weights: BM25 mass when any score is positive, otherwise uniform;
  // restricted to segments that actually rendered word-token characters and
  // renormalized so the whole document carries unit mass.
  std::vector<double> seg_weight(segments.size(), 0.0);
  double weight_total = 0;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (segment_rendered[s] <= 0) continue;
    const double w = score_total > 0 ? scores[s] : 1.0;
    seg_weight[s] = w;
    weight_total += w;
  }

  double max_c = 0, sum_c = 0;
  std::int64_t cell_count = 0;
  map.pages.resize(doc.pages.size());
  for (std::size_t p = 0; p < doc.pages.size(); ++p) {
    const render::RenderedPage& page = doc.pages[p];
    const render::PageAlignment& pa = alignment.pages[p];
    PatchPage& out = map.pages[p];
    out.grid_w = page.grid_w;
    out.grid_h = page.grid_h;
    out.cells.resize(pa.cells.size());

    const std::vector<double> activity = provider.cell_activity(doc, p);
    if (activity.size() != pa.cells.size()) {
      throw InternalError("feature provider returned a mismatched grid");
    }
    double act_max = 0;
    for (double a : activity) act_max = std::max(act_max, a);

    std::vector<std::optional<double>> line_trr(page.lines.size());

    for (std::size_t ci = 0; ci < pa.cells.size(); ++ci) {
      const render::AlignmentCell& cell = pa.cells[ci];
      PatchCell& pc = out.cells[ci];

      pc.w_q = act_max > 0 ? activity[ci] / act_max : 0.0;

      if (weight_total > 0) {
        double mass = 0;
        for (const CellSegmentOverlap& ov : overlaps[p][ci]) {
          if (seg_weight[ov.segment] <= 0) continue;
          mass += (seg_weight[ov.segment] / weight_total) *
                  (static_cast<double>(ov.chars) /
                   segment_rendered[ov.segment]);
        }
        pc.l_q = mass;
      }

      if (cell.char_count >= kMinCellCharsForLocalTrr) {
        std::u32string aligned;
        aligned.reserve(cell.char_count);
        for (const render::CellSpan& span : cell.spans) {
          aligned.append(doc.text, span.begin, span.end - span.begin);
        }
        pc.trr_q = features::redundancy(text::encode_utf8(aligned));
      } else if (cell.char_count > 0) {
        // Inherit the redundancy of the line contributing the most characters
        // to this cell (ties break toward the earlier line).
        std::size_t best_line = 0;
        std::int64_t best_chars = -1;
        for (std::size_t li = 0; li < page.lines.size(); ++li) {
          const render::LineBox& line = page.lines[li];
          std::int64_t overlap = 0;
          for (const render::CellSpan& span : cell.spans) {
            const std::uint32_t lo = std::max(span.begin, line.begin);
            const std::uint32_t hi = std::min(span.end, line.end);
            if (hi > lo) overlap += hi - lo;
          }
          if (overlap > best_chars) {
            best_chars = overlap;
            best_line = li;
          }
        }
        if (best_chars > 0) {
          if (!line_trr[best_line].has_value()) {
            line_trr[best_line] = line_redundancy(doc.text, page.lines[best_line]);
          }
          pc.trr_q = *line_trr[best_line];
        }
      }

      features::FeatureVector fv;
      fv.w = pc.w_q;
      fv.l = pc.l_q;
      fv.trr = pc.trr_q;
      pc.c_q = cost::transport_cost(fv, params).total;

      max_c = std::max(max_c, pc.c_q);
      sum_c += pc.c_q;
      ++cell_count;
    }
  }

  map.max_c = max_c;
  map.cell_count = cell_count;
  map.mean_c = cell_count > 0 ? sum_c / static_cast<double>(cell_count) : 0.0;
  return map;
}

bool hot_region_present(const PatchCostMap& map, double hot_ratio) {
  if (!(map.mean_c > 0)) return false;
  return map.max_c / map.mean_c > hot_ratio;
}

bool foveation_trigger(double sum_dc, double isr, std::int64_t n_c,
                       std::int64_t n_v, std::string* reason) {
  if (isr <= 0) {
    if (reason) *reason = "information survival is non-positive";
    return false;
  }
  if (n_v <= 0) {
    if (reason) *reason = "no base visual tokens";
    return false;
  }
  const bool fired =
      sum_dc / isr > static_cast<double>(n_c) / static_cast<double>(n_v);
  if (reason) {
    *reason = fired ? "recovered-cost ratio exceeds the token-overhead ratio"
                    : "recovered-cost ratio does not exceed the "
                      "token-overhead ratio";
  }
  return fired;
}

double post_foveation_te(double isr, double sum_dc, std::int64_t n_t,
                         std::int64_t n_v, std::int64_t n_c) {
  if (n_v + n_c <= 0) {
    throw DataError("post-foveation efficiency needs a positive token total");
  }
  return (isr + sum_dc) * static_cast<double>(n_t) /
         static_cast<double>(n_v + n_c);
}

FoveationPlan select_regions(const PatchCostMap& map, const FovConfig& cfg,
                             double isr, std::int64_t n_v, std::int64_t n_t) {
  cfg.validate();
  FoveationPlan plan;
  plan.n_v = n_v;
  const bool have_nt = n_t > 0;
  if (have_nt && n_v > 0) {
    plan.te_base = cost::transport_efficiency(
        isr, static_cast<double>(n_t) / static_cast<double>(n_v));
  }
  plan.te_fov = plan.te_base;

  if (isr <= 0) {
    plan.reason = "foveation disabled: information survival is non-positive";
    return plan;
  }
  if (n_v <= 0) {
    plan.reason = "foveation disabled: no base visual tokens";
    return plan;
  }
  if (!hot_region_present(map, cfg.hot_ratio)) {
    plan.reason =
        "no hot region: cost-map max/mean does not exceed the gate ratio";
    return plan;
  }

  const std::int64_t budget = static_cast<std::int64_t>(
      std::floor(cfg.budget_fraction * static_cast<double>(n_v)));

  struct Seed {
    double c_q;
    int page, row, col;
  };
  std::vector<Seed> seeds;
  for (std::size_t p = 0; p < map.pages.size(); ++p) {
    const PatchPage& page = map.pages[p];
    for (int r = 0; r < page.grid_h; ++r) {
      for (int c = 0; c < page.grid_w; ++c) {
        const double v = page.at(r, c).c_q;
        if (v > 0) seeds.push_back({v, static_cast<int>(p), r, c});
      }
    }
  }
  std::sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) {
    if (a.c_q != b.c_q) return a.c_q > b.c_q;
    if (a.page != b.page) return a.page < b.page;
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
  });

  const int tokens_per_cell = cfg.upsample_factor * cfg.upsample_factor;
  const int half_lo = (cfg.region_side_cells - 1) / 2;
  const int half_hi = cfg.region_side_cells - 1 - half_lo;

  std::vector<std::vector<std::pair<int, int>>> accepted_seeds(
      map.pages.size());
  std::vector<std::vector<char>> counted(map.pages.size());
  for (std::size_t p = 0; p < map.pages.size(); ++p) {
    counted[p].assign(map.pages[p].cells.size(), 0);
  }

  for (const Seed& s : seeds) {
    bool suppressed = false;
    for (const auto& [ar, ac] : accepted_seeds[static_cast<std::size_t>(s.page)]) {
      const int d = std::max(std::abs(s.row - ar), std::abs(s.col - ac));
      if (d <= cfg.nms_radius_cells) {
        suppressed = true;
        break;
      }
    }
    if (suppressed) continue;

    const PatchPage& page = map.pages[static_cast<std::size_t>(s.page)];
    const int r0 = std::max(0, s.row - half_lo);
    const int r1 = std::min(page.grid_h - 1, s.row + half_hi);
    const int c0 = std::max(0, s.col - half_lo);
    const int c1 = std::min(page.grid_w - 1, s.col + half_hi);

    CropRegion region;
    region.page = s.page;
    region.seed_row = s.row;
    region.seed_col = s.col;
    double dc = 0;
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const std::size_t idx =
            static_cast<std::size_t>(r) * page.grid_w + c;
        if (counted[static_cast<std::size_t>(s.page)][idx]) continue;
        region.cells.emplace_back(r, c);
        dc += page.cells[idx].c_q;
      }
    }
    if (region.cells.empty()) continue;
    region.dc = cfg.recovery_fraction * dc;
    region.n_c = static_cast<std::int64_t>(tokens_per_cell) *
                 static_cast<std::int64_t>(region.cells.size());

    if (plan.n_c + region.n_c > budget) break;  // budget exhausts the loop

    for (const auto& [r, c] : region.cells) {
      counted[static_cast<std::size_t>(s.page)]
             [static_cast<std::size_t>(r) * page.grid_w + c] = 1;
    }
    accepted_seeds[static_cast<std::size_t>(s.page)].emplace_back(s.row,
                                                                  s.col);
    plan.sum_dc += region.dc;
    plan.n_c += region.n_c;
    plan.regions.push_back(std::move(region));

    if (foveation_trigger(plan.sum_dc, isr, plan.n_c, plan.n_v)) {
      plan.triggered = true;
      break;
    }
  }

  if (!plan.triggered) {
    // Untriggered refinement is abandoned wholesale: the base visual encoding
    // is used unchanged.
    plan.regions.clear();
    plan.sum_dc = 0;
    plan.n_c = 0;
    plan.te_fov = plan.te_base;
    plan.reason =
        "trigger condition never fired within the token budget; foveation "
        "skipped";
    return plan;
  }

  plan.reason = "triggered";
  if (have_nt) {
    plan.te_fov =
        post_foveation_te(isr, plan.sum_dc, n_t, plan.n_v, plan.n_c);
  }
  return plan;
}

void write_pgm(const PatchCostMap& map, std::size_t page_index,
               std::ostream& out) {
  if (page_index >= map.pages.size()) {
    throw DataError("page index out of range");
  }
  const PatchPage& page = map.pages[page_index];
  out << "P2\n# token-cell cost map, page " << page_index << "\n"
      << page.grid_w << " " << page.grid_h << "\n255\n";
  for (int r = 0; r < page.grid_h; ++r) {
    for (int c = 0; c < page.grid_w; ++c) {
      const double v = map.max_c > 0 ? page.at(r, c).c_q / map.max_c : 0.0;
      const int level = static_cast<int>(std::lround(v * 255.0));
      out << level << (c + 1 == page.grid_w ? "" : " ");
    }
    out << "\n";
  }
}

void write_svg(const PatchCostMap& map, const FoveationPlan& plan,
               std::size_t page_index, std::ostream& out) {
  if (page_index >= map.pages.size()) {
    throw DataError("page index out of range");
  }
  const PatchPage& page = map.pages[page_index];
  constexpr int kCellPx = 8;
  const int w = page.grid_w * kCellPx;
  const int h = page.grid_h * kCellPx;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
      << "\">\n";
  out << "<rect width=\"" << w << "\" height=\"" << h
      << "\" fill=\"#ffffff\"/>\n";
  for (int r = 0; r < page.grid_h; ++r) {
    for (int c = 0; c < page.grid_w; ++c) {
      const double v = map.max_c > 0 ? page.at(r, c).c_q / map.max_c : 0.0;
      if (v <= 0) continue;
      const int shade = 255 - static_cast<int>(std::lround(v * 224.0));
      out << "<rect x=\"" << c * kCellPx << "\" y=\"" << r * kCellPx
          << "\" width=\"" << kCellPx << "\" height=\"" << kCellPx
          << "\" fill=\"rgb(" << shade << "," << shade << ",255)\"/>\n";
    }
  }
  for (const CropRegion& region : plan.regions) {
    if (region.page != static_cast<int>(page_index)) continue;
    int r0 = page.grid_h, c0 = page.grid_w, r1 = -1, c1 = -1;
    for (const auto& [r, c] : region.cells) {
      r0 = std::min(r0, r);
      c0 = std::min(c0, c);
      r1 = std::max(r1, r);
      c1 = std::max(c1, c);
    }
    if (r1 < r0) continue;
    out << "<rect x=\"" << c0 * kCellPx << "\" y=\"" << r0 * kCellPx
        << "\" width=\"" << (c1 - c0 + 1) * kCellPx << "\" height=\""
        << (r1 - r0 + 1) * kCellPx
        << "\" fill=\"none\" stroke=\"#d33\" stroke-width=\"1\"/>\n";
    out << "<rect x=\"" << region.seed_col * kCellPx << "\" y=\""
        << region.seed_row * kCellPx << "\" width=\"" << kCellPx
        << "\" height=\"" << kCellPx
        << "\" fill=\"none\" stroke=\"#d33\" stroke-width=\"1\" "
           "stroke-dasharray=\"2,1\"/>\n";
  }
  out << "</svg>\n";
}

std::string plan_to_json(const FoveationPlan& plan) {
  json j;
  j["kind"] = "vtc-foveation-plan/1";
  j["n_v"] = plan.n_v;
  j["n_c"] = plan.n_c;
  j["sum_dc"] = plan.sum_dc;
  j["triggered"] = plan.triggered;
  j["te_base"] = plan.te_base;
  j["te_fov"] = plan.te_fov;
  j["reason"] = plan.reason;
  j["regions"] = json::array();
  for (const CropRegion& r : plan.regions) {
    json cells = json::array();
    for (const auto& [row, col] : r.cells) {
      cells.push_back(json::array({row, col}));
    }
    j["regions"].push_back({{"page", r.page},
                            {"seed", json::array({r.seed_row, r.seed_col})},
                            {"dc", r.dc},
                            {"n_c", r.n_c},
                            {"cells", std::move(cells)}});
  }
  return j.dump(2);
}

}  // namespace vtc::foveate
