#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vtc/font_table.hpp"

namespace vtc::render {

// Deterministic layout model: text flows into a single column, wraps at word
// boundaries (over-long words break mid-word), pages are sized adaptively and
// snapped UP to the token cell grid, capped at page_cap_px per dimension.
struct RenderConfig {
  int font_size_pt = 12;      // {10, 12, 14} are the supported sweep sizes
  double line_spacing = 1.0;  // line advance = em * line_spacing
  int page_cap_px = 928;      // 29 * 32: largest page dimension
  int raw_patch_px = 16;      // encoder patch before spatial merge
  int merge_factor = 2;       // 2x2 merge -> one token per 32px cell
  int margin_px = 8;
  FontTable font = builtin_font_table();

  int token_cell_px() const { return raw_patch_px * merge_factor; }
  double em_px() const { return font_size_pt * (96.0 / 72.0); }
  double line_advance_px() const { return em_px() * line_spacing; }
  void validate() const;  // throws ConfigError
};

struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool positive_area() const { return x1 > x0 && y1 > y0; }
};

// One source character: offset is a codepoint index into the document text.
// Control characters keep a zero-width box (present in spans, never rendered).
struct CharBox {
  std::uint32_t offset = 0;
  char32_t cp = 0;
  Rect box;
};

struct LineBox {
  std::uint32_t begin = 0, end = 0;  // codepoint span [begin, end)
  std::vector<CharBox> chars;
};

struct RenderedPage {
  int width_px = 0, height_px = 0;
  int grid_w = 0, grid_h = 0;  // token cells per axis
  std::vector<LineBox> lines;
};

struct RenderedDocument {
  std::u32string text;  // decoded source, codepoint offsets index into this
  std::vector<RenderedPage> pages;
  std::int64_t visual_tokens = 0;  // m = sum over pages of grid_w * grid_h
  std::uint32_t source_len = 0;    // codepoint count
  int token_cell_px = 32;
};

RenderedDocument layout_document(std::u32string_view text,
                                 const RenderConfig& cfg);
RenderedDocument layout_document_utf8(std::string_view utf8,
                                      const RenderConfig& cfg);

// Token count from page dims; always equals doc.visual_tokens.
std::int64_t count_visual_tokens(const RenderedDocument& doc);

struct CellSpan {
  std::uint32_t begin = 0, end = 0;  // codepoint span [begin, end)
};

struct AlignmentCell {
  std::vector<CellSpan> spans;    // merged, ascending
  std::uint32_t char_count = 0;   // total codepoints across spans
};

struct PageAlignment {
  int grid_w = 0, grid_h = 0;
  std::vector<AlignmentCell> cells;  // row-major grid_h x grid_w

  const AlignmentCell& cell(int row, int col) const {
    return cells[static_cast<std::size_t>(row) * grid_w + col];
  }
};

// Pure function of the document: maps every token cell to the source spans
// whose character boxes intersect it (straddling chars appear in every cell
// they touch).
struct AlignmentIndex {
  std::vector<PageAlignment> pages;
};

AlignmentIndex build_alignment(const RenderedDocument& doc);

struct RasterPage {
  int width_px = 0, height_px = 0;
  std::vector<float> ink;  // row-major, [0,1] per pixel

  float at(int x, int y) const {
    return ink[static_cast<std::size_t>(y) * width_px + x];
  }
};

// Fills each character box with its ink-table coverage value.
RasterPage rasterize_page(const RenderedPage& page, const RenderConfig& cfg);

// Debug serialization: dims, line spans, token counts. Deterministic.
std::string document_to_json(const RenderedDocument& doc);

}  // namespace vtc::render
