#include "vtc/render.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "vtc/errors.hpp"
#include "vtc/text.hpp"

namespace vtc::render {

namespace {

using text::is_control;

int snap_up(double v, int cell) {
  const int k = static_cast<int>(std::ceil(v / cell));
  return std::max(1, k) * cell;
}

// A line under construction; x coordinates are content-relative (margin added
// at page assembly).
struct PendingLine {
  std::uint32_t begin = 0, end = 0;
  std::vector<CharBox> chars;
  double width = 0;  // max x1 over rendered chars
};

class LayoutBuilder {
 public:
  LayoutBuilder(std::u32string_view txt, const RenderConfig& cfg)
      : text_(txt), cfg_(cfg), em_(cfg.em_px()),
        avail_(cfg.page_cap_px - 2.0 * cfg.margin_px) {}

  std::vector<PendingLine> run() {
    open_line(0);
    std::uint32_t i = 0;
    const auto n = static_cast<std::uint32_t>(text_.size());
    while (i < n) {
      const char32_t c = text_[i];
      if (c == U'\n') {
        push_zero_width(i);
        ++i;
        break_line(i);
      } else if (c == U' ' || c == U'\t') {
        push_space(i, advance_px(c));
        ++i;
      } else if (is_control(c)) {
        push_zero_width(i);
        ++i;
      } else {
        i = push_word(i);
      }
    }
    close_line(n);
    // A terminating newline should not leave a blank trailing line; every
    // other line carries at least its newline char, so only the last can be
    // span-empty.
    if (lines_.size() > 1 && lines_.back().begin == lines_.back().end) {
      lines_.pop_back();
    }
    return std::move(lines_);
  }

 private:
  double advance_px(char32_t c) const {
    if (c == U'\t') return 4.0 * cfg_.font.advance_milli_em(U' ') / 1000.0 * em_;
    return cfg_.font.advance_milli_em(c) / 1000.0 * em_;
  }

  void open_line(std::uint32_t at) {
    cur_ = PendingLine{};
    cur_.begin = at;
    x_ = 0;
  }

  void break_line(std::uint32_t next_begin) {
    close_line(next_begin);
    open_line(next_begin);
  }

  void close_line(std::uint32_t end) {
    cur_.end = end;
    lines_.push_back(std::move(cur_));
    cur_ = PendingLine{};
  }

  void push_zero_width(std::uint32_t offset) {
    cur_.chars.push_back({offset, text_[offset], Rect{x_, 0, x_, 0}});
  }

  void push_space(std::uint32_t offset, double adv) {
    if (x_ + adv > avail_) {
      // Overflowing trailing whitespace is absorbed: kept in the span with a
      // zero-width box so rects never leave the margin box.
      push_zero_width(offset);
      return;
    }
    cur_.chars.push_back({offset, text_[offset], Rect{x_, 0, x_ + adv, em_}});
    x_ += adv;
    cur_.width = std::max(cur_.width, x_);
  }

  // Lays out the word starting at i; returns the offset past it.
  std::uint32_t push_word(std::uint32_t i) {
    const auto n = static_cast<std::uint32_t>(text_.size());
    std::uint32_t end = i;
    double w = 0;
    while (end < n) {
      const char32_t c = text_[end];
      if (c == U' ' || c == U'\t' || c == U'\n' || is_control(c)) break;
      w += advance_px(c);
      ++end;
    }
    if (x_ > 0 && x_ + w > avail_ && w <= avail_) break_line(i);
    if (w <= avail_) {
      emit_run(i, end);
      return end;
    }
    // Over-long word: forced mid-word breaks, at least one char per line.
    std::uint32_t k = i;
    while (k < end) {
      const double adv = advance_px(text_[k]);
      if (x_ > 0 && x_ + adv > avail_) {
        break_line(k);
        continue;
      }
      emit_run(k, k + 1);
      ++k;
    }
    return end;
  }

  void emit_run(std::uint32_t from, std::uint32_t to) {
    for (std::uint32_t k = from; k < to; ++k) {
      const double adv = advance_px(text_[k]);
      cur_.chars.push_back({k, text_[k], Rect{x_, 0, x_ + adv, em_}});
      x_ += adv;
    }
    cur_.width = std::max(cur_.width, x_);
  }

  std::u32string_view text_;
  const RenderConfig& cfg_;
  double em_;
  double avail_;
  double x_ = 0;
  PendingLine cur_;
  std::vector<PendingLine> lines_;
};

}  // namespace

void RenderConfig::validate() const {
  if (font_size_pt <= 0) throw ConfigError("render: font_size_pt must be > 0");
  if (line_spacing <= 0) throw ConfigError("render: line_spacing must be > 0");
  if (raw_patch_px <= 0 || merge_factor <= 0)
    throw ConfigError("render: patch geometry must be positive");
  if (page_cap_px <= 0 || page_cap_px % token_cell_px() != 0)
    throw ConfigError("render: page_cap_px must be a positive multiple of " +
                      std::to_string(token_cell_px()));
  if (margin_px < 0 || 2 * margin_px >= page_cap_px)
    throw ConfigError("render: margins leave no content area");
  const double avail = page_cap_px - 2.0 * margin_px;
  if (em_px() > avail)
    throw ConfigError("render: font size " + std::to_string(font_size_pt) +
                      "pt does not fit the content area");
  if (line_advance_px() > avail)
    throw ConfigError("render: line advance exceeds the content area");
  if (font.glyphs.empty()) throw ConfigError("render: empty font table");
}

RenderedDocument layout_document(std::u32string_view txt,
                                 const RenderConfig& cfg) {
  cfg.validate();

  RenderedDocument doc;
  doc.text.assign(txt.begin(), txt.end());
  doc.source_len = static_cast<std::uint32_t>(txt.size());
  doc.token_cell_px = cfg.token_cell_px();

  const bool any_renderable =
      std::any_of(txt.begin(), txt.end(), [](char32_t c) {
        return !text::is_control(c) && c != U'\n';
      });
  if (txt.empty() || !any_renderable) return doc;  // 0 pages, m = 0

  std::vector<PendingLine> lines = LayoutBuilder(txt, cfg).run();

  const int cell = cfg.token_cell_px();
  const double line_adv = cfg.line_advance_px();
  const double em = cfg.em_px();
  const int lines_per_page = static_cast<int>(
      std::floor((cfg.page_cap_px - 2.0 * cfg.margin_px) / line_adv));
  if (lines_per_page < 1)
    throw ConfigError("render: page cap admits no full line");

  double content_w = 0;
  for (const auto& l : lines) content_w = std::max(content_w, l.width);
  if (content_w <= 0)
    throw InternalError("render: renderable text produced no geometry");
  const int page_w =
      std::min(cfg.page_cap_px, snap_up(content_w + 2.0 * cfg.margin_px, cell));

  for (std::size_t first = 0; first < lines.size();
       first += static_cast<std::size_t>(lines_per_page)) {
    const std::size_t count =
        std::min<std::size_t>(lines_per_page, lines.size() - first);
    RenderedPage page;
    page.width_px = page_w;
    page.height_px = std::min(
        cfg.page_cap_px,
        snap_up(2.0 * cfg.margin_px + static_cast<double>(count) * line_adv,
                cell));
    page.grid_w = page.width_px / cell;
    page.grid_h = page.height_px / cell;
    page.lines.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
      const PendingLine& src = lines[first + j];
      LineBox line;
      line.begin = src.begin;
      line.end = src.end;
      line.chars.reserve(src.chars.size());
      const double y0 = cfg.margin_px + static_cast<double>(j) * line_adv;
      for (const CharBox& cb : src.chars) {
        Rect r = cb.box;
        const bool rendered = r.x1 > r.x0;
        r.x0 += cfg.margin_px;
        r.x1 += cfg.margin_px;
        r.y0 = rendered ? y0 : 0;
        r.y1 = rendered ? y0 + em : 0;
        line.chars.push_back({cb.offset, cb.cp, r});
      }
      page.lines.push_back(std::move(line));
    }
    doc.visual_tokens +=
        static_cast<std::int64_t>(page.grid_w) * page.grid_h;
    doc.pages.push_back(std::move(page));
  }
  return doc;
}

RenderedDocument layout_document_utf8(std::string_view utf8,
                                      const RenderConfig& cfg) {
  return layout_document(text::decode_utf8(utf8), cfg);
}

std::int64_t count_visual_tokens(const RenderedDocument& doc) {
  const int cell = doc.token_cell_px;
  std::int64_t m = 0;
  for (const auto& page : doc.pages) {
    if (cell <= 0 || page.width_px % cell != 0 || page.height_px % cell != 0)
      throw InternalError("count_visual_tokens: page dims off the cell grid");
    m += static_cast<std::int64_t>(page.width_px / cell) *
         (page.height_px / cell);
  }
  return m;
}

AlignmentIndex build_alignment(const RenderedDocument& doc) {
  AlignmentIndex index;
  const int cell = doc.token_cell_px;
  index.pages.reserve(doc.pages.size());
  for (const auto& page : doc.pages) {
    PageAlignment pa;
    pa.grid_w = page.grid_w;
    pa.grid_h = page.grid_h;
    std::vector<std::vector<std::uint32_t>> hits(
        static_cast<std::size_t>(pa.grid_w) * pa.grid_h);
    for (const auto& line : page.lines) {
      for (const auto& cb : line.chars) {
        const Rect& r = cb.box;
        if (!r.positive_area()) continue;
        int c0 = static_cast<int>(std::floor(r.x0 / cell));
        int c1 = static_cast<int>(std::ceil(r.x1 / cell)) - 1;
        int r0 = static_cast<int>(std::floor(r.y0 / cell));
        int r1 = static_cast<int>(std::ceil(r.y1 / cell)) - 1;
        c0 = std::clamp(c0, 0, pa.grid_w - 1);
        c1 = std::clamp(c1, 0, pa.grid_w - 1);
        r0 = std::clamp(r0, 0, pa.grid_h - 1);
        r1 = std::clamp(r1, 0, pa.grid_h - 1);
        for (int row = r0; row <= r1; ++row) {
          for (int col = c0; col <= c1; ++col) {
            hits[static_cast<std::size_t>(row) * pa.grid_w + col].push_back(
                cb.offset);
          }
        }
      }
    }
    pa.cells.resize(hits.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
      auto& offsets = hits[i];
      AlignmentCell& out = pa.cells[i];
      out.char_count = static_cast<std::uint32_t>(offsets.size());
      for (std::uint32_t off : offsets) {
        if (!out.spans.empty() && out.spans.back().end == off) {
          ++out.spans.back().end;
        } else {
          out.spans.push_back({off, off + 1});
        }
      }
    }
    index.pages.push_back(std::move(pa));
  }
  return index;
}

RasterPage rasterize_page(const RenderedPage& page, const RenderConfig& cfg) {
  RasterPage raster;
  raster.width_px = page.width_px;
  raster.height_px = page.height_px;
  raster.ink.assign(
      static_cast<std::size_t>(page.width_px) * page.height_px, 0.0f);
  for (const auto& line : page.lines) {
    for (const auto& cb : line.chars) {
      const Rect& r = cb.box;
      if (!r.positive_area()) continue;
      const float v = static_cast<float>(cfg.font.ink(cb.cp));
      const int x_lo = std::max(0, static_cast<int>(std::floor(r.x0)));
      const int x_hi =
          std::min(page.width_px, static_cast<int>(std::ceil(r.x1)));
      const int y_lo = std::max(0, static_cast<int>(std::floor(r.y0)));
      const int y_hi =
          std::min(page.height_px, static_cast<int>(std::ceil(r.y1)));
      // A pixel belongs to a char box when its center falls inside.
      for (int y = y_lo; y < y_hi; ++y) {
        const double cy = y + 0.5;
        if (cy < r.y0 || cy >= r.y1) continue;
        for (int x = x_lo; x < x_hi; ++x) {
          const double cx = x + 0.5;
          if (cx < r.x0 || cx >= r.x1) continue;
          raster.ink[static_cast<std::size_t>(y) * page.width_px + x] = v;
        }
      }
    }
  }
  return raster;
}

std::string document_to_json(const RenderedDocument& doc) {
  nlohmann::ordered_json j;
  j["kind"] = "vtc-rendered-document/1";
  j["source_len"] = doc.source_len;
  j["token_cell_px"] = doc.token_cell_px;
  j["visual_tokens"] = doc.visual_tokens;
  j["pages"] = nlohmann::ordered_json::array();
  for (const auto& page : doc.pages) {
    nlohmann::ordered_json pj;
    pj["width_px"] = page.width_px;
    pj["height_px"] = page.height_px;
    pj["grid_w"] = page.grid_w;
    pj["grid_h"] = page.grid_h;
    pj["lines"] = nlohmann::ordered_json::array();
    for (const auto& line : page.lines) {
      nlohmann::ordered_json lj;
      lj["begin"] = line.begin;
      lj["end"] = line.end;
      nlohmann::ordered_json boxes = nlohmann::ordered_json::array();
      for (const auto& cb : line.chars) {
        if (!cb.box.positive_area()) continue;
        boxes.push_back({cb.offset, cb.box.x0, cb.box.y0, cb.box.x1, cb.box.y1});
      }
      lj["boxes"] = std::move(boxes);
      pj["lines"].push_back(std::move(lj));
    }
    j["pages"].push_back(std::move(pj));
  }
  return j.dump();
}

}  // namespace vtc::render
