#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>
#include <string>

#include "support/oracles.hpp"
#include "vtc/errors.hpp"
#include "vtc/render.hpp"
#include "vtc/text.hpp"

using namespace vtc;
using render::RenderConfig;
using render::RenderedDocument;

namespace {

std::string sample_text(std::mt19937_64& rng, std::size_t words) {
  static const char* pool[] = {"measure", "report",  "ledger", "branch",
                               "window",  ".",       "signal", "volume",
                               "margin",  "account", "quarter", "review"};
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += (rng() % 13 == 0) ? '\n' : ' ';
    out += pool[rng() % 12];
  }
  return out;
}

}  // namespace

TEST_CASE("layout is deterministic") {
  std::mt19937_64 rng(3);
  const RenderConfig cfg;
  for (int iter = 0; iter < 10; ++iter) {
    const auto text = sample_text(rng, 120 + rng() % 600);
    const auto a = render::layout_document_utf8(text, cfg);
    const auto b = render::layout_document_utf8(text, cfg);
    CHECK(render::document_to_json(a) == render::document_to_json(b));
  }
}

TEST_CASE("pages snap to the token grid under the cap") {
  std::mt19937_64 rng(11);
  const RenderConfig cfg;
  for (int iter = 0; iter < 40; ++iter) {
    const auto doc = render::layout_document_utf8(
        sample_text(rng, 30 + rng() % 900), cfg);
    for (const auto& page : doc.pages) {
      CHECK(page.width_px % 32 == 0);
      CHECK(page.height_px % 32 == 0);
      CHECK(page.width_px <= cfg.page_cap_px);
      CHECK(page.height_px <= cfg.page_cap_px);
      CHECK(page.width_px > 0);
      CHECK(page.height_px > 0);
      CHECK(page.grid_w == page.width_px / 32);
      CHECK(page.grid_h == page.height_px / 32);
    }
  }
}

TEST_CASE("token count equals brute-force cell counting") {
  std::mt19937_64 rng(13);
  const RenderConfig cfg;
  for (int iter = 0; iter < 40; ++iter) {
    const auto doc = render::layout_document_utf8(
        sample_text(rng, 10 + rng() % 1200), cfg);
    std::int64_t brute = 0;
    for (const auto& page : doc.pages) {
      brute += static_cast<std::int64_t>(page.width_px / 32) *
               static_cast<std::int64_t>(page.height_px / 32);
    }
    CHECK(doc.visual_tokens == brute);
    CHECK(render::count_visual_tokens(doc) == brute);
  }
}

TEST_CASE("character boxes stay ordered and inside the page") {
  std::mt19937_64 rng(17);
  const RenderConfig cfg;
  const auto doc =
      render::layout_document_utf8(sample_text(rng, 800), cfg);
  REQUIRE(!doc.pages.empty());
  for (const auto& page : doc.pages) {
    double prev_line_y = -1e9;
    for (const auto& line : page.lines) {
      CHECK(line.end >= line.begin);
      double prev_x = -1e9;
      for (const auto& cb : line.chars) {
        CHECK(cb.offset >= line.begin);
        CHECK(cb.offset < line.end);
        CHECK(cb.box.x0 >= 0.0);
        CHECK(cb.box.y0 >= 0.0);
        CHECK(cb.box.x1 <= page.width_px);
        CHECK(cb.box.y1 <= page.height_px);
        CHECK(cb.box.x0 >= prev_x - 1e-9);  // monotone along the line
        prev_x = cb.box.x0;
        CHECK(doc.text[cb.offset] == cb.cp);
      }
      if (!line.chars.empty()) {
        CHECK(line.chars.front().box.y0 >= prev_line_y - 1e-9);
        prev_line_y = line.chars.front().box.y0;
      }
    }
  }
}

TEST_CASE("empty and whitespace documents render no tokens") {
  const RenderConfig cfg;
  const auto empty = render::layout_document_utf8("", cfg);
  CHECK(empty.pages.empty());
  CHECK(empty.visual_tokens == 0);

  const auto newlines = render::layout_document_utf8("\n\n\n", cfg);
  CHECK(newlines.visual_tokens >= 0);  // blank lines may still occupy a page
}

TEST_CASE("invalid utf-8 is replaced, not dropped") {
  const std::string bad = std::string("ab") + char(0xff) + "cd";
  const RenderConfig cfg;
  const auto doc = render::layout_document_utf8(bad, cfg);
  REQUIRE(doc.text.size() == 5);
  CHECK(doc.text[2] == 0xFFFD);
}

TEST_CASE("config validation rejects broken grids") {
  RenderConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.page_cap_px = 930;  // not a multiple of 32
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RenderConfig{};
  cfg.margin_px = 600;  // 2*margin >= cap
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RenderConfig{};
  cfg.font_size_pt = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("font size sweep shrinks the token footprint") {
  std::mt19937_64 rng(19);
  const auto text = sample_text(rng, 700);
  std::int64_t prev = -1;
  for (int pt : {10, 12, 14}) {
    RenderConfig cfg;
    cfg.font_size_pt = pt;
    const auto doc = render::layout_document_utf8(text, cfg);
    if (prev >= 0) CHECK(doc.visual_tokens >= prev);
    prev = doc.visual_tokens;
  }
}

TEST_CASE("alignment matches brute-force rectangle intersection") {
  std::mt19937_64 rng(23);
  const RenderConfig cfg;
  for (int iter = 0; iter < 12; ++iter) {
    const auto doc = render::layout_document_utf8(
        sample_text(rng, 50 + rng() % 500), cfg);
    const auto align = render::build_alignment(doc);
    REQUIRE(align.pages.size() == doc.pages.size());
    for (std::size_t p = 0; p < doc.pages.size(); ++p) {
      const auto& page = doc.pages[p];
      const auto& pal = align.pages[p];
      REQUIRE(pal.grid_w == page.grid_w);
      REQUIRE(pal.grid_h == page.grid_h);

      // Re-derive cell membership char by char.
      std::vector<std::set<std::uint32_t>> want(
          static_cast<std::size_t>(pal.grid_w) * pal.grid_h);
      for (const auto& line : page.lines) {
        for (const auto& cb : line.chars) {
          if (!cb.box.positive_area()) continue;  // zero-width: excluded
          for (int r = 0; r < pal.grid_h; ++r) {
            for (int c = 0; c < pal.grid_w; ++c) {
              if (oracles::rect_hits_cell(cb.box.x0, cb.box.y0, cb.box.x1,
                                          cb.box.y1, c, r, 32.0)) {
                want[static_cast<std::size_t>(r) * pal.grid_w + c].insert(
                    cb.offset);
              }
            }
          }
        }
      }
      for (int r = 0; r < pal.grid_h; ++r) {
        for (int c = 0; c < pal.grid_w; ++c) {
          const auto& cell = pal.cell(r, c);
          std::set<std::uint32_t> got;
          std::uint32_t span_chars = 0;
          std::uint32_t prev_end = 0;
          for (const auto& sp : cell.spans) {
            CHECK(sp.end > sp.begin);
            CHECK(sp.begin >= prev_end);  // merged and ascending
            prev_end = sp.end;
            span_chars += sp.end - sp.begin;
            for (std::uint32_t o = sp.begin; o < sp.end; ++o) got.insert(o);
          }
          CHECK(cell.char_count == span_chars);
          const auto& expect =
              want[static_cast<std::size_t>(r) * pal.grid_w + c];
          CHECK(got == expect);
        }
      }
    }
  }
}

TEST_CASE("rasterized ink stays in range and hits glyph cells") {
  std::mt19937_64 rng(29);
  const RenderConfig cfg;
  const auto doc = render::layout_document_utf8(sample_text(rng, 200), cfg);
  REQUIRE(!doc.pages.empty());
  const auto raster = render::rasterize_page(doc.pages[0], cfg);
  CHECK(raster.width_px == doc.pages[0].width_px);
  CHECK(raster.height_px == doc.pages[0].height_px);
  double total = 0;
  for (float v : raster.ink) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
    total += v;
  }
  CHECK(total > 0.0);  // glyphs left ink somewhere
}

TEST_CASE("long unbroken words wrap mid-word instead of overflowing") {
  const RenderConfig cfg;
  std::string word(500, 'm');
  const auto doc = render::layout_document_utf8(word, cfg);
  REQUIRE(!doc.pages.empty());
  for (const auto& page : doc.pages) {
    CHECK(page.width_px <= cfg.page_cap_px);
    for (const auto& line : page.lines) {
      for (const auto& cb : line.chars) {
        CHECK(cb.box.x1 <= page.width_px + 1e-9);
      }
    }
  }
  // Every source char must appear in exactly one line span.
  std::uint32_t covered = 0;
  for (const auto& page : doc.pages) {
    for (const auto& line : page.lines) covered += line.end - line.begin;
  }
  CHECK(covered == doc.source_len);
}

TEST_CASE("loaded font table matches the builtin") {
#ifndef VTC_FONT_TABLE_PATH
#error "VTC_FONT_TABLE_PATH must point at the shipped metrics file"
#endif
  const auto loaded = render::load_font_table(VTC_FONT_TABLE_PATH);
  const auto& builtin = render::builtin_font_table();
  for (char32_t c = 0x20; c < 0x7f; ++c) {
    CHECK(loaded.advance_milli_em(c) == builtin.advance_milli_em(c));
    CHECK(loaded.ink(c) == doctest::Approx(builtin.ink(c)));
  }
}

TEST_CASE("document json carries the layout schema") {
  const RenderConfig cfg;
  const auto doc = render::layout_document_utf8("hello json", cfg);
  const auto j = render::document_to_json(doc);
  CHECK(j.find("vtc-rendered-document/1") != std::string::npos);
  CHECK(j.find("visual_tokens") != std::string::npos);
}
