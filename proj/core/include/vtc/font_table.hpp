#pragma once

#include <string>
#include <unordered_map>

namespace vtc::render {

struct GlyphMetric {
  int advance_milli_em = 500;  // horizontal advance, 1/1000 em units
  double ink = 0.0;            // fraction of the glyph cell covered by ink, [0,1]
};

// Per-codepoint metrics for the deterministic layout model. Codepoints absent
// from the table fall back to a 0.5 em advance and a nominal ink coverage.
struct FontTable {
  std::string version;
  std::unordered_map<char32_t, GlyphMetric> glyphs;
  int fallback_advance_milli_em = 500;
  double fallback_ink = 0.08;

  int advance_milli_em(char32_t cp) const;
  double ink(char32_t cp) const;
  bool has(char32_t cp) const { return glyphs.count(cp) != 0; }
};

// Compiled-in copy of the bundled table (data/font_metrics_v1.tsv).
const FontTable& builtin_font_table();

// Loads a versioned tabular text file: '#'-comment lines (the first one names
// the version), then rows of <codepoint> <advance_milli_em> <ink>.
// Throws ConfigError on missing file, missing version tag, or bad rows.
FontTable load_font_table(const std::string& path);

}  // namespace vtc::render
