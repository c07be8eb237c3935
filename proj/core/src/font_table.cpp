#include "vtc/font_table.hpp"

#include <fstream>
#include <sstream>

#include "vtc/errors.hpp"

namespace vtc::render {

namespace {

struct GlyphRow {
  char32_t cp;
  int advance;
  double ink;
};

// Metrics model a 12pt Roboto-like face: tabular digits, wide M/W, narrow
// punctuation. Ink is the approximate fraction of the em box a glyph covers.
constexpr GlyphRow kGlyphRows[] = {
    {32, 248, 0.000},  {33, 257, 0.074},  {34, 320, 0.045},  {35, 616, 0.208},
    {36, 562, 0.181},  {37, 733, 0.164},  {38, 622, 0.185},  {39, 174, 0.038},
    {40, 342, 0.086},  {41, 348, 0.086},  {42, 431, 0.092},  {43, 567, 0.106},
    {44, 196, 0.052},  {45, 276, 0.058},  {46, 263, 0.042},  {47, 412, 0.096},
    {48, 562, 0.172},  {49, 562, 0.118},  {50, 562, 0.164},  {51, 562, 0.166},
    {52, 562, 0.170},  {53, 562, 0.166},  {54, 562, 0.174},  {55, 562, 0.138},
    {56, 562, 0.184},  {57, 562, 0.174},  {58, 242, 0.076},  {59, 218, 0.082},
    {60, 509, 0.094},  {61, 549, 0.108},  {62, 522, 0.094},  {63, 472, 0.112},
    {64, 898, 0.238},  {65, 652, 0.196},  {66, 623, 0.214},  {67, 651, 0.176},
    {68, 656, 0.204},  {69, 568, 0.208},  {70, 553, 0.186},  {71, 681, 0.196},
    {72, 712, 0.206},  {73, 272, 0.162},  {74, 552, 0.152},  {75, 626, 0.202},
    {76, 538, 0.152},  {77, 873, 0.252},  {78, 712, 0.226},  {79, 688, 0.188},
    {80, 631, 0.192},  {81, 688, 0.202},  {82, 616, 0.210},  {83, 593, 0.188},
    {84, 597, 0.152},  {85, 648, 0.186},  {86, 636, 0.174},  {87, 888, 0.236},
    {88, 627, 0.186},  {89, 600, 0.158},  {90, 599, 0.198},  {91, 265, 0.096},
    {92, 410, 0.096},  {93, 265, 0.096},  {94, 418, 0.072},  {95, 451, 0.066},
    {96, 309, 0.030},  {97, 544, 0.176},  {98, 561, 0.182},  {99, 523, 0.150},
    {100, 564, 0.182}, {101, 530, 0.176}, {102, 347, 0.138}, {103, 561, 0.198},
    {104, 551, 0.172}, {105, 243, 0.118}, {106, 239, 0.134}, {107, 507, 0.180},
    {108, 243, 0.110}, {109, 876, 0.232}, {110, 551, 0.168}, {111, 570, 0.166},
    {112, 561, 0.190}, {113, 568, 0.190}, {114, 338, 0.110}, {115, 516, 0.162},
    {116, 327, 0.128}, {117, 551, 0.160}, {118, 484, 0.140}, {119, 751, 0.196},
    {120, 496, 0.150}, {121, 473, 0.160}, {122, 496, 0.158}, {123, 340, 0.104},
    {124, 244, 0.090}, {125, 340, 0.104}, {126, 680, 0.062},
};

FontTable make_builtin() {
  FontTable t;
  t.version = "v1";
  t.glyphs.reserve(std::size(kGlyphRows));
  for (const auto& row : kGlyphRows) {
    t.glyphs.emplace(row.cp, GlyphMetric{row.advance, row.ink});
  }
  return t;
}

}  // namespace

int FontTable::advance_milli_em(char32_t cp) const {
  auto it = glyphs.find(cp);
  return it == glyphs.end() ? fallback_advance_milli_em
                            : it->second.advance_milli_em;
}

double FontTable::ink(char32_t cp) const {
  auto it = glyphs.find(cp);
  return it == glyphs.end() ? fallback_ink : it->second.ink;
}

const FontTable& builtin_font_table() {
  static const FontTable table = make_builtin();
  return table;
}

FontTable load_font_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("font table: cannot open '" + path + "'");

  FontTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      // The version lives in a comment header: "# vtc-font-metrics v1".
      if (t.version.empty()) {
        auto pos = line.rfind(" v");
        if (line.find("vtc-font-metrics") != std::string::npos &&
            pos != std::string::npos) {
          t.version = line.substr(pos + 1);
        }
      }
      continue;
    }
    std::istringstream row(line);
    long cp = -1;
    int advance = 0;
    double ink = -1.0;
    if (!(row >> cp >> advance >> ink)) {
      throw ConfigError("font table: bad row at " + path + ":" +
                        std::to_string(lineno));
    }
    if (cp < 0 || cp > 0x10FFFF || advance <= 0 || ink < 0.0 || ink > 1.0) {
      throw ConfigError("font table: out-of-range values at " + path + ":" +
                        std::to_string(lineno));
    }
    t.glyphs[static_cast<char32_t>(cp)] = GlyphMetric{advance, ink};
  }
  if (t.version.empty()) {
    throw ConfigError("font table: missing version header in '" + path + "'");
  }
  if (t.glyphs.empty()) {
    throw ConfigError("font table: no glyph rows in '" + path + "'");
  }
  return t;
}

}  // namespace vtc::render
