#include "vtc/calibrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "vtc/errors.hpp"
#include "vtc/text.hpp"

namespace vtc::calibrate {
namespace {

using json = nlohmann::ordered_json;

constexpr std::array<double, 3> kAlphaAnchors = {0.10, 0.35, 0.65};
constexpr std::array<double, 3> kBetaAnchors = {0.10, 0.40, 0.70};
constexpr std::array<int, 2> kHaystackLens = {1000, 4000};

constexpr const char* kFirstNames[] = {
    "Maria", "Elena", "Priya", "Amara", "Ingrid", "Sofia", "Yuki", "Fatima",
    "Nadia", "Clara", "Hana", "Leila", "Rosa", "Aiko", "Greta", "Irene",
    "Dalia", "Mira", "Noor", "Vera", "Daniel", "Rafael", "Tomas", "Viktor",
    "Kenji", "Omar", "Felix", "Hassan", "Pavel", "Marco", "Arjun", "Stefan",
    "Mateo", "Jonas", "Tariq", "Ivan", "Hugo", "Emil", "Oscar", "Leon"};

constexpr const char* kLastNames[] = {
    "Castillo", "Okafor", "Lindqvist", "Moreau", "Tanaka", "Petrov", "Silva",
    "Haddad", "Novak", "Fischer", "Iyer", "Kowalski", "Duarte", "Eriksen",
    "Vargas", "Hoffmann", "Rahman", "Bianchi", "Larsen", "Mendes", "Okonkwo",
    "Takahashi", "Svensson", "Marchetti", "Oyelaran", "Dimitrov", "Farouk",
    "Jansen", "Kovacs", "Lombardi", "Navarro", "Olsen", "Pereira", "Quintero",
    "Rossi", "Sandoval", "Tesfaye", "Ueda", "Valente", "Weber"};

// First tokens are pairwise distinct; the second token is always "University".
constexpr const char* kUniversityFirst[] = {
    "Stanford", "Princeton", "Cornell", "Heidelberg", "Kyoto", "Toronto",
    "Melbourne", "Uppsala", "Leiden", "Bologna", "Zurich", "Geneva", "Aarhus",
    "Gothenburg", "Salamanca", "Coimbra", "Tsukuba", "Adelaide", "Otago",
    "McGill", "Waterloo", "Edinburgh", "Glasgow", "Bristol", "Leeds",
    "Manchester", "Padua", "Vienna", "Krakow", "Tartu"};

// Two words each, pairwise-distinct first tokens (the low-tier gold keyword).
constexpr const char* kAwards[] = {
    "Turing Award", "Fields Medal", "Abel Prize", "Wolf Prize",
    "Holberg Prize", "Lasker Award", "Balzan Prize", "Crafoord Prize",
    "Shaw Prize", "Breakthrough Prize", "Copley Medal", "Darwin Medal",
    "Hughes Medal", "Rumford Medal", "Leibniz Prize", "Herschel Medal",
    "Eddington Medal", "Dirac Medal", "Lorentz Medal", "Planck Medal"};

constexpr const char* kResearchFields[] = {
    "distributed consensus", "quantum computing", "graph algorithms",
    "protein folding", "climate modeling", "neural computation",
    "formal verification", "compiler optimization", "numerical analysis",
    "cryptographic protocols", "database indexing", "signal processing",
    "materials discovery", "genome assembly", "robotic manipulation",
    "network routing"};

constexpr const char* kCities[] = {
    "Oslo", "Lima", "Quito", "Accra", "Dakar", "Tunis", "Cairo", "Nairobi",
    "Lagos", "Harare", "Perth", "Auckland", "Suva", "Manila", "Bangkok",
    "Hanoi", "Seoul", "Osaka", "Taipei", "Mumbai", "Karachi", "Tehran",
    "Baghdad", "Amman", "Beirut", "Ankara", "Athens", "Lisbon", "Porto",
    "Seville", "Valencia", "Marseille", "Lyon", "Turin", "Naples", "Prague",
    "Warsaw", "Riga", "Tallinn", "Helsinki"};

// Neutral report vocabulary. Deliberately avoids every gold token used by the
// probes (award keywords, city names, digits) so filler can never satisfy an
// exact-substring, name, or numeric check by accident.
constexpr const char* kFiller[] = {
    "the",      "quarterly", "committee", "review",   "process",  "update",
    "general",  "schedule",  "meeting",   "notes",    "several",  "regional",
    "office",   "staff",     "planning",  "budget",   "phase",    "ongoing",
    "status",   "draft",     "revised",   "summary",  "section",  "item",
    "agenda",   "pending",   "outline",   "proposal", "remark",   "detail",
    "matter",   "context",   "overall",   "further",  "annual",   "interim",
    "brief",    "records",   "archive",   "catalog",  "register", "minutes",
    "handbook", "appendix",  "chapter",   "overview", "preface",  "margin",
    "footnote", "abstract",  "excerpt",   "passage",  "segment",  "clause",
    "heading",  "caption",   "index",     "glossary", "roster",   "ledger",
    "docket",   "memo",      "bulletin",  "gazette"};

template <typename T, std::size_t N>
constexpr std::size_t count_of(const T (&)[N]) {
  return N;
}

// Uniform-enough draw that is identical across platforms (bit-for-bit
// reproducibility beats distribution quality for probe synthesis).
std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

std::string ascii_lower_copy(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> whitespace_words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string first_words(std::string_view s, std::size_t k) {
  auto words = whitespace_words(s);
  std::string out;
  for (std::size_t i = 0; i < k && i < words.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += words[i];
  }
  return out;
}

std::string gen_filler(std::mt19937_64& rng, std::size_t target) {
  std::string out;
  out.reserve(target + 32);
  int in_sentence = 0;
  int sentence_len = 9 + static_cast<int>(draw(rng, 6));
  bool capitalize = true;
  while (out.size() < target) {
    std::string w = kFiller[draw(rng, count_of(kFiller))];
    if (capitalize) {
      w[0] = static_cast<char>(w[0] - 'a' + 'A');
      capitalize = false;
    }
    if (++in_sentence >= sentence_len) {
      w += '.';
      capitalize = true;
      in_sentence = 0;
      sentence_len = 9 + static_cast<int>(draw(rng, 6));
    }
    out += w;
    out += ' ';
  }
  return out;
}

struct Insert {
  double frac = 0;       // desired start position / final document length
  std::string text;      // includes its own trailing separator
};

// Splices inserts into filler at word boundaries, keeping each realized start
// as close as possible to frac * final_length. Inserts must be sorted by frac.
std::string weave(const std::string& filler, const std::vector<Insert>& ins,
                  std::vector<std::size_t>* positions_out) {
  std::vector<std::size_t> boundaries;
  boundaries.push_back(0);
  for (std::size_t i = 1; i < filler.size(); ++i) {
    if (filler[i - 1] == ' ') boundaries.push_back(i);
  }
  boundaries.push_back(filler.size());

  std::size_t total_insert = 0;
  for (const auto& in : ins) total_insert += in.text.size();
  const std::size_t final_len = filler.size() + total_insert;

  std::string out;
  out.reserve(final_len);
  std::size_t cursor = 0;     // position in filler
  std::size_t shift = 0;      // bytes of inserts already emitted
  std::size_t prev_snap = 0;  // previous insertion point in filler coordinates
  bool any_prev = false;
  for (const auto& in : ins) {
    const double desired_final = in.frac * static_cast<double>(final_len);
    std::size_t p = 0;
    if (desired_final > static_cast<double>(shift)) {
      p = static_cast<std::size_t>(std::llround(desired_final)) - shift;
    }
    p = std::min(p, filler.size());
    auto it = std::lower_bound(boundaries.begin(), boundaries.end(), p);
    std::size_t snap;
    if (it == boundaries.end()) {
      snap = boundaries.back();
    } else if (it == boundaries.begin()) {
      snap = *it;
    } else {
      const std::size_t hi = *it, lo = *(it - 1);
      snap = (p - lo <= hi - p) ? lo : hi;
    }
    if (any_prev && snap <= prev_snap) {
      auto next = std::upper_bound(boundaries.begin(), boundaries.end(),
                                   prev_snap);
      snap = (next == boundaries.end()) ? filler.size() : *next;
    }
    out.append(filler, cursor, snap - cursor);
    if (positions_out) positions_out->push_back(out.size());
    out += in.text;
    cursor = snap;
    shift += in.text.size();
    prev_snap = snap;
    any_prev = true;
  }
  out.append(filler, cursor, filler.npos);
  return out;
}

std::string make_haystack(std::mt19937_64& rng, std::size_t target_len,
                          std::vector<Insert> ins,
                          std::vector<std::size_t>* positions_out = nullptr) {
  std::size_t total_insert = 0;
  for (const auto& in : ins) total_insert += in.text.size();
  const std::size_t base =
      target_len > total_insert ? target_len - total_insert : 64;
  std::string filler = gen_filler(rng, base);
  std::stable_sort(ins.begin(), ins.end(),
                   [](const Insert& a, const Insert& b) { return a.frac < b.frac; });
  return weave(filler, ins, positions_out);
}

std::string format_id(const char* kind, int series, const char* tier_tag,
                      int length_index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s-n%02d-%s-h%d", kind, series, tier_tag,
                length_index);
  return buf;
}

struct AlphaFact {
  std::string first, last, university, award, field;
  int year = 0;
  std::string needle;   // exactly 50 whitespace words
  std::string summary;  // exactly 10 whitespace words
  std::string keyword;  // first token of the award
};

AlphaFact make_alpha_fact(std::mt19937_64& rng,
                          std::set<std::pair<int, int>>& used_names) {
  AlphaFact f;
  int fi = 0, li = 0;
  do {
    fi = static_cast<int>(draw(rng, count_of(kFirstNames)));
    li = static_cast<int>(draw(rng, count_of(kLastNames)));
  } while (used_names.count({fi, li}) != 0);
  used_names.insert({fi, li});
  f.first = kFirstNames[fi];
  f.last = kLastNames[li];
  f.university = std::string(kUniversityFirst[draw(rng, count_of(kUniversityFirst))]) +
                 " University";
  f.award = kAwards[draw(rng, count_of(kAwards))];
  f.field = kResearchFields[draw(rng, count_of(kResearchFields))];
  f.year = 1950 + static_cast<int>(draw(rng, 70));
  f.keyword = f.award.substr(0, f.award.find(' '));

  const std::string year = std::to_string(f.year);
  // Three sentences of 20 + 15 + 15 whitespace words = exactly 50, so the
  // partial-overlap scorer can target precise token ratios.
  f.needle = "In " + year + ", " + f.first + " " + f.last + " of " +
             f.university + " received the " + f.award +
             " for pioneering contributions to the field of " + f.field +
             ". The award committee at " + f.university +
             " publicly praised " + f.last + " for advancing " + f.field +
             " research worldwide. Colleagues described " + f.first + " " +
             f.last + " as a defining voice of " + f.field +
             " scholarship during that era.";
  // Exactly 10 whitespace words.
  f.summary = f.first + " " + f.last + " of " + f.university + " won " +
              f.award + " in " + year + ".";
  return f;
}

struct BetaFact {
  std::string city;
  int temp = 0;
};

struct BetaTask {
  std::vector<BetaFact> facts;  // 5, in planted order
  bool numeric = false;         // alternates with city-name scoring
};

BetaTask make_beta_task(std::mt19937_64& rng, int task_index) {
  BetaTask t;
  t.numeric = (task_index % 2) == 0;
  std::set<int> cities, temps;
  while (t.facts.size() < 5) {
    int ci = static_cast<int>(draw(rng, count_of(kCities)));
    int temp = 12 + static_cast<int>(draw(rng, 33));
    if (cities.count(ci) != 0 || temps.count(temp) != 0) continue;
    cities.insert(ci);
    temps.insert(temp);
    t.facts.push_back({kCities[ci], temp});
  }
  return t;
}

std::string beta_sentence(const BetaFact& f) {
  return "The temperature in " + f.city + " reached " +
         std::to_string(f.temp) + " degrees.";
}

struct GammaPerson {
  std::string name;  // "First Last"
  std::string award;
  int year = 0;
};

struct GammaSet {
  std::vector<GammaPerson> people;  // 3
  std::string gold;                 // name with the latest year
};

GammaSet make_gamma_set(std::mt19937_64& rng) {
  GammaSet s;
  std::set<std::pair<int, int>> names;
  std::set<int> years;
  while (s.people.size() < 3) {
    int fi = static_cast<int>(draw(rng, count_of(kFirstNames)));
    int li = static_cast<int>(draw(rng, count_of(kLastNames)));
    int year = 1970 + static_cast<int>(draw(rng, 51));
    if (names.count({fi, li}) != 0 || years.count(year) != 0) continue;
    names.insert({fi, li});
    years.insert(year);
    GammaPerson p;
    p.name = std::string(kFirstNames[fi]) + " " + kLastNames[li];
    p.award = kAwards[draw(rng, count_of(kAwards))];
    p.year = year;
    s.people.push_back(p);
  }
  const auto latest =
      std::max_element(s.people.begin(), s.people.end(),
                       [](const GammaPerson& a, const GammaPerson& b) {
                         return a.year < b.year;
                       });
  s.gold = latest->name;
  return s;
}

std::string gamma_table(const GammaSet& s) {
  std::string out = "\nAward summary table follows.\n| Person | Award | Year |\n"
                    "| --- | --- | --- |\n";
  for (const auto& p : s.people) {
    out += "| " + p.name + " | " + p.award + " | " + std::to_string(p.year) +
           " |\n";
  }
  return out;
}

std::string gamma_prose(const GammaSet& s) {
  std::string out;
  for (const auto& p : s.people) {
    out += p.name + " received the " + p.award + " in " +
           std::to_string(p.year) + ". ";
  }
  return out;
}

std::string assemble_prompt(const std::string& haystack,
                            const std::string& question) {
  return haystack + "\n\n" + question + "\n";
}

int lcs_length(const std::vector<std::string>& a,
               const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<int> dp(b.size() + 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    int prev = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const int cur = dp[j + 1];
      dp[j + 1] = (a[i] == b[j]) ? prev + 1 : std::max(dp[j + 1], dp[j]);
      prev = cur;
    }
  }
  return dp[b.size()];
}

std::optional<double> first_number(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    const bool digit = c >= '0' && c <= '9';
    const bool sign = (c == '-' || c == '+') && i + 1 < s.size() &&
                      s[i + 1] >= '0' && s[i + 1] <= '9';
    if (!digit && !sign) continue;
    const std::string tail(s.substr(i));
    char* end = nullptr;
    const double v = std::strtod(tail.c_str(), &end);
    if (end != tail.c_str()) return v;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::alpha: return "alpha";
    case ProbeKind::beta: return "beta";
    case ProbeKind::gamma: return "gamma";
  }
  throw InternalError("unknown probe kind");
}

std::string_view to_string(ProbeFormat f) {
  switch (f) {
    case ProbeFormat::none: return "none";
    case ProbeFormat::structured: return "structured";
    case ProbeFormat::flat: return "flat";
  }
  throw InternalError("unknown probe format");
}

std::string_view to_string(ScoringMode m) {
  switch (m) {
    case ScoringMode::exact_substring: return "exact-substring";
    case ScoringMode::rouge_l: return "rouge-l";
    case ScoringMode::numeric_tolerance: return "numeric-tolerance";
    case ScoringMode::name_match: return "name-match";
  }
  throw InternalError("unknown scoring mode");
}

std::string_view to_string(PathTag p) {
  return p == PathTag::vlm ? "vlm" : "llm";
}

std::vector<ProbeItem> generate_alpha_probe(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x616c706861ULL);
  std::set<std::pair<int, int>> used_names;
  std::vector<AlphaFact> facts;
  facts.reserve(80);
  std::vector<double> fracs;
  for (int i = 0; i < 80; ++i) {
    facts.push_back(make_alpha_fact(rng, used_names));
    fracs.push_back(0.15 + static_cast<double>(draw(rng, 71)) / 100.0);
  }

  std::vector<ProbeItem> items;
  items.reserve(480);
  for (int n = 0; n < 80; ++n) {
    const AlphaFact& f = facts[n];
    for (int t = 0; t < 3; ++t) {
      for (int h = 0; h < 2; ++h) {
        ProbeItem it;
        it.kind = ProbeKind::alpha;
        it.tier = kAlphaAnchors[t];
        it.format = ProbeFormat::none;
        it.haystack_len = kHaystackLens[h];
        it.series = n;
        it.length_index = h;
        it.tier_index = t;
        char tag[8];
        std::snprintf(tag, sizeof(tag), "t%d", t);
        it.id = format_id("alpha", n, tag, h);

        std::mt19937_64 fill_rng(seed ^ 0xF177E5ULL ^
                                 (static_cast<std::uint64_t>(n) << 20) ^
                                 (static_cast<std::uint64_t>(t) << 8) ^
                                 static_cast<std::uint64_t>(h));
        const std::string haystack = make_haystack(
            fill_rng, static_cast<std::size_t>(it.haystack_len),
            {{fracs[n], f.needle + " "}});

        std::string question;
        if (t == 0) {
          question =
              "Question: which award is mentioned in the passage? Answer "
              "with the single keyword that names the award.";
          it.gold = f.keyword;
          it.mode = ScoringMode::exact_substring;
        } else if (t == 1) {
          question =
              "Question: summarize the planted biographical fact in one "
              "short sentence.";
          it.gold = f.summary;
          it.mode = ScoringMode::rouge_l;
        } else {
          question =
              "Question: restate the planted biographical fact in full "
              "detail.";
          it.gold = f.needle;
          it.mode = ScoringMode::rouge_l;
        }
        it.prompt = assemble_prompt(haystack, question);
        items.push_back(std::move(it));
      }
    }
  }
  return items;
}

std::vector<ProbeItem> generate_beta_probe(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x62657461ULL);
  std::vector<BetaTask> tasks;
  tasks.reserve(60);
  for (int i = 0; i < 60; ++i) tasks.push_back(make_beta_task(rng, i));

  static constexpr double kLowFracs[] = {0.50};
  static constexpr double kMedFracs[] = {0.20, 0.50, 0.80};
  static constexpr double kHighFracs[] = {0.10, 0.30, 0.50, 0.70, 0.90};

  std::vector<ProbeItem> items;
  items.reserve(360);
  for (int n = 0; n < 60; ++n) {
    const BetaTask& task = tasks[n];
    for (int t = 0; t < 3; ++t) {
      const int fact_count = t == 0 ? 1 : (t == 1 ? 3 : 5);
      const double* fracs = t == 0 ? kLowFracs : (t == 1 ? kMedFracs : kHighFracs);
      for (int h = 0; h < 2; ++h) {
        ProbeItem it;
        it.kind = ProbeKind::beta;
        it.tier = kBetaAnchors[t];
        it.format = ProbeFormat::none;
        it.haystack_len = kHaystackLens[h];
        it.series = n;
        it.length_index = h;
        it.tier_index = t;
        char tag[8];
        std::snprintf(tag, sizeof(tag), "t%d", t);
        it.id = format_id("beta", n, tag, h);

        std::vector<Insert> ins;
        const BetaFact* best = nullptr;
        for (int k = 0; k < fact_count; ++k) {
          const BetaFact& f = task.facts[static_cast<std::size_t>(k)];
          ins.push_back({fracs[k], beta_sentence(f) + " "});
          if (best == nullptr || f.temp > best->temp) best = &f;
        }
        std::mt19937_64 fill_rng(seed ^ 0xF177E6ULL ^
                                 (static_cast<std::uint64_t>(n) << 20) ^
                                 (static_cast<std::uint64_t>(t) << 8) ^
                                 static_cast<std::uint64_t>(h));
        const std::string haystack =
            make_haystack(fill_rng, static_cast<std::size_t>(it.haystack_len),
                          std::move(ins));

        std::string question;
        if (task.numeric) {
          question =
              "Question: what was the highest temperature in degrees among "
              "the cities listed in the passage? Answer with the number "
              "only.";
          it.gold = std::to_string(best->temp);
          it.mode = ScoringMode::numeric_tolerance;
        } else {
          question =
              "Question: which city listed in the passage recorded the "
              "highest temperature? Answer with the city name only.";
          it.gold = best->city;
          it.mode = ScoringMode::name_match;
        }
        it.prompt = assemble_prompt(haystack, question);
        items.push_back(std::move(it));
      }
    }
  }
  return items;
}

std::vector<ProbeItem> generate_gamma_probe(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x67616d6dULL);
  std::vector<GammaSet> sets;
  sets.reserve(60);
  std::vector<double> fracs;
  for (int i = 0; i < 60; ++i) {
    sets.push_back(make_gamma_set(rng));
    fracs.push_back(0.25 + static_cast<double>(draw(rng, 51)) / 100.0);
  }

  std::vector<ProbeItem> items;
  items.reserve(240);
  for (int n = 0; n < 60; ++n) {
    const GammaSet& s = sets[n];
    for (int fmt = 0; fmt < 2; ++fmt) {
      const bool structured = fmt == 0;
      for (int h = 0; h < 2; ++h) {
        ProbeItem it;
        it.kind = ProbeKind::gamma;
        it.tier = 0.0;
        it.format = structured ? ProbeFormat::structured : ProbeFormat::flat;
        it.haystack_len = kHaystackLens[h];
        it.series = n;
        it.length_index = h;
        it.tier_index = 0;
        it.id = format_id("gamma", n, structured ? "struct" : "flat", h);

        std::mt19937_64 fill_rng(seed ^ 0xF177E7ULL ^
                                 (static_cast<std::uint64_t>(n) << 20) ^
                                 (static_cast<std::uint64_t>(fmt) << 8) ^
                                 static_cast<std::uint64_t>(h));
        const std::string block =
            structured ? gamma_table(s) : gamma_prose(s);
        const std::string haystack =
            make_haystack(fill_rng, static_cast<std::size_t>(it.haystack_len),
                          {{fracs[n], block}});

        it.gold = s.gold;
        it.mode = ScoringMode::name_match;
        it.prompt = assemble_prompt(
            haystack,
            "Question: according to the passage, who received their award "
            "most recently? Answer with the person's name.");
        items.push_back(std::move(it));
      }
    }
  }
  return items;
}

double rouge_l_f1(std::string_view pred, std::string_view gold) {
  const auto a = text::word_tokens_utf8(pred);
  const auto b = text::word_tokens_utf8(gold);
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  const int lcs = lcs_length(a, b);
  if (lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / static_cast<double>(a.size());
  const double r = static_cast<double>(lcs) / static_cast<double>(b.size());
  return 2.0 * p * r / (p + r);
}

double score_response(const ProbeItem& item, std::string_view response) {
  switch (item.mode) {
    case ScoringMode::exact_substring:
    case ScoringMode::name_match: {
      const std::string hay = ascii_lower_copy(response);
      const std::string needle = ascii_lower_copy(item.gold);
      if (needle.empty()) throw InternalError("probe has empty gold answer");
      return hay.find(needle) != std::string::npos ? 1.0 : 0.0;
    }
    case ScoringMode::rouge_l:
      return rouge_l_f1(response, item.gold);
    case ScoringMode::numeric_tolerance: {
      const auto gold = first_number(item.gold);
      if (!gold) throw InternalError("numeric probe has non-numeric gold");
      const auto got = first_number(response);
      if (!got) return 0.0;
      const double tol = 0.15 * std::fabs(*gold);
      return std::fabs(*got - *gold) <= tol ? 1.0 : 0.0;
    }
  }
  throw InternalError("unknown scoring mode");
}

double tier_gap(double vlm_mean, double llm_mean) {
  if (llm_mean <= 0) {
    throw CalibrationError(
        "tier excluded: reference-path mean score is zero");
  }
  return std::max(0.0, 1.0 - vlm_mean / llm_mean);
}

Fit fit_no_intercept(const std::vector<double>& x,
                     const std::vector<double>& g) {
  if (x.empty() || x.size() != g.size()) {
    throw DataError("fit requires matching non-empty tier and gap vectors");
  }
  double sxx = 0, sxg = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxg += x[i] * g[i];
  }
  if (sxx <= 0) throw DataError("fit requires a non-zero tier anchor");
  Fit f;
  f.value = sxg / sxx;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = g[i] - f.value * x[i];
    ss_res += e * e;
    ss_tot += g[i] * g[i];
  }
  f.r2_defined = ss_tot > 0;
  f.r2 = f.r2_defined ? 1.0 - ss_res / ss_tot : 0.0;
  return f;
}

double fit_structured_bonus(double r_struct, double r_flat) {
  return std::max(0.0, r_struct - r_flat);
}

MockScorer::MockScorer() : identical_(true) {}
MockScorer::MockScorer(double slope) : identical_(false), slope_(slope) {}

std::string MockScorer::name() const {
  if (identical_) return "mock";
  std::ostringstream os;
  os << "mock-slope=" << slope_;
  return os.str();
}

std::string MockScorer::respond(const ProbeItem& item, PathTag path) {
  if (identical_ || item.kind == ProbeKind::gamma) return item.gold;

  const int tier_size = item.kind == ProbeKind::alpha ? 160 : 120;
  const int j = item.series * 2 + item.length_index;
  const double ratio = std::clamp(1.0 - slope_ * item.tier, 0.0, 1.0);

  if (item.mode == ScoringMode::rouge_l) {
    if (path == PathTag::llm) return item.gold;
    const auto words = whitespace_words(item.gold);
    const int g = static_cast<int>(words.size());
    const long long t_total = std::llround(ratio * tier_size * g);
    const int base = static_cast<int>(t_total / tier_size);
    const int rem = static_cast<int>(t_total % tier_size);
    int k = base + (j < rem ? 1 : 0);
    k = std::clamp(k, 0, g);
    std::string out = first_words(item.gold, static_cast<std::size_t>(k));
    for (int q = 0; q < g - k; ++q) {
      if (!out.empty()) out += ' ';
      out += "qz" + std::to_string(q);
    }
    return out;
  }

  // Binary modes: engineer mean ratio C_vlm / C_llm with C_llm = 100.
  static constexpr int kLlmCorrect = 100;
  const int vlm_correct =
      static_cast<int>(std::llround(ratio * kLlmCorrect));
  const int correct = path == PathTag::llm ? kLlmCorrect : vlm_correct;
  if (j < correct) return item.gold;
  return "no relevant information found";
}

ReplayScorer::ReplayScorer(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("replay fixture line " + std::to_string(line_no) +
                      ": " + e.what());
    }
    if (!row.is_object() || !row.contains("item") || !row.contains("path") ||
        !row.contains("response") || !row["item"].is_string() ||
        !row["path"].is_string() || !row["response"].is_string()) {
      throw DataError("replay fixture line " + std::to_string(line_no) +
                      ": expected object with item/path/response strings");
    }
    const std::string p = row["path"].get<std::string>();
    if (p != "vlm" && p != "llm") {
      throw DataError("replay fixture line " + std::to_string(line_no) +
                      ": path must be \"vlm\" or \"llm\"");
    }
    responses_.emplace_back(row["item"].get<std::string>() + "|" + p,
                            row["response"].get<std::string>());
  }
  std::sort(responses_.begin(), responses_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < responses_.size(); ++i) {
    if (responses_[i].first == responses_[i - 1].first) {
      throw DataError("replay fixture has duplicate entry for " +
                      responses_[i].first);
    }
  }
}

ReplayScorer ReplayScorer::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open replay fixture: " + path);
  return ReplayScorer(in);
}

std::string ReplayScorer::respond(const ProbeItem& item, PathTag path) {
  const std::string key = item.id + "|" + std::string(to_string(path));
  auto it = std::lower_bound(
      responses_.begin(), responses_.end(), key,
      [](const auto& a, const std::string& k) { return a.first < k; });
  if (it == responses_.end() || it->first != key) {
    throw CalibrationError("replay fixture missing response for item " +
                           item.id + " path " + std::string(to_string(path)));
  }
  return it->second;
}

std::string ReplayScorer::name() const { return "replay"; }

std::string RemoteStubScorer::respond(const ProbeItem&, PathTag) {
  throw ConfigError("remote scoring endpoint is not available in this build");
}

std::string RemoteStubScorer::name() const { return "remote-stub"; }

namespace {

void run_tiered_probe(Scorer& scorer, const std::vector<ProbeItem>& items,
                      const std::array<double, 3>& anchors, const char* label,
                      std::vector<TierStats>& tiers_out, Fit& fit_out,
                      std::vector<std::string>& notes) {
  std::array<double, 3> vsum{}, lsum{};
  std::array<int, 3> cnt{};
  for (const auto& it : items) {
    const double v = score_response(it, scorer.respond(it, PathTag::vlm));
    const double l = score_response(it, scorer.respond(it, PathTag::llm));
    vsum[static_cast<std::size_t>(it.tier_index)] += v;
    lsum[static_cast<std::size_t>(it.tier_index)] += l;
    ++cnt[static_cast<std::size_t>(it.tier_index)];
  }
  std::vector<double> xs, gs;
  for (std::size_t t = 0; t < 3; ++t) {
    TierStats s;
    s.tier = anchors[t];
    s.count = cnt[t];
    if (cnt[t] > 0) {
      s.vlm_mean = vsum[t] / cnt[t];
      s.llm_mean = lsum[t] / cnt[t];
    }
    if (s.llm_mean <= 0) {
      s.included = false;
      s.gap = 0;
      std::ostringstream os;
      os << label << " tier " << anchors[t]
         << " excluded from fit: reference-path mean score is zero";
      notes.push_back(os.str());
    } else {
      s.gap = tier_gap(s.vlm_mean, s.llm_mean);
      xs.push_back(s.tier);
      gs.push_back(s.gap);
    }
    tiers_out.push_back(s);
  }
  if (xs.empty()) {
    throw CalibrationError(std::string("all ") + label +
                           " tiers were excluded; cannot fit");
  }
  fit_out = fit_no_intercept(xs, gs);
}

}  // namespace

CalibrationReport run_calibration(Scorer& scorer, std::uint64_t seed) {
  CalibrationReport rep;
  rep.seed = seed;
  rep.scorer = scorer.name();

  const auto alpha_items = generate_alpha_probe(seed);
  const auto beta_items = generate_beta_probe(seed);
  const auto gamma_items = generate_gamma_probe(seed);

  run_tiered_probe(scorer, alpha_items, kAlphaAnchors, "alpha",
                   rep.alpha_tiers, rep.alpha_fit, rep.notes);
  run_tiered_probe(scorer, beta_items, kBetaAnchors, "beta", rep.beta_tiers,
                   rep.beta_fit, rep.notes);

  double vs = 0, ls = 0, vf = 0, lf = 0;
  int cs = 0, cf = 0;
  for (const auto& it : gamma_items) {
    const double v = score_response(it, scorer.respond(it, PathTag::vlm));
    const double l = score_response(it, scorer.respond(it, PathTag::llm));
    if (it.format == ProbeFormat::structured) {
      vs += v;
      ls += l;
      ++cs;
    } else {
      vf += v;
      lf += l;
      ++cf;
    }
  }
  if (cs == 0 || cf == 0) {
    throw InternalError("structure probe generated an empty format arm");
  }
  const double ls_mean = ls / cs, lf_mean = lf / cf;
  if (ls_mean <= 0 || lf_mean <= 0) {
    throw CalibrationError(
        "structure probe reference-path mean score is zero; cannot fit the "
        "structured bonus");
  }
  rep.r_struct = (vs / cs) / ls_mean;
  rep.r_flat = (vf / cf) / lf_mean;
  rep.gamma = fit_structured_bonus(rep.r_struct, rep.r_flat);
  return rep;
}

cost::CostParams CalibrationReport::to_params(
    double tau, std::optional<double> vcr_cap) const {
  cost::CostParams p;
  p.alpha = alpha_fit.value;
  p.beta = beta_fit.value;
  p.gamma = gamma;
  p.tau = tau;
  p.vcr_cap = vcr_cap;
  p.validate();
  return p;
}

namespace {

json tier_to_json(const TierStats& s) {
  json j;
  j["tier"] = s.tier;
  j["count"] = s.count;
  j["vlm_mean"] = s.vlm_mean;
  j["llm_mean"] = s.llm_mean;
  j["gap"] = s.gap;
  j["included"] = s.included;
  return j;
}

json fit_to_json(const Fit& f) {
  json j;
  j["value"] = f.value;
  if (f.r2_defined) {
    j["r2"] = f.r2;
  } else {
    j["r2"] = nullptr;
  }
  return j;
}

}  // namespace

std::string CalibrationReport::to_json(std::optional<double> tau) const {
  json j;
  j["kind"] = "vtc-calibration-report/1";
  j["seed"] = seed;
  j["scorer"] = scorer;
  j["alpha"] = fit_to_json(alpha_fit);
  j["alpha"]["tiers"] = json::array();
  for (const auto& t : alpha_tiers) j["alpha"]["tiers"].push_back(tier_to_json(t));
  j["beta"] = fit_to_json(beta_fit);
  j["beta"]["tiers"] = json::array();
  for (const auto& t : beta_tiers) j["beta"]["tiers"].push_back(tier_to_json(t));
  j["gamma"] = json{{"value", gamma},
                    {"r_struct", r_struct},
                    {"r_flat", r_flat}};
  j["notes"] = notes;
  if (tau.has_value()) {
    j["params"] = {{"alpha", alpha_fit.value},
                   {"beta", beta_fit.value},
                   {"gamma", gamma},
                   {"tau", *tau},
                   {"tau_source", "config"}};
  }
  return j.dump(2);
}

void export_probes_jsonl(std::ostream& out,
                         const std::vector<ProbeItem>& items) {
  for (const auto& it : items) {
    json j;
    j["id"] = it.id;
    j["kind"] = std::string(to_string(it.kind));
    j["tier"] = it.tier;
    j["format"] = std::string(to_string(it.format));
    j["prompt"] = it.prompt;
    j["gold"] = it.gold;
    j["mode"] = std::string(to_string(it.mode));
    out << j.dump() << '\n';
  }
}

}  // namespace vtc::calibrate
