#include "vtc/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include <zlib.h>

#include "vtc/errors.hpp"
#include "vtc/text.hpp"

namespace vtc::features {

namespace {
constexpr int kDeflateLevel = 6;

const char* kFormatNames[kAnswerFormatCount] = {
    "letter-choice",    "yes-no",       "category-name",
    "integer-rating",   "short-span",   "candidate-entity",
    "number-span-date", "free-summary", "rationale-label",
};
}  // namespace

AnswerFormat parse_answer_format(std::string_view name) {
  for (int i = 0; i < kAnswerFormatCount; ++i) {
    if (name == kFormatNames[i]) return static_cast<AnswerFormat>(i);
  }
  throw DataError("unknown answer_format '" + std::string(name) + "'");
}

std::string_view to_string(AnswerFormat f) {
  return kFormatNames[static_cast<int>(f)];
}

WTable WTable::defaults() {
  WTable t{};
  t.at(AnswerFormat::category_name) = 0.10;
  t.at(AnswerFormat::integer_rating) = 0.35;
  t.at(AnswerFormat::free_summary) = 0.35;
  t.at(AnswerFormat::rationale_label) = 0.35;
  t.at(AnswerFormat::yes_no) = 0.55;
  t.at(AnswerFormat::letter_choice) = 0.65;
  t.at(AnswerFormat::short_span) = 0.65;
  t.at(AnswerFormat::candidate_entity) = 0.75;
  t.at(AnswerFormat::number_span_date) = 0.75;
  return t;
}

double precision_weight(const TaskSpec& task, const WTable& table) {
  if (task.w_override) {
    const double w = *task.w_override;
    if (w < 0.0 || w > 1.0)
      throw ConfigError("w_override outside [0,1]");
    return w;
  }
  return table.at(task.answer_format);
}

std::vector<Segment> segment_text(std::u32string_view text,
                                  const SegmentPolicy& policy) {
  std::vector<Segment> out;
  if (text.empty()) return out;
  if (policy.window_chars == 0)
    throw ConfigError("segmentation: window_chars must be > 0");

  const auto n = static_cast<std::uint32_t>(text.size());
  std::uint32_t pos = 0;
  while (pos < n) {
    std::uint32_t end = pos + policy.window_chars;
    if (end >= n) {
      end = n;
    } else if (!text::is_space(text[end - 1]) && !text::is_space(text[end])) {
      // Mid-word edge: extend to the word's end if it is near, else force the
      // break exactly at the window edge.
      std::uint32_t probe = end;
      const std::uint32_t limit =
          std::min<std::uint32_t>(n, end + policy.boundary_slack);
      while (probe < limit && !text::is_space(text[probe])) ++probe;
      if (probe == n || (probe < limit && text::is_space(text[probe]))) {
        end = probe;
      }
    }
    Segment seg;
    seg.begin = pos;
    seg.end = end;
    seg.tokens = text::word_tokens(text.substr(pos, end - pos));
    out.push_back(std::move(seg));
    pos = end;
  }
  return out;
}

std::vector<double> bm25_scores(std::string_view query_utf8,
                                const std::vector<Segment>& segments,
                                const Bm25Params& params) {
  std::vector<double> scores(segments.size(), 0.0);
  if (segments.empty()) return scores;
  const std::vector<std::string> query = text::word_tokens_utf8(query_utf8);
  if (query.empty()) return scores;

  const double N = static_cast<double>(segments.size());
  double total_len = 0;
  for (const auto& s : segments) total_len += static_cast<double>(s.tokens.size());
  const double avgdl = total_len / N;
  if (avgdl <= 0) return scores;

  // Per-term document frequency across segments.
  std::unordered_map<std::string, double> df;
  for (const auto& s : segments) {
    std::unordered_map<std::string, bool> seen;
    for (const auto& t : s.tokens) {
      if (!seen.emplace(t, true).second) continue;
      df[t] += 1.0;
    }
  }

  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    std::unordered_map<std::string, double> tf;
    for (const auto& t : seg.tokens) tf[t] += 1.0;
    const double dl = static_cast<double>(seg.tokens.size());
    double score = 0;
    for (const auto& q : query) {
      auto it = tf.find(q);
      if (it == tf.end()) continue;
      const double f = it->second;
      const double idf = std::log(1.0 + (N - df[q] + 0.5) / (df[q] + 0.5));
      score += idf * (f * (params.k1 + 1.0)) /
               (f + params.k1 * (1.0 - params.b + params.b * dl / avgdl));
    }
    scores[i] = score;
  }
  return scores;
}

double coverage(const std::vector<double>& scores, std::size_t segment_count,
                double k_ref) {
  if (segment_count == 0)
    throw DataError("coverage: no segments (K = 0 is undefined)");
  if (!scores.empty() && scores.size() != segment_count)
    throw DataError("coverage: scores/segment_count mismatch");
  if (k_ref <= 0) throw ConfigError("coverage: k_ref must be > 0");

  double total = 0;
  for (double s : scores) {
    if (s < 0) throw DataError("coverage: negative relevance score");
    total += s;
  }
  if (scores.empty() || total <= 0) {
    // No query signal: fall back to a segment-count prior.
    return std::min(1.0, static_cast<double>(segment_count) / k_ref);
  }
  if (segment_count == 1) return 0.0;

  double h = 0;
  for (double s : scores) {
    if (s <= 0) continue;
    const double p = s / total;
    h -= p * std::log(p);
  }
  const double l = h / std::log(static_cast<double>(segment_count));
  return std::clamp(l, 0.0, 1.0);
}

double redundancy(std::string_view utf8) {
  if (utf8.empty()) return 0.0;
  const auto raw_len = static_cast<uLong>(utf8.size());
  uLongf comp_len = compressBound(raw_len);
  std::vector<Bytef> buf(comp_len);
  const int rc =
      compress2(buf.data(), &comp_len,
                reinterpret_cast<const Bytef*>(utf8.data()), raw_len,
                kDeflateLevel);
  if (rc != Z_OK) throw InternalError("redundancy: deflate failed");
  const double ratio =
      static_cast<double>(comp_len) / static_cast<double>(raw_len);
  return std::clamp(1.0 - ratio, 0.0, 1.0);
}

std::int64_t ApproxTokenCounter::count(std::u32string_view text) const {
  std::int64_t n = 0;
  std::size_t i = 0;
  const std::size_t len = text.size();
  while (i < len) {
    const char32_t c = text[i];
    if (text::is_space(c) || text::is_control(c)) {
      ++i;
      continue;
    }
    if (text::is_word_char(c)) {
      std::size_t j = i;
      while (j < len && text::is_word_char(text[j])) ++j;
      const auto run = static_cast<std::int64_t>(j - i);
      n += std::max<std::int64_t>(1, (run + 3) / 4);
      i = j;
    } else {
      ++n;  // punctuation: one token per char
      ++i;
    }
  }
  return n;
}

std::unique_ptr<TokenCounter> make_token_counter(std::string_view name) {
  if (name == "approx") return std::make_unique<ApproxTokenCounter>();
  throw ConfigError("unknown tokenizer '" + std::string(name) + "'");
}

std::int64_t count_text_tokens(std::u32string_view text,
                               const TokenCounter& counter) {
  return counter.count(text);
}

FeatureVector extract_features(const render::RenderedDocument& doc,
                               const TaskSpec& task, const FeatureConfig& cfg,
                               const TokenCounter& counter) {
  FeatureVector fv;
  fv.w = precision_weight(task, cfg.w_table);
  fv.n = count_text_tokens(doc.text, counter);
  fv.m = doc.visual_tokens;

  if (doc.text.empty()) {
    return fv;  // L = 0 convention, TRR = 0, VCR undefined
  }

  const bool any_renderable =
      std::any_of(doc.text.begin(), doc.text.end(), [](char32_t c) {
        return !text::is_control(c) && c != U'\n';
      });
  if (fv.m == 0 && any_renderable) {
    throw InternalError(
        "extract_features: renderable text but zero visual tokens");
  }

  const std::vector<Segment> segments =
      segment_text(doc.text, cfg.segmentation);
  if (!segments.empty()) {
    const std::vector<double> scores =
        bm25_scores(task.query, segments, cfg.bm25);
    fv.l = coverage(scores, segments.size(), cfg.k_ref);
  }
  fv.trr = redundancy(text::encode_utf8(doc.text));

  if (fv.m > 0) {
    fv.vcr = static_cast<double>(fv.n) / static_cast<double>(fv.m);
    fv.vcr_defined = true;
  }
  return fv;
}

}  // namespace vtc::features
