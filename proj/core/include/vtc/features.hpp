#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vtc/render.hpp"

namespace vtc::features {

// Answer format drives the precision weight W: how surgically the response
// must reproduce source tokens.
enum class AnswerFormat {
  letter_choice,
  yes_no,
  category_name,
  integer_rating,
  short_span,
  candidate_entity,
  number_span_date,
  free_summary,
  rationale_label,
};
constexpr int kAnswerFormatCount = 9;

AnswerFormat parse_answer_format(std::string_view name);  // throws DataError
std::string_view to_string(AnswerFormat f);

struct TaskSpec {
  AnswerFormat answer_format = AnswerFormat::short_span;
  std::optional<double> w_override;  // [0,1], wins over the table
  std::string query;                 // empty = no query
};

struct WTable {
  double values[kAnswerFormatCount];
  static WTable defaults();
  double at(AnswerFormat f) const { return values[static_cast<int>(f)]; }
  double& at(AnswerFormat f) { return values[static_cast<int>(f)]; }
};

struct SegmentPolicy {
  std::uint32_t window_chars = 256;
  // Extend to the next whitespace only if it falls within this many chars of
  // the window edge; otherwise force a break exactly at the edge.
  std::uint32_t boundary_slack = 32;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct Segment {
  std::uint32_t begin = 0, end = 0;        // codepoint span [begin, end)
  std::vector<std::string> tokens;         // lowercased word tokens
};

struct FeatureVector {
  double w = 0;  // precision weight, [0,1]
  double l = 0;  // evidence coverage, [0,1]
  double trr = 0;  // token redundancy ratio, [0,1]
  std::int64_t n = 0;  // text tokens
  std::int64_t m = 0;  // visual tokens
  double vcr = 0;      // n / m; meaningful only when vcr_defined
  bool vcr_defined = false;
};

class TokenCounter {
 public:
  virtual ~TokenCounter() = default;
  virtual std::int64_t count(std::u32string_view text) const = 0;
};

// Default approximation: whitespace-delimited chunks; word-char runs count
// max(1, ceil(len/4)) and each punctuation char counts one.
class ApproxTokenCounter final : public TokenCounter {
 public:
  std::int64_t count(std::u32string_view text) const override;
};

// Factory for config-selected counters ("approx"); unknown names -> ConfigError.
std::unique_ptr<TokenCounter> make_token_counter(std::string_view name);

struct FeatureConfig {
  WTable w_table = WTable::defaults();
  SegmentPolicy segmentation;
  Bm25Params bm25;
  double k_ref = 8.0;  // queryless coverage fallback: min(1, K / k_ref)
  std::string tokenizer = "approx";
};

// W from the task: override wins, else the format table.
double precision_weight(const TaskSpec& task, const WTable& table);

// Fixed windows extended to the next word boundary (see SegmentPolicy).
std::vector<Segment> segment_text(std::u32string_view text,
                                  const SegmentPolicy& policy = {});

// Okapi BM25 with the nonnegative idf form ln(1 + (N-df+0.5)/(df+0.5));
// scores sum over query token occurrences. Empty query -> all zeros.
std::vector<double> bm25_scores(std::string_view query_utf8,
                                const std::vector<Segment>& segments,
                                const Bm25Params& params = {});

// Normalized Shannon entropy of the relevance distribution: H(p)/ln K for
// K > 1, 0 for K == 1. No query / all-zero scores -> min(1, K/k_ref).
// K == 0 -> DataError.
double coverage(const std::vector<double>& scores, std::size_t segment_count,
                double k_ref = 8.0);

// TRR = clamp(1 - deflate_len/raw_len, 0, 1) at a fixed declared level (6),
// over the UTF-8 bytes. Empty -> 0.
double redundancy(std::string_view utf8);

std::int64_t count_text_tokens(std::u32string_view text,
                               const TokenCounter& counter);

// Composes W, L, TRR, n, m, VCR for a document rendered from the same text.
FeatureVector extract_features(const render::RenderedDocument& doc,
                               const TaskSpec& task, const FeatureConfig& cfg,
                               const TokenCounter& counter);

}  // namespace vtc::features
