// Deterministic 12-dataset corpus with planted routing outcomes.
//
// Six datasets are built so the visual path genuinely wins (cheap precision
// tier, concentrated or redundant evidence, dense pages) and six so the text
// path wins (expensive precision tier, dispersed evidence, sparse pages).
// Scores follow s_vis = s_text - k*C(x) + noise with per-dataset noise bands
// chosen so the planted label holds with a margin of at least 0.01 for every
// sample; two visually-planted datasets render perfectly uniform pages whose
// cost maps must fail the hot-region gate.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vtc/harness.hpp"

namespace synthetic {

struct DatasetPlan {
  std::string name;
  bool planted_visual = false;
  bool uniform_map = false;  // every sample expected to fail the hot gate
};

struct Corpus {
  std::vector<vtc::harness::SampleRecord> records;
  std::vector<DatasetPlan> datasets;
  double k = 0.5;       // cost-to-score coupling used by the mock scorer
  double s_text = 0.75;
};

// Builds the corpus and assigns scores using the real feature/cost pipeline
// at 4b-preset parameters. Deterministic in `seed`.
Corpus make_corpus(std::uint64_t seed);

}  // namespace synthetic
