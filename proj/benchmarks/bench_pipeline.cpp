// Microbenchmarks for the hot paths: layout, feature extraction, routing,
// and foveation planning. Inputs are deterministic synthetic documents so
// runs are comparable across machines and commits.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <random>
#include <string>

#include "vtc/cost.hpp"
#include "vtc/features.hpp"
#include "vtc/foveate.hpp"
#include "vtc/render.hpp"

namespace {

std::string synthetic_text(std::size_t target_chars, std::uint64_t seed) {
  static const char* kConsonants = "bcdfghklmnprstvz";
  static const char* kVowels = "aeiou";
  std::mt19937_64 rng(seed);
  std::string out;
  out.reserve(target_chars + 16);
  while (out.size() < target_chars) {
    if (!out.empty()) out += ' ';
    const int syllables = 2 + static_cast<int>(rng() % 3);
    for (int s = 0; s < syllables; ++s) {
      out += kConsonants[rng() % 16];
      out += kVowels[rng() % 5];
    }
    if (rng() % 13 == 0) out += '.';
    if (rng() % 29 == 0) out += '\n';
  }
  return out;
}

void BM_Layout(benchmark::State& state) {
  const auto text =
      synthetic_text(static_cast<std::size_t>(state.range(0)), 11);
  const vtc::render::RenderConfig cfg;
  std::int64_t tokens = 0;
  for (auto _ : state) {
    const auto doc = vtc::render::layout_document_utf8(text, cfg);
    tokens = doc.visual_tokens;
    benchmark::DoNotOptimize(tokens);
  }
  state.SetBytesProcessed(
      static_cast<std::int64_t>(state.iterations()) *
      static_cast<std::int64_t>(text.size()));
  state.counters["visual_tokens"] = static_cast<double>(tokens);
}
BENCHMARK(BM_Layout)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_Alignment(benchmark::State& state) {
  const auto text =
      synthetic_text(static_cast<std::size_t>(state.range(0)), 12);
  const vtc::render::RenderConfig cfg;
  const auto doc = vtc::render::layout_document_utf8(text, cfg);
  for (auto _ : state) {
    const auto align = vtc::render::build_alignment(doc);
    benchmark::DoNotOptimize(align.pages.size());
  }
}
BENCHMARK(BM_Alignment)->Arg(10000)->Arg(100000);

void BM_FeatureExtraction(benchmark::State& state) {
  const auto text =
      synthetic_text(static_cast<std::size_t>(state.range(0)), 13);
  const vtc::render::RenderConfig rcfg;
  const auto doc = vtc::render::layout_document_utf8(text, rcfg);
  vtc::features::TaskSpec task;
  task.query = "vato lemi sora kidu";
  const vtc::features::FeatureConfig fcfg;
  const vtc::features::ApproxTokenCounter counter;
  for (auto _ : state) {
    const auto fv = vtc::features::extract_features(doc, task, fcfg, counter);
    benchmark::DoNotOptimize(fv.l);
  }
  state.SetBytesProcessed(
      static_cast<std::int64_t>(state.iterations()) *
      static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_FeatureExtraction)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_Redundancy(benchmark::State& state) {
  const auto text =
      synthetic_text(static_cast<std::size_t>(state.range(0)), 14);
  for (auto _ : state) {
    benchmark::DoNotOptimize(vtc::features::redundancy(text));
  }
  state.SetBytesProcessed(
      static_cast<std::int64_t>(state.iterations()) *
      static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_Redundancy)->Arg(10000)->Arg(100000);

void BM_Route(benchmark::State& state) {
  const auto& spec = vtc::cost::preset("4b");
  vtc::features::FeatureVector fv;
  fv.w = 0.35;
  fv.l = 0.62;
  fv.trr = 0.41;
  fv.n = 2048;
  fv.m = 841;
  fv.vcr = static_cast<double>(fv.n) / static_cast<double>(fv.m);
  fv.vcr_defined = true;
  for (auto _ : state) {
    const auto dec = vtc::cost::route(fv, spec.params, spec.variant);
    benchmark::DoNotOptimize(dec.te);
  }
}
BENCHMARK(BM_Route);

void BM_FoveationPlan(benchmark::State& state) {
  auto text = synthetic_text(static_cast<std::size_t>(state.range(0)), 15);
  text.insert(text.size() / 2, " zephyrblend ortensk vault specimen ");
  const vtc::render::RenderConfig rcfg;
  const auto params = vtc::cost::preset("4b").params;
  const auto doc = vtc::render::layout_document_utf8(text, rcfg);
  const auto align = vtc::render::build_alignment(doc);
  vtc::foveate::InkVarianceProvider provider(rcfg);
  const vtc::foveate::FovConfig fcfg;
  for (auto _ : state) {
    const auto map = vtc::foveate::patch_cost_map(
        doc, align, "zephyrblend ortensk vault", params, provider);
    const auto plan = vtc::foveate::select_regions(map, fcfg, 0.8,
                                                   doc.visual_tokens,
                                                   2 * doc.visual_tokens);
    benchmark::DoNotOptimize(plan.n_c);
  }
}
BENCHMARK(BM_FoveationPlan)->Arg(4000)->Arg(40000);

}  // namespace

BENCHMARK_MAIN();
