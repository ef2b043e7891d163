// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <filesystem>

#include "celebbasis/celebbasis.hpp"

namespace celeb {
namespace {

std::filesystem::path fixture(const char* name) { return std::filesystem::path(CELEBBASIS_FIXTURE_DIR) / name; }

struct Corpus {
  Backends backends = make_backends(BackendConfig{});
  std::pair<EmbeddingSet, EmbeddingSet> sets;
  Corpus() {
    const DictionaryBuild dict = embed_names(load_names(fixture("celeb_names.txt")), *backends.text_encoder);
    sets = build_sets(dict.pairs);
  }
};

const Corpus& corpus() {
  static const Corpus c;
  return c;
}

void BM_ComputePca(benchmark::State& state) {
  const EmbeddingSet& set = corpus().sets.first;
  const int p = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(compute_pca(set, p));
  state.counters["rows"] = set.size();
}
BENCHMARK(BM_ComputePca)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_Synthesize(benchmark::State& state) {
  const CelebBasis basis = build_basis(corpus().sets.first, corpus().sets.second, 512);
  Rng rng(1);
  const IdentityCoefficients c{rng.normal_vector(512), rng.normal_vector(512)};
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_embedding(basis, c));
}
BENCHMARK(BM_Synthesize);

void BM_MapToCoefficients(benchmark::State& state) {
  const MappingNetwork net = MappingNetwork::initialize(512, 1);
  Rng rng(2);
  const FaceFeature f{rng.normal_vector(kFaceFeatureDim), ""};
  for (auto _ : state) benchmark::DoNotOptimize(map_to_coefficients(f, net));
}
BENCHMARK(BM_MapToCoefficients);

void BM_TrainStep(benchmark::State& state) {
  const Corpus& c = corpus();
  const CelebBasis basis = build_basis(c.sets.first, c.sets.second, 512);
  const Image face = read_ppm(fixture("faces/alice.ppm"));
  TrainConfig config;
  config.steps = 10;
  for (auto _ : state) benchmark::DoNotOptimize(train_single(face, basis, c.backends, config));
  state.SetItemsProcessed(state.iterations() * config.steps);
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_Sample(benchmark::State& state) {
  const Corpus& c = corpus();
  const Mat cond = encode_plain("a photo of a person", *c.backends.text_encoder);
  SamplerParams params;
  params.steps = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(c.backends.sampler->sample(cond, ++seed, params));
}
BENCHMARK(BM_Sample)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace celeb

BENCHMARK_MAIN();
