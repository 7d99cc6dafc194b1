#include <benchmark/benchmark.h>

#include <random>

#include "gfriend/consistency_lab.hpp"
#include "gfriend/judge_codec.hpp"
#include "gfriend/mdpo.hpp"
#include "gfriend/sampling.hpp"

using namespace gfriend;

namespace {

PolicyModel judge_model() { return PolicyModel::random(JudgeCodec::default_vocabulary(), {}, 1); }

TokenSequence tokens(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TokenSequence s;
  for (std::size_t i = 0; i < n; ++i) s.ids.push_back(static_cast<TokenId>(1 + rng() % 23));
  return s;
}

void BM_ForwardLogprobs(benchmark::State& state) {
  const auto m = judge_model();
  const auto prefix = tokens(12, 1);
  const auto cont = tokens(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(forward_logprobs(m, prefix, cont).total());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardLogprobs)->Arg(4)->Arg(12);

void BM_Sample(benchmark::State& state) {
  const auto m = judge_model();
  const auto prefix = tokens(12, 3);
  SamplingConfig cfg;
  for (auto _ : state) {
    ++cfg.seed;
    benchmark::DoNotOptimize(sample(m, prefix, cfg).sequence.size());
  }
}
BENCHMARK(BM_Sample);

void BM_MdpoLossAndGrad(benchmark::State& state) {
  const auto ref = judge_model();
  const auto policy = PolicyModel::random(ref.vocabulary_ptr(), {}, 2);
  PairBatch batch;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    PreferencePair p;
    p.positive = {tokens(12, 10 + i), tokens(8, 20 + i), std::nullopt};
    p.negative = {tokens(12, 10 + i), tokens(8, 30 + i), std::nullopt};
    p.g_plus = 2;
    p.g_minus = -1;
    batch.push_back(std::move(p));
  }
  cache_reference_logprobs(ref, batch);
  const GradeConfig g;
  for (auto _ : state) benchmark::DoNotOptimize(mdpo_loss_and_grad(policy, ref, batch, g).loss);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MdpoLossAndGrad)->Arg(8)->Arg(32);

void BM_FitWeightedMle(benchmark::State& state) {
  const auto world = gen_world(8, 3.5, 0);
  const auto samples = sample_prefs(world, static_cast<std::size_t>(state.range(0)), {}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(fit_weighted_mle(samples, 8, {}).scores);
}
BENCHMARK(BM_FitWeightedMle)->Arg(1000)->Arg(50000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
