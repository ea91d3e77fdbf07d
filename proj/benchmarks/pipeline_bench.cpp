#include <benchmark/benchmark.h>

#include "clickgate/backends.hpp"
#include "clickgate/harness.hpp"
#include "clickgate/reward.hpp"
#include "clickgate/rng.hpp"

using namespace clickgate;

namespace {

void BM_HybridReward(benchmark::State& state) {
  const auto samples = generate_synthetic_dataset(64, 777, 0.5);
  const RewardConfig cfg;
  SplitMix64 rng(3);
  std::size_t i = 0;
  for (auto _ : state) {
    const Sample& s = samples[i++ % samples.size()];
    const ClickPoint p{static_cast<int>(rng.next_below(s.dims.width)),
                       static_cast<int>(rng.next_below(s.dims.height))};
    RegionLabel predicted = label_from_value(static_cast<int>(rng.next_below(3)) - 1);
    if (predicted == RegionLabel::Deceptive && !s.dark_box) {
      predicted = RegionLabel::Null;  // no deceptive region to predict against
    }
    const EvaluatorJudgment judgment{predicted, 0.001 + rng.next_double() * 0.99};
    benchmark::DoNotOptimize(hybrid_reward(s, p, judgment, cfg));
  }
}
BENCHMARK(BM_HybridReward);

void BM_ParseEvaluatorOutput(benchmark::State& state) {
  const std::string text =
      "The banner mimics the booking flow but leads elsewhere.\n"
      "<judge>-1</judge>, <conf>0.63</conf>";
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_evaluator_output(text));
  }
}
BENCHMARK(BM_ParseEvaluatorOutput);

void BM_ParseAgentOutput(benchmark::State& state) {
  const std::string text =
      "<thought>The target is the small text link under the banner.</thought>\n"
      "<action>click(1270, 936)</action>";
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_agent_output(text, kDefaultToolList));
  }
}
BENCHMARK(BM_ParseAgentOutput);

void BM_GatedEpisode(benchmark::State& state) {
  const auto samples = generate_synthetic_dataset(64, 888, 1.0);
  ScriptedAgent agent(ScriptedPolicy::TrapFirst);
  OracleEvaluatorConfig ocfg;
  ocfg.seed = 9;
  OracleEvaluator oracle(ocfg);
  const ExperienceContext context;
  const HarnessConfig cfg;
  std::size_t i = 0;
  for (auto _ : state) {
    const Sample& s = samples[i++ % samples.size()];
    benchmark::DoNotOptimize(run_episode(s, agent, oracle, context, cfg));
  }
}
BENCHMARK(BM_GatedEpisode);

}  // namespace

BENCHMARK_MAIN();
