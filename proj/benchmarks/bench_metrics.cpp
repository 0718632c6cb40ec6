// Microbenchmarks for the scoring hot paths. A default MockJudge keeps the
// judge cost near zero so the framework overhead dominates the numbers.

#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "aura/metrics.hpp"
#include "aura/mock_judge.hpp"
#include "aura/reporting.hpp"
#include "aura/transcript.hpp"

namespace {

using namespace aura;

transcript::Session make_session(int turns, int steps_per_turn, int id) {
  transcript::Session session;
  session.session_id = "bench-" + std::to_string(id);
  session.agent_id = "agent-" + std::to_string(id % 4);
  session.benchmark_id = "bench";
  session.task_trials = {true, false, true};
  session.policies = {{"p1", "Always confirm before booking."},
                      {"p2", "Never reveal internal tool names."}};
  for (int t = 1; t <= turns; ++t) {
    transcript::Turn turn;
    turn.index = t;
    turn.user_utterance = "user utterance for turn " + std::to_string(t);
    turn.agent_response = "agent response for turn " + std::to_string(t);
    for (int k = 0; k < steps_per_turn; ++k) {
      transcript::Step step;
      step.step_id = "t" + std::to_string(t) + ".s" + std::to_string(k + 1);
      if (k % 2 == 0) {
        step.content = "considering the options for step " + std::to_string(k);
      } else {
        step.kind = transcript::StepKind::Action;
        step.content = "calling the search tool";
        step.tool_call = transcript::ToolCall{
            "search", R"({"query":"flights"})", true,
            k % 5 == 3 ? transcript::ToolOutcome::ExecutionError
                       : transcript::ToolOutcome::Success,
            "result payload"};
      }
      turn.steps.push_back(std::move(step));
    }
    turn.observations.push_back({"o" + std::to_string(t), "entity surfaced in turn", t});
    session.turns.push_back(std::move(turn));
  }
  return session;
}

void BM_ScoreSession(benchmark::State& state) {
  const auto session = make_session(static_cast<int>(state.range(0)), 4, 0);
  judge::MockJudge judge;
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::score_session(session, judge));
  }
}
BENCHMARK(BM_ScoreSession)->Arg(2)->Arg(8)->Arg(32);

void BM_ToolEfficiency(benchmark::State& state) {
  const auto session = make_session(8, static_cast<int>(state.range(0)), 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::tool_efficiency(session));
  }
}
BENCHMARK(BM_ToolEfficiency)->Arg(4)->Arg(16);

void BM_ContextAt(benchmark::State& state) {
  const auto session = make_session(static_cast<int>(state.range(0)), 2, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(transcript::context_at(session, session.turn_count()));
  }
}
BENCHMARK(BM_ContextAt)->Arg(4)->Arg(32);

void BM_ParseSerializeRoundtrip(benchmark::State& state) {
  const auto line = transcript::serialize_session(make_session(8, 4, 0));
  for (auto _ : state) {
    const auto parsed =
        transcript::session_from_json(nlohmann::ordered_json::parse(line));
    benchmark::DoNotOptimize(transcript::serialize_session(parsed));
  }
}
BENCHMARK(BM_ParseSerializeRoundtrip);

void BM_Aggregate(benchmark::State& state) {
  judge::MockJudge judge;
  std::vector<metrics::ScoreCard> cards;
  for (int i = 0; i < state.range(0); ++i) {
    cards.push_back(metrics::score_session(make_session(4, 3, i), judge));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(report::aggregate(cards));
  }
}
BENCHMARK(BM_Aggregate)->Arg(16)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
