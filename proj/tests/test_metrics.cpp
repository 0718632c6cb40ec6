#include <doctest.h>

#include <cmath>

#include "aura/errors.hpp"
#include "aura/metrics.hpp"
#include "aura/mock_judge.hpp"
#include "helpers.hpp"

using namespace aura;
using namespace aura::test;
using metrics::Score;

namespace {

constexpr double kTight = 1e-12;

void add_action(transcript::Turn& turn, const std::string& id, transcript::ToolOutcome outcome) {
  transcript::Step step;
  step.step_id = id;
  step.kind = transcript::StepKind::Action;
  step.content = "call tool " + id;
  step.tool_call = transcript::ToolCall{"tool_" + id, "{}", false, outcome, "resp"};
  turn.steps.push_back(std::move(step));
}

transcript::Session tool_session(int n_t, int n_f) {
  auto session = make_session("tools", "a", "b", {0});
  for (int i = 0; i < n_t; ++i) {
    add_action(session.turns[0], "t" + std::to_string(i),
               i < n_f ? transcript::ToolOutcome::ExecutionError
                       : transcript::ToolOutcome::Success);
  }
  return session;
}

double exact(Score score) {
  REQUIRE(score.has_value());
  return *score;
}

}  // namespace

TEST_CASE("tool_efficiency endpoint identities and exact rationals") {
  judge::MockJudge mock;
  CHECK(exact(metrics::tool_efficiency(tool_session(10, 0))) == 1.0);
  CHECK(exact(metrics::tool_efficiency(tool_session(4, 4))) == 0.0);
  CHECK(exact(metrics::tool_efficiency(tool_session(4, 1))) == doctest::Approx(0.6).epsilon(kTight));
  CHECK_FALSE(metrics::tool_efficiency(tool_session(0, 0)).has_value());
}

TEST_CASE("failed-call accounting follows the configured mode") {
  auto session = make_session("m", "a", "b", {0});
  add_action(session.turns[0], "ok", transcript::ToolOutcome::Success);
  add_action(session.turns[0], "gen", transcript::ToolOutcome::GenerationFailure);
  add_action(session.turns[0], "exec", transcript::ToolOutcome::ExecutionError);

  const auto both = metrics::count_tool_calls(session, metrics::FailedCallsMode::GenerationAndExecution);
  CHECK(both.n_t == 3);
  CHECK(both.n_f == 2);

  const auto gen_only = metrics::count_tool_calls(session, metrics::FailedCallsMode::GenerationOnly);
  CHECK(gen_only.n_t == 3);
  CHECK(gen_only.n_f == 1);
}

TEST_CASE("state_consistency ratios from mock verdicts") {
  auto mock = rules_judge("synthetic_rules.json");

  SUBCASE("2 steps, both consistent") {
    const auto session = make_session("s", "a", "b", {2});
    CHECK(exact(metrics::state_consistency(session, mock)) == 1.0);
  }
  SUBCASE("4 steps, alternating verdicts") {
    auto session = make_session("s", "a", "b", {4});
    session.turns[0].steps[1].content = "BADSTEP one";
    session.turns[0].steps[3].content = "BADSTEP two";
    CHECK(exact(metrics::state_consistency(session, mock)) == 0.5);
  }
  SUBCASE("M=(2,0,3) with verdicts (1,1|-|1,0,0) gives 3/5") {
    auto session = make_session("s", "a", "b", {2, 0, 3});
    session.turns[2].steps[1].content = "BADSTEP four";
    session.turns[2].steps[2].content = "BADSTEP five";
    CHECK(exact(metrics::state_consistency(session, mock)) ==
          doctest::Approx(0.6).epsilon(kTight));
  }
  SUBCASE("no steps anywhere is Undefined") {
    const auto session = make_session("s", "a", "b", {0, 0});
    CHECK_FALSE(metrics::state_consistency(session, mock).has_value());
  }
}

TEST_CASE("observation_alignment nested means") {
  auto mock = rules_judge("synthetic_rules.json");
  metrics::MetricOptions annotated;
  annotated.observation_mode = metrics::ObservationMode::Annotated;

  SUBCASE("one turn, verdicts [1,1]") {
    auto session = make_session("s", "a", "b", {0});
    session.turns[0].observations = {{"o1", "fine", 1}, {"o2", "also fine", 1}};
    CHECK(exact(metrics::observation_alignment(session, mock, annotated.observation_mode)) == 1.0);
  }
  SUBCASE("per-turn means 1.0 and 0.0 average to 0.5") {
    auto session = make_session("s", "a", "b", {0, 0});
    session.turns[0].observations = {{"o1", "fine", 1}};
    session.turns[1].observations = {{"o2", "WRONGOBS bad", 2}};
    CHECK(exact(metrics::observation_alignment(session, mock, annotated.observation_mode)) == 0.5);
  }
  SUBCASE("|O|=(2,0,3) with verdicts (1,0|-|1,1,0) gives 7/12") {
    auto session = make_session("s", "a", "b", {0, 0, 0});
    session.turns[0].observations = {{"o1", "fine", 1}, {"o2", "WRONGOBS", 1}};
    session.turns[2].observations = {{"o3", "fine", 3}, {"o4", "fine", 3}, {"o5", "WRONGOBS", 3}};
    CHECK(exact(metrics::observation_alignment(session, mock, annotated.observation_mode)) ==
          doctest::Approx(7.0 / 12.0).epsilon(kTight));
  }
  SUBCASE("annotated mode with zero observations is Undefined") {
    const auto session = make_session("s", "a", "b", {0});
    CHECK_FALSE(metrics::observation_alignment(session, mock,
                                               metrics::ObservationMode::Annotated)
                    .has_value());
  }
  SUBCASE("prompt mode judges responses instead") {
    auto session = make_session("s", "a", "b", {0, 0});
    session.turns[1].agent_response = "WRONGOBS claims the wrong price";
    CHECK(exact(metrics::observation_alignment(session, mock,
                                               metrics::ObservationMode::Prompt)) == 0.5);
  }
  SUBCASE("auto resolves to annotated exactly when observations exist") {
    auto with_obs = make_session("s", "a", "b", {0});
    with_obs.turns[0].observations = {{"o1", "WRONGOBS", 1}};
    with_obs.turns[0].agent_response = "clean response";
    CHECK(exact(metrics::observation_alignment(with_obs, mock,
                                               metrics::ObservationMode::Auto)) == 0.0);
    auto without_obs = make_session("s", "a", "b", {0});
    without_obs.turns[0].agent_response = "clean response";
    CHECK(exact(metrics::observation_alignment(without_obs, mock,
                                               metrics::ObservationMode::Auto)) == 1.0);
  }
}

TEST_CASE("policy_alignment is the adherent fraction") {
  auto mock = rules_judge("synthetic_rules.json");
  auto session = make_session("s", "a", "b", {0});

  SUBCASE("three adherent policies") {
    session.policies = {{"p1", "Be kind."}, {"p2", "Be clear."}, {"p3", "Be brief."}};
    CHECK(exact(metrics::policy_alignment(session, mock)) == 1.0);
  }
  SUBCASE("one of two violated") {
    session.policies = {{"p1", "Verify the payment method."}, {"p2", "Be kind."}};
    session.turns[0].agent_response = "VIOLATION response";
    CHECK(exact(metrics::policy_alignment(session, mock)) == 0.5);
  }
  SUBCASE("no policies is Undefined") {
    CHECK_FALSE(metrics::policy_alignment(session, mock).has_value());
  }
}

TEST_CASE("pass semantics") {
  CHECK(metrics::pass_rate({true, false}) == 0.5);
  CHECK(metrics::pass_rate({false, false}) == 0.0);
  CHECK_THROWS_AS(metrics::pass_rate({}), InvariantError);

  CHECK(metrics::pass_at_k({true, false}, 2));
  CHECK_FALSE(metrics::pass_hat_k({true, false}, 2));
  CHECK(metrics::pass_at_k({true, true, true}, 3));
  CHECK(metrics::pass_hat_k({true, true, true}, 3));
  CHECK_FALSE(metrics::pass_at_k({false, false, true}, 2));
  CHECK_THROWS_AS(metrics::pass_at_k({true}, 2), IndexError);
  CHECK_THROWS_AS(metrics::pass_hat_k({true}, 0), IndexError);
}

TEST_CASE("aura_average reproduces the published rows") {
  const Score avg = metrics::aura_average(0.58, 0.96, 0.73, 0.83, 0.42);
  CHECK(exact(avg) == doctest::Approx(0.704).epsilon(kTight));
  CHECK(metrics::format_score(avg) == "0.70");

  const Score sonnet = metrics::aura_average(0.80, 0.97, 0.84, 0.87, 0.46);
  CHECK(exact(sonnet) == doctest::Approx(0.788).epsilon(kTight));
  CHECK(metrics::format_score(sonnet) == "0.79");

  CHECK(exact(metrics::aura_average(1, 1, 1, 1, 1)) == 1.0);
  CHECK_FALSE(metrics::aura_average(1, std::nullopt, 1, 1, 1).has_value());
}

TEST_CASE("score_session on the synthetic corpus matches hand computation") {
  auto mock = rules_judge("synthetic_rules.json");
  const auto sessions = load_fixture_corpus("synthetic.jsonl");
  REQUIRE(sessions.size() == 4);

  const auto alpha1 = metrics::score_session(sessions[0], mock);
  CHECK(exact(alpha1.s_score) == 0.75);
  CHECK(exact(alpha1.a_score) == 0.5);
  CHECK(exact(alpha1.o_score) == 1.0);
  CHECK(exact(alpha1.p_score) == 1.0);
  CHECK(exact(alpha1.r_score) == 0.5);
  CHECK(exact(alpha1.avg) == 0.75);
  CHECK(alpha1.turns == 2);
  CHECK(alpha1.n_t == 3);
  CHECK(alpha1.n_f == 1);
  CHECK(alpha1.observation_mode_used == "prompt");

  const auto alpha2 = metrics::score_session(sessions[1], mock);
  CHECK_FALSE(alpha2.s_score.has_value());
  CHECK_FALSE(alpha2.a_score.has_value());
  CHECK(exact(alpha2.o_score) == 0.5);
  CHECK_FALSE(alpha2.p_score.has_value());
  CHECK(exact(alpha2.r_score) == 1.0);
  CHECK_FALSE(alpha2.avg.has_value());
  CHECK(alpha2.observation_mode_used == "annotated");

  const auto beta1 = metrics::score_session(sessions[2], mock);
  CHECK(exact(beta1.s_score) == 1.0);
  CHECK(exact(beta1.a_score) == 1.0);
  CHECK(exact(beta1.o_score) == 1.0);
  CHECK(exact(beta1.p_score) == 0.5);
  CHECK(exact(beta1.r_score) == 0.0);
  CHECK(exact(beta1.avg) == doctest::Approx(0.7).epsilon(kTight));

  const auto beta2 = metrics::score_session(sessions[3], mock);
  CHECK(exact(beta2.s_score) == doctest::Approx(2.0 / 3.0).epsilon(kTight));
  CHECK(exact(beta2.a_score) == 0.0);
  CHECK(exact(beta2.o_score) == 1.0);
  CHECK(exact(beta2.p_score) == 1.0);
  CHECK(exact(beta2.r_score) == 1.0);
  CHECK(exact(beta2.avg) == doctest::Approx(11.0 / 15.0).epsilon(kTight));
}

namespace {

// Throws when any context message mentions the poison token; used to check
// that worker-pool exceptions surface.
class PoisonJudge final : public judge::Judge {
 public:
  std::vector<judge::JudgeVerdict> is_consistent(std::span<const transcript::Step> steps,
                                                 const transcript::ContextView& context) override {
    for (const auto& m : context.messages) {
      if (m.content.find("poison") != std::string::npos) {
        throw JudgeProtocolError("poisoned");
      }
    }
    std::vector<judge::JudgeVerdict> verdicts;
    for (const auto& s : steps) verdicts.push_back({s.step_id, "", true});
    return verdicts;
  }
  std::vector<judge::JudgeVerdict> is_aligned(std::span<const judge::JudgeItem> items,
                                              const transcript::ContextView&) override {
    std::vector<judge::JudgeVerdict> verdicts;
    for (const auto& i : items) verdicts.push_back({i.item_id, "", true});
    return verdicts;
  }
  std::vector<judge::JudgeVerdict> is_adherent(std::span<const transcript::Policy> policies,
                                               std::span<const transcript::Message>) override {
    std::vector<judge::JudgeVerdict> verdicts;
    for (const auto& p : policies) verdicts.push_back({p.policy_id, "", true});
    return verdicts;
  }
  std::vector<judge::AuditVerdict> audit(const std::string&,
                                         std::span<const transcript::Message>) override {
    return {};
  }
};

}  // namespace

TEST_CASE("score_corpus keeps input order and parallel equals serial") {
  auto mock = rules_judge("synthetic_rules.json");
  std::vector<transcript::Session> corpus;
  for (int i = 0; i < 12; ++i) {
    auto session = make_session("s" + std::to_string(i), "a", "b", {1 + i % 3, i % 2});
    if (i % 4 == 0) session.turns[0].steps[0].content = "BADSTEP";
    corpus.push_back(std::move(session));
  }
  const auto serial = metrics::score_corpus(corpus, mock, {}, 1);
  const auto parallel = metrics::score_corpus(corpus, mock, {}, 4);
  REQUIRE(serial.size() == corpus.size());
  REQUIRE(parallel.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(serial[i].session_id == corpus[i].session_id);
    CHECK(serial[i].s_score == parallel[i].s_score);
    CHECK(serial[i].avg == parallel[i].avg);
  }
}

TEST_CASE("score_corpus surfaces worker exceptions") {
  PoisonJudge judge;
  std::vector<transcript::Session> corpus;
  for (int i = 0; i < 8; ++i) {
    auto session = make_session("s" + std::to_string(i), "a", "b", {1});
    if (i == 5) session.turns[0].user_utterance = "this one is poison";
    corpus.push_back(std::move(session));
  }
  CHECK_THROWS_AS(metrics::score_corpus(corpus, judge, {}, 4), JudgeProtocolError);
}

TEST_CASE("interaction_pattern statistics") {
  SUBCASE("single session, one turn of five steps") {
    const std::vector<transcript::Session> corpus = {make_session("s", "a", "b", {5})};
    const auto stats = metrics::interaction_pattern(corpus);
    CHECK(stats.turns_mean == 1.0);
    CHECK(stats.turns_std == 0.0);
    CHECK(stats.steps_mean == 5.0);
    CHECK(stats.steps_std == 0.0);
  }
  SUBCASE("two sessions with T=2 and T=4") {
    const std::vector<transcript::Session> corpus = {make_session("s1", "a", "b", {0, 0}),
                                                     make_session("s2", "a", "b", {0, 0, 0, 0})};
    const auto stats = metrics::interaction_pattern(corpus);
    CHECK(stats.turns_mean == 3.0);
    CHECK(stats.turns_std == 1.0);
  }
  SUBCASE("all-single-turn corpus pins turns to 1.00 +- 0.00") {
    std::vector<transcript::Session> corpus;
    for (int i = 0; i < 40; ++i) {
      corpus.push_back(make_session("s" + std::to_string(i), "a", "travel", {3 + i % 5}));
    }
    const auto stats = metrics::interaction_pattern(corpus);
    CHECK(stats.turns_mean == 1.0);
    CHECK(stats.turns_std == 0.0);
  }
  SUBCASE("empty corpus throws") {
    CHECK_THROWS_AS(metrics::interaction_pattern({}), EmptyCorpusError);
  }
}

TEST_CASE("display rounding is half-up at two digits") {
  CHECK(metrics::round_half_up(0.715, 2) == doctest::Approx(0.72).epsilon(kTight));
  CHECK(metrics::round_half_up(0.705, 2) == doctest::Approx(0.71).epsilon(kTight));
  CHECK(metrics::round_half_up(0.125, 2) == doctest::Approx(0.13).epsilon(kTight));
  CHECK(metrics::round_half_up(0.704, 2) == doctest::Approx(0.70).epsilon(kTight));
  CHECK(metrics::format_number(43.0 / 60.0) == "0.72");
  CHECK(metrics::format_score(std::nullopt) == "—");
  CHECK(metrics::format_score(0.5) == "0.50");
}
