#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aura/judge.hpp"
#include "aura/transcript.hpp"

namespace aura::metrics {

// A metric value, or empty when the denominator is empty (Undefined). Undefined
// is deliberately not 0: conflating the two would distort rankings.
using Score = std::optional<double>;

enum class FailedCallsMode { GenerationOnly, GenerationAndExecution };
enum class ObservationMode { Auto, Annotated, Prompt };

FailedCallsMode failed_calls_from_string(const std::string& text);
ObservationMode observation_mode_from_string(const std::string& text);

struct MetricOptions {
  FailedCallsMode failed_calls = FailedCallsMode::GenerationAndExecution;
  ObservationMode observation_mode = ObservationMode::Auto;
};

struct ToolCounters {
  long long n_t = 0;  // every invocation attempt, including failed ones
  long long n_f = 0;  // failures per the configured mode
};

ToolCounters count_tool_calls(const transcript::Session& session,
                              FailedCallsMode mode = FailedCallsMode::GenerationAndExecution);

// S = sum of per-step consistency verdicts / total steps; Undefined when no steps.
Score state_consistency(const transcript::Session& session, judge::Judge& judge);

// A = (N_T - N_F) / (N_T + N_F); Undefined when there are no tool calls.
Score tool_efficiency(const transcript::Session& session,
                      FailedCallsMode mode = FailedCallsMode::GenerationAndExecution);

// O = mean over observation-bearing turns of the per-turn mean verdict.
// Annotated mode scores each observation; prompt mode scores each turn's
// response; Auto picks annotated when any turn carries observations.
Score observation_alignment(const transcript::Session& session, judge::Judge& judge,
                            ObservationMode mode = ObservationMode::Auto);

// P = mean adherence verdict over policies; Undefined when there are none.
Score policy_alignment(const transcript::Session& session, judge::Judge& judge);

double pass_rate(const std::vector<bool>& outcomes);        // InvariantError when empty
bool pass_at_k(const std::vector<bool>& trials, int k);     // any of the first k
bool pass_hat_k(const std::vector<bool>& trials, int k);    // all of the first k

Score aura_average(Score s, Score a, Score o, Score p, Score r);

struct ScoreCard {
  std::string session_id;
  std::string agent_id;
  std::string benchmark_id;
  Score s_score, a_score, o_score, p_score, r_score;
  Score avg;  // defined iff all five components are defined
  int turns = 0;
  double steps_per_turn_mean = 0.0;
  double steps_per_turn_std = 0.0;
  long long n_t = 0;
  long long n_f = 0;
  long long n_obs_turns = 0;
  std::string observation_mode_used = "none";  // "annotated" | "prompt" | "none"
};

ScoreCard score_session(const transcript::Session& session, judge::Judge& judge,
                        const MetricOptions& options = {});

// Scores sessions with a bounded worker pool; output order matches input order
// regardless of scheduling. workers <= 0 picks the hardware concurrency.
std::vector<ScoreCard> score_corpus(std::span<const transcript::Session> sessions,
                                    judge::Judge& judge, const MetricOptions& options = {},
                                    int workers = 0);

struct InteractionPattern {
  double turns_mean = 0.0;
  double turns_std = 0.0;   // population std
  double steps_mean = 0.0;  // over all turns of all sessions
  double steps_std = 0.0;
};

InteractionPattern interaction_pattern(std::span<const transcript::Session> sessions);

// Display rounding: half-up, matching two-digit table cells. Internal math
// stays at full precision everywhere.
double round_half_up(double value, int digits = 2);
std::string format_score(Score value);   // "0.75" or the em dash for Undefined
std::string format_number(double value); // two decimals, half-up

}  // namespace aura::metrics
