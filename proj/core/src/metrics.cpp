#include "aura/metrics.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>

namespace aura::metrics {

namespace {

bool is_failure(transcript::ToolOutcome outcome, FailedCallsMode mode) {
  switch (outcome) {
    case transcript::ToolOutcome::Success: return false;
    case transcript::ToolOutcome::GenerationFailure: return true;
    case transcript::ToolOutcome::ExecutionError:
      return mode == FailedCallsMode::GenerationAndExecution;
  }
  return false;
}

ObservationMode resolve_mode(const transcript::Session& session, ObservationMode mode) {
  if (mode != ObservationMode::Auto) return mode;
  for (const auto& turn : session.turns) {
    if (!turn.observations.empty()) return ObservationMode::Annotated;
  }
  return ObservationMode::Prompt;
}

struct Stats {
  double mean = 0.0;
  double std_dev = 0.0;
};

Stats population_stats(const std::vector<double>& values) {
  if (values.empty()) return {};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

}  // namespace

FailedCallsMode failed_calls_from_string(const std::string& text) {
  if (text == "generation_only") return FailedCallsMode::GenerationOnly;
  if (text == "generation_and_execution") return FailedCallsMode::GenerationAndExecution;
  throw SchemaError("unknown failed_calls mode '" + text + "'");
}

ObservationMode observation_mode_from_string(const std::string& text) {
  if (text == "auto") return ObservationMode::Auto;
  if (text == "annotated") return ObservationMode::Annotated;
  if (text == "prompt") return ObservationMode::Prompt;
  throw SchemaError("unknown observation mode '" + text + "'");
}

ToolCounters count_tool_calls(const transcript::Session& session, FailedCallsMode mode) {
  ToolCounters counters;
  for (const auto& turn : session.turns) {
    for (const auto& step : turn.steps) {
      if (!step.tool_call) continue;
      ++counters.n_t;
      if (is_failure(step.tool_call->outcome, mode)) ++counters.n_f;
    }
  }
  return counters;
}

Score state_consistency(const transcript::Session& session, judge::Judge& judge) {
  long long total_steps = 0;
  long long consistent = 0;
  for (const auto& turn : session.turns) {
    if (turn.steps.empty()) continue;
    const auto context = transcript::context_at(session, turn.index);
    const auto verdicts = judge.is_consistent(turn.steps, context);
    total_steps += static_cast<long long>(turn.steps.size());
    for (const auto& verdict : verdicts) {
      if (verdict.score) ++consistent;
    }
  }
  if (total_steps == 0) return std::nullopt;
  return static_cast<double>(consistent) / static_cast<double>(total_steps);
}

Score tool_efficiency(const transcript::Session& session, FailedCallsMode mode) {
  const ToolCounters counters = count_tool_calls(session, mode);
  if (counters.n_t + counters.n_f == 0) return std::nullopt;
  return static_cast<double>(counters.n_t - counters.n_f) /
         static_cast<double>(counters.n_t + counters.n_f);
}

Score observation_alignment(const transcript::Session& session, judge::Judge& judge,
                            ObservationMode mode) {
  const ObservationMode resolved = resolve_mode(session, mode);
  double turn_sum = 0.0;
  long long obs_turns = 0;
  for (const auto& turn : session.turns) {
    std::vector<judge::JudgeItem> items;
    if (resolved == ObservationMode::Annotated) {
      for (const auto& obs : turn.observations) {
        items.push_back({obs.observation_id, obs.content, ""});
      }
    } else {
      items.push_back({std::to_string(turn.index), turn.agent_response, ""});
    }
    if (items.empty()) continue;  // |O^(t)| = 0: turn excluded from T_obs
    const auto context = transcript::context_at(session, turn.index);
    const auto verdicts = judge.is_aligned(items, context);
    long long aligned = 0;
    for (const auto& verdict : verdicts) {
      if (verdict.score) ++aligned;
    }
    turn_sum += static_cast<double>(aligned) / static_cast<double>(verdicts.size());
    ++obs_turns;
  }
  if (obs_turns == 0) return std::nullopt;
  return turn_sum / static_cast<double>(obs_turns);
}

Score policy_alignment(const transcript::Session& session, judge::Judge& judge) {
  if (session.policies.empty()) return std::nullopt;
  const auto context = transcript::full_context(session);
  const auto verdicts = judge.is_adherent(session.policies, context);
  long long adherent = 0;
  for (const auto& verdict : verdicts) {
    if (verdict.score) ++adherent;
  }
  return static_cast<double>(adherent) / static_cast<double>(session.policies.size());
}

double pass_rate(const std::vector<bool>& outcomes) {
  if (outcomes.empty()) {
    throw InvariantError("pass_rate needs at least one outcome");
  }
  long long passed = 0;
  for (bool outcome : outcomes) {
    if (outcome) ++passed;
  }
  return static_cast<double>(passed) / static_cast<double>(outcomes.size());
}

namespace {
void check_k(const std::vector<bool>& trials, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > trials.size()) {
    throw IndexError("k = " + std::to_string(k) + " out of range for " +
                     std::to_string(trials.size()) + " trials");
  }
}
}  // namespace

bool pass_at_k(const std::vector<bool>& trials, int k) {
  check_k(trials, k);
  for (int i = 0; i < k; ++i) {
    if (trials[static_cast<std::size_t>(i)]) return true;
  }
  return false;
}

bool pass_hat_k(const std::vector<bool>& trials, int k) {
  check_k(trials, k);
  for (int i = 0; i < k; ++i) {
    if (!trials[static_cast<std::size_t>(i)]) return false;
  }
  return true;
}

Score aura_average(Score s, Score a, Score o, Score p, Score r) {
  if (!s || !a || !o || !p || !r) return std::nullopt;
  return (*s + *a + *o + *p + *r) / 5.0;
}

ScoreCard score_session(const transcript::Session& session, judge::Judge& judge,
                        const MetricOptions& options) {
  ScoreCard card;
  card.session_id = session.session_id;
  card.agent_id = session.agent_id;
  card.benchmark_id = session.benchmark_id;

  card.s_score = state_consistency(session, judge);
  card.a_score = tool_efficiency(session, options.failed_calls);
  const ObservationMode resolved = resolve_mode(session, options.observation_mode);
  card.o_score = observation_alignment(session, judge, resolved);
  card.p_score = policy_alignment(session, judge);
  card.r_score = session.task_trials.empty() ? Score{} : Score{pass_rate(session.task_trials)};
  card.avg = aura_average(card.s_score, card.a_score, card.o_score, card.p_score, card.r_score);

  card.turns = session.turn_count();
  std::vector<double> steps_per_turn;
  steps_per_turn.reserve(session.turns.size());
  long long obs_turns = 0;
  for (const auto& turn : session.turns) {
    steps_per_turn.push_back(static_cast<double>(turn.steps.size()));
    if (resolved == ObservationMode::Annotated) {
      if (!turn.observations.empty()) ++obs_turns;
    } else {
      ++obs_turns;  // prompt mode judges every turn's response
    }
  }
  const Stats stats = population_stats(steps_per_turn);
  card.steps_per_turn_mean = stats.mean;
  card.steps_per_turn_std = stats.std_dev;

  const ToolCounters counters = count_tool_calls(session, options.failed_calls);
  card.n_t = counters.n_t;
  card.n_f = counters.n_f;
  card.n_obs_turns = obs_turns;
  card.observation_mode_used =
      resolved == ObservationMode::Annotated ? "annotated" : "prompt";
  return card;
}

std::vector<ScoreCard> score_corpus(std::span<const transcript::Session> sessions,
                                    judge::Judge& judge, const MetricOptions& options,
                                    int workers) {
  std::vector<ScoreCard> cards(sessions.size());
  if (sessions.empty()) return cards;

  int pool = workers;
  if (pool <= 0) pool = static_cast<int>(std::thread::hardware_concurrency());
  if (pool < 1) pool = 1;
  pool = std::min<int>(pool, static_cast<int>(sessions.size()));

  if (pool == 1) {
    for (std::size_t i = 0; i < sessions.size(); ++i) {
      cards[i] = score_session(sessions[i], judge, options);
    }
    return cards;
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr error;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= sessions.size()) return;
      try {
        cards[i] = score_session(sessions[i], judge, options);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(pool));
  for (int i = 0; i < pool; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
  return cards;
}

InteractionPattern interaction_pattern(std::span<const transcript::Session> sessions) {
  if (sessions.empty()) {
    throw EmptyCorpusError("interaction_pattern needs at least one session");
  }
  std::vector<double> turns;
  std::vector<double> steps;
  turns.reserve(sessions.size());
  for (const auto& session : sessions) {
    turns.push_back(static_cast<double>(session.turn_count()));
    for (const auto& turn : session.turns) {
      steps.push_back(static_cast<double>(turn.steps.size()));
    }
  }
  const Stats turn_stats = population_stats(turns);
  const Stats step_stats = population_stats(steps);
  return {turn_stats.mean, turn_stats.std_dev, step_stats.mean, step_stats.std_dev};
}

double round_half_up(double value, int digits) {
  const double scale = std::pow(10.0, digits);
  // The epsilon keeps values sitting exactly on a half (up to float noise)
  // rounding up, e.g. 0.445 -> 0.45.
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", round_half_up(value, 2));
  return std::string(buf);
}

std::string format_score(Score value) {
  if (!value) return "—";
  return format_number(*value);
}

}  // namespace aura::metrics
