#include "aura/mixing.hpp"

#include <algorithm>
#include <fstream>

namespace aura::mixing {

namespace {

using nlohmann::ordered_json;
using transcript::Message;
using transcript::Session;
using transcript::Step;
using transcript::StepKind;
using transcript::ToolCall;
using transcript::Turn;

std::string synth_step_id(int turn_index, int step_index) {
  return "t" + std::to_string(turn_index) + ".s" + std::to_string(step_index + 1);
}

Step materialize(const StepProposal& proposal, std::string step_id) {
  Step step;
  step.step_id = std::move(step_id);
  step.kind = proposal.kind;
  step.content = proposal.content;
  if (proposal.kind == StepKind::Action) {
    ToolCall call;
    call.tool_name = proposal.tool_name;
    call.arguments = proposal.arguments;
    call.structured_arguments = proposal.structured_arguments;
    step.tool_call = std::move(call);
  }
  return step;
}

// Mean of the applicable boolean criteria for a candidate response:
// alignment of the response plus one adherence verdict per policy.
double score_response_candidate(judge::Judge& judge, const std::string& response,
                                int turn_index, std::span<const Message> messages,
                                std::span<const transcript::Policy> policies) {
  transcript::ContextView view;
  view.turn_index = turn_index;
  view.messages.assign(messages.begin(), messages.end());
  const judge::JudgeItem item{std::to_string(turn_index), response, ""};
  const auto aligned = judge.is_aligned({&item, 1}, view);
  double sum = aligned.front().score ? 1.0 : 0.0;
  int count = 1;
  if (!policies.empty()) {
    std::vector<Message> full(messages.begin(), messages.end());
    full.push_back({"agent", response});
    const auto verdicts = judge.is_adherent(policies, full);
    for (const auto& verdict : verdicts) {
      sum += verdict.score ? 1.0 : 0.0;
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

double score_step_candidate(judge::Judge& judge, const Step& candidate, int turn_index,
                            std::span<const Message> messages) {
  transcript::ContextView view;
  view.turn_index = turn_index;
  view.messages.assign(messages.begin(), messages.end());
  const auto verdicts = judge.is_consistent({&candidate, 1}, view);
  return verdicts.front().score ? 1.0 : 0.0;
}

struct DriverConfig {
  std::vector<AgentClient*> intermediate;
  std::vector<AgentClient*> response;
  judge::Judge* judge = nullptr;            // required when a stage has > 1 candidate
  std::vector<Decision>* trace = nullptr;
  std::string agent_id;
};

Session drive(const DriverConfig& cfg, Environment& env, UserClient& user,
              const RunMeta& meta) {
  Session session;
  session.agent_id = cfg.agent_id;
  session.session_id = meta.episode_id + ":" + cfg.agent_id;
  session.benchmark_id = meta.benchmark_id;
  session.policies = meta.policies;

  std::vector<Message> messages;
  int t = 0;
  while (auto utterance = user.next_utterance(messages)) {
    ++t;
    Turn turn;
    turn.index = t;
    turn.user_utterance = *utterance;
    messages.push_back({"user", *utterance});

    // Intermediate stage: keep asking for steps until every candidate passes.
    int k = 0;
    while (true) {
      const EpisodeContext context{t, k, messages, turn.steps};
      std::vector<std::optional<StepProposal>> proposals;
      proposals.reserve(cfg.intermediate.size());
      for (AgentClient* client : cfg.intermediate) {
        proposals.push_back(client->propose_step(context));
      }
      std::vector<std::size_t> live;
      for (std::size_t i = 0; i < proposals.size(); ++i) {
        if (proposals[i]) live.push_back(i);
      }
      if (live.empty()) break;
      if (k >= meta.max_steps_per_turn) {
        throw StepLimitExceeded("episode '" + meta.episode_id + "' exceeded " +
                                std::to_string(meta.max_steps_per_turn) +
                                " steps in turn " + std::to_string(t));
      }

      const std::string step_id = synth_step_id(t, k);
      std::size_t chosen = live.front();
      std::vector<double> scores(proposals.size(), -1.0);
      if (live.size() > 1) {
        double best = -1.0;
        for (std::size_t idx : live) {
          const Step candidate = materialize(*proposals[idx], step_id);
          scores[idx] = score_step_candidate(*cfg.judge, candidate, t, messages);
          if (scores[idx] > best) {
            best = scores[idx];
            chosen = idx;
          }
        }
      }
      if (cfg.trace) {
        Decision decision;
        decision.turn_index = t;
        decision.step_index = k;
        decision.stage = Stage::Intermediate;
        for (AgentClient* client : cfg.intermediate) {
          decision.candidate_ids.push_back(client->agent_id());
        }
        decision.scores = scores;
        decision.selected = static_cast<int>(chosen);
        cfg.trace->push_back(std::move(decision));
      }

      Step step = materialize(*proposals[chosen], step_id);
      if (step.tool_call) {
        if (proposals[chosen]->generation_failure) {
          step.tool_call->outcome = transcript::ToolOutcome::GenerationFailure;
        } else {
          auto [outcome, raw] = env.execute(step.tool_call->tool_name,
                                            step.tool_call->arguments);
          step.tool_call->outcome = outcome;
          step.tool_call->raw_response = raw;
        }
      }
      session.metadata["attribution:step:" + step.step_id] =
          cfg.intermediate[chosen]->agent_id();
      turn.steps.push_back(std::move(step));
      ++k;
    }

    // Response stage.
    const EpisodeContext context{t, k, messages, turn.steps};
    std::vector<std::optional<std::string>> responses;
    responses.reserve(cfg.response.size());
    for (AgentClient* client : cfg.response) {
      responses.push_back(client->propose_response(context));
    }
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < responses.size(); ++i) {
      if (responses[i]) live.push_back(i);
    }
    if (live.empty()) {
      throw EpisodeError("no candidate produced a response at turn " + std::to_string(t) +
                         " of episode '" + meta.episode_id + "'");
    }
    std::size_t chosen = live.front();
    std::vector<double> scores(responses.size(), -1.0);
    if (live.size() > 1) {
      double best = -1.0;
      for (std::size_t idx : live) {
        scores[idx] = score_response_candidate(*cfg.judge, *responses[idx], t, messages,
                                               meta.policies);
        if (scores[idx] > best) {
          best = scores[idx];
          chosen = idx;
        }
      }
    }
    if (cfg.trace) {
      Decision decision;
      decision.turn_index = t;
      decision.step_index = -1;
      decision.stage = Stage::Response;
      for (AgentClient* client : cfg.response) {
        decision.candidate_ids.push_back(client->agent_id());
      }
      decision.scores = scores;
      decision.selected = static_cast<int>(chosen);
      cfg.trace->push_back(std::move(decision));
    }

    turn.agent_response = *responses[chosen];
    messages.push_back({"agent", turn.agent_response});
    session.metadata["attribution:response:" + std::to_string(t)] =
        cfg.response[chosen]->agent_id();
    session.turns.push_back(std::move(turn));
  }

  if (session.turns.empty()) {
    throw EpisodeError("user client produced no turns for episode '" + meta.episode_id + "'");
  }
  transcript::validate_session(session);
  return session;
}

StepProposal proposal_from_json(const ordered_json& value) {
  StepProposal proposal;
  const std::string kind = value.value("kind", "thought");
  proposal.kind = transcript::step_kind_from_string(kind);
  proposal.content = value.value("content", "");
  if (auto it = value.find("tool_name"); it != value.end()) {
    proposal.tool_name = it->get<std::string>();
  }
  if (auto it = value.find("arguments"); it != value.end()) {
    if (it->is_string()) {
      proposal.arguments = it->get<std::string>();
    } else {
      proposal.arguments = it->dump();
      proposal.structured_arguments = true;
    }
  }
  proposal.generation_failure = value.value("generation_failure", false);
  return proposal;
}

}  // namespace

std::optional<StepProposal> ScriptedAgentClient::propose_step(const EpisodeContext& context) {
  const std::size_t turn = static_cast<std::size_t>(context.turn_index) - 1;
  if (turn >= script_.turns.size()) return std::nullopt;
  const auto& steps = script_.turns[turn].steps;
  const std::size_t k = static_cast<std::size_t>(context.step_index);
  if (k >= steps.size()) return std::nullopt;
  return steps[k];
}

std::optional<std::string> ScriptedAgentClient::propose_response(const EpisodeContext& context) {
  const std::size_t turn = static_cast<std::size_t>(context.turn_index) - 1;
  if (turn >= script_.turns.size()) return std::nullopt;
  return script_.turns[turn].response;
}

std::optional<std::string> ScriptedUserClient::next_utterance(
    std::span<const transcript::Message> messages) {
  const std::size_t index = messages.size() / 2;  // one user+agent pair per turn
  if (index >= utterances_.size()) return std::nullopt;
  return utterances_[index];
}

std::pair<transcript::ToolOutcome, std::string> ScriptedEnvironment::execute(
    const std::string& tool_name, const std::string& arguments) {
  (void)arguments;
  auto it = tools_.find(tool_name);
  if (it == tools_.end()) {
    return {transcript::ToolOutcome::ExecutionError, "Error: unknown tool '" + tool_name + "'"};
  }
  return {it->second.outcome, it->second.response};
}

EpisodeScript episode_from_json(const ordered_json& value) {
  if (!value.is_object()) {
    throw SchemaError("episode must be a JSON object");
  }
  EpisodeScript episode;
  episode.episode_id = value.value("episode_id", "");
  episode.benchmark_id = value.value("benchmark_id", "");
  if (episode.episode_id.empty() || episode.benchmark_id.empty()) {
    throw SchemaError("episode needs non-empty 'episode_id' and 'benchmark_id'");
  }
  episode.max_steps_per_turn = value.value("max_steps_per_turn", 16);
  if (auto it = value.find("user_turns"); it != value.end() && it->is_array()) {
    for (const auto& u : *it) episode.user_turns.push_back(u.get<std::string>());
  }
  if (episode.user_turns.empty()) {
    throw SchemaError("episode '" + episode.episode_id + "' has no user_turns");
  }
  if (auto it = value.find("tools"); it != value.end() && it->is_object()) {
    for (const auto& [name, tv] : it->items()) {
      ToolBehavior behavior;
      behavior.outcome = transcript::tool_outcome_from_string(tv.value("outcome", "success"));
      behavior.response = tv.value("response", "");
      episode.tools[name] = std::move(behavior);
    }
  }
  if (auto it = value.find("policies"); it != value.end() && it->is_array()) {
    for (const auto& pv : *it) {
      episode.policies.push_back({pv.at("policy_id").get<std::string>(),
                                  pv.at("text").get<std::string>()});
    }
  }
  if (auto it = value.find("agents"); it != value.end() && it->is_object()) {
    for (const auto& [agent_id, av] : it->items()) {
      AgentScript script;
      script.agent_id = agent_id;
      if (auto tv = av.find("turns"); tv != av.end() && tv->is_array()) {
        for (const auto& turn : *tv) {
          ScriptedTurn scripted;
          if (auto sv = turn.find("steps"); sv != turn.end() && sv->is_array()) {
            for (const auto& step : *sv) scripted.steps.push_back(proposal_from_json(step));
          }
          scripted.response = turn.value("response", "");
          script.turns.push_back(std::move(scripted));
        }
      }
      episode.agents[agent_id] = std::move(script);
    }
  }
  return episode;
}

EpisodeScript load_episode(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open episode file '" + path.string() + "'");
  }
  ordered_json value;
  try {
    in >> value;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("invalid JSON in episode file '" + path.string() + "': " + e.what());
  }
  return episode_from_json(value);
}

EpisodeScript find_episode(const std::filesystem::path& dir, const std::string& episode_id) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("episode directory '" + dir.string() + "' does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    EpisodeScript episode = load_episode(file);
    if (episode.episode_id == episode_id) return episode;
  }
  throw EpisodeError("episode '" + episode_id + "' not found under '" + dir.string() + "'");
}

void MixPlan::validate() const {
  const bool split = !intermediate_agent.empty() && !response_agent.empty();
  const bool bestof = !best_of_n.empty();
  if (split == bestof) {
    throw SchemaError("mix plan must set either intermediate_agent/response_agent or best_of_n");
  }
  if (!split && (!intermediate_agent.empty() || !response_agent.empty())) {
    throw SchemaError("mix plan mixes stage-split fields with best_of_n");
  }
}

MixPlan plan_from_json(const ordered_json& value) {
  if (!value.is_object()) {
    throw SchemaError("mix plan must be a JSON object");
  }
  MixPlan plan;
  plan.episode_id = value.value("episode", value.value("episode_id", ""));
  plan.intermediate_agent = value.value("intermediate_agent", "");
  plan.response_agent = value.value("response_agent", "");
  if (auto it = value.find("best_of_n"); it != value.end() && it->is_array()) {
    for (const auto& id : *it) plan.best_of_n.push_back(id.get<std::string>());
  }
  plan.validate();
  return plan;
}

MixPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open mix plan '" + path.string() + "'");
  }
  ordered_json value;
  try {
    in >> value;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("invalid JSON in mix plan '" + path.string() + "': " + e.what());
  }
  return plan_from_json(value);
}

transcript::Session run_stage_split(AgentClient& intermediate, AgentClient& response,
                                    Environment& env, UserClient& user, const RunMeta& meta) {
  DriverConfig cfg;
  cfg.intermediate = {&intermediate};
  cfg.response = {&response};
  cfg.agent_id = intermediate.agent_id() == response.agent_id()
                     ? intermediate.agent_id()
                     : "mix:" + intermediate.agent_id() + "+" + response.agent_id();
  return drive(cfg, env, user, meta);
}

transcript::Session run_solo(AgentClient& agent, Environment& env, UserClient& user,
                             const RunMeta& meta) {
  return run_stage_split(agent, agent, env, user, meta);
}

MixOutcome run_best_of_n(std::span<AgentClient* const> candidates, judge::Judge& judge,
                         Environment& env, UserClient& user, const RunMeta& meta) {
  if (candidates.empty()) {
    throw EpisodeError("best-of-n needs at least one candidate");
  }
  MixOutcome outcome;
  DriverConfig cfg;
  cfg.intermediate.assign(candidates.begin(), candidates.end());
  cfg.response = cfg.intermediate;
  cfg.judge = &judge;
  cfg.trace = &outcome.decisions;
  if (candidates.size() == 1) {
    cfg.agent_id = candidates.front()->agent_id();
  } else {
    std::string id = "bestof:";
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (i > 0) id += ',';
      id += candidates[i]->agent_id();
    }
    cfg.agent_id = id;
  }
  outcome.session = drive(cfg, env, user, meta);
  return outcome;
}

namespace {

ScriptedAgentClient make_client(const EpisodeScript& episode, const std::string& agent_id) {
  auto it = episode.agents.find(agent_id);
  if (it == episode.agents.end()) {
    throw EpisodeError("agent '" + agent_id + "' is not scripted in episode '" +
                       episode.episode_id + "'");
  }
  return ScriptedAgentClient(it->second);
}

RunMeta meta_for(const EpisodeScript& episode) {
  return {episode.episode_id, episode.benchmark_id, episode.policies,
          episode.max_steps_per_turn};
}

}  // namespace

transcript::Session run_stage_split(const MixPlan& plan, const EpisodeScript& episode) {
  plan.validate();
  if (!plan.is_stage_split()) {
    throw EpisodeError("plan is a best_of_n plan; use run_best_of_n");
  }
  ScriptedAgentClient intermediate = make_client(episode, plan.intermediate_agent);
  ScriptedAgentClient response = make_client(episode, plan.response_agent);
  ScriptedUserClient user(episode.user_turns);
  ScriptedEnvironment env(episode.tools);
  return run_stage_split(intermediate, response, env, user, meta_for(episode));
}

MixOutcome run_best_of_n(const MixPlan& plan, const EpisodeScript& episode,
                         judge::Judge& judge) {
  plan.validate();
  if (plan.is_stage_split()) {
    throw EpisodeError("plan is a stage-split plan; use run_stage_split");
  }
  std::vector<ScriptedAgentClient> clients;
  clients.reserve(plan.best_of_n.size());
  for (const auto& agent_id : plan.best_of_n) {
    clients.push_back(make_client(episode, agent_id));
  }
  std::vector<AgentClient*> pointers;
  pointers.reserve(clients.size());
  for (auto& client : clients) pointers.push_back(&client);
  ScriptedUserClient user(episode.user_turns);
  ScriptedEnvironment env(episode.tools);
  return run_best_of_n(pointers, judge, env, user, meta_for(episode));
}

}  // namespace aura::mixing
