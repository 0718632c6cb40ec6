#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aura/judge.hpp"
#include "aura/transcript.hpp"

namespace aura::mixing {

enum class Stage { Intermediate, Response };

// The dialogue position an agent is asked to continue from.
struct EpisodeContext {
  int turn_index = 0;  // 1-based
  int step_index = 0;  // steps already committed this turn
  std::span<const transcript::Message> messages;  // ends with the current user utterance
  std::span<const transcript::Step> turn_steps;
};

struct StepProposal {
  transcript::StepKind kind = transcript::StepKind::Thought;
  std::string content;
  std::string tool_name;  // actions only
  std::string arguments;
  bool structured_arguments = false;
  bool generation_failure = false;  // malformed call text, never reaches the tool
};

class AgentClient {
 public:
  virtual ~AgentClient() = default;
  virtual const std::string& agent_id() const = 0;
  // Intermediate stage; nullopt hands the turn over to response generation.
  virtual std::optional<StepProposal> propose_step(const EpisodeContext& context) = 0;
  // Response stage; nullopt means this candidate abstains.
  virtual std::optional<std::string> propose_response(const EpisodeContext& context) = 0;
};

class UserClient {
 public:
  virtual ~UserClient() = default;
  // nullopt ends the episode.
  virtual std::optional<std::string> next_utterance(
      std::span<const transcript::Message> messages) = 0;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::pair<transcript::ToolOutcome, std::string> execute(
      const std::string& tool_name, const std::string& arguments) = 0;
};

// Scripted replay implementations, driven by episode fixtures.

struct ScriptedTurn {
  std::vector<StepProposal> steps;
  std::string response;
};

struct AgentScript {
  std::string agent_id;
  std::vector<ScriptedTurn> turns;
};

// Stateless per-call: the (turn, step) position in the context picks the
// script entry, so replays and candidate fan-out stay deterministic.
class ScriptedAgentClient final : public AgentClient {
 public:
  explicit ScriptedAgentClient(AgentScript script) : script_(std::move(script)) {}
  const std::string& agent_id() const override { return script_.agent_id; }
  std::optional<StepProposal> propose_step(const EpisodeContext& context) override;
  std::optional<std::string> propose_response(const EpisodeContext& context) override;

 private:
  AgentScript script_;
};

class ScriptedUserClient final : public UserClient {
 public:
  explicit ScriptedUserClient(std::vector<std::string> utterances)
      : utterances_(std::move(utterances)) {}
  std::optional<std::string> next_utterance(
      std::span<const transcript::Message> messages) override;

 private:
  std::vector<std::string> utterances_;
};

struct ToolBehavior {
  transcript::ToolOutcome outcome = transcript::ToolOutcome::Success;
  std::string response;
};

class ScriptedEnvironment final : public Environment {
 public:
  explicit ScriptedEnvironment(std::map<std::string, ToolBehavior> tools)
      : tools_(std::move(tools)) {}
  std::pair<transcript::ToolOutcome, std::string> execute(
      const std::string& tool_name, const std::string& arguments) override;

 private:
  std::map<std::string, ToolBehavior> tools_;
};

// One episode fixture: user script, tool behaviors, policies, agent scripts.
struct EpisodeScript {
  std::string episode_id;
  std::string benchmark_id;
  std::vector<std::string> user_turns;
  std::map<std::string, ToolBehavior> tools;
  std::vector<transcript::Policy> policies;
  int max_steps_per_turn = 16;
  std::map<std::string, AgentScript> agents;
};

EpisodeScript episode_from_json(const nlohmann::ordered_json& value);
EpisodeScript load_episode(const std::filesystem::path& path);
// Scans a directory of episode JSON files for a matching episode_id.
EpisodeScript find_episode(const std::filesystem::path& dir, const std::string& episode_id);

// Exactly one of the two shapes is populated.
struct MixPlan {
  std::string episode_id;
  std::string intermediate_agent;
  std::string response_agent;
  std::vector<std::string> best_of_n;

  bool is_stage_split() const { return best_of_n.empty(); }
  void validate() const;
};

MixPlan plan_from_json(const nlohmann::ordered_json& value);
MixPlan load_plan(const std::filesystem::path& path);

// Shared run metadata. The produced session id is "<episode_id>:<agent_id>".
struct RunMeta {
  std::string episode_id;
  std::string benchmark_id;
  std::vector<transcript::Policy> policies;
  int max_steps_per_turn = 16;
};

// One Best-of-N decision point. step_index is -1 for response decisions.
// Abstaining candidates carry score -1.
struct Decision {
  int turn_index = 0;
  int step_index = 0;
  Stage stage = Stage::Intermediate;
  std::vector<std::string> candidate_ids;
  std::vector<double> scores;
  int selected = 0;
};

struct MixOutcome {
  transcript::Session session;
  // The selection trace lives outside the Session so degenerate runs compare
  // bit-identical to solo runs.
  std::vector<Decision> decisions;
  bool scores_actions = true;  // tool-call actions are judged, not just prose
};

transcript::Session run_stage_split(AgentClient& intermediate, AgentClient& response,
                                    Environment& env, UserClient& user, const RunMeta& meta);
transcript::Session run_solo(AgentClient& agent, Environment& env, UserClient& user,
                             const RunMeta& meta);
MixOutcome run_best_of_n(std::span<AgentClient* const> candidates, judge::Judge& judge,
                         Environment& env, UserClient& user, const RunMeta& meta);

// Plan-level entry points over an episode fixture.
transcript::Session run_stage_split(const MixPlan& plan, const EpisodeScript& episode);
MixOutcome run_best_of_n(const MixPlan& plan, const EpisodeScript& episode,
                         judge::Judge& judge);

}  // namespace aura::mixing
