#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aura/errors.hpp"

namespace aura::transcript {

// Corpus schema version this build reads and writes.
inline constexpr const char* kSchemaVersion = "1";

enum class StepKind { Thought, Action };
enum class ToolOutcome { Success, GenerationFailure, ExecutionError };

std::string to_string(StepKind kind);
std::string to_string(ToolOutcome outcome);
StepKind step_kind_from_string(const std::string& text);
ToolOutcome tool_outcome_from_string(const std::string& text);

struct ToolCall {
  std::string tool_name;
  // Raw argument text. Structured (object/array) arguments are kept as their
  // serialized form with `structured_arguments` set, so round trips are exact.
  std::string arguments;
  bool structured_arguments = false;
  ToolOutcome outcome = ToolOutcome::Success;
  std::string raw_response;

  bool operator==(const ToolCall&) const = default;
};

// One intermediate agent state z_t^k: a thought or a tool-invoking action.
struct Step {
  std::string step_id;
  StepKind kind = StepKind::Thought;
  std::string content;
  std::optional<ToolCall> tool_call;  // present iff kind == Action

  bool operator==(const Step&) const = default;
};

// A retrieved entity surfaced in an agent response, pre-annotated in the corpus.
struct Observation {
  std::string observation_id;
  std::string content;
  int source_turn = 0;

  bool operator==(const Observation&) const = default;
};

struct Turn {
  int index = 0;  // 1-based, contiguous within a session
  std::string user_utterance;
  std::string agent_response;
  std::vector<Step> steps;
  std::vector<Observation> observations;

  bool operator==(const Turn&) const = default;
};

struct Policy {
  std::string policy_id;
  std::string text;

  bool operator==(const Policy&) const = default;
};

struct Message {
  std::string role;  // "user" or "agent"
  std::string content;

  bool operator==(const Message&) const = default;
};

// C_t with the current agent response a_t excluded: [u_1, a_1, ..., u_t].
struct ContextView {
  int turn_index = 0;
  std::vector<Message> messages;
};

struct Session {
  std::string session_id;
  std::string agent_id;
  std::string benchmark_id;
  std::vector<Turn> turns;
  std::vector<Policy> policies;
  std::vector<bool> task_trials;  // per-trial success flags from the benchmark
  std::map<std::string, std::string> metadata;

  int turn_count() const { return static_cast<int>(turns.size()); }
  std::size_t total_steps() const;

  bool operator==(const Session&) const = default;
};

// Restricted context for judging turn t. Steps are never part of the message
// list; they travel as separate judge payloads.
ContextView context_at(const Session& session, int t);

// C_T: the whole dialogue including the final response.
std::vector<Message> full_context(const Session& session);

// Structural validation beyond field types. `line_no` (1-based, 0 = unknown)
// is echoed in error messages.
void validate_session(const Session& session, std::size_t line_no = 0);

nlohmann::ordered_json session_to_json(const Session& session);
Session session_from_json(const nlohmann::ordered_json& value,
                          const std::string& expected_schema_version = kSchemaVersion,
                          std::size_t line_no = 0);

std::string serialize_session(const Session& session);         // one JSON line, no trailing newline
std::string serialize_corpus(std::span<const Session> sessions);  // JSONL

std::vector<Session> parse_corpus(std::istream& in,
                                  const std::string& schema_version = kSchemaVersion,
                                  const std::string& source_name = "<stream>");
std::vector<Session> parse_corpus(const std::filesystem::path& path,
                                  const std::string& schema_version = kSchemaVersion);

}  // namespace aura::transcript
