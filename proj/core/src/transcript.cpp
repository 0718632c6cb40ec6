#include "aura/transcript.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace aura::transcript {

namespace {

using nlohmann::ordered_json;

std::string where(std::size_t line_no) {
  if (line_no == 0) return "";
  return "line " + std::to_string(line_no) + ": ";
}

const ordered_json& require_field(const ordered_json& obj, const std::string& key,
                                  std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(where(line_no) + "missing field '" + key + "'");
  }
  return *it;
}

std::string require_string(const ordered_json& obj, const std::string& key,
                           std::size_t line_no) {
  const auto& v = require_field(obj, key, line_no);
  if (!v.is_string()) {
    throw SchemaError(where(line_no) + "field '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

int require_int(const ordered_json& obj, const std::string& key, std::size_t line_no) {
  const auto& v = require_field(obj, key, line_no);
  if (!v.is_number_integer()) {
    throw SchemaError(where(line_no) + "field '" + key + "' must be an integer");
  }
  return v.get<int>();
}

const ordered_json& require_array(const ordered_json& obj, const std::string& key,
                                  std::size_t line_no) {
  const auto& v = require_field(obj, key, line_no);
  if (!v.is_array()) {
    throw SchemaError(where(line_no) + "field '" + key + "' must be an array");
  }
  return v;
}

std::string optional_string(const ordered_json& obj, const std::string& key,
                            std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) return "";
  if (!it->is_string()) {
    throw SchemaError(where(line_no) + "field '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

ToolCall tool_call_from_json(const ordered_json& value, std::size_t line_no) {
  if (!value.is_object()) {
    throw SchemaError(where(line_no) + "field 'tool_call' must be an object");
  }
  ToolCall call;
  call.tool_name = require_string(value, "tool_name", line_no);
  const auto& args = require_field(value, "arguments", line_no);
  if (args.is_string()) {
    call.arguments = args.get<std::string>();
    call.structured_arguments = false;
  } else if (args.is_object() || args.is_array()) {
    call.arguments = args.dump();
    call.structured_arguments = true;
  } else {
    throw SchemaError(where(line_no) + "field 'arguments' must be text or a structured map");
  }
  call.outcome = [&] {
    const std::string text = require_string(value, "outcome", line_no);
    try {
      return tool_outcome_from_string(text);
    } catch (const SchemaError&) {
      throw SchemaError(where(line_no) + "field 'outcome' has unknown value '" + text + "'");
    }
  }();
  call.raw_response = optional_string(value, "raw_response", line_no);
  return call;
}

Step step_from_json(const ordered_json& value, std::size_t line_no) {
  if (!value.is_object()) {
    throw SchemaError(where(line_no) + "each step must be an object");
  }
  Step step;
  step.step_id = require_string(value, "step_id", line_no);
  const std::string kind = require_string(value, "kind", line_no);
  try {
    step.kind = step_kind_from_string(kind);
  } catch (const SchemaError&) {
    throw SchemaError(where(line_no) + "field 'kind' has unknown value '" + kind + "'");
  }
  step.content = require_string(value, "content", line_no);
  if (auto it = value.find("tool_call"); it != value.end() && !it->is_null()) {
    step.tool_call = tool_call_from_json(*it, line_no);
  }
  return step;
}

Observation observation_from_json(const ordered_json& value, std::size_t line_no) {
  if (!value.is_object()) {
    throw SchemaError(where(line_no) + "each observation must be an object");
  }
  Observation obs;
  obs.observation_id = require_string(value, "observation_id", line_no);
  obs.content = require_string(value, "content", line_no);
  obs.source_turn = require_int(value, "source_turn", line_no);
  return obs;
}

Turn turn_from_json(const ordered_json& value, std::size_t line_no) {
  if (!value.is_object()) {
    throw SchemaError(where(line_no) + "each turn must be an object");
  }
  Turn turn;
  turn.index = require_int(value, "index", line_no);
  turn.user_utterance = require_string(value, "user_utterance", line_no);
  turn.agent_response = require_string(value, "agent_response", line_no);
  if (auto it = value.find("steps"); it != value.end()) {
    if (!it->is_array()) {
      throw SchemaError(where(line_no) + "field 'steps' must be an array");
    }
    for (const auto& s : *it) turn.steps.push_back(step_from_json(s, line_no));
  }
  if (auto it = value.find("observations"); it != value.end()) {
    if (!it->is_array()) {
      throw SchemaError(where(line_no) + "field 'observations' must be an array");
    }
    for (const auto& o : *it) turn.observations.push_back(observation_from_json(o, line_no));
  }
  return turn;
}

Policy policy_from_json(const ordered_json& value, std::size_t line_no) {
  if (!value.is_object()) {
    throw SchemaError(where(line_no) + "each policy must be an object");
  }
  return Policy{require_string(value, "policy_id", line_no),
                require_string(value, "text", line_no)};
}

ordered_json tool_call_to_json(const ToolCall& call) {
  ordered_json v;
  v["tool_name"] = call.tool_name;
  if (call.structured_arguments) {
    v["arguments"] = ordered_json::parse(call.arguments);
  } else {
    v["arguments"] = call.arguments;
  }
  v["outcome"] = to_string(call.outcome);
  v["raw_response"] = call.raw_response;
  return v;
}

ordered_json step_to_json(const Step& step) {
  ordered_json v;
  v["step_id"] = step.step_id;
  v["kind"] = to_string(step.kind);
  v["content"] = step.content;
  if (step.tool_call) v["tool_call"] = tool_call_to_json(*step.tool_call);
  return v;
}

ordered_json turn_to_json(const Turn& turn) {
  ordered_json v;
  v["index"] = turn.index;
  v["user_utterance"] = turn.user_utterance;
  v["agent_response"] = turn.agent_response;
  v["steps"] = ordered_json::array();
  for (const auto& s : turn.steps) v["steps"].push_back(step_to_json(s));
  v["observations"] = ordered_json::array();
  for (const auto& o : turn.observations) {
    ordered_json ov;
    ov["observation_id"] = o.observation_id;
    ov["content"] = o.content;
    ov["source_turn"] = o.source_turn;
    v["observations"].push_back(std::move(ov));
  }
  return v;
}

// Keys consumed by the structured schema; everything else lands in metadata.
bool is_known_key(const std::string& key) {
  static const std::set<std::string> known = {
      "schema_version", "session_id", "agent_id",  "benchmark_id",
      "turns",          "policies",   "task_trials", "metadata"};
  return known.count(key) > 0;
}

}  // namespace

std::string to_string(StepKind kind) {
  return kind == StepKind::Thought ? "thought" : "action";
}

std::string to_string(ToolOutcome outcome) {
  switch (outcome) {
    case ToolOutcome::Success: return "success";
    case ToolOutcome::GenerationFailure: return "generation_failure";
    case ToolOutcome::ExecutionError: return "execution_error";
  }
  return "success";
}

StepKind step_kind_from_string(const std::string& text) {
  if (text == "thought") return StepKind::Thought;
  if (text == "action") return StepKind::Action;
  throw SchemaError("unknown step kind '" + text + "'");
}

ToolOutcome tool_outcome_from_string(const std::string& text) {
  if (text == "success") return ToolOutcome::Success;
  if (text == "generation_failure") return ToolOutcome::GenerationFailure;
  if (text == "execution_error") return ToolOutcome::ExecutionError;
  throw SchemaError("unknown tool outcome '" + text + "'");
}

std::size_t Session::total_steps() const {
  std::size_t n = 0;
  for (const auto& turn : turns) n += turn.steps.size();
  return n;
}

ContextView context_at(const Session& session, int t) {
  if (t < 1 || t > session.turn_count()) {
    throw IndexError("turn index " + std::to_string(t) + " out of range [1, " +
                     std::to_string(session.turn_count()) + "] in session '" +
                     session.session_id + "'");
  }
  ContextView view;
  view.turn_index = t;
  view.messages.reserve(static_cast<std::size_t>(2 * t - 1));
  for (int i = 0; i < t - 1; ++i) {
    view.messages.push_back({"user", session.turns[i].user_utterance});
    view.messages.push_back({"agent", session.turns[i].agent_response});
  }
  view.messages.push_back({"user", session.turns[t - 1].user_utterance});
  return view;
}

std::vector<Message> full_context(const Session& session) {
  std::vector<Message> messages;
  messages.reserve(2 * session.turns.size());
  for (const auto& turn : session.turns) {
    messages.push_back({"user", turn.user_utterance});
    messages.push_back({"agent", turn.agent_response});
  }
  return messages;
}

void validate_session(const Session& session, std::size_t line_no) {
  const std::string at = where(line_no);
  if (session.session_id.empty()) {
    throw InvariantError(at + "session_id must be non-empty");
  }
  const std::string tag = at + "session '" + session.session_id + "': ";
  if (session.turns.empty()) {
    throw InvariantError(tag + "turns must be non-empty");
  }
  std::set<std::string> step_ids;
  for (std::size_t i = 0; i < session.turns.size(); ++i) {
    const Turn& turn = session.turns[i];
    if (turn.index != static_cast<int>(i) + 1) {
      throw InvariantError(tag + "turn indices must be contiguous 1..T, got " +
                           std::to_string(turn.index) + " at position " +
                           std::to_string(i + 1));
    }
    for (const Step& step : turn.steps) {
      if (step.step_id.empty()) {
        throw InvariantError(tag + "step_id must be non-empty");
      }
      if (!step_ids.insert(step.step_id).second) {
        throw InvariantError(tag + "duplicate step_id '" + step.step_id + "'");
      }
      const bool has_call = step.tool_call.has_value();
      if ((step.kind == StepKind::Action) != has_call) {
        throw InvariantError(tag + "step '" + step.step_id +
                             "': kind action and tool_call must appear together");
      }
    }
    for (const Observation& obs : turn.observations) {
      if (obs.source_turn < 1 || obs.source_turn > session.turn_count()) {
        throw InvariantError(tag + "observation '" + obs.observation_id +
                             "' references missing turn " + std::to_string(obs.source_turn));
      }
    }
  }
  std::set<std::string> policy_ids;
  for (const Policy& policy : session.policies) {
    if (policy.text.empty()) {
      throw InvariantError(tag + "policy '" + policy.policy_id + "' has empty text");
    }
    if (!policy_ids.insert(policy.policy_id).second) {
      throw InvariantError(tag + "duplicate policy_id '" + policy.policy_id + "'");
    }
  }
}

nlohmann::ordered_json session_to_json(const Session& session) {
  ordered_json v;
  v["schema_version"] = kSchemaVersion;
  v["session_id"] = session.session_id;
  v["agent_id"] = session.agent_id;
  v["benchmark_id"] = session.benchmark_id;
  v["turns"] = ordered_json::array();
  for (const auto& turn : session.turns) v["turns"].push_back(turn_to_json(turn));
  v["policies"] = ordered_json::array();
  for (const auto& policy : session.policies) {
    ordered_json pv;
    pv["policy_id"] = policy.policy_id;
    pv["text"] = policy.text;
    v["policies"].push_back(std::move(pv));
  }
  v["task_trials"] = session.task_trials;
  v["metadata"] = ordered_json::object();
  for (const auto& [key, value] : session.metadata) v["metadata"][key] = value;
  return v;
}

Session session_from_json(const nlohmann::ordered_json& value,
                          const std::string& expected_schema_version,
                          std::size_t line_no) {
  if (!value.is_object()) {
    throw SchemaError(where(line_no) + "session must be a JSON object");
  }
  if (auto it = value.find("schema_version"); it != value.end()) {
    const std::string found = it->is_string() ? it->get<std::string>() : it->dump();
    if (found != expected_schema_version) {
      throw SchemaError(where(line_no) + "schema_version '" + found +
                        "' does not match expected '" + expected_schema_version + "'");
    }
  }
  Session session;
  session.session_id = require_string(value, "session_id", line_no);
  session.agent_id = require_string(value, "agent_id", line_no);
  session.benchmark_id = require_string(value, "benchmark_id", line_no);
  for (const auto& turn : require_array(value, "turns", line_no)) {
    session.turns.push_back(turn_from_json(turn, line_no));
  }
  for (const auto& policy : require_array(value, "policies", line_no)) {
    session.policies.push_back(policy_from_json(policy, line_no));
  }
  for (const auto& trial : require_array(value, "task_trials", line_no)) {
    if (!trial.is_boolean()) {
      throw SchemaError(where(line_no) + "task_trials entries must be booleans");
    }
    session.task_trials.push_back(trial.get<bool>());
  }
  if (auto it = value.find("metadata"); it != value.end()) {
    if (!it->is_object()) {
      throw SchemaError(where(line_no) + "field 'metadata' must be an object");
    }
    for (const auto& [key, mv] : it->items()) {
      session.metadata[key] = mv.is_string() ? mv.get<std::string>() : mv.dump();
    }
  }
  // Unknown top-level fields are preserved, never rejected.
  for (const auto& [key, extra] : value.items()) {
    if (!is_known_key(key)) {
      session.metadata[key] = extra.is_string() ? extra.get<std::string>() : extra.dump();
    }
  }
  validate_session(session, line_no);
  return session;
}

std::string serialize_session(const Session& session) {
  return session_to_json(session).dump();
}

std::string serialize_corpus(std::span<const Session> sessions) {
  std::string out;
  for (const auto& session : sessions) {
    out += serialize_session(session);
    out += '\n';
  }
  return out;
}

std::vector<Session> parse_corpus(std::istream& in, const std::string& schema_version,
                                  const std::string& source_name) {
  std::vector<Session> sessions;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json value;
    try {
      value = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": invalid JSON in " +
                        source_name + ": " + e.what());
    }
    Session session = session_from_json(value, schema_version, line_no);
    if (!seen_ids.insert(session.session_id).second) {
      throw InvariantError("line " + std::to_string(line_no) + ": duplicate session_id '" +
                           session.session_id + "' in " + source_name);
    }
    sessions.push_back(std::move(session));
  }
  return sessions;
}

std::vector<Session> parse_corpus(const std::filesystem::path& path,
                                  const std::string& schema_version) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open corpus file '" + path.string() + "'");
  }
  return parse_corpus(in, schema_version, path.string());
}

}  // namespace aura::transcript
