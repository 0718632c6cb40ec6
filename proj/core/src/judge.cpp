#include "aura/judge.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace aura::judge {

namespace {

using nlohmann::ordered_json;

std::string template_filename(TaskKind kind) {
  switch (kind) {
    case TaskKind::Consistency: return "state_consistency.txt";
    case TaskKind::ObservationAlignment: return "observation_alignment.txt";
    case TaskKind::PolicyAdherence: return "policy_alignment.txt";
    case TaskKind::SimulatorAudit: return "simulator_audit.txt";
  }
  return "";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open prompt template '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void replace_all(std::string& text, const std::string& needle, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
}

// Balanced-bracket extraction starting at `start` (which must be '['),
// respecting JSON string literals and escapes.
std::size_t matching_bracket(const std::string& text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      if (--depth == 0) return i;
    }
  }
  return std::string::npos;
}

// Finds the first parseable JSON array in the completion text. Handles bare
// arrays, fenced code blocks, and prose around the array in one scan. Prose
// may itself contain bracketed spans like "[1]", so non-object arrays only
// count as a fallback when no array of objects appears anywhere.
ordered_json extract_array(const std::string& raw) {
  ordered_json fallback;
  bool have_fallback = false;
  std::size_t pos = 0;
  while ((pos = raw.find('[', pos)) != std::string::npos) {
    const std::size_t end = matching_bracket(raw, pos);
    if (end == std::string::npos) break;
    const std::string candidate = raw.substr(pos, end - pos + 1);
    ordered_json parsed = ordered_json::parse(candidate, nullptr, false);
    if (parsed.is_array()) {
      const bool objects = std::all_of(parsed.begin(), parsed.end(),
                                       [](const ordered_json& e) { return e.is_object(); });
      if (objects && !parsed.empty()) return parsed;
      if (!have_fallback) {
        fallback = std::move(parsed);
        have_fallback = true;
      }
    }
    ++pos;
  }
  if (have_fallback) return fallback;
  throw JudgeProtocolError("no JSON array found in judge output");
}

bool parse_score(const ordered_json& entry, const std::string& id_text) {
  auto it = entry.find("score");
  if (it == entry.end()) {
    throw JudgeProtocolError("verdict '" + id_text + "' is missing 'score'");
  }
  if (!it->is_string()) {
    throw JudgeProtocolError("verdict '" + id_text + "' score must be the string \"0\" or \"1\"");
  }
  const std::string text = it->get<std::string>();
  if (text == "0") return false;
  if (text == "1") return true;
  throw JudgeProtocolError("verdict '" + id_text + "' has score '" + text +
                           "', expected \"0\" or \"1\"");
}

std::string parse_id(const ordered_json& entry, const std::string& id_key) {
  auto it = entry.find(id_key);
  if (it == entry.end()) {
    throw JudgeProtocolError("verdict entry is missing '" + id_key + "'");
  }
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw JudgeProtocolError("verdict '" + id_key + "' must be a string");
}

std::string parse_justification(const ordered_json& entry) {
  auto it = entry.find("justification");
  if (it == entry.end() || !it->is_string()) return "";
  return it->get<std::string>();
}

}  // namespace

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Consistency: return "consistency";
    case TaskKind::ObservationAlignment: return "alignment";
    case TaskKind::PolicyAdherence: return "adherence";
    case TaskKind::SimulatorAudit: return "audit";
  }
  return "";
}

std::string id_key_for(TaskKind kind) {
  switch (kind) {
    case TaskKind::Consistency: return "state_id";
    case TaskKind::ObservationAlignment: return "response_id";
    case TaskKind::PolicyAdherence: return "policy_id";
    case TaskKind::SimulatorAudit: return "category_id";
  }
  return "";
}

PromptLibrary PromptLibrary::from_directory(const std::filesystem::path& dir) {
  PromptLibrary lib;
  for (TaskKind kind : {TaskKind::Consistency, TaskKind::ObservationAlignment,
                        TaskKind::PolicyAdherence, TaskKind::SimulatorAudit}) {
    lib.templates_[kind] = read_file(dir / template_filename(kind));
  }
  return lib;
}

const std::string& PromptLibrary::text(TaskKind kind) const {
  auto it = templates_.find(kind);
  if (it == templates_.end()) {
    throw InvariantError("prompt template for task '" + to_string(kind) + "' not loaded");
  }
  return it->second;
}

std::string PromptLibrary::render(TaskKind kind,
                                  const std::map<std::string, std::string>& slots) const {
  std::string out = text(kind);
  for (const auto& [slot, value] : slots) {
    replace_all(out, "{" + slot + "}", value);
  }
  return out;
}

std::string dial_history_json(std::span<const transcript::Message> messages) {
  ordered_json arr = ordered_json::array();
  for (const auto& m : messages) {
    ordered_json v;
    v["role"] = m.role;
    v["content"] = m.content;
    arr.push_back(std::move(v));
  }
  return arr.dump(2);
}

std::string states_json(std::span<const transcript::Step> steps) {
  ordered_json arr = ordered_json::array();
  for (const auto& step : steps) {
    ordered_json v;
    v["state_id"] = step.step_id;
    v["type"] = transcript::to_string(step.kind);
    v["content"] = step.content;
    arr.push_back(std::move(v));
  }
  return arr.dump(2);
}

std::string responses_json(std::span<const JudgeItem> items) {
  ordered_json arr = ordered_json::array();
  for (const auto& item : items) {
    ordered_json v;
    v["response_id"] = item.item_id;
    v["content"] = item.content;
    arr.push_back(std::move(v));
  }
  return arr.dump(2);
}

std::string policies_json(std::span<const transcript::Policy> policies) {
  ordered_json arr = ordered_json::array();
  for (const auto& policy : policies) {
    ordered_json v;
    v["policy_id"] = policy.policy_id;
    v["content"] = policy.text;
    arr.push_back(std::move(v));
  }
  return arr.dump(2);
}

JudgeRequest build_request(const PromptLibrary& prompts, TaskKind kind,
                           std::span<const transcript::Message> context,
                           std::span<const JudgeItem> items) {
  if (items.empty()) {
    throw InvariantError("judge request for task '" + to_string(kind) + "' has no items");
  }
  std::set<std::string> ids;
  for (const auto& item : items) {
    if (!ids.insert(item.item_id).second) {
      throw InvariantError("judge request has duplicate item id '" + item.item_id + "'");
    }
  }
  JudgeRequest request;
  request.kind = kind;
  request.context.assign(context.begin(), context.end());
  request.items.assign(items.begin(), items.end());

  std::map<std::string, std::string> slots;
  slots["dial_history"] = dial_history_json(context);
  switch (kind) {
    case TaskKind::Consistency: {
      ordered_json arr = ordered_json::array();
      for (const auto& item : items) {
        ordered_json v;
        v["state_id"] = item.item_id;
        v["type"] = item.type;
        v["content"] = item.content;
        arr.push_back(std::move(v));
      }
      slots["states"] = arr.dump(2);
      break;
    }
    case TaskKind::ObservationAlignment:
      slots["responses"] = responses_json(items);
      break;
    case TaskKind::PolicyAdherence: {
      ordered_json arr = ordered_json::array();
      for (const auto& item : items) {
        ordered_json v;
        v["policy_id"] = item.item_id;
        v["content"] = item.content;
        arr.push_back(std::move(v));
      }
      slots["policy"] = arr.dump(2);
      break;
    }
    case TaskKind::SimulatorAudit:
      throw InvariantError("use build_audit_request for simulator audits");
  }
  request.prompt_text = prompts.render(kind, slots);
  return request;
}

JudgeRequest build_audit_request(const PromptLibrary& prompts, const std::string& instruction,
                                 std::span<const transcript::Message> dialogue) {
  JudgeRequest request;
  request.kind = TaskKind::SimulatorAudit;
  request.context.assign(dialogue.begin(), dialogue.end());
  for (const auto& category : kAuditCategories) {
    request.items.push_back({std::string(category), "", ""});
  }
  request.prompt_text = prompts.render(
      TaskKind::SimulatorAudit,
      {{"instruction", instruction}, {"dial_history", dial_history_json(dialogue)}});
  return request;
}

std::vector<JudgeVerdict> parse_judge_output(const std::string& raw, const std::string& id_key,
                                             std::span<const std::string> expected_ids) {
  const ordered_json arr = extract_array(raw);
  std::map<std::string, JudgeVerdict> by_id;
  for (const auto& entry : arr) {
    if (!entry.is_object()) {
      throw JudgeProtocolError("verdict entries must be JSON objects");
    }
    JudgeVerdict verdict;
    verdict.item_id = parse_id(entry, id_key);
    verdict.score = parse_score(entry, verdict.item_id);
    verdict.justification = parse_justification(entry);
    if (!by_id.emplace(verdict.item_id, verdict).second) {
      throw JudgeProtocolError("duplicate verdict id '" + verdict.item_id + "'");
    }
  }
  std::vector<JudgeVerdict> ordered;
  ordered.reserve(expected_ids.size());
  for (const auto& id : expected_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw JudgeProtocolError("missing verdict for id '" + id + "'");
    }
    ordered.push_back(it->second);
    by_id.erase(it);
  }
  if (!by_id.empty()) {
    throw JudgeProtocolError("unexpected verdict id '" + by_id.begin()->first + "'");
  }
  return ordered;
}

std::vector<AuditVerdict> parse_audit_output(const std::string& raw, int max_turn) {
  const ordered_json arr = extract_array(raw);
  std::map<std::string, AuditVerdict> by_id;
  for (const auto& entry : arr) {
    if (!entry.is_object()) {
      throw JudgeProtocolError("verdict entries must be JSON objects");
    }
    AuditVerdict verdict;
    verdict.category_id = parse_id(entry, "category_id");
    if (std::find(kAuditCategories.begin(), kAuditCategories.end(), verdict.category_id) ==
        kAuditCategories.end()) {
      throw JudgeProtocolError("unknown audit category '" + verdict.category_id + "'");
    }
    verdict.score = parse_score(entry, verdict.category_id);
    verdict.justification = parse_justification(entry);
    if (verdict.score) {
      auto it = entry.find("evidence_turn");
      if (it == entry.end()) {
        throw JudgeProtocolError("flagged category '" + verdict.category_id +
                                 "' is missing 'evidence_turn'");
      }
      int turn = 0;
      if (it->is_number_integer()) {
        turn = it->get<int>();
      } else if (it->is_string()) {
        try {
          turn = std::stoi(it->get<std::string>());
        } catch (const std::exception&) {
          throw JudgeProtocolError("evidence_turn for '" + verdict.category_id +
                                   "' is not an integer");
        }
      } else {
        throw JudgeProtocolError("evidence_turn for '" + verdict.category_id +
                                 "' is not an integer");
      }
      if (turn < 1 || turn > max_turn) {
        throw JudgeProtocolError("evidence_turn " + std::to_string(turn) + " for '" +
                                 verdict.category_id + "' names a missing turn (session has " +
                                 std::to_string(max_turn) + ")");
      }
      verdict.evidence_turn = turn;
    }
    if (!by_id.emplace(verdict.category_id, verdict).second) {
      throw JudgeProtocolError("duplicate verdict id '" + verdict.category_id + "'");
    }
  }
  std::vector<AuditVerdict> ordered;
  for (const auto& category : kAuditCategories) {
    auto it = by_id.find(std::string(category));
    if (it == by_id.end()) {
      throw JudgeProtocolError("missing verdict for category '" + std::string(category) + "'");
    }
    ordered.push_back(it->second);
  }
  return ordered;
}

std::string serialize_verdicts(std::span<const JudgeVerdict> verdicts, const std::string& id_key) {
  ordered_json arr = ordered_json::array();
  for (const auto& verdict : verdicts) {
    ordered_json v;
    v[id_key] = verdict.item_id;
    v["justification"] = verdict.justification;
    v["score"] = verdict.score ? "1" : "0";
    arr.push_back(std::move(v));
  }
  return arr.dump(2);
}

}  // namespace aura::judge
