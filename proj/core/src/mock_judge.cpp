#include "aura/mock_judge.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace aura::judge {

namespace {

using nlohmann::ordered_json;

std::string messages_text(std::span<const transcript::Message> messages) {
  std::string out;
  for (const auto& m : messages) {
    out += m.role;
    out += ": ";
    out += m.content;
    out += '\n';
  }
  return out;
}

std::string last_user(std::span<const transcript::Message> messages) {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == "user") return it->content;
  }
  return "";
}

std::set<std::string> tokenize(const std::string& text) {
  std::set<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!current.empty()) {
      tokens.insert(current);
      current.clear();
    }
  }
  if (!current.empty()) tokens.insert(current);
  return tokens;
}

bool shares_token(const std::string& a, const std::string& b) {
  const auto ta = tokenize(a);
  const auto tb = tokenize(b);
  return std::any_of(ta.begin(), ta.end(), [&](const std::string& t) { return tb.count(t) > 0; });
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

MockRuleSet ruleset_from_json(const ordered_json& value) {
  MockRuleSet set;
  if (auto it = value.find("mode"); it != value.end()) set.mode = it->get<std::string>();
  if (auto it = value.find("default"); it != value.end()) {
    set.default_score = it->is_boolean() ? it->get<bool>() : it->get<int>() != 0;
  }
  if (auto it = value.find("rules"); it != value.end()) {
    for (const auto& rv : *it) {
      MockRule rule;
      if (auto f = rv.find("contains"); f != rv.end()) rule.contains = f->get<std::string>();
      if (auto f = rv.find("where"); f != rv.end()) rule.where = f->get<std::string>();
      if (auto f = rv.find("context_contains"); f != rv.end()) {
        rule.context_contains = f->get<std::string>();
      }
      if (auto f = rv.find("score"); f != rv.end()) {
        rule.score = f->is_boolean() ? f->get<bool>() : f->get<int>() != 0;
      }
      if (auto f = rv.find("category"); f != rv.end()) rule.category = f->get<std::string>();
      if (auto f = rv.find("evidence_turn"); f != rv.end()) rule.evidence_turn = f->get<int>();
      set.rules.push_back(std::move(rule));
    }
  }
  return set;
}

}  // namespace

MockJudge::MockJudge(std::map<std::string, MockRuleSet> rulesets)
    : rulesets_(std::move(rulesets)) {}

MockJudge MockJudge::from_json(const ordered_json& value) {
  if (!value.is_object()) {
    throw SchemaError("mock judge rules must be a JSON object");
  }
  std::map<std::string, MockRuleSet> rulesets;
  for (const auto& [key, rs] : value.items()) {
    rulesets[key] = ruleset_from_json(rs);
  }
  return MockJudge(std::move(rulesets));
}

MockJudge MockJudge::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open mock judge rules '" + path.string() + "'");
  }
  ordered_json value;
  try {
    in >> value;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("invalid JSON in mock judge rules '" + path.string() + "': " + e.what());
  }
  return from_json(value);
}

const MockRuleSet& MockJudge::ruleset(const std::string& name) const {
  static const MockRuleSet empty;
  auto it = rulesets_.find(name);
  return it == rulesets_.end() ? empty : it->second;
}

JudgeVerdict MockJudge::score_payload(const MockRuleSet& rules, const std::string& item_id,
                                      const std::string& payload, const std::string& context_text,
                                      const std::string& last_user_utterance) const {
  if (rules.mode == "token_overlap") {
    const bool hit = shares_token(payload, last_user_utterance);
    return {item_id, hit ? "shares a token with the last user utterance" : "no token overlap",
            hit};
  }
  for (const auto& rule : rules.rules) {
    const std::string& scope_text = rule.where == "payload" ? payload : context_text;
    if (!rule.contains.empty() && !contains(scope_text, rule.contains)) continue;
    if (!rule.context_contains.empty() && !contains(context_text, rule.context_contains)) continue;
    return {item_id, "matched rule '" + rule.contains + "'", rule.score};
  }
  return {item_id, "no rule matched", rules.default_score};
}

std::vector<JudgeVerdict> MockJudge::is_consistent(std::span<const transcript::Step> steps,
                                                   const transcript::ContextView& context) {
  const MockRuleSet& rules = ruleset("consistency");
  const std::string context_text = messages_text(context.messages);
  const std::string last = last_user(context.messages);
  std::vector<JudgeVerdict> verdicts;
  verdicts.reserve(steps.size());
  for (const auto& step : steps) {
    std::string payload = step.content;
    if (step.tool_call) {
      payload += '\n';
      payload += step.tool_call->tool_name;
      payload += ' ';
      payload += step.tool_call->arguments;
    }
    verdicts.push_back(score_payload(rules, step.step_id, payload, context_text, last));
  }
  return verdicts;
}

std::vector<JudgeVerdict> MockJudge::is_aligned(std::span<const JudgeItem> items,
                                                const transcript::ContextView& context) {
  const MockRuleSet& rules = ruleset("alignment");
  const std::string context_text = messages_text(context.messages);
  const std::string last = last_user(context.messages);
  std::vector<JudgeVerdict> verdicts;
  verdicts.reserve(items.size());
  for (const auto& item : items) {
    verdicts.push_back(score_payload(rules, item.item_id, item.content, context_text, last));
  }
  return verdicts;
}

std::vector<JudgeVerdict> MockJudge::is_adherent(std::span<const transcript::Policy> policies,
                                                 std::span<const transcript::Message> full_context) {
  const MockRuleSet& rules = ruleset("adherence");
  const std::string context_text = messages_text(full_context);
  const std::string last = last_user(full_context);
  std::vector<JudgeVerdict> verdicts;
  verdicts.reserve(policies.size());
  for (const auto& policy : policies) {
    verdicts.push_back(score_payload(rules, policy.policy_id, policy.text, context_text, last));
  }
  return verdicts;
}

std::vector<AuditVerdict> MockJudge::audit(const std::string& instruction,
                                           std::span<const transcript::Message> dialogue) {
  const MockRuleSet& rules = ruleset("audit");
  std::vector<std::string> user_turns;
  for (const auto& m : dialogue) {
    if (m.role == "user") user_turns.push_back(m.content);
  }
  const std::string all_text = messages_text(dialogue);
  std::string user_text;
  for (const auto& u : user_turns) {
    user_text += u;
    user_text += '\n';
  }

  std::vector<AuditVerdict> verdicts;
  for (const auto& category : kAuditCategories) {
    AuditVerdict verdict;
    verdict.category_id = std::string(category);
    verdict.justification = "no rule matched";
    for (const auto& rule : rules.rules) {
      if (rule.category != verdict.category_id) continue;
      const std::string& scope_text = rule.where == "instruction" ? instruction
                                      : rule.where == "user"      ? user_text
                                                                  : all_text;
      if (rule.contains.empty() || !contains(scope_text, rule.contains)) continue;
      verdict.score = true;
      verdict.justification = "matched rule '" + rule.contains + "'";
      verdict.evidence_turn = rule.evidence_turn;
      if (verdict.evidence_turn == 0) {
        for (std::size_t i = 0; i < user_turns.size(); ++i) {
          if (contains(user_turns[i], rule.contains)) {
            verdict.evidence_turn = static_cast<int>(i) + 1;
            break;
          }
        }
        // Needle outside any user turn: cite the first turn as evidence.
        if (verdict.evidence_turn == 0) verdict.evidence_turn = 1;
      }
      break;
    }
    verdicts.push_back(std::move(verdict));
  }
  return verdicts;
}

}  // namespace aura::judge
