#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aura/judge.hpp"

namespace aura::judge {

// One keyword rule. A rule matches when `contains` appears in the scoped text
// and, if set, `context_contains` appears in the dialogue context. For audit
// rules, `category` names the deviation flagged on match.
struct MockRule {
  std::string contains;
  std::string where = "payload";  // "payload" | "context" | "user" | "instruction"
  std::string context_contains;
  bool score = false;
  std::string category;      // audit rules only
  int evidence_turn = 0;     // audit rules: 0 = first matching turn
};

struct MockRuleSet {
  std::string mode = "keywords";  // "keywords" | "token_overlap"
  bool default_score = true;
  std::vector<MockRule> rules;
};

// Deterministic judge configured from per-task keyword rulesets. Exists so the
// entire acceptance suite runs offline; identical inputs give identical
// verdicts, bit for bit.
class MockJudge final : public Judge {
 public:
  MockJudge() = default;  // no rules: every verdict true, no audit findings
  explicit MockJudge(std::map<std::string, MockRuleSet> rulesets);
  static MockJudge from_json(const nlohmann::ordered_json& value);
  static MockJudge from_file(const std::filesystem::path& path);

  std::vector<JudgeVerdict> is_consistent(std::span<const transcript::Step> steps,
                                          const transcript::ContextView& context) override;
  std::vector<JudgeVerdict> is_aligned(std::span<const JudgeItem> items,
                                       const transcript::ContextView& context) override;
  std::vector<JudgeVerdict> is_adherent(std::span<const transcript::Policy> policies,
                                        std::span<const transcript::Message> full_context) override;
  std::vector<AuditVerdict> audit(const std::string& instruction,
                                  std::span<const transcript::Message> dialogue) override;

 private:
  const MockRuleSet& ruleset(const std::string& name) const;
  JudgeVerdict score_payload(const MockRuleSet& rules, const std::string& item_id,
                             const std::string& payload, const std::string& context_text,
                             const std::string& last_user_utterance) const;

  std::map<std::string, MockRuleSet> rulesets_;
};

}  // namespace aura::judge
