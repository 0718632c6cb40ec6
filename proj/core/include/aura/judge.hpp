#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aura/errors.hpp"
#include "aura/transcript.hpp"

namespace aura::judge {

enum class TaskKind { Consistency, ObservationAlignment, PolicyAdherence, SimulatorAudit };

std::string to_string(TaskKind kind);

// One unit the judge scores: a step, an observation, a turn response, or a policy.
struct JudgeItem {
  std::string item_id;
  std::string content;
  std::string type;  // consistency payloads only: "thought" | "action"
};

struct JudgeVerdict {
  std::string item_id;
  std::string justification;
  bool score = false;

  bool operator==(const JudgeVerdict&) const = default;
};

// Verdict for one simulator-deviation category.
struct AuditVerdict {
  std::string category_id;
  std::string justification;
  int evidence_turn = 0;  // 1-based turn, 0 when score is false
  bool score = false;

  bool operator==(const AuditVerdict&) const = default;
};

inline constexpr std::array<std::string_view, 4> kAuditCategories = {
    "proactivity", "instruction_contradiction", "missing_details", "misinterpretation"};

// Boolean-judgment backend. All three metric judgments group every item of a
// call into one request; implementations must return exactly one verdict per
// item or throw (no partial results).
class Judge {
 public:
  virtual ~Judge() = default;

  // All steps of one turn against C_t \ {a_t}. One verdict per step, in order.
  virtual std::vector<JudgeVerdict> is_consistent(std::span<const transcript::Step> steps,
                                                  const transcript::ContextView& context) = 0;

  // Items are either the turn's annotated observations or the turn response.
  virtual std::vector<JudgeVerdict> is_aligned(std::span<const JudgeItem> items,
                                               const transcript::ContextView& context) = 0;

  // Whole-session judgment, one verdict per policy.
  virtual std::vector<JudgeVerdict> is_adherent(std::span<const transcript::Policy> policies,
                                                std::span<const transcript::Message> full_context) = 0;

  // User-simulator audit: one verdict per deviation category.
  virtual std::vector<AuditVerdict> audit(const std::string& instruction,
                                          std::span<const transcript::Message> dialogue) = 0;
};

// Loads the prompt templates shipped under prompts/.
class PromptLibrary {
 public:
  PromptLibrary() = default;
  static PromptLibrary from_directory(const std::filesystem::path& dir);

  const std::string& text(TaskKind kind) const;
  // Replaces every "{slot}" occurrence; unknown slots in the template are left as is.
  std::string render(TaskKind kind, const std::map<std::string, std::string>& slots) const;

 private:
  std::map<TaskKind, std::string> templates_;
};

// JSON payloads for the prompt slots.
std::string dial_history_json(std::span<const transcript::Message> messages);
std::string states_json(std::span<const transcript::Step> steps);
std::string responses_json(std::span<const JudgeItem> items);
std::string policies_json(std::span<const transcript::Policy> policies);

// A fully assembled judge call, exposed for prompt-discipline tests.
struct JudgeRequest {
  TaskKind kind = TaskKind::Consistency;
  std::vector<transcript::Message> context;
  std::vector<JudgeItem> items;
  std::string prompt_text;
};

JudgeRequest build_request(const PromptLibrary& prompts, TaskKind kind,
                           std::span<const transcript::Message> context,
                           std::span<const JudgeItem> items);
JudgeRequest build_audit_request(const PromptLibrary& prompts, const std::string& instruction,
                                 std::span<const transcript::Message> dialogue);

// The id key each task kind uses in its output schema ("state_id", ...).
std::string id_key_for(TaskKind kind);

// Extracts the verdict array from a completion. Tolerates fenced code blocks
// and surrounding prose; rejects missing/duplicate/unknown ids and any score
// other than the strings "0" and "1". Verdicts return in expected_ids order.
std::vector<JudgeVerdict> parse_judge_output(const std::string& raw, const std::string& id_key,
                                             std::span<const std::string> expected_ids);

// Audit flavor: fixed category ids, evidence_turn must name an existing turn
// (1..max_turn) whenever the category is flagged.
std::vector<AuditVerdict> parse_audit_output(const std::string& raw, int max_turn);

std::string serialize_verdicts(std::span<const JudgeVerdict> verdicts, const std::string& id_key);

}  // namespace aura::judge
