#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aura/judge.hpp"
#include "aura/transcript.hpp"

namespace aura::audit {

// The four user-simulator deviation categories.
enum class DeviationCategory {
  Proactivity,
  InstructionContradiction,
  MissingDetails,
  Misinterpretation,
};

std::string to_string(DeviationCategory category);
DeviationCategory category_from_string(const std::string& text);

struct AuditFinding {
  std::string session_id;
  DeviationCategory category = DeviationCategory::Proactivity;
  int evidence_turn = 0;  // 1-based turn index into the session
  std::string rationale;
  std::string confidence = "judge";  // "judge" findings are advisory; "human" are labels

  bool operator==(const AuditFinding&) const = default;
};

struct AuditReport {
  int total_sessions = 0;
  std::vector<AuditFinding> findings;

  int flagged_sessions() const;  // distinct session ids carrying >= 1 finding
  double deviation_rate() const;
};

// Audits one session against the simulator's scenario instruction.
std::vector<AuditFinding> audit_session(const std::string& instruction,
                                        const transcript::Session& session,
                                        judge::Judge& judge);

// Pulls each instruction from metadata["user_instruction"]. Throws
// EmptyCorpusError on an empty span, InvariantError on a missing instruction.
AuditReport audit_corpus(std::span<const transcript::Session> sessions, judge::Judge& judge);

// Union of judge findings and imported human labels; exact duplicates collapse
// to the human-confidence copy and the rate is recomputed.
AuditReport merge_human_labels(const AuditReport& report,
                               std::span<const AuditFinding> human);

// Findings import/export. Imported findings default to confidence "human".
std::vector<AuditFinding> findings_from_json(const nlohmann::ordered_json& value);
std::vector<AuditFinding> load_findings(const std::filesystem::path& path);
nlohmann::ordered_json report_to_json(const AuditReport& report);

// Checks that every finding points at a known session and an existing turn.
void validate_findings(std::span<const AuditFinding> findings,
                       std::span<const transcript::Session> sessions);

}  // namespace aura::audit
