#include "aura/simulator_audit.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "aura/errors.hpp"

namespace aura::audit {

namespace {

using nlohmann::ordered_json;

}  // namespace

std::string to_string(DeviationCategory category) {
  switch (category) {
    case DeviationCategory::Proactivity: return "proactivity";
    case DeviationCategory::InstructionContradiction: return "instruction_contradiction";
    case DeviationCategory::MissingDetails: return "missing_details";
    case DeviationCategory::Misinterpretation: return "misinterpretation";
  }
  throw InvariantError("unreachable deviation category");
}

DeviationCategory category_from_string(const std::string& text) {
  if (text == "proactivity") return DeviationCategory::Proactivity;
  if (text == "instruction_contradiction") return DeviationCategory::InstructionContradiction;
  if (text == "missing_details") return DeviationCategory::MissingDetails;
  if (text == "misinterpretation") return DeviationCategory::Misinterpretation;
  throw SchemaError("unknown deviation category '" + text + "'");
}

int AuditReport::flagged_sessions() const {
  std::set<std::string> ids;
  for (const auto& finding : findings) ids.insert(finding.session_id);
  return static_cast<int>(ids.size());
}

double AuditReport::deviation_rate() const {
  if (total_sessions == 0) {
    throw InvariantError("deviation_rate is undefined for an empty audit");
  }
  return static_cast<double>(flagged_sessions()) / static_cast<double>(total_sessions);
}

std::vector<AuditFinding> audit_session(const std::string& instruction,
                                        const transcript::Session& session,
                                        judge::Judge& judge) {
  const auto dialogue = transcript::full_context(session);
  const auto verdicts = judge.audit(instruction, dialogue);
  std::vector<AuditFinding> findings;
  for (const auto& verdict : verdicts) {
    if (!verdict.score) continue;
    AuditFinding finding;
    finding.session_id = session.session_id;
    finding.category = category_from_string(verdict.category_id);
    finding.evidence_turn = verdict.evidence_turn;
    finding.rationale = verdict.justification;
    finding.confidence = "judge";
    findings.push_back(std::move(finding));
  }
  return findings;
}

AuditReport audit_corpus(std::span<const transcript::Session> sessions, judge::Judge& judge) {
  if (sessions.empty()) {
    throw EmptyCorpusError("audit_corpus called with no sessions");
  }
  AuditReport report;
  report.total_sessions = static_cast<int>(sessions.size());
  for (const auto& session : sessions) {
    auto it = session.metadata.find("user_instruction");
    if (it == session.metadata.end()) {
      throw InvariantError("session '" + session.session_id +
                           "' has no metadata field 'user_instruction'");
    }
    auto findings = audit_session(it->second, session, judge);
    report.findings.insert(report.findings.end(),
                           std::make_move_iterator(findings.begin()),
                           std::make_move_iterator(findings.end()));
  }
  return report;
}

AuditReport merge_human_labels(const AuditReport& report,
                               std::span<const AuditFinding> human) {
  AuditReport merged;
  merged.total_sessions = report.total_sessions;
  // Human copies win over judge copies of the same (session, category, turn).
  auto key = [](const AuditFinding& f) {
    return std::tuple(f.session_id, f.category, f.evidence_turn);
  };
  for (const auto& finding : human) {
    AuditFinding copy = finding;
    if (copy.confidence.empty()) copy.confidence = "human";
    merged.findings.push_back(std::move(copy));
  }
  for (const auto& finding : report.findings) {
    const bool shadowed = std::any_of(human.begin(), human.end(), [&](const AuditFinding& h) {
      return key(h) == key(finding);
    });
    if (!shadowed) merged.findings.push_back(finding);
  }
  std::stable_sort(merged.findings.begin(), merged.findings.end(),
                   [&](const AuditFinding& a, const AuditFinding& b) {
                     return key(a) < key(b);
                   });
  return merged;
}

std::vector<AuditFinding> findings_from_json(const ordered_json& value) {
  const ordered_json* array = &value;
  if (value.is_object()) {
    auto it = value.find("findings");
    if (it == value.end() || !it->is_array()) {
      throw SchemaError("findings document needs a 'findings' array");
    }
    array = &*it;
  } else if (!value.is_array()) {
    throw SchemaError("findings document must be an array or an object");
  }
  std::vector<AuditFinding> findings;
  for (const auto& item : *array) {
    if (!item.is_object()) {
      throw SchemaError("each finding must be a JSON object");
    }
    AuditFinding finding;
    finding.session_id = item.value("session_id", "");
    if (finding.session_id.empty()) {
      throw SchemaError("finding is missing 'session_id'");
    }
    if (!item.contains("category")) {
      throw SchemaError("finding for '" + finding.session_id + "' is missing 'category'");
    }
    finding.category = category_from_string(item.at("category").get<std::string>());
    finding.evidence_turn = item.value("evidence_turn", 0);
    finding.rationale = item.value("rationale", "");
    finding.confidence = item.value("confidence", "human");
    if (finding.confidence != "judge" && finding.confidence != "human") {
      throw SchemaError("finding confidence must be 'judge' or 'human', got '" +
                        finding.confidence + "'");
    }
    findings.push_back(std::move(finding));
  }
  return findings;
}

std::vector<AuditFinding> load_findings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open findings file '" + path.string() + "'");
  }
  ordered_json value;
  try {
    in >> value;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("invalid JSON in findings file '" + path.string() + "': " + e.what());
  }
  return findings_from_json(value);
}

ordered_json report_to_json(const AuditReport& report) {
  ordered_json findings = ordered_json::array();
  for (const auto& finding : report.findings) {
    findings.push_back({{"session_id", finding.session_id},
                        {"category", to_string(finding.category)},
                        {"evidence_turn", finding.evidence_turn},
                        {"rationale", finding.rationale},
                        {"confidence", finding.confidence}});
  }
  return ordered_json{{"schema_version", transcript::kSchemaVersion},
                      {"simulator_audit",
                       ordered_json{{"total_sessions", report.total_sessions},
                                    {"flagged_sessions", report.flagged_sessions()},
                                    {"deviation_rate", report.deviation_rate()},
                                    {"findings", std::move(findings)}}}};
}

void validate_findings(std::span<const AuditFinding> findings,
                       std::span<const transcript::Session> sessions) {
  for (const auto& finding : findings) {
    const auto it = std::find_if(sessions.begin(), sessions.end(),
                                 [&](const transcript::Session& s) {
                                   return s.session_id == finding.session_id;
                                 });
    if (it == sessions.end()) {
      throw InvariantError("finding references unknown session '" + finding.session_id + "'");
    }
    if (finding.evidence_turn < 1 || finding.evidence_turn > it->turn_count()) {
      throw InvariantError("finding for '" + finding.session_id + "' cites turn " +
                           std::to_string(finding.evidence_turn) + " outside 1.." +
                           std::to_string(it->turn_count()));
    }
  }
}

}  // namespace aura::audit
