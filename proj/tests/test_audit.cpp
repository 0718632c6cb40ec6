#include <doctest.h>

#include <string>
#include <vector>

#include "aura/errors.hpp"
#include "aura/simulator_audit.hpp"
#include "helpers.hpp"

using namespace aura;
using namespace aura::test;
using audit::AuditFinding;
using audit::AuditReport;
using audit::DeviationCategory;

namespace {

AuditFinding finding(const std::string& session, DeviationCategory category, int turn,
                     const std::string& confidence = "judge") {
  AuditFinding f;
  f.session_id = session;
  f.category = category;
  f.evidence_turn = turn;
  f.confidence = confidence;
  return f;
}

}  // namespace

TEST_CASE("audit_corpus flags 2 of 5 simulator sessions") {
  auto mock = rules_judge("audit_rules.json");
  const auto sessions = load_fixture_corpus("sim_audit.jsonl");
  REQUIRE(sessions.size() == 5);

  const auto report = audit::audit_corpus(sessions, mock);
  CHECK(report.total_sessions == 5);
  CHECK(report.flagged_sessions() == 2);
  CHECK(report.deviation_rate() == 0.4);

  REQUIRE(report.findings.size() == 2);
  CHECK(report.findings[0].session_id == "sa-2");
  CHECK(report.findings[0].category == DeviationCategory::InstructionContradiction);
  CHECK(report.findings[0].evidence_turn == 2);
  CHECK(report.findings[0].confidence == "judge");
  CHECK(report.findings[1].session_id == "sa-4");
  CHECK(report.findings[1].category == DeviationCategory::MissingDetails);
  CHECK(report.findings[1].evidence_turn == 3);

  audit::validate_findings(report.findings, sessions);
}

TEST_CASE("audit_session leaves benign sessions unflagged") {
  auto mock = rules_judge("audit_rules.json");
  const auto sessions = load_fixture_corpus("sim_audit.jsonl");
  const auto& benign = sessions[2];  // sa-3
  const auto findings =
      audit::audit_session(benign.metadata.at("user_instruction"), benign, mock);
  CHECK(findings.empty());
}

TEST_CASE("deviation_rate is flagged over total") {
  AuditReport none;
  none.total_sessions = 10;
  CHECK(none.deviation_rate() == 0.0);

  AuditReport three;
  three.total_sessions = 4;
  three.findings = {finding("a", DeviationCategory::Proactivity, 1),
                    finding("b", DeviationCategory::MissingDetails, 1),
                    finding("c", DeviationCategory::Misinterpretation, 2)};
  CHECK(three.deviation_rate() == 0.75);

  AuditReport repeat;
  repeat.total_sessions = 4;
  repeat.findings = {finding("a", DeviationCategory::Proactivity, 1),
                     finding("a", DeviationCategory::MissingDetails, 2)};
  CHECK(repeat.flagged_sessions() == 1);
  CHECK(repeat.deviation_rate() == 0.25);

  AuditReport empty;
  CHECK_THROWS_AS(empty.deviation_rate(), InvariantError);
}

TEST_CASE("audit_corpus input validation") {
  auto mock = rules_judge("audit_rules.json");
  CHECK_THROWS_AS(audit::audit_corpus({}, mock), EmptyCorpusError);

  const std::vector<transcript::Session> missing = {make_session("m1", "a", "b", {1})};
  CHECK_THROWS_WITH_AS(audit::audit_corpus(missing, mock),
                       doctest::Contains("user_instruction"), InvariantError);
}

TEST_CASE("merge_human_labels shadows duplicates and recomputes the rate") {
  auto mock = rules_judge("audit_rules.json");
  const auto sessions = load_fixture_corpus("sim_audit.jsonl");
  const auto report = audit::audit_corpus(sessions, mock);

  std::vector<AuditFinding> human = {
      finding("sa-2", DeviationCategory::InstructionContradiction, 2, "human"),
      finding("sa-1", DeviationCategory::Proactivity, 2, "human"),
  };
  human[0].rationale = "confirmed by annotator";

  const auto merged = audit::merge_human_labels(report, human);
  CHECK(merged.total_sessions == 5);
  CHECK(merged.flagged_sessions() == 3);
  CHECK(merged.deviation_rate() == 0.6);

  REQUIRE(merged.findings.size() == 3);
  CHECK(merged.findings[0].session_id == "sa-1");
  CHECK(merged.findings[0].confidence == "human");
  CHECK(merged.findings[1].session_id == "sa-2");
  CHECK(merged.findings[1].confidence == "human");
  CHECK(merged.findings[1].rationale == "confirmed by annotator");
  CHECK(merged.findings[2].session_id == "sa-4");
  CHECK(merged.findings[2].confidence == "judge");
}

TEST_CASE("merge fills an empty confidence with human") {
  AuditReport report;
  report.total_sessions = 1;
  auto label = finding("s", DeviationCategory::Proactivity, 1, "");
  const auto merged = audit::merge_human_labels(report, std::vector<AuditFinding>{label});
  REQUIRE(merged.findings.size() == 1);
  CHECK(merged.findings[0].confidence == "human");
}

TEST_CASE("findings_from_json accepts both document shapes") {
  const auto bare = audit::findings_from_json(nlohmann::ordered_json::parse(R"([
    {"session_id": "s1", "category": "proactivity", "evidence_turn": 2,
     "rationale": "volunteered the id", "confidence": "human"},
    {"session_id": "s2", "category": "missing_details"}
  ])"));
  REQUIRE(bare.size() == 2);
  CHECK(bare[0].session_id == "s1");
  CHECK(bare[0].category == DeviationCategory::Proactivity);
  CHECK(bare[0].evidence_turn == 2);
  CHECK(bare[1].evidence_turn == 0);
  CHECK(bare[1].rationale.empty());
  CHECK(bare[1].confidence == "human");

  const auto wrapped = audit::findings_from_json(nlohmann::ordered_json::parse(
      R"({"findings": [{"session_id": "s3", "category": "misinterpretation"}]})"));
  REQUIRE(wrapped.size() == 1);
  CHECK(wrapped[0].category == DeviationCategory::Misinterpretation);
}

TEST_CASE("findings_from_json rejects malformed documents") {
  using nlohmann::ordered_json;
  CHECK_THROWS_AS(audit::findings_from_json(ordered_json::parse(R"("text")")), SchemaError);
  CHECK_THROWS_AS(audit::findings_from_json(ordered_json::parse(R"({"labels": []})")),
                  SchemaError);
  CHECK_THROWS_AS(
      audit::findings_from_json(ordered_json::parse(R"([{"category": "proactivity"}])")),
      SchemaError);
  CHECK_THROWS_AS(
      audit::findings_from_json(ordered_json::parse(R"([{"session_id": "s"}])")), SchemaError);
  CHECK_THROWS_AS(audit::findings_from_json(ordered_json::parse(
                      R"([{"session_id": "s", "category": "rudeness"}])")),
                  SchemaError);
  CHECK_THROWS_AS(audit::findings_from_json(ordered_json::parse(
                      R"([{"session_id": "s", "category": "proactivity",
                           "confidence": "maybe"}])")),
                  SchemaError);
  CHECK_THROWS_AS(audit::load_findings(fixtures_dir() / "missing_labels.json"), IoError);
}

TEST_CASE("report_to_json carries the audit summary") {
  auto mock = rules_judge("audit_rules.json");
  const auto sessions = load_fixture_corpus("sim_audit.jsonl");
  const auto doc = audit::report_to_json(audit::audit_corpus(sessions, mock));

  CHECK(doc["schema_version"] == "1");
  const auto& body = doc["simulator_audit"];
  CHECK(body["total_sessions"] == 5);
  CHECK(body["flagged_sessions"] == 2);
  CHECK(body["deviation_rate"] == 0.4);
  REQUIRE(body["findings"].is_array());
  REQUIRE(body["findings"].size() == 2);
  CHECK(body["findings"][0]["session_id"] == "sa-2");
  CHECK(body["findings"][0]["category"] == "instruction_contradiction");
  CHECK(body["findings"][0]["evidence_turn"] == 2);
  CHECK(body["findings"][0]["confidence"] == "judge");
}

TEST_CASE("validate_findings rejects unknown sessions and out-of-range turns") {
  const auto sessions = load_fixture_corpus("sim_audit.jsonl");

  const std::vector<AuditFinding> unknown = {
      finding("sa-99", DeviationCategory::Proactivity, 1)};
  CHECK_THROWS_AS(audit::validate_findings(unknown, sessions), InvariantError);

  const std::vector<AuditFinding> zero = {finding("sa-1", DeviationCategory::Proactivity, 0)};
  CHECK_THROWS_AS(audit::validate_findings(zero, sessions), InvariantError);

  const std::vector<AuditFinding> beyond = {finding("sa-1", DeviationCategory::Proactivity, 4)};
  CHECK_THROWS_AS(audit::validate_findings(beyond, sessions), InvariantError);

  const std::vector<AuditFinding> fine = {finding("sa-1", DeviationCategory::Proactivity, 3)};
  audit::validate_findings(fine, sessions);
}

TEST_CASE("category names round-trip") {
  for (const auto category :
       {DeviationCategory::Proactivity, DeviationCategory::InstructionContradiction,
        DeviationCategory::MissingDetails, DeviationCategory::Misinterpretation}) {
    CHECK(audit::category_from_string(audit::to_string(category)) == category);
  }
  CHECK(audit::to_string(DeviationCategory::MissingDetails) == "missing_details");
  CHECK_THROWS_AS(audit::category_from_string("unknown"), SchemaError);
}
