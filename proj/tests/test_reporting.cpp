#include <doctest.h>

#include <cmath>

#include "aura/errors.hpp"
#include "aura/metrics.hpp"
#include "aura/reporting.hpp"
#include "helpers.hpp"

using namespace aura;
using namespace aura::test;
using metrics::Score;
using metrics::ScoreCard;
using report::AgentReport;

namespace {

constexpr double kTight = 1e-12;

double exact(Score score) {
  REQUIRE(score.has_value());
  return *score;
}

std::vector<AgentReport> synthetic_reports() {
  auto mock = rules_judge("synthetic_rules.json");
  const auto sessions = load_fixture_corpus("synthetic.jsonl");
  const auto cards = metrics::score_corpus(sessions, mock);
  return report::aggregate(cards);
}

ScoreCard card_from(const AgentReport& row) {
  ScoreCard card;
  card.session_id = row.agent_id + ":pooled";
  card.agent_id = row.agent_id;
  card.benchmark_id = row.benchmark_id;
  card.s_score = row.s;
  card.a_score = row.a;
  card.o_score = row.o;
  card.p_score = row.p;
  card.r_score = row.r;
  card.avg = row.avg;
  card.turns = 1;
  return card;
}

}  // namespace

TEST_CASE("aggregate reproduces the hand-computed synthetic summary") {
  const auto reports = synthetic_reports();
  REQUIRE(reports.size() == 2);

  const AgentReport& alpha = reports[0];
  CHECK(alpha.agent_id == "alpha");
  CHECK(alpha.benchmark_id == "support");
  CHECK(alpha.rank == 1);
  CHECK(alpha.session_count == 2);
  CHECK(exact(alpha.s) == 0.75);
  CHECK(exact(alpha.a) == 0.5);
  CHECK(exact(alpha.o) == 0.75);
  CHECK(exact(alpha.p) == 1.0);
  CHECK(exact(alpha.r) == 0.75);
  CHECK(exact(alpha.avg) == 0.75);
  CHECK(alpha.undefined_counts == report::UndefinedCounts{1, 1, 0, 1, 0});
  CHECK(alpha.turns_mean == 1.5);
  CHECK(alpha.turns_std == 0.5);
  CHECK(alpha.steps_mean == doctest::Approx(4.0 / 3.0).epsilon(kTight));
  CHECK(alpha.steps_std == doctest::Approx(std::sqrt(8.0) / 3.0).epsilon(kTight));

  const AgentReport& beta = reports[1];
  CHECK(beta.agent_id == "beta");
  CHECK(beta.rank == 2);
  CHECK(exact(beta.s) == doctest::Approx(5.0 / 6.0).epsilon(kTight));
  CHECK(exact(beta.a) == 0.5);
  CHECK(exact(beta.o) == 1.0);
  CHECK(exact(beta.p) == 0.75);
  CHECK(exact(beta.r) == 0.5);
  CHECK(exact(beta.avg) == doctest::Approx(43.0 / 60.0).epsilon(kTight));
  CHECK(beta.undefined_counts == report::UndefinedCounts{0, 0, 0, 0, 0});
  CHECK(beta.turns_mean == 2.0);
  CHECK(beta.turns_std == 1.0);
  CHECK(beta.steps_mean == 1.0);
  CHECK(beta.steps_std == doctest::Approx(std::sqrt(0.5)).epsilon(kTight));
}

TEST_CASE("macro mean averages defined scores and counts the rest") {
  ScoreCard low, high, gap;
  low.agent_id = high.agent_id = gap.agent_id = "a";
  low.benchmark_id = high.benchmark_id = gap.benchmark_id = "b";
  low.session_id = "1";
  high.session_id = "2";
  gap.session_id = "3";
  low.o_score = 0.4;
  high.o_score = 0.6;
  gap.o_score = std::nullopt;
  low.turns = high.turns = gap.turns = 1;

  const auto reports = report::aggregate(std::vector<ScoreCard>{low, high, gap});
  REQUIRE(reports.size() == 1);
  CHECK(exact(reports[0].o) == doctest::Approx(0.5).epsilon(kTight));
  CHECK(reports[0].undefined_counts.o == 1);
  CHECK(reports[0].undefined_counts.s == 3);
  CHECK_FALSE(reports[0].s.has_value());
  CHECK_FALSE(reports[0].avg.has_value());
}

TEST_CASE("aggregate rejects an empty card list") {
  CHECK_THROWS_AS(report::aggregate(std::vector<ScoreCard>{}), EmptyCorpusError);
}

TEST_CASE("competition ranking on the published airline rows") {
  const auto table = report::load_reports(fixtures_dir() / "leaderboard_reports.json");
  std::vector<ScoreCard> cards;
  for (const auto& row : table) {
    if (row.benchmark_id == "tau-airline") cards.push_back(card_from(row));
  }
  REQUIRE(cards.size() == 9);

  const auto ranked = report::aggregate(cards);
  const std::vector<std::pair<std::string, int>> expected = {
      {"sonnet-3.5", 1},     {"gpt-4o", 2},        {"gemini-1.5-fsh", 3},
      {"gpt-4o-mini", 4},    {"llama-3.3-70B", 5}, {"gpt-3.5-turbo", 6},
      {"mistral-large", 6},  {"qwen2.5-72B", 6},   {"mixtral-8x7B", 9}};
  REQUIRE(ranked.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(ranked[i].agent_id == expected[i].first);
    CHECK(ranked[i].rank == expected[i].second);
  }
}

TEST_CASE("groups with Undefined avg rank last") {
  ScoreCard defined, undefined;
  defined.session_id = "1";
  defined.agent_id = "zeta";
  defined.benchmark_id = "b";
  defined.s_score = defined.a_score = defined.o_score = defined.p_score = defined.r_score = 0.1;
  defined.avg = 0.1;
  defined.turns = 1;
  undefined.session_id = "2";
  undefined.agent_id = "alpha";
  undefined.benchmark_id = "b";
  undefined.turns = 1;

  const auto reports = report::aggregate(std::vector<ScoreCard>{undefined, defined});
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].agent_id == "zeta");
  CHECK(reports[0].rank == 1);
  CHECK(reports[1].agent_id == "alpha");
  CHECK(reports[1].rank == 2);
}

TEST_CASE("study pair selection on the published table") {
  const auto table = report::load_reports(fixtures_dir() / "leaderboard_reports.json");
  const auto pairs = report::select_study_pairs(table);
  REQUIRE_FALSE(pairs.empty());

  bool found_airline = false;
  bool found_retail = false;
  for (const auto& pair : pairs) {
    CHECK(pair.agent_a < pair.agent_b);
    if (pair.benchmark_id == "tau-airline" && pair.agent_a == "gpt-4o-mini" &&
        pair.agent_b == "mistral-large") {
      found_airline = true;
      CHECK(pair.kind == report::PairKind::SameRDiffAvg);
      CHECK(pair.r_a == 0.26);
      CHECK(pair.r_b == 0.26);
      CHECK(pair.difference == doctest::Approx(0.08).epsilon(kTight));
    }
    if (pair.benchmark_id == "tau-retail" && pair.agent_a == "gemini-1.5-fsh" &&
        pair.agent_b == "llama-3.3-70B") {
      found_retail = true;
      CHECK(pair.kind == report::PairKind::SameAvgDiffR);
      CHECK(pair.avg_a == 0.64);
      CHECK(pair.avg_b == 0.64);
      CHECK(pair.difference == doctest::Approx(0.21).epsilon(kTight));
    }
  }
  CHECK(found_airline);
  CHECK(found_retail);

  for (std::size_t i = 1; i < pairs.size(); ++i) {
    CHECK(pairs[i - 1].difference >= pairs[i].difference);
  }
}

TEST_CASE("study pair edge behavior") {
  SUBCASE("identical reports produce no pairs") {
    AgentReport a;
    a.agent_id = "a";
    a.benchmark_id = "b";
    a.r = 0.5;
    a.avg = 0.5;
    AgentReport b = a;
    b.agent_id = "b";
    CHECK(report::select_study_pairs(std::vector<AgentReport>{a, b}).empty());
  }
  SUBCASE("agents without a defined R are skipped") {
    AgentReport a;
    a.agent_id = "a";
    a.benchmark_id = "b";
    a.r = std::nullopt;
    a.avg = 0.9;
    AgentReport b;
    b.agent_id = "b";
    b.benchmark_id = "b";
    b.r = 0.5;
    b.avg = 0.5;
    CHECK(report::select_study_pairs(std::vector<AgentReport>{a, b}).empty());
  }
  SUBCASE("cross-benchmark rows never pair") {
    AgentReport a;
    a.agent_id = "a";
    a.benchmark_id = "b1";
    a.r = 0.5;
    a.avg = 0.9;
    AgentReport b;
    b.agent_id = "b";
    b.benchmark_id = "b2";
    b.r = 0.5;
    b.avg = 0.5;
    CHECK(report::select_study_pairs(std::vector<AgentReport>{a, b}).empty());
  }
  SUBCASE("mode names round-trip") {
    using report::PairKind;
    CHECK(report::pair_kind_from_string(report::to_string(PairKind::SameRDiffAvg)) ==
          PairKind::SameRDiffAvg);
    CHECK(report::pair_kind_from_string(report::to_string(PairKind::SameAvgDiffR)) ==
          PairKind::SameAvgDiffR);
    CHECK_THROWS_AS(report::pair_kind_from_string("both"), SchemaError);
  }
}

TEST_CASE("csv rendering is fixed-order and two-digit") {
  const auto reports = synthetic_reports();
  const std::string csv = report::render_reports(reports, report::ReportFormat::Csv);
  CHECK(csv ==
        "agent,benchmark,S,A,O,P,R,AVG,turns_mean,turns_std,steps_mean,steps_std,sessions\n"
        "alpha,support,0.75,0.50,0.75,1.00,0.75,0.75,1.50,0.50,1.33,0.94,2\n"
        "beta,support,0.83,0.50,1.00,0.75,0.50,0.72,2.00,1.00,1.00,0.71,2\n");
}

TEST_CASE("markdown rendering bolds the rank-1 average") {
  const auto reports = synthetic_reports();
  const std::string md = report::render_reports(reports, report::ReportFormat::Markdown);
  CHECK(md.find("## Benchmark: support") != std::string::npos);
  CHECK(md.find("| 1 | alpha |") != std::string::npos);
  CHECK(md.find("**0.75**") != std::string::npos);
  CHECK(md.find("| 2 | beta |") != std::string::npos);
  CHECK(md.find("**0.72**") == std::string::npos);
  CHECK(md.find("1.50 ± 0.50") != std::string::npos);
}

TEST_CASE("rendering is deterministic across calls") {
  const auto reports = synthetic_reports();
  for (const auto format : {report::ReportFormat::Json, report::ReportFormat::Csv,
                            report::ReportFormat::Markdown}) {
    CHECK(report::render_reports(reports, format) == report::render_reports(reports, format));
  }
}

TEST_CASE("report JSON round-trips every field") {
  const auto reports = synthetic_reports();
  const auto round = report::reports_from_json(report::reports_to_json(reports));
  REQUIRE(round.size() == reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    CHECK(round[i].agent_id == reports[i].agent_id);
    CHECK(round[i].benchmark_id == reports[i].benchmark_id);
    CHECK(round[i].rank == reports[i].rank);
    CHECK(round[i].session_count == reports[i].session_count);
    CHECK(round[i].s == reports[i].s);
    CHECK(round[i].a == reports[i].a);
    CHECK(round[i].o == reports[i].o);
    CHECK(round[i].p == reports[i].p);
    CHECK(round[i].r == reports[i].r);
    CHECK(round[i].avg == reports[i].avg);
    CHECK(round[i].undefined_counts == reports[i].undefined_counts);
    CHECK(round[i].turns_mean == reports[i].turns_mean);
    CHECK(round[i].steps_std == reports[i].steps_std);
  }
}

TEST_CASE("malformed report documents are rejected") {
  CHECK_THROWS_AS(report::reports_from_json(nlohmann::ordered_json::array()), SchemaError);
  nlohmann::ordered_json missing_scores = {{"reports", {{{"agent_id", "a"},
                                                         {"benchmark_id", "b"},
                                                         {"rank", 1},
                                                         {"sessions", 1}}}}};
  CHECK_THROWS_AS(report::reports_from_json(missing_scores), SchemaError);
  CHECK_THROWS_AS(report::load_reports(fixtures_dir() / "no_such_file.json"), IoError);
  CHECK_THROWS_AS(report::report_format_from_string("yaml"), SchemaError);
}

TEST_CASE("pairs JSON carries the rounded values") {
  const auto table = report::load_reports(fixtures_dir() / "leaderboard_reports.json");
  const auto pairs = report::select_study_pairs(table);
  const auto doc = report::pairs_to_json(pairs);
  CHECK(doc["schema_version"] == "1");
  REQUIRE(doc["pairs"].is_array());
  CHECK(doc["pairs"].size() == pairs.size());
  const auto& first = doc["pairs"][0];
  CHECK(first.contains("mode"));
  CHECK(first.contains("difference"));
  const std::string rendered = report::render_pairs(pairs);
  CHECK(rendered.back() == '\n');
}
