#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aura/metrics.hpp"

namespace aura::report {

struct UndefinedCounts {
  int s = 0, a = 0, o = 0, p = 0, r = 0;

  bool operator==(const UndefinedCounts&) const = default;
};

// One agent on one benchmark, aggregated over its sessions.
struct AgentReport {
  std::string agent_id;
  std::string benchmark_id;
  metrics::Score s, a, o, p, r;  // macro means over defined per-session scores
  metrics::Score avg;            // aura_average of the five means
  int session_count = 0;
  UndefinedCounts undefined_counts;
  double turns_mean = 0.0;
  double turns_std = 0.0;
  double steps_mean = 0.0;   // pooled over all turns of the group
  double steps_std = 0.0;
  int rank = 0;  // within benchmark, by display-rounded avg; ties share rank
};

// Groups cards by agent x benchmark. Output is sorted by benchmark, then rank
// order (rounded avg descending, agent_id as tie-break); groups whose avg is
// Undefined rank last.
std::vector<AgentReport> aggregate(std::span<const metrics::ScoreCard> cards);

enum class PairKind { SameRDiffAvg, SameAvgDiffR };
std::string to_string(PairKind kind);
PairKind pair_kind_from_string(const std::string& text);

struct StudyPair {
  std::string benchmark_id;
  std::string agent_a;  // lexicographically first
  std::string agent_b;
  PairKind kind = PairKind::SameRDiffAvg;
  // Display-rounded values, since pairs are judged on the published two-digit numbers.
  double r_a = 0.0, r_b = 0.0;
  double avg_a = 0.0, avg_b = 0.0;
  double difference = 0.0;  // the gap on the differing metric
};

struct PairOptions {
  double eps_same = 0.005;
  double delta_diff = 0.05;
};

// All unordered same-benchmark pairs satisfying one of the two study modes,
// sorted by difference descending. Agents lacking a defined R or AVG are skipped.
std::vector<StudyPair> select_study_pairs(std::span<const AgentReport> reports,
                                          const PairOptions& options = {});

enum class ReportFormat { Json, Csv, Markdown };
ReportFormat report_format_from_string(const std::string& text);

// Byte-stable renderings: fixed key order, fixed column order, fixed rounding.
std::string render_reports(std::span<const AgentReport> reports, ReportFormat format);
void write_reports(std::span<const AgentReport> reports, ReportFormat format,
                   const std::filesystem::path& path);

nlohmann::ordered_json reports_to_json(std::span<const AgentReport> reports);
std::vector<AgentReport> reports_from_json(const nlohmann::ordered_json& value);
std::vector<AgentReport> load_reports(const std::filesystem::path& path);

nlohmann::ordered_json pairs_to_json(std::span<const StudyPair> pairs);
std::string render_pairs(std::span<const StudyPair> pairs);

}  // namespace aura::report
