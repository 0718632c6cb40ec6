#include "aura/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace aura::report {

namespace {

using metrics::Score;
using nlohmann::ordered_json;

struct Accumulator {
  double sum = 0.0;
  int defined = 0;
  int undefined = 0;

  void add(const Score& score) {
    if (score) {
      sum += *score;
      ++defined;
    } else {
      ++undefined;
    }
  }
  Score mean() const {
    if (defined == 0) return std::nullopt;
    return sum / static_cast<double>(defined);
  }
};

double rounded(double value) { return metrics::round_half_up(value, 2); }

// Sort key within a benchmark: defined avgs first (rounded, descending), then
// agent id. Undefined avgs sink to the bottom.
bool report_order(const AgentReport& lhs, const AgentReport& rhs) {
  if (lhs.benchmark_id != rhs.benchmark_id) return lhs.benchmark_id < rhs.benchmark_id;
  const bool l_def = lhs.avg.has_value();
  const bool r_def = rhs.avg.has_value();
  if (l_def != r_def) return l_def;
  if (l_def && r_def) {
    const double la = rounded(*lhs.avg);
    const double ra = rounded(*rhs.avg);
    if (la != ra) return la > ra;
  }
  return lhs.agent_id < rhs.agent_id;
}

bool same_rounded_avg(const AgentReport& lhs, const AgentReport& rhs) {
  if (lhs.avg.has_value() != rhs.avg.has_value()) return false;
  if (!lhs.avg) return true;
  return rounded(*lhs.avg) == rounded(*rhs.avg);
}

std::string csv_cell(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

ordered_json score_json(const Score& score) {
  if (!score) return nullptr;
  return *score;
}

Score score_from_json(const ordered_json& value, const std::string& key) {
  auto it = value.find(key);
  if (it == value.end()) {
    throw SchemaError("report scores are missing '" + key + "'");
  }
  if (it->is_null()) return std::nullopt;
  if (!it->is_number()) {
    throw SchemaError("report score '" + key + "' must be a number or null");
  }
  return it->get<double>();
}

double number_field(const ordered_json& value, const std::string& key) {
  auto it = value.find(key);
  if (it == value.end() || !it->is_number()) {
    throw SchemaError("report field '" + key + "' must be a number");
  }
  return it->get<double>();
}

int int_field(const ordered_json& value, const std::string& key) {
  auto it = value.find(key);
  if (it == value.end() || !it->is_number_integer()) {
    throw SchemaError("report field '" + key + "' must be an integer");
  }
  return it->get<int>();
}

std::string string_field(const ordered_json& value, const std::string& key) {
  auto it = value.find(key);
  if (it == value.end() || !it->is_string()) {
    throw SchemaError("report field '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

std::vector<AgentReport> aggregate(std::span<const metrics::ScoreCard> cards) {
  if (cards.empty()) {
    throw EmptyCorpusError("aggregate needs at least one score card");
  }

  struct Group {
    Accumulator s, a, o, p, r;
    std::vector<double> turns;
    double step_sum = 0.0;
    double step_sq_sum = 0.0;
    long long turn_total = 0;
  };
  std::map<std::pair<std::string, std::string>, Group> groups;  // (benchmark, agent)
  for (const auto& card : cards) {
    Group& group = groups[{card.benchmark_id, card.agent_id}];
    group.s.add(card.s_score);
    group.a.add(card.a_score);
    group.o.add(card.o_score);
    group.p.add(card.p_score);
    group.r.add(card.r_score);
    group.turns.push_back(static_cast<double>(card.turns));
    // Per-session mean/std carry enough to pool steps-per-turn over the group.
    const double n = static_cast<double>(card.turns);
    const double mean = card.steps_per_turn_mean;
    const double sd = card.steps_per_turn_std;
    group.step_sum += mean * n;
    group.step_sq_sum += (sd * sd + mean * mean) * n;
    group.turn_total += card.turns;
  }

  std::vector<AgentReport> reports;
  reports.reserve(groups.size());
  for (const auto& [key, group] : groups) {
    AgentReport report;
    report.benchmark_id = key.first;
    report.agent_id = key.second;
    report.s = group.s.mean();
    report.a = group.a.mean();
    report.o = group.o.mean();
    report.p = group.p.mean();
    report.r = group.r.mean();
    report.avg = metrics::aura_average(report.s, report.a, report.o, report.p, report.r);
    report.session_count = static_cast<int>(group.turns.size());
    report.undefined_counts = {group.s.undefined, group.a.undefined, group.o.undefined,
                               group.p.undefined, group.r.undefined};

    double turn_sum = 0.0;
    for (double t : group.turns) turn_sum += t;
    report.turns_mean = turn_sum / static_cast<double>(group.turns.size());
    double turn_sq = 0.0;
    for (double t : group.turns) turn_sq += (t - report.turns_mean) * (t - report.turns_mean);
    report.turns_std = std::sqrt(turn_sq / static_cast<double>(group.turns.size()));

    if (group.turn_total > 0) {
      const double n = static_cast<double>(group.turn_total);
      report.steps_mean = group.step_sum / n;
      const double var = group.step_sq_sum / n - report.steps_mean * report.steps_mean;
      report.steps_std = std::sqrt(std::max(0.0, var));
    }
    reports.push_back(std::move(report));
  }

  std::sort(reports.begin(), reports.end(), report_order);
  std::size_t start = 0;
  while (start < reports.size()) {
    std::size_t end = start;
    while (end < reports.size() &&
           reports[end].benchmark_id == reports[start].benchmark_id) {
      ++end;
    }
    int rank = 0;
    for (std::size_t i = start; i < end; ++i) {
      if (i == start || !same_rounded_avg(reports[i], reports[i - 1])) {
        rank = static_cast<int>(i - start) + 1;
      }
      reports[i].rank = rank;
    }
    start = end;
  }
  return reports;
}

std::string to_string(PairKind kind) {
  return kind == PairKind::SameRDiffAvg ? "same_r_diff_avg" : "same_avg_diff_r";
}

PairKind pair_kind_from_string(const std::string& text) {
  if (text == "same_r_diff_avg") return PairKind::SameRDiffAvg;
  if (text == "same_avg_diff_r") return PairKind::SameAvgDiffR;
  throw SchemaError("unknown study pair mode '" + text + "'");
}

std::vector<StudyPair> select_study_pairs(std::span<const AgentReport> reports,
                                          const PairOptions& options) {
  // Compared on display-rounded values: the study design works off the
  // published two-digit numbers, where ".26 = .26" counts as identical.
  const double eps = options.eps_same + 1e-9;
  const double delta = options.delta_diff - 1e-9;

  std::map<std::string, std::vector<const AgentReport*>> by_benchmark;
  for (const auto& report : reports) {
    if (report.r && report.avg) by_benchmark[report.benchmark_id].push_back(&report);
  }

  std::vector<StudyPair> pairs;
  for (const auto& [benchmark, group] : by_benchmark) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      for (std::size_t j = i + 1; j < group.size(); ++j) {
        const AgentReport* a = group[i];
        const AgentReport* b = group[j];
        if (b->agent_id < a->agent_id) std::swap(a, b);
        const double r_a = rounded(*a->r);
        const double r_b = rounded(*b->r);
        const double avg_a = rounded(*a->avg);
        const double avg_b = rounded(*b->avg);
        const double r_gap = std::abs(r_a - r_b);
        const double avg_gap = std::abs(avg_a - avg_b);
        if (r_gap <= eps && avg_gap >= delta) {
          pairs.push_back({benchmark, a->agent_id, b->agent_id, PairKind::SameRDiffAvg,
                           r_a, r_b, avg_a, avg_b, avg_gap});
        }
        if (avg_gap <= eps && r_gap >= delta) {
          pairs.push_back({benchmark, a->agent_id, b->agent_id, PairKind::SameAvgDiffR,
                           r_a, r_b, avg_a, avg_b, r_gap});
        }
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const StudyPair& lhs, const StudyPair& rhs) {
    if (lhs.difference != rhs.difference) return lhs.difference > rhs.difference;
    if (lhs.benchmark_id != rhs.benchmark_id) return lhs.benchmark_id < rhs.benchmark_id;
    if (lhs.agent_a != rhs.agent_a) return lhs.agent_a < rhs.agent_a;
    if (lhs.agent_b != rhs.agent_b) return lhs.agent_b < rhs.agent_b;
    return to_string(lhs.kind) < to_string(rhs.kind);
  });
  return pairs;
}

ReportFormat report_format_from_string(const std::string& text) {
  if (text == "json") return ReportFormat::Json;
  if (text == "csv") return ReportFormat::Csv;
  if (text == "markdown" || text == "md") return ReportFormat::Markdown;
  throw SchemaError("unknown report format '" + text + "'");
}

nlohmann::ordered_json reports_to_json(std::span<const AgentReport> reports) {
  ordered_json root;
  root["schema_version"] = transcript::kSchemaVersion;
  root["reports"] = ordered_json::array();
  for (const auto& report : reports) {
    ordered_json v;
    v["agent_id"] = report.agent_id;
    v["benchmark_id"] = report.benchmark_id;
    v["rank"] = report.rank;
    v["sessions"] = report.session_count;
    ordered_json scores;
    scores["s"] = score_json(report.s);
    scores["a"] = score_json(report.a);
    scores["o"] = score_json(report.o);
    scores["p"] = score_json(report.p);
    scores["r"] = score_json(report.r);
    scores["avg"] = score_json(report.avg);
    v["scores"] = std::move(scores);
    ordered_json undefined;
    undefined["s"] = report.undefined_counts.s;
    undefined["a"] = report.undefined_counts.a;
    undefined["o"] = report.undefined_counts.o;
    undefined["p"] = report.undefined_counts.p;
    undefined["r"] = report.undefined_counts.r;
    v["undefined_counts"] = std::move(undefined);
    ordered_json interaction;
    interaction["turns_mean"] = report.turns_mean;
    interaction["turns_std"] = report.turns_std;
    interaction["steps_mean"] = report.steps_mean;
    interaction["steps_std"] = report.steps_std;
    v["interaction"] = std::move(interaction);
    root["reports"].push_back(std::move(v));
  }
  return root;
}

std::vector<AgentReport> reports_from_json(const ordered_json& value) {
  if (!value.is_object() || !value.contains("reports") || !value["reports"].is_array()) {
    throw SchemaError("report document must be an object with a 'reports' array");
  }
  std::vector<AgentReport> reports;
  for (const auto& v : value["reports"]) {
    AgentReport report;
    report.agent_id = string_field(v, "agent_id");
    report.benchmark_id = string_field(v, "benchmark_id");
    report.rank = int_field(v, "rank");
    report.session_count = int_field(v, "sessions");
    auto scores = v.find("scores");
    if (scores == v.end() || !scores->is_object()) {
      throw SchemaError("report entry is missing 'scores'");
    }
    report.s = score_from_json(*scores, "s");
    report.a = score_from_json(*scores, "a");
    report.o = score_from_json(*scores, "o");
    report.p = score_from_json(*scores, "p");
    report.r = score_from_json(*scores, "r");
    report.avg = score_from_json(*scores, "avg");
    if (auto u = v.find("undefined_counts"); u != v.end() && u->is_object()) {
      report.undefined_counts = {int_field(*u, "s"), int_field(*u, "a"), int_field(*u, "o"),
                                 int_field(*u, "p"), int_field(*u, "r")};
    }
    if (auto i = v.find("interaction"); i != v.end() && i->is_object()) {
      report.turns_mean = number_field(*i, "turns_mean");
      report.turns_std = number_field(*i, "turns_std");
      report.steps_mean = number_field(*i, "steps_mean");
      report.steps_std = number_field(*i, "steps_std");
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

std::vector<AgentReport> load_reports(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open reports file '" + path.string() + "'");
  }
  ordered_json value;
  try {
    in >> value;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("invalid JSON in reports file '" + path.string() + "': " + e.what());
  }
  return reports_from_json(value);
}

namespace {

std::string render_csv(std::span<const AgentReport> reports) {
  std::string out =
      "agent,benchmark,S,A,O,P,R,AVG,turns_mean,turns_std,steps_mean,steps_std,sessions\n";
  for (const auto& report : reports) {
    out += csv_cell(report.agent_id) + ',' + csv_cell(report.benchmark_id) + ',';
    out += metrics::format_score(report.s) + ',';
    out += metrics::format_score(report.a) + ',';
    out += metrics::format_score(report.o) + ',';
    out += metrics::format_score(report.p) + ',';
    out += metrics::format_score(report.r) + ',';
    out += metrics::format_score(report.avg) + ',';
    out += metrics::format_number(report.turns_mean) + ',';
    out += metrics::format_number(report.turns_std) + ',';
    out += metrics::format_number(report.steps_mean) + ',';
    out += metrics::format_number(report.steps_std) + ',';
    out += std::to_string(report.session_count) + '\n';
  }
  return out;
}

std::string render_markdown(std::span<const AgentReport> reports) {
  std::string out = "# AURA report\n";
  std::size_t start = 0;
  while (start < reports.size()) {
    std::size_t end = start;
    while (end < reports.size() &&
           reports[end].benchmark_id == reports[start].benchmark_id) {
      ++end;
    }
    out += "\n## Benchmark: " + reports[start].benchmark_id + "\n\n";
    out += "| Rank | Agent | S | A | O | P | R | AVG |\n";
    out += "| ---: | :--- | ---: | ---: | ---: | ---: | ---: | ---: |\n";
    for (std::size_t i = start; i < end; ++i) {
      const AgentReport& report = reports[i];
      const std::string avg_text = metrics::format_score(report.avg);
      out += "| " + std::to_string(report.rank) + " | " + report.agent_id + " | ";
      out += metrics::format_score(report.s) + " | ";
      out += metrics::format_score(report.a) + " | ";
      out += metrics::format_score(report.o) + " | ";
      out += metrics::format_score(report.p) + " | ";
      out += metrics::format_score(report.r) + " | ";
      // Best average in the group is bold, Table 2 style.
      out += (report.rank == 1 && report.avg) ? "**" + avg_text + "**" : avg_text;
      out += " |\n";
    }
    out += "\n| Agent | Turns | Steps/Turn | Sessions |\n";
    out += "| :--- | ---: | ---: | ---: |\n";
    for (std::size_t i = start; i < end; ++i) {
      const AgentReport& report = reports[i];
      out += "| " + report.agent_id + " | ";
      out += metrics::format_number(report.turns_mean) + " ± " +
             metrics::format_number(report.turns_std) + " | ";
      out += metrics::format_number(report.steps_mean) + " ± " +
             metrics::format_number(report.steps_std) + " | ";
      out += std::to_string(report.session_count) + " |\n";
    }
    start = end;
  }
  return out;
}

}  // namespace

std::string render_reports(std::span<const AgentReport> reports, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json: return reports_to_json(reports).dump(2) + "\n";
    case ReportFormat::Csv: return render_csv(reports);
    case ReportFormat::Markdown: return render_markdown(reports);
  }
  return "";
}

void write_reports(std::span<const AgentReport> reports, ReportFormat format,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write report file '" + path.string() + "'");
  }
  out << render_reports(reports, format);
  if (!out) {
    throw IoError("failed writing report file '" + path.string() + "'");
  }
}

nlohmann::ordered_json pairs_to_json(std::span<const StudyPair> pairs) {
  ordered_json root;
  root["schema_version"] = transcript::kSchemaVersion;
  root["pairs"] = ordered_json::array();
  for (const auto& pair : pairs) {
    ordered_json v;
    v["benchmark_id"] = pair.benchmark_id;
    v["mode"] = to_string(pair.kind);
    v["agent_a"] = pair.agent_a;
    v["agent_b"] = pair.agent_b;
    v["r_a"] = pair.r_a;
    v["r_b"] = pair.r_b;
    v["avg_a"] = pair.avg_a;
    v["avg_b"] = pair.avg_b;
    v["difference"] = pair.difference;
    root["pairs"].push_back(std::move(v));
  }
  return root;
}

std::string render_pairs(std::span<const StudyPair> pairs) {
  return pairs_to_json(pairs).dump(2) + "\n";
}

}  // namespace aura::report
