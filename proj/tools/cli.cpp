#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aura/errors.hpp"
#include "aura/metrics.hpp"
#include "aura/mixing.hpp"
#include "aura/mock_judge.hpp"
#include "aura/remote_judge.hpp"
#include "aura/reporting.hpp"
#include "aura/simulator_audit.hpp"
#include "aura/transcript.hpp"

namespace aura::cli {

namespace {

using nlohmann::ordered_json;
namespace reporting = aura::report;

constexpr const char* kVersion = "0.1.0";

struct JudgeArgs {
  std::string mock_rules;
  std::string endpoint;
  std::string model = "gpt-4o";
  double temperature = 0.0;
  int max_retries = 2;
  int concurrency = 4;
  int timeout_ms = 30000;
  int backoff_ms = 250;
  std::string api_key_env = "AURA_JUDGE_API_KEY";
  std::string prompts_dir = "prompts";
  std::string cache_path;
  bool no_cache = false;
};

struct JudgeHandle {
  std::unique_ptr<judge::Judge> judge;
  std::unique_ptr<judge::VerdictCache> cache;
  std::filesystem::path cache_save_path;  // empty: nothing to persist
  bool remote = false;
  int concurrency = 0;

  void persist() const {
    if (!cache_save_path.empty() && cache) cache->save(cache_save_path);
  }
};

void add_judge_options(CLI::App* cmd, JudgeArgs& args) {
  cmd->add_option("--mock-judge", args.mock_rules, "Mock judge rules JSON file");
  cmd->add_option("--endpoint", args.endpoint,
                  "Chat-completion endpoint, e.g. http://host:8000/v1/chat/completions");
  cmd->add_option("--model", args.model, "Judge model name");
  cmd->add_option("--temperature", args.temperature, "Judge sampling temperature");
  cmd->add_option("--max-retries", args.max_retries, "Retries after the first judge attempt");
  cmd->add_option("--concurrency", args.concurrency, "Max in-flight judge requests");
  cmd->add_option("--timeout-ms", args.timeout_ms, "Per-request timeout");
  cmd->add_option("--backoff-ms", args.backoff_ms, "Initial transport retry backoff");
  cmd->add_option("--api-key-env", args.api_key_env, "Env var holding the judge API key");
  cmd->add_option("--prompts", args.prompts_dir, "Directory with the judge prompt templates");
  cmd->add_option("--cache", args.cache_path, "Verdict cache file (remote default: aura_cache.json)");
  cmd->add_flag("--no-cache", args.no_cache, "Disable the verdict cache");
}

JudgeHandle make_judge(const JudgeArgs& args) {
  const bool mock = !args.mock_rules.empty();
  const bool remote = !args.endpoint.empty();
  if (mock == remote) {
    throw SchemaError("select exactly one judge backend: --mock-judge RULES or --endpoint URL");
  }
  JudgeHandle handle;
  if (mock) {
    // The mock never consults the cache, but an explicitly requested cache
    // file must still be usable.
    if (!args.cache_path.empty() && !args.no_cache) {
      handle.cache = std::make_unique<judge::VerdictCache>(
          judge::VerdictCache::load(args.cache_path));
    }
    handle.judge = std::make_unique<judge::MockJudge>(judge::MockJudge::from_file(args.mock_rules));
    return handle;
  }
  judge::JudgeConfig config;
  config.endpoint = args.endpoint;
  config.model = args.model;
  config.temperature = args.temperature;
  config.max_retries = args.max_retries;
  config.concurrency_limit = args.concurrency;
  config.timeout_ms = args.timeout_ms;
  config.backoff_ms = args.backoff_ms;
  config.api_key_env = args.api_key_env;
  auto prompts = judge::PromptLibrary::from_directory(args.prompts_dir);
  if (!args.no_cache) {
    const std::filesystem::path path =
        args.cache_path.empty() ? std::filesystem::path("aura_cache.json")
                                : std::filesystem::path(args.cache_path);
    handle.cache = std::make_unique<judge::VerdictCache>(judge::VerdictCache::load(path));
    handle.cache_save_path = path;
  }
  handle.judge = std::make_unique<judge::RemoteJudge>(config, std::move(prompts),
                                                      handle.cache.get());
  handle.remote = true;
  handle.concurrency = args.concurrency;
  return handle;
}

std::vector<transcript::Session> load_corpora(const std::vector<std::string>& paths) {
  std::vector<transcript::Session> sessions;
  std::set<std::string> seen;
  for (const auto& path : paths) {
    auto part = transcript::parse_corpus(std::filesystem::path(path));
    for (auto& session : part) {
      if (!seen.insert(session.session_id).second) {
        throw InvariantError("duplicate session_id '" + session.session_id +
                             "' across corpus files");
      }
      sessions.push_back(std::move(session));
    }
  }
  if (sessions.empty()) {
    std::string joined;
    for (const auto& path : paths) {
      if (!joined.empty()) joined += ", ";
      joined += path;
    }
    throw EmptyCorpusError("empty corpus: no sessions found in " + joined);
  }
  return sessions;
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) {
    throw IoError("cannot write output file '" + out_path + "'");
  }
  file << text;
}

reporting::ReportFormat pick_format(const std::string& flag, const std::string& out_path) {
  if (!flag.empty()) return reporting::report_format_from_string(flag);
  const std::string ext = std::filesystem::path(out_path).extension().string();
  if (ext == ".md" || ext == ".markdown") return reporting::ReportFormat::Markdown;
  if (ext == ".csv") return reporting::ReportFormat::Csv;
  return reporting::ReportFormat::Json;
}

struct ScoreArgs {
  std::vector<std::string> corpus;
  JudgeArgs judge;
  std::string failed_calls = "generation_and_execution";
  std::string observation_mode = "auto";
  std::string out_path;
  std::string format;
  int workers = 0;
};

int cmd_score(const ScoreArgs& args, std::ostream& out, std::ostream& err) {
  auto sessions = load_corpora(args.corpus);
  auto handle = make_judge(args.judge);
  metrics::MetricOptions options;
  options.failed_calls = metrics::failed_calls_from_string(args.failed_calls);
  options.observation_mode = metrics::observation_mode_from_string(args.observation_mode);
  int workers = args.workers;
  if (workers <= 0 && handle.remote) workers = handle.concurrency;
  const auto cards = metrics::score_corpus(sessions, *handle.judge, options, workers);
  const auto reports = reporting::aggregate(cards);
  emit(reporting::render_reports(reports, pick_format(args.format, args.out_path)),
       args.out_path, out);
  handle.persist();
  reporting::UndefinedCounts total;
  int scored = 0;
  for (const auto& report : reports) {
    total.s += report.undefined_counts.s;
    total.a += report.undefined_counts.a;
    total.o += report.undefined_counts.o;
    total.p += report.undefined_counts.p;
    total.r += report.undefined_counts.r;
    scored += report.session_count;
  }
  err << "undefined: S=" << total.s << " A=" << total.a << " O=" << total.o
      << " P=" << total.p << " R=" << total.r << " sessions=" << scored << "\n";
  return 0;
}

struct PairsArgs {
  std::string reports_path;
  double eps_same = 0.005;
  double delta_diff = 0.05;
  std::string out_path;
  std::string format;
};

int cmd_pairs(const PairsArgs& args, std::ostream& out, std::ostream&) {
  const auto reports = reporting::load_reports(args.reports_path);
  const reporting::PairOptions options{args.eps_same, args.delta_diff};
  const auto pairs = reporting::select_study_pairs(reports, options);
  const auto format = pick_format(args.format, args.out_path);
  std::string text;
  if (format == reporting::ReportFormat::Json) {
    text = reporting::pairs_to_json(pairs).dump(2) + "\n";
  } else {
    text = reporting::render_pairs(pairs);
  }
  emit(text, args.out_path, out);
  return 0;
}

struct MixArgs {
  std::string plan_path;
  std::string episodes_dir;
  std::string episode_file;
  JudgeArgs judge;
  std::string out_path;
};

ordered_json decisions_to_json(const mixing::MixOutcome& outcome) {
  ordered_json decisions = ordered_json::array();
  for (const auto& d : outcome.decisions) {
    decisions.push_back(
        {{"turn", d.turn_index},
         {"step", d.step_index},
         {"stage", d.stage == mixing::Stage::Intermediate ? "intermediate" : "response"},
         {"candidates", d.candidate_ids},
         {"scores", d.scores},
         {"selected", d.selected},
         {"selected_agent", d.candidate_ids.at(static_cast<std::size_t>(d.selected))}});
  }
  return decisions;
}

int cmd_mix(const MixArgs& args, std::ostream& out, std::ostream&) {
  if (args.episodes_dir.empty() == args.episode_file.empty()) {
    throw SchemaError("select exactly one episode source: --episodes DIR or --episode FILE");
  }
  const auto plan = mixing::load_plan(args.plan_path);
  const auto episode = args.episode_file.empty()
                           ? mixing::find_episode(args.episodes_dir, plan.episode_id)
                           : mixing::load_episode(args.episode_file);
  ordered_json result;
  result["schema_version"] = transcript::kSchemaVersion;
  if (plan.is_stage_split()) {
    const auto session = mixing::run_stage_split(plan, episode);
    result["session"] = transcript::session_to_json(session);
  } else {
    auto handle = make_judge(args.judge);
    const auto outcome = mixing::run_best_of_n(plan, episode, *handle.judge);
    result["session"] = transcript::session_to_json(outcome.session);
    result["decisions"] = decisions_to_json(outcome);
    result["scores_actions"] = outcome.scores_actions;
    handle.persist();
  }
  emit(result.dump(2) + "\n", args.out_path, out);
  return 0;
}

struct AuditArgs {
  std::vector<std::string> corpus;
  JudgeArgs judge;
  std::string labels_path;
  std::string out_path;
};

int cmd_audit(const AuditArgs& args, std::ostream& out, std::ostream&) {
  const auto sessions = load_corpora(args.corpus);
  auto handle = make_judge(args.judge);
  auto report = audit::audit_corpus(sessions, *handle.judge);
  if (!args.labels_path.empty()) {
    const auto human = audit::load_findings(args.labels_path);
    audit::validate_findings(human, sessions);
    report = audit::merge_human_labels(report, human);
  }
  emit(audit::report_to_json(report).dump(2) + "\n", args.out_path, out);
  handle.persist();
  return 0;
}

template <typename Fn>
int guarded(Fn&& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const TransportError& e) {
    err << "judge error: " << e.what() << "\n";
    return 2;
  } catch (const JudgeProtocolError& e) {
    err << "judge error: " << e.what() << "\n";
    return 2;
  } catch (const AuraError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

std::string version_line() {
  return std::string("aura ") + kVersion + " (corpus schema " +
         std::string(transcript::kSchemaVersion) + ")";
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"AURA: scores task-planning agents from recorded sessions"};
  app.set_version_flag("--version", version_line());
  app.set_config("--config", "", "Read options from a config file (CLI flags win)");
  app.require_subcommand(1);
  long long seed = 0;
  app.add_option("--seed", seed, "Random seed (reserved; the pipeline is deterministic)");

  ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "Score a corpus and emit agent reports");
  score->add_option("--corpus", score_args.corpus, "Corpus JSONL file(s)")->required();
  add_judge_options(score, score_args.judge);
  score->add_option("--failed-calls", score_args.failed_calls,
                    "N_F mode: generation_only | generation_and_execution");
  score->add_option("--observation-mode", score_args.observation_mode,
                    "O mode: auto | annotated | prompt");
  score->add_option("--out", score_args.out_path, "Output file (default: stdout)");
  score->add_option("--format", score_args.format, "json | csv | markdown");
  score->add_option("--workers", score_args.workers, "Worker pool size (0 = auto)");

  PairsArgs pairs_args;
  auto* pairs = app.add_subcommand("pairs", "Select study pairs from an agent report");
  pairs->add_option("--reports", pairs_args.reports_path, "Report JSON from `score`")->required();
  pairs->add_option("--eps-same", pairs_args.eps_same, "Max gap still counted as same");
  pairs->add_option("--delta-diff", pairs_args.delta_diff, "Min gap counted as different");
  pairs->add_option("--out", pairs_args.out_path, "Output file (default: stdout)");
  pairs->add_option("--format", pairs_args.format, "json | markdown");

  MixArgs mix_args;
  auto* mix = app.add_subcommand("mix", "Replay an episode under a mixing plan");
  mix->add_option("--plan", mix_args.plan_path, "Mix plan JSON")->required();
  mix->add_option("--episodes", mix_args.episodes_dir, "Directory of episode JSON files");
  mix->add_option("--episode", mix_args.episode_file, "Single episode JSON file");
  add_judge_options(mix, mix_args.judge);
  mix->add_option("--out", mix_args.out_path, "Output file (default: stdout)");

  AuditArgs audit_args;
  auto* audit_cmd = app.add_subcommand("audit", "Audit user-simulator deviations");
  audit_cmd->add_option("--corpus", audit_args.corpus, "Corpus JSONL file(s)")->required();
  add_judge_options(audit_cmd, audit_args.judge);
  audit_cmd->add_option("--labels", audit_args.labels_path, "Human findings JSON to merge");
  audit_cmd->add_option("--out", audit_args.out_path, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  if (score->parsed()) return guarded([&] { return cmd_score(score_args, out, err); }, err);
  if (pairs->parsed()) return guarded([&] { return cmd_pairs(pairs_args, out, err); }, err);
  if (mix->parsed()) return guarded([&] { return cmd_mix(mix_args, out, err); }, err);
  if (audit_cmd->parsed()) return guarded([&] { return cmd_audit(audit_args, out, err); }, err);
  return 1;
}

}  // namespace aura::cli
