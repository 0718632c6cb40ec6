#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "aura/mock_judge.hpp"
#include "aura/transcript.hpp"

namespace aura::test {

inline std::filesystem::path fixtures_dir() { return AURA_FIXTURES_DIR; }
inline std::filesystem::path prompts_dir() { return AURA_PROMPTS_DIR; }
inline std::filesystem::path golden_dir() { return AURA_GOLDEN_DIR; }

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline judge::MockJudge rules_judge(const std::string& rules_file) {
  return judge::MockJudge::from_file(fixtures_dir() / "rules" / rules_file);
}

inline std::vector<transcript::Session> load_fixture_corpus(const std::string& name) {
  return transcript::parse_corpus(fixtures_dir() / name);
}

// A minimal valid session: `turn_steps[t]` thought steps in turn t+1.
inline transcript::Session make_session(const std::string& id, const std::string& agent,
                                        const std::string& benchmark,
                                        const std::vector<int>& turn_steps) {
  transcript::Session session;
  session.session_id = id;
  session.agent_id = agent;
  session.benchmark_id = benchmark;
  int step_counter = 0;
  for (std::size_t t = 0; t < turn_steps.size(); ++t) {
    transcript::Turn turn;
    turn.index = static_cast<int>(t) + 1;
    turn.user_utterance = "user message " + std::to_string(t + 1);
    turn.agent_response = "agent reply " + std::to_string(t + 1);
    for (int k = 0; k < turn_steps[t]; ++k) {
      transcript::Step step;
      step.step_id = "s" + std::to_string(++step_counter);
      step.kind = transcript::StepKind::Thought;
      step.content = "step " + std::to_string(step_counter);
      turn.steps.push_back(std::move(step));
    }
    session.turns.push_back(std::move(turn));
  }
  session.task_trials = {true};
  return session;
}

}  // namespace aura::test
