#pragma once

#include <memory>
#include <semaphore>
#include <string>

#include "aura/judge.hpp"
#include "aura/verdict_cache.hpp"

namespace aura::judge {

struct JudgeConfig {
  std::string endpoint;  // http://host:port/v1/chat/completions
  std::string model;
  double temperature = 0.0;
  int max_retries = 2;        // total attempts per request = 1 + max_retries
  int concurrency_limit = 4;  // in-flight HTTP requests
  int timeout_ms = 30000;
  int backoff_ms = 250;       // doubles per transport retry
  std::string api_key_env = "AURA_JUDGE_API_KEY";
};

// LLM judge over an HTTP JSON chat-completion endpoint, using the bundled
// prompt templates. Protocol errors trigger a re-ask with a one-line corrective
// suffix; transport errors back off exponentially. A semaphore caps in-flight
// requests across all threads sharing this instance.
class RemoteJudge final : public Judge {
 public:
  RemoteJudge(JudgeConfig config, PromptLibrary prompts, VerdictCache* cache = nullptr);
  ~RemoteJudge() override;

  std::vector<JudgeVerdict> is_consistent(std::span<const transcript::Step> steps,
                                          const transcript::ContextView& context) override;
  std::vector<JudgeVerdict> is_aligned(std::span<const JudgeItem> items,
                                       const transcript::ContextView& context) override;
  std::vector<JudgeVerdict> is_adherent(std::span<const transcript::Policy> policies,
                                        std::span<const transcript::Message> full_context) override;
  std::vector<AuditVerdict> audit(const std::string& instruction,
                                  std::span<const transcript::Message> dialogue) override;

  const JudgeConfig& config() const { return config_; }

 private:
  struct Transport;

  std::vector<JudgeVerdict> run_request(const JudgeRequest& request);
  // Retry loop shared by all task kinds; returns the raw completion text that
  // `validate` accepted. `validate` throws JudgeProtocolError to reject.
  template <typename Validate>
  std::string ask(const std::string& prompt, Validate&& validate);
  std::string complete(const std::string& prompt);  // one HTTP roundtrip

  JudgeConfig config_;
  PromptLibrary prompts_;
  VerdictCache* cache_;
  std::unique_ptr<Transport> transport_;
  std::counting_semaphore<256> slots_;
};

}  // namespace aura::judge
