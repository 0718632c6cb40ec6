#include "aura/remote_judge.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace aura::judge {

namespace {

using nlohmann::ordered_json;

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  std::replace(text.begin(), text.end(), '\r', ' ');
  return text;
}

int count_user_turns(std::span<const transcript::Message> dialogue) {
  int n = 0;
  for (const auto& m : dialogue) {
    if (m.role == "user") ++n;
  }
  return n;
}

struct SlotGuard {
  std::counting_semaphore<256>& slots;
  explicit SlotGuard(std::counting_semaphore<256>& s) : slots(s) { slots.acquire(); }
  ~SlotGuard() { slots.release(); }
};

}  // namespace

struct RemoteJudge::Transport {
  std::string base;  // scheme://host:port
  std::string path;
  std::string api_key;

  explicit Transport(const JudgeConfig& config) {
    const std::string& url = config.endpoint;
    if (url.rfind("https://", 0) == 0) {
      throw TransportError("https endpoints are not supported by this build; use http");
    }
    if (url.rfind("http://", 0) != 0) {
      throw TransportError("judge endpoint must start with http://, got '" + url + "'");
    }
    const std::size_t host_start = std::string("http://").size();
    const std::size_t slash = url.find('/', host_start);
    if (slash == std::string::npos) {
      base = url;
      path = "/";
    } else {
      base = url.substr(0, slash);
      path = url.substr(slash);
    }
    if (!config.api_key_env.empty()) {
      if (const char* key = std::getenv(config.api_key_env.c_str()); key != nullptr && *key) {
        api_key = key;
      }
    }
  }
};

RemoteJudge::RemoteJudge(JudgeConfig config, PromptLibrary prompts, VerdictCache* cache)
    : config_(std::move(config)),
      prompts_(std::move(prompts)),
      cache_(cache),
      transport_(std::make_unique<Transport>(config_)),
      slots_(std::min(config_.concurrency_limit, 256)) {
  if (config_.concurrency_limit < 1) {
    throw InvariantError("judge concurrency_limit must be >= 1");
  }
  if (config_.max_retries < 0) {
    throw InvariantError("judge max_retries must be >= 0");
  }
}

RemoteJudge::~RemoteJudge() = default;

std::string RemoteJudge::complete(const std::string& prompt) {
  ordered_json body;
  body["model"] = config_.model;
  body["messages"] = ordered_json::array();
  ordered_json message;
  message["role"] = "user";
  message["content"] = prompt;
  body["messages"].push_back(std::move(message));
  body["temperature"] = config_.temperature;

  httplib::Result res = [&] {
    SlotGuard guard(slots_);
    // One client per request keeps concurrent calls independent.
    httplib::Client client(transport_->base);
    client.set_connection_timeout(0, config_.timeout_ms * 1000LL);
    client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
    client.set_write_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (!transport_->api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + transport_->api_key);
    }
    return client.Post(transport_->path, headers, body.dump(), "application/json");
  }();

  if (!res) {
    throw TransportError("judge request failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw TransportError("judge endpoint returned HTTP " + std::to_string(res->status));
  }
  const ordered_json envelope = ordered_json::parse(res->body, nullptr, false);
  if (envelope.is_discarded()) {
    throw JudgeProtocolError("completion body is not valid JSON");
  }
  auto choices = envelope.find("choices");
  if (choices == envelope.end() || !choices->is_array() || choices->empty()) {
    throw JudgeProtocolError("completion has no choices");
  }
  const auto& first = (*choices)[0];
  auto msg = first.find("message");
  if (msg == first.end() || !msg->is_object()) {
    throw JudgeProtocolError("completion choice has no message");
  }
  auto content = msg->find("content");
  if (content == msg->end() || !content->is_string()) {
    throw JudgeProtocolError("completion message has no text content");
  }
  return content->get<std::string>();
}

template <typename Validate>
std::string RemoteJudge::ask(const std::string& prompt, Validate&& validate) {
  const std::uint64_t key = VerdictCache::hash_prompt(prompt);
  if (cache_) {
    if (auto hit = cache_->get(key)) {
      try {
        validate(*hit);
        return *hit;
      } catch (const JudgeProtocolError&) {
        // Stale or corrupt entry: fall through to the remote call.
      }
    }
  }

  const int attempts = 1 + config_.max_retries;
  std::string current = prompt;
  int transport_failures = 0;
  std::exception_ptr last;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    try {
      const std::string reply = complete(current);
      validate(reply);
      if (cache_) cache_->put(key, reply);
      return reply;
    } catch (const TransportError&) {
      last = std::current_exception();
      if (attempt + 1 < attempts) {
        const int shift = std::min(transport_failures, 10);
        std::this_thread::sleep_for(std::chrono::milliseconds(
            static_cast<long long>(config_.backoff_ms) << shift));
      }
      ++transport_failures;
    } catch (const JudgeProtocolError& e) {
      last = std::current_exception();
      current = prompt +
                "\n\nYour previous reply was rejected (" + one_line(e.what()) +
                "). Respond with only the JSON array in the requested output format.";
    }
  }
  std::rethrow_exception(last);
}

std::vector<JudgeVerdict> RemoteJudge::run_request(const JudgeRequest& request) {
  std::vector<std::string> ids;
  ids.reserve(request.items.size());
  for (const auto& item : request.items) ids.push_back(item.item_id);
  const std::string id_key = id_key_for(request.kind);

  std::vector<JudgeVerdict> verdicts;
  ask(request.prompt_text,
      [&](const std::string& reply) { verdicts = parse_judge_output(reply, id_key, ids); });
  return verdicts;
}

std::vector<JudgeVerdict> RemoteJudge::is_consistent(std::span<const transcript::Step> steps,
                                                     const transcript::ContextView& context) {
  std::vector<JudgeItem> items;
  items.reserve(steps.size());
  for (const auto& step : steps) {
    items.push_back({step.step_id, step.content, transcript::to_string(step.kind)});
  }
  return run_request(build_request(prompts_, TaskKind::Consistency, context.messages, items));
}

std::vector<JudgeVerdict> RemoteJudge::is_aligned(std::span<const JudgeItem> items,
                                                  const transcript::ContextView& context) {
  return run_request(build_request(prompts_, TaskKind::ObservationAlignment, context.messages,
                                   items));
}

std::vector<JudgeVerdict> RemoteJudge::is_adherent(
    std::span<const transcript::Policy> policies,
    std::span<const transcript::Message> full_context) {
  std::vector<JudgeItem> items;
  items.reserve(policies.size());
  for (const auto& policy : policies) {
    items.push_back({policy.policy_id, policy.text, ""});
  }
  return run_request(build_request(prompts_, TaskKind::PolicyAdherence, full_context, items));
}

std::vector<AuditVerdict> RemoteJudge::audit(const std::string& instruction,
                                             std::span<const transcript::Message> dialogue) {
  const JudgeRequest request = build_audit_request(prompts_, instruction, dialogue);
  const int max_turn = count_user_turns(dialogue);

  std::vector<AuditVerdict> verdicts;
  ask(request.prompt_text,
      [&](const std::string& reply) { verdicts = parse_audit_output(reply, max_turn); });
  return verdicts;
}

}  // namespace aura::judge
