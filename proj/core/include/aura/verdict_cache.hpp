#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace aura::judge {

// Prompt-keyed cache of raw judge completions. Safe for concurrent get/put;
// persists as a JSON object so re-runs against a remote judge are idempotent.
class VerdictCache {
 public:
  VerdictCache() = default;
  VerdictCache(VerdictCache&& other) noexcept;
  VerdictCache& operator=(VerdictCache&&) = delete;

  static std::uint64_t hash_prompt(std::string_view prompt);  // FNV-1a 64

  std::optional<std::string> get(std::uint64_t key) const;
  void put(std::uint64_t key, const std::string& raw_reply);
  std::size_t size() const;

  // Missing file loads as an empty cache; an unreadable or malformed file is IoError.
  static VerdictCache load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::string> entries_;  // hex key, ordered for stable saves
};

}  // namespace aura::judge
