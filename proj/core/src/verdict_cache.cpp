#include "aura/verdict_cache.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aura/errors.hpp"

namespace aura::judge {

namespace {

std::string hex_key(std::uint64_t key) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(key));
  return std::string(buf);
}

}  // namespace

VerdictCache::VerdictCache(VerdictCache&& other) noexcept {
  std::lock_guard<std::mutex> lock(other.mu_);
  entries_ = std::move(other.entries_);
}

std::uint64_t VerdictCache::hash_prompt(std::string_view prompt) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : prompt) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::optional<std::string> VerdictCache::get(std::uint64_t key) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(hex_key(key));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void VerdictCache::put(std::uint64_t key, const std::string& raw_reply) {
  std::lock_guard<std::mutex> lock(mu_);
  entries_[hex_key(key)] = raw_reply;
}

std::size_t VerdictCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

VerdictCache VerdictCache::load(const std::filesystem::path& path) {
  VerdictCache cache;
  if (!std::filesystem::exists(path)) return cache;
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot read verdict cache '" + path.string() + "'");
  }
  nlohmann::ordered_json value;
  try {
    in >> value;
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("verdict cache '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!value.is_object()) {
    throw IoError("verdict cache '" + path.string() + "' must be a JSON object");
  }
  for (const auto& [key, reply] : value.items()) {
    if (!reply.is_string()) {
      throw IoError("verdict cache '" + path.string() + "' has a non-string entry");
    }
    cache.entries_[key] = reply.get<std::string>();
  }
  return cache;
}

void VerdictCache::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json value = nlohmann::ordered_json::object();
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& [key, reply] : entries_) value[key] = reply;
  }
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write verdict cache '" + path.string() + "'");
  }
  out << value.dump(2) << '\n';
  if (!out) {
    throw IoError("failed writing verdict cache '" + path.string() + "'");
  }
}

}  // namespace aura::judge
