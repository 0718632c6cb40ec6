#pragma once

#include <stdexcept>
#include <string>

namespace aura {

// Base class so callers can catch everything the library throws in one arm.
class AuraError : public std::runtime_error {
 public:
  explicit AuraError(const std::string& what) : std::runtime_error(what) {}
};

// Corpus field missing / wrong type. Message carries the source line when known.
class SchemaError : public AuraError {
 public:
  using AuraError::AuraError;
};

// Structural rule broken (non-contiguous turn indices, duplicate ids, ...).
class InvariantError : public AuraError {
 public:
  using AuraError::AuraError;
};

class IoError : public AuraError {
 public:
  using AuraError::AuraError;
};

// Judge replied but the verdict payload is unusable (after retries).
class JudgeProtocolError : public AuraError {
 public:
  using AuraError::AuraError;
};

// Connection / HTTP-level failure talking to the remote judge.
class TransportError : public AuraError {
 public:
  using AuraError::AuraError;
};

// Episode driver failure: unknown agent, user/tool client misbehavior.
class EpisodeError : public AuraError {
 public:
  using AuraError::AuraError;
};

class StepLimitExceeded : public AuraError {
 public:
  using AuraError::AuraError;
};

class EmptyCorpusError : public AuraError {
 public:
  using AuraError::AuraError;
};

class IndexError : public AuraError {
 public:
  using AuraError::AuraError;
};

}  // namespace aura
