#pragma once

#include "vfxopt/media.hpp"
#include "vfxopt/tensor.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace vfxopt {

/// Latent geometry requested from a generator. The channel count belongs to
/// the backend and is not part of the request.
struct LatentGeometry {
  std::size_t frames = 16;
  std::size_t height = 16;
  std::size_t width = 16;

  void validate() const;
  bool matches(const TensorShape &shape) const noexcept {
    return shape.f == frames && shape.h == height && shape.w == width;
  }
  friend bool operator==(const LatentGeometry &, const LatentGeometry &) = default;
};

struct GeneratorRequest {
  std::string prompt;
  std::optional<LatentTensor> noise;     // the blended initial noise
  std::optional<std::string> image_png;  // image-to-video conditioning
  std::optional<std::uint64_t> seed;     // used when noise is absent
  LatentGeometry geometry;

  /// Exactly one of noise and seed; non-empty prompt; noise matching geometry.
  void validate() const;
};

struct GeneratorResponse {
  LatentTensor latent;
  std::vector<Image> frames;
};

struct VlmRequest {
  std::string instruction;
  Composite video;

  void validate() const;
};

struct VlmResponse {
  std::string text;
};

class GatewayError : public Error {
public:
  enum class Kind {
    validation,       // request rejected before or by the backend (4xx)
    timeout,          // no response within the deadline
    transport,        // connection-level failure
    backend,          // backend reported an internal failure (5xx)
    shape_mismatch,   // response latent disagrees with the request geometry
    protocol,         // response body could not be decoded
    script_exhausted, // scripted simulator ran out of replies
  };

  GatewayError(Kind kind, const std::string &message);

  Kind kind() const noexcept { return kind_; }
  bool retryable() const noexcept {
    return kind_ == Kind::timeout || kind_ == Kind::transport;
  }

private:
  Kind kind_;
};

const char *to_string(GatewayError::Kind kind) noexcept;

class GeneratorBackend {
public:
  virtual ~GeneratorBackend() = default;
  virtual GeneratorResponse generate(const GeneratorRequest &request) = 0;
};

class VlmBackend {
public:
  virtual ~VlmBackend() = default;
  virtual VlmResponse refine(const VlmRequest &request) = 0;
};

/// Validates the request, calls the backend and checks the latent against
/// the requested geometry.
GeneratorResponse generate(GeneratorBackend &backend, const GeneratorRequest &request);

VlmResponse refine(VlmBackend &backend, const VlmRequest &request);

struct RetryPolicy {
  std::size_t max_retries = 2;
  std::chrono::milliseconds initial_backoff{250};
  double backoff_multiplier = 2.0;
};

/// Runs fn, retrying only retryable GatewayErrors, at most
/// policy.max_retries times. attempts (if given) receives the number of calls.
template <class Fn>
auto call_with_retries(const RetryPolicy &policy, Fn &&fn,
                       std::size_t *attempts = nullptr) -> std::invoke_result_t<Fn &> {
  auto backoff = policy.initial_backoff;
  for (std::size_t attempt = 0;; ++attempt) {
    if (attempts != nullptr) {
      *attempts = attempt + 1;
    }
    try {
      return fn();
    } catch (const GatewayError &e) {
      if (!e.retryable() || attempt >= policy.max_retries) {
        throw;
      }
    }
    if (backoff.count() > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(static_cast<std::int64_t>(
          static_cast<double>(backoff.count()) * policy.backoff_multiplier));
    }
  }
}

} // namespace vfxopt
