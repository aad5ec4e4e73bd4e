#pragma once

#include "vfxopt/flow.hpp"
#include "vfxopt/gateway.hpp"

#include <chrono>
#include <mutex>
#include <optional>
#include <string>

namespace vfxopt {

inline constexpr std::chrono::seconds kGeneratorTimeout{600};
inline constexpr std::chrono::seconds kVlmTimeout{120};

/// Base URL ("http://host:port[/prefix]" or https) plus the per-call policy.
struct EndpointConfig {
  std::string url;
  std::chrono::milliseconds timeout{kGeneratorTimeout};
  RetryPolicy retry;
  std::optional<std::string> bearer_token;
};

/// Sends one JSON POST and returns the decoded 200 body. Maps failures to
/// GatewayError kinds: connect/read deadline -> timeout, other socket
/// failures -> transport, 4xx -> validation, 5xx -> backend, undecodable
/// body -> protocol. Applies the endpoint's retry policy.
nlohmann::json post_json(const EndpointConfig &endpoint, std::string_view path,
                         const nlohmann::json &body);

class HttpGeneratorBackend final : public GeneratorBackend {
public:
  explicit HttpGeneratorBackend(EndpointConfig endpoint);
  GeneratorResponse generate(const GeneratorRequest &request) override;

private:
  EndpointConfig endpoint_;
};

class HttpVlmBackend final : public VlmBackend {
public:
  explicit HttpVlmBackend(EndpointConfig endpoint);
  VlmResponse refine(const VlmRequest &request) override;

private:
  EndpointConfig endpoint_;
};

/// Velocity field evaluated by the generator service (POST /v1/velocity).
/// Requests are serialized.
class RemoteVelocityField final : public VelocityField {
public:
  explicit RemoteVelocityField(EndpointConfig endpoint,
                               std::optional<std::string> image_png = std::nullopt);

  LatentTensor evaluate(const LatentTensor &x, double t,
                        const Condition &condition) const override;
  bool concurrent_safe() const noexcept override { return false; }

private:
  EndpointConfig endpoint_;
  std::optional<std::string> image_png_;
  mutable std::mutex mutex_;
};

} // namespace vfxopt
