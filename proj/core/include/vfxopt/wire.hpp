#pragma once

#include "vfxopt/gateway.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>

namespace vfxopt {

/// JSON wire protocol shared with the model shim.
///
///   POST /v1/generate     {prompt, noise_b64?, image_b64?, seed?, frames, height, width}
///                      -> {latent_b64, frames_b64: [...]}
///   POST /v1/vlm/refine   {instruction, video_b64} -> {text}
///   POST /v1/velocity     {x_b64, t, prompt, image_b64?} -> {velocity_b64}
///
/// Tensors travel as base64 NPY, images as base64 PNG, the composite video as
/// a base64 zip of PNG frames plus manifest.json. Error bodies are
/// {code, message}.
namespace wire {

inline constexpr std::string_view kGeneratePath = "/v1/generate";
inline constexpr std::string_view kRefinePath = "/v1/vlm/refine";
inline constexpr std::string_view kVelocityPath = "/v1/velocity";
inline constexpr std::string_view kHealthPath = "/healthz";

nlohmann::json encode(const GeneratorRequest &request);
nlohmann::json encode(const GeneratorResponse &response);
nlohmann::json encode(const VlmRequest &request);
nlohmann::json encode(const VlmResponse &response);

/// Decoders throw GatewayError(validation) for request bodies and
/// GatewayError(protocol) for response bodies that violate the schema.
GeneratorRequest decode_generator_request(const nlohmann::json &body);
GeneratorResponse decode_generator_response(const nlohmann::json &body);
VlmRequest decode_vlm_request(const nlohmann::json &body);
VlmResponse decode_vlm_response(const nlohmann::json &body);

struct VelocityRequest {
  LatentTensor x;
  double t = 0.0;
  std::string prompt;
  std::optional<std::string> image_png;
};

nlohmann::json encode(const VelocityRequest &request);
VelocityRequest decode_velocity_request(const nlohmann::json &body);
nlohmann::json encode_velocity_response(const LatentTensor &velocity);
LatentTensor decode_velocity_response(const nlohmann::json &body);

nlohmann::json error_body(std::string_view code, std::string_view message);

/// Zip of frame_NNNNN.png members plus manifest.json (composite layout and
/// the ordered frame list).
std::string pack_composite(const Composite &composite);
Composite unpack_composite(std::string_view zip_bytes);

} // namespace wire
} // namespace vfxopt
