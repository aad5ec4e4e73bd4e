#include "vfxopt/gateway.hpp"

namespace vfxopt {

namespace {

ErrorCategory category_for(GatewayError::Kind kind) {
  switch (kind) {
  case GatewayError::Kind::validation:
    return ErrorCategory::validation;
  case GatewayError::Kind::protocol:
    return ErrorCategory::format;
  default:
    return ErrorCategory::backend;
  }
}

} // namespace

GatewayError::GatewayError(Kind kind, const std::string &message)
    : Error(category_for(kind), std::string(to_string(kind)) + ": " + message),
      kind_(kind) {}

const char *to_string(GatewayError::Kind kind) noexcept {
  switch (kind) {
  case GatewayError::Kind::validation:
    return "validation";
  case GatewayError::Kind::timeout:
    return "timeout";
  case GatewayError::Kind::transport:
    return "transport";
  case GatewayError::Kind::backend:
    return "backend";
  case GatewayError::Kind::shape_mismatch:
    return "shape_mismatch";
  case GatewayError::Kind::protocol:
    return "protocol";
  case GatewayError::Kind::script_exhausted:
    return "script_exhausted";
  }
  return "unknown";
}

void LatentGeometry::validate() const {
  if (frames == 0 || height == 0 || width == 0) {
    throw GatewayError(GatewayError::Kind::validation, "geometry must be positive");
  }
}

void GeneratorRequest::validate() const {
  if (prompt.empty()) {
    throw GatewayError(GatewayError::Kind::validation, "prompt must be non-empty");
  }
  if (noise.has_value() == seed.has_value()) {
    throw GatewayError(GatewayError::Kind::validation,
                       "exactly one of noise and seed must be supplied");
  }
  geometry.validate();
  if (noise && !geometry.matches(noise->shape())) {
    throw GatewayError(GatewayError::Kind::validation,
                       "noise shape " + noise->shape().to_string() +
                           " does not match the requested geometry");
  }
}

void VlmRequest::validate() const {
  if (instruction.empty()) {
    throw GatewayError(GatewayError::Kind::validation, "instruction must be non-empty");
  }
  if (video.video.frames.empty() || video.segments.empty()) {
    throw GatewayError(GatewayError::Kind::validation, "composite video is empty");
  }
}

GeneratorResponse generate(GeneratorBackend &backend, const GeneratorRequest &request) {
  request.validate();
  GeneratorResponse response = backend.generate(request);
  if (!request.geometry.matches(response.latent.shape())) {
    throw GatewayError(GatewayError::Kind::shape_mismatch,
                       "backend returned latent " + response.latent.shape().to_string());
  }
  return response;
}

VlmResponse refine(VlmBackend &backend, const VlmRequest &request) {
  request.validate();
  VlmResponse response = backend.refine(request);
  if (response.text.empty()) {
    throw GatewayError(GatewayError::Kind::protocol, "VLM returned an empty reply");
  }
  return response;
}

} // namespace vfxopt
