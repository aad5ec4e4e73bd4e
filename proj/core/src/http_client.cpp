#include "vfxopt/http_client.hpp"

#include "vfxopt/wire.hpp"

#include <httplib.h>

namespace vfxopt {

namespace {

using json = nlohmann::json;

struct ParsedUrl {
  std::string origin; // scheme://host[:port]
  std::string prefix; // path prefix without trailing slash
};

ParsedUrl parse_url(const std::string &url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw GatewayError(GatewayError::Kind::validation,
                       "endpoint URL needs a scheme: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) {
    out.prefix = url.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') {
      out.prefix.pop_back();
    }
  }
  return out;
}

std::string describe_failure(const httplib::Result &result, const std::string &url) {
  return httplib::to_string(result.error()) + " (" + url + ")";
}

json post_once(const EndpointConfig &endpoint, std::string_view path,
               const std::string &payload) {
  const auto url = parse_url(endpoint.url);
  httplib::Client client(url.origin);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
      endpoint.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  if (endpoint.bearer_token) {
    client.set_bearer_token_auth(*endpoint.bearer_token);
  }

  const std::string target = url.prefix + std::string(path);
  const auto result = client.Post(target, payload, "application/json");
  if (!result) {
    const auto err = result.error();
    const bool timed_out =
        err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
    throw GatewayError(timed_out ? GatewayError::Kind::timeout
                                 : GatewayError::Kind::transport,
                       describe_failure(result, endpoint.url + target));
  }

  json body;
  try {
    body = json::parse(result->body);
  } catch (const json::exception &) {
    if (result->status == 200) {
      throw GatewayError(GatewayError::Kind::protocol,
                         "response from " + target + " is not JSON");
    }
  }
  if (result->status >= 400) {
    std::string detail = "HTTP " + std::to_string(result->status);
    if (body.is_object()) {
      detail += " " + body.value("code", std::string{}) + ": " +
                body.value("message", std::string{});
    }
    throw GatewayError(result->status < 500 ? GatewayError::Kind::validation
                                            : GatewayError::Kind::backend,
                       detail);
  }
  if (result->status != 200) {
    throw GatewayError(GatewayError::Kind::protocol,
                       "unexpected HTTP status " + std::to_string(result->status));
  }
  return body;
}

} // namespace

json post_json(const EndpointConfig &endpoint, std::string_view path, const json &body) {
  const std::string payload = body.dump();
  return call_with_retries(endpoint.retry,
                           [&] { return post_once(endpoint, path, payload); });
}

HttpGeneratorBackend::HttpGeneratorBackend(EndpointConfig endpoint)
    : endpoint_(std::move(endpoint)) {
  parse_url(endpoint_.url);
}

GeneratorResponse HttpGeneratorBackend::generate(const GeneratorRequest &request) {
  return wire::decode_generator_response(
      post_json(endpoint_, wire::kGeneratePath, wire::encode(request)));
}

HttpVlmBackend::HttpVlmBackend(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {
  parse_url(endpoint_.url);
}

VlmResponse HttpVlmBackend::refine(const VlmRequest &request) {
  return wire::decode_vlm_response(
      post_json(endpoint_, wire::kRefinePath, wire::encode(request)));
}

RemoteVelocityField::RemoteVelocityField(EndpointConfig endpoint,
                                         std::optional<std::string> image_png)
    : endpoint_(std::move(endpoint)), image_png_(std::move(image_png)) {
  parse_url(endpoint_.url);
}

LatentTensor RemoteVelocityField::evaluate(const LatentTensor &x, double t,
                                           const Condition &condition) const {
  wire::VelocityRequest request{x, t, condition.prompt, image_png_};
  std::lock_guard lock(mutex_);
  auto velocity = wire::decode_velocity_response(
      post_json(endpoint_, wire::kVelocityPath, wire::encode(request)));
  if (velocity.shape() != x.shape()) {
    throw GatewayError(GatewayError::Kind::shape_mismatch,
                       "velocity service returned " + velocity.shape().to_string());
  }
  return velocity;
}

} // namespace vfxopt
