#include "vfxopt/wire.hpp"

#include "vfxopt/archive.hpp"
#include "vfxopt/base64.hpp"
#include "vfxopt/image_io.hpp"
#include "vfxopt/npy.hpp"

#include <cstdio>

namespace vfxopt::wire {

namespace {

using json = nlohmann::json;

constexpr std::string_view kManifestMember = "manifest.json";

// Decoding context: request bodies fail as validation errors, response
// bodies as protocol errors.
struct Schema {
  GatewayError::Kind failure;

  [[noreturn]] void fail(const std::string &message) const {
    throw GatewayError(failure, message);
  }

  const json &field(const json &body, const char *key) const {
    if (!body.is_object()) {
      fail("body must be a JSON object");
    }
    const auto it = body.find(key);
    if (it == body.end() || it->is_null()) {
      fail(std::string("missing field '") + key + "'");
    }
    return *it;
  }

  const json *optional_field(const json &body, const char *key) const {
    const auto it = body.find(key);
    return it == body.end() || it->is_null() ? nullptr : &*it;
  }

  std::string text(const json &body, const char *key) const {
    const auto &v = field(body, key);
    if (!v.is_string()) {
      fail(std::string("field '") + key + "' must be a string");
    }
    return v.get<std::string>();
  }

  std::size_t positive(const json &body, const char *key) const {
    const auto &v = field(body, key);
    if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
      fail(std::string("field '") + key + "' must be a positive integer");
    }
    return v.get<std::size_t>();
  }

  // Wraps format errors from base64/NPY/PNG decoding.
  template <class Fn> auto payload(const char *key, Fn &&fn) const {
    try {
      return fn();
    } catch (const GatewayError &) {
      throw;
    } catch (const NonFiniteError &) {
      throw;
    } catch (const Error &e) {
      fail(std::string("field '") + key + "': " + e.what());
    } catch (const json::exception &e) {
      fail(std::string("field '") + key + "': " + e.what());
    }
  }
};

constexpr Schema kRequest{GatewayError::Kind::validation};
constexpr Schema kResponse{GatewayError::Kind::protocol};

std::string frame_member(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05zu.png", i);
  return buf;
}

} // namespace

json encode(const GeneratorRequest &request) {
  json body = {
      {"prompt", request.prompt},
      {"frames", request.geometry.frames},
      {"height", request.geometry.height},
      {"width", request.geometry.width},
  };
  if (request.noise) {
    body["noise_b64"] = base64_encode(encode_npy(*request.noise));
  }
  if (request.image_png) {
    body["image_b64"] = base64_encode(*request.image_png);
  }
  if (request.seed) {
    body["seed"] = *request.seed;
  }
  return body;
}

GeneratorRequest decode_generator_request(const json &body) {
  GeneratorRequest r;
  r.prompt = kRequest.text(body, "prompt");
  r.geometry.frames = kRequest.positive(body, "frames");
  r.geometry.height = kRequest.positive(body, "height");
  r.geometry.width = kRequest.positive(body, "width");
  if (const auto *v = kRequest.optional_field(body, "noise_b64")) {
    r.noise = kRequest.payload("noise_b64", [&] {
      return decode_npy(base64_decode(v->get<std::string>()));
    });
  }
  if (const auto *v = kRequest.optional_field(body, "image_b64")) {
    r.image_png = kRequest.payload("image_b64",
                                   [&] { return base64_decode(v->get<std::string>()); });
  }
  if (const auto *v = kRequest.optional_field(body, "seed")) {
    if (!v->is_number_unsigned()) {
      kRequest.fail("field 'seed' must be a non-negative integer");
    }
    r.seed = v->get<std::uint64_t>();
  }
  r.validate();
  return r;
}

json encode(const GeneratorResponse &response) {
  json frames = json::array();
  for (const auto &f : response.frames) {
    frames.push_back(base64_encode(encode_png(f)));
  }
  return {
      {"latent_b64", base64_encode(encode_npy(response.latent))},
      {"frames_b64", std::move(frames)},
  };
}

GeneratorResponse decode_generator_response(const json &body) {
  GeneratorResponse r;
  const auto latent = kResponse.text(body, "latent_b64");
  r.latent = kResponse.payload("latent_b64",
                               [&] { return decode_npy(base64_decode(latent)); });
  if (const auto *frames = kResponse.optional_field(body, "frames_b64")) {
    if (!frames->is_array()) {
      kResponse.fail("field 'frames_b64' must be an array");
    }
    for (const auto &f : *frames) {
      r.frames.push_back(kResponse.payload(
          "frames_b64", [&] { return decode_png(base64_decode(f.get<std::string>())); }));
    }
  }
  return r;
}

json encode(const VlmRequest &request) {
  return {
      {"instruction", request.instruction},
      {"video_b64", base64_encode(pack_composite(request.video))},
  };
}

VlmRequest decode_vlm_request(const json &body) {
  VlmRequest r;
  r.instruction = kRequest.text(body, "instruction");
  const auto video = kRequest.text(body, "video_b64");
  r.video = kRequest.payload("video_b64",
                             [&] { return unpack_composite(base64_decode(video)); });
  r.validate();
  return r;
}

json encode(const VlmResponse &response) { return {{"text", response.text}}; }

VlmResponse decode_vlm_response(const json &body) {
  VlmResponse r;
  r.text = kResponse.text(body, "text");
  if (r.text.empty()) {
    kResponse.fail("field 'text' is empty");
  }
  return r;
}

json encode(const VelocityRequest &request) {
  json body = {
      {"x_b64", base64_encode(encode_npy(request.x))},
      {"t", request.t},
      {"prompt", request.prompt},
  };
  if (request.image_png) {
    body["image_b64"] = base64_encode(*request.image_png);
  }
  return body;
}

VelocityRequest decode_velocity_request(const json &body) {
  VelocityRequest r;
  const auto x = kRequest.text(body, "x_b64");
  r.x = kRequest.payload("x_b64", [&] { return decode_npy(base64_decode(x)); });
  const auto &t = kRequest.field(body, "t");
  if (!t.is_number()) {
    kRequest.fail("field 't' must be a number");
  }
  r.t = t.get<double>();
  r.prompt = kRequest.text(body, "prompt");
  if (const auto *v = kRequest.optional_field(body, "image_b64")) {
    r.image_png = kRequest.payload("image_b64",
                                   [&] { return base64_decode(v->get<std::string>()); });
  }
  return r;
}

json encode_velocity_response(const LatentTensor &velocity) {
  return {{"velocity_b64", base64_encode(encode_npy(velocity))}};
}

LatentTensor decode_velocity_response(const json &body) {
  const auto v = kResponse.text(body, "velocity_b64");
  return kResponse.payload("velocity_b64", [&] { return decode_npy(base64_decode(v)); });
}

json error_body(std::string_view code, std::string_view message) {
  return {{"code", code}, {"message", message}};
}

std::string pack_composite(const Composite &composite) {
  std::vector<ArchiveEntry> entries;
  json manifest = composite_manifest(composite);
  json names = json::array();
  for (std::size_t i = 0; i < composite.video.frames.size(); ++i) {
    auto name = frame_member(i);
    entries.push_back({name, encode_png(composite.video.frames[i])});
    names.push_back(std::move(name));
  }
  manifest["frames"] = std::move(names);
  manifest["label"] = composite.video.label;
  entries.insert(entries.begin(), {std::string(kManifestMember), manifest.dump()});
  return write_zip(entries);
}

Composite unpack_composite(std::string_view zip_bytes) {
  const auto entries = read_zip(zip_bytes);
  const auto find = [&](std::string_view name) -> const std::string & {
    for (const auto &e : entries) {
      if (e.name == name) {
        return e.data;
      }
    }
    throw Error(ErrorCategory::format, "composite archive lacks " + std::string(name));
  };
  json manifest;
  try {
    manifest = json::parse(find(kManifestMember));
  } catch (const json::exception &e) {
    throw Error(ErrorCategory::format, std::string("bad composite manifest: ") + e.what());
  }
  Composite c;
  c.segments = segments_from_manifest(manifest);
  try {
    c.video.fps = manifest.at("fps").get<double>();
    c.video.label = manifest.value("label", std::string("composite"));
    for (const auto &name : manifest.at("frames")) {
      c.video.frames.push_back(decode_png(find(name.get<std::string>())));
    }
  } catch (const json::exception &e) {
    throw Error(ErrorCategory::format, std::string("bad composite manifest: ") + e.what());
  }
  c.video.validate();
  return c;
}

} // namespace vfxopt::wire
