#include "vfxopt/image_io.hpp"

#include "vfxopt/npy.hpp"

#include <png.h>

#include <cstdio>
#include <fstream>
#include <iterator>

namespace vfxopt {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kLatentName = "latent.npy";

std::string frame_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05zu.png", index);
  return buf;
}

} // namespace

std::string encode_png(const Image &image) {
  if (image.width == 0 || image.height == 0 ||
      image.rgb.size() != 3 * image.width * image.height) {
    throw Error(ErrorCategory::validation, "cannot encode an empty or malformed image");
  }
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.rgb.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw Error(ErrorCategory::format, "png encode failed: " + message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.rgb.data(), 0,
                                 nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw Error(ErrorCategory::format, "png encode failed: " + message);
  }
  out.resize(size);
  return out;
}

Image decode_png(std::string_view bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    const std::string message = png.message;
    png_image_free(&png);
    throw Error(ErrorCategory::format, "png decode failed: " + message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, rgb.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw Error(ErrorCategory::format, "png decode failed: " + message);
  }
  return Image(png.width, png.height, std::move(rgb));
}

std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCategory::io, "cannot read " + path.string());
  }
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const fs::path &path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorCategory::io, "cannot write " + path.string());
  }
}

void write_video_directory(const fs::path &dir, const VideoFrames &video,
                           const LatentTensor *latent) {
  video.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCategory::io, "cannot create " + dir.string() + ": " + ec.message());
  }
  nlohmann::json names = nlohmann::json::array();
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    const auto name = frame_name(i);
    write_file(dir / name, encode_png(video.frames[i]));
    names.push_back(name);
  }
  nlohmann::json manifest = {
      {"fps", video.fps},
      {"label", video.label},
      {"width", video.width()},
      {"height", video.height()},
      {"frame_count", video.frames.size()},
      {"frames", std::move(names)},
  };
  if (latent != nullptr) {
    save_tensor(*latent, dir / kLatentName);
    manifest["latent"] = kLatentName;
  }
  write_file(dir / kVideoManifestName, manifest.dump(2) + "\n");
}

VideoDirectory read_video_directory(const fs::path &dir) {
  const auto manifest_path = dir / kVideoManifestName;
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCategory::format,
                "bad video manifest " + manifest_path.string() + ": " + e.what());
  }
  VideoDirectory out;
  try {
    out.video.fps = manifest.at("fps").get<double>();
    out.video.label = manifest.value("label", std::string{});
    for (const auto &name : manifest.at("frames")) {
      out.video.frames.push_back(decode_png(read_file(dir / name.get<std::string>())));
    }
    if (manifest.contains("latent")) {
      out.latent = load_tensor(dir / manifest.at("latent").get<std::string>());
    }
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCategory::format,
                "bad video manifest " + manifest_path.string() + ": " + e.what());
  }
  out.video.validate();
  return out;
}

} // namespace vfxopt
