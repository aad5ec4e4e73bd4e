#pragma once

#include "vfxopt/media.hpp"
#include "vfxopt/tensor.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace vfxopt {

std::string encode_png(const Image &image);
Image decode_png(std::string_view bytes);

/// Name of the sidecar manifest inside a frame directory.
inline constexpr std::string_view kVideoManifestName = "video.json";

/// A frame directory holds frame_00000.png, frame_00001.png, ... and a
/// video.json sidecar with fps, label, geometry and the ordered file list.
/// A latent (latent.npy) may sit next to the frames.
struct VideoDirectory {
  VideoFrames video;
  std::optional<LatentTensor> latent;
};

void write_video_directory(const std::filesystem::path &dir,
                           const VideoFrames &video,
                           const LatentTensor *latent = nullptr);
VideoDirectory read_video_directory(const std::filesystem::path &dir);

/// Reads a whole file; throws Error(io) naming the path on failure.
std::string read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::string_view bytes);

} // namespace vfxopt
