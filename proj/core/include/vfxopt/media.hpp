#pragma once

#include "vfxopt/error.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vfxopt {

/// Interleaved 8-bit RGB image.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(std::size_t width, std::size_t height);
  Image(std::size_t width, std::size_t height, std::vector<std::uint8_t> rgb);

  std::uint8_t *pixel(std::size_t x, std::size_t y) noexcept {
    return rgb.data() + 3 * (y * width + x);
  }
  const std::uint8_t *pixel(std::size_t x, std::size_t y) const noexcept {
    return rgb.data() + 3 * (y * width + x);
  }

  friend bool operator==(const Image &, const Image &) = default;
};

/// Segment tags of the composite: reference, previous generation, current
/// generation.
inline constexpr std::string_view kReferenceLabel = "A";
inline constexpr std::string_view kPreviousLabel = "B";
inline constexpr std::string_view kCurrentLabel = "C";

struct VideoFrames {
  std::vector<Image> frames;
  double fps = 8.0;
  std::string label;

  /// Throws unless every frame shares one non-empty resolution and fps > 0.
  void validate() const;
  std::size_t width() const { return frames.empty() ? 0 : frames.front().width; }
  std::size_t height() const { return frames.empty() ? 0 : frames.front().height; }
  double duration() const { return static_cast<double>(frames.size()) / fps; }

  friend bool operator==(const VideoFrames &, const VideoFrames &) = default;
};

Image resize_image_bilinear(const Image &image, std::size_t width,
                            std::size_t height);

/// Bilinear resample with pixel-center alignment; results round half away
/// from zero.
VideoFrames resize_bilinear(const VideoFrames &video, std::size_t width,
                            std::size_t height);

/// Nearest-timestamp frame selection at the target rate.
VideoFrames resample_fps(const VideoFrames &video, double target_fps);

struct SegmentLayout {
  std::string label;
  std::size_t y_offset = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t frame_count = 0; // before last-frame hold
  double source_fps = 0.0;

  friend bool operator==(const SegmentLayout &, const SegmentLayout &) = default;
};

struct Composite {
  VideoFrames video;
  std::vector<SegmentLayout> segments;
};

/// Normalizes 2 or 3 clips (reference first) to the narrowest width and the
/// reference frame rate, then stacks them top to bottom. Shorter clips hold
/// their final frame.
Composite vstack_videos(std::span<const VideoFrames> videos);

/// Composite manifest: segment labels, per-segment sources, geometry, fps.
nlohmann::json composite_manifest(const Composite &composite,
                                  std::span<const std::string> sources = {});
std::vector<SegmentLayout> segments_from_manifest(const nlohmann::json &manifest);

/// Rows [y_offset, y_offset + height) of every composite frame.
VideoFrames crop_segment(const VideoFrames &composite, const SegmentLayout &segment);

/// Per-frame mean over all pixels and channels, in [0, 255].
std::vector<double> mean_intensity_curve(const VideoFrames &video);

} // namespace vfxopt
