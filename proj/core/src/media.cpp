#include "vfxopt/media.hpp"

#include <algorithm>
#include <cmath>

namespace vfxopt {

Image::Image(std::size_t w, std::size_t h) : width(w), height(h), rgb(3 * w * h, 0) {}

Image::Image(std::size_t w, std::size_t h, std::vector<std::uint8_t> data)
    : width(w), height(h), rgb(std::move(data)) {
  if (rgb.size() != 3 * w * h) {
    throw Error(ErrorCategory::validation, "RGB buffer does not match image size");
  }
}

void VideoFrames::validate() const {
  if (frames.empty()) {
    throw Error(ErrorCategory::validation, "video '" + label + "' has no frames");
  }
  if (!(fps > 0.0) || !std::isfinite(fps)) {
    throw Error(ErrorCategory::validation, "video '" + label + "' has fps <= 0");
  }
  const auto w = frames.front().width;
  const auto h = frames.front().height;
  if (w == 0 || h == 0) {
    throw Error(ErrorCategory::validation, "video '" + label + "' has empty frames");
  }
  for (const auto &f : frames) {
    if (f.width != w || f.height != h || f.rgb.size() != 3 * w * h) {
      throw Error(ErrorCategory::validation,
                  "video '" + label + "' mixes frame resolutions");
    }
  }
}

Image resize_image_bilinear(const Image &image, std::size_t width,
                            std::size_t height) {
  if (width == 0 || height == 0) {
    throw Error(ErrorCategory::validation, "resize target must be at least 1x1");
  }
  if (width == image.width && height == image.height) {
    return image;
  }
  const double sx = static_cast<double>(image.width) / static_cast<double>(width);
  const double sy = static_cast<double>(image.height) / static_cast<double>(height);
  const auto max_x = static_cast<double>(image.width - 1);
  const auto max_y = static_cast<double>(image.height - 1);

  Image out(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx =
          std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - static_cast<double>(x0);
      std::uint8_t *dst = out.pixel(x, y);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double top = (1.0 - wx) * image.pixel(x0, y0)[ch] + wx * image.pixel(x1, y0)[ch];
        const double bottom =
            (1.0 - wx) * image.pixel(x0, y1)[ch] + wx * image.pixel(x1, y1)[ch];
        const double v = (1.0 - wy) * top + wy * bottom;
        // std::round rounds half away from zero.
        dst[ch] = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
      }
    }
  }
  return out;
}

VideoFrames resize_bilinear(const VideoFrames &video, std::size_t width,
                            std::size_t height) {
  if (video.frames.empty()) {
    throw Error(ErrorCategory::validation, "cannot resize a video with no frames");
  }
  VideoFrames out;
  out.fps = video.fps;
  out.label = video.label;
  out.frames.reserve(video.frames.size());
  for (const auto &f : video.frames) {
    out.frames.push_back(resize_image_bilinear(f, width, height));
  }
  return out;
}

VideoFrames resample_fps(const VideoFrames &video, double target_fps) {
  if (!(target_fps > 0.0) || !std::isfinite(target_fps)) {
    throw Error(ErrorCategory::validation, "target fps must be positive");
  }
  if (target_fps == video.fps || video.frames.size() <= 1) {
    VideoFrames out = video;
    out.fps = target_fps;
    return out;
  }
  const std::size_t n = video.frames.size();
  const double ratio = video.fps / target_fps;
  const auto count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(n) / ratio)));
  VideoFrames out;
  out.fps = target_fps;
  out.label = video.label;
  out.frames.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    const auto src = static_cast<std::size_t>(
        std::floor(static_cast<double>(j) * ratio + 0.5));
    out.frames.push_back(video.frames[std::min(src, n - 1)]);
  }
  return out;
}

Composite vstack_videos(std::span<const VideoFrames> videos) {
  if (videos.size() < 2 || videos.size() > 3) {
    throw Error(ErrorCategory::validation,
                "a composite stacks 2 or 3 videos, got " + std::to_string(videos.size()));
  }
  for (const auto &v : videos) {
    v.validate();
  }
  std::size_t target_width = videos.front().width();
  for (const auto &v : videos) {
    target_width = std::min(target_width, v.width());
  }
  const double target_fps = videos.front().fps;

  std::vector<VideoFrames> normalized;
  Composite composite;
  std::size_t total_height = 0;
  std::size_t frame_count = 0;
  for (const auto &v : videos) {
    const auto height = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(v.height()) *
                                                 static_cast<double>(target_width) /
                                                 static_cast<double>(v.width()))));
    normalized.push_back(resample_fps(resize_bilinear(v, target_width, height), target_fps));
    SegmentLayout seg;
    seg.label = v.label;
    seg.y_offset = total_height;
    seg.width = target_width;
    seg.height = height;
    seg.frame_count = normalized.back().frames.size();
    seg.source_fps = v.fps;
    composite.segments.push_back(seg);
    total_height += height;
    frame_count = std::max(frame_count, seg.frame_count);
  }

  composite.video.fps = target_fps;
  composite.video.label = "composite";
  composite.video.frames.reserve(frame_count);
  const std::size_t row_bytes = 3 * target_width;
  for (std::size_t j = 0; j < frame_count; ++j) {
    Image frame(target_width, total_height);
    for (std::size_t s = 0; s < normalized.size(); ++s) {
      const auto &segment = normalized[s];
      const Image &src = segment.frames[std::min(j, segment.frames.size() - 1)];
      std::copy(src.rgb.begin(), src.rgb.end(),
                frame.rgb.begin() +
                    static_cast<std::ptrdiff_t>(composite.segments[s].y_offset * row_bytes));
    }
    composite.video.frames.push_back(std::move(frame));
  }
  return composite;
}

nlohmann::json composite_manifest(const Composite &composite,
                                  std::span<const std::string> sources) {
  nlohmann::json segments = nlohmann::json::array();
  for (std::size_t i = 0; i < composite.segments.size(); ++i) {
    const auto &s = composite.segments[i];
    nlohmann::json entry = {
        {"label", s.label},
        {"y_offset", s.y_offset},
        {"width", s.width},
        {"height", s.height},
        {"frame_count", s.frame_count},
        {"source_fps", s.source_fps},
    };
    if (i < sources.size()) {
      entry["source"] = sources[i];
    }
    segments.push_back(std::move(entry));
  }
  return {
      {"fps", composite.video.fps},
      {"width", composite.video.width()},
      {"height", composite.video.height()},
      {"frame_count", composite.video.frames.size()},
      {"segments", std::move(segments)},
  };
}

std::vector<SegmentLayout> segments_from_manifest(const nlohmann::json &manifest) {
  std::vector<SegmentLayout> out;
  try {
    for (const auto &entry : manifest.at("segments")) {
      SegmentLayout s;
      s.label = entry.at("label").get<std::string>();
      s.y_offset = entry.at("y_offset").get<std::size_t>();
      s.width = entry.at("width").get<std::size_t>();
      s.height = entry.at("height").get<std::size_t>();
      s.frame_count = entry.at("frame_count").get<std::size_t>();
      s.source_fps = entry.value("source_fps", 0.0);
      out.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCategory::format, std::string("bad composite manifest: ") + e.what());
  }
  return out;
}

VideoFrames crop_segment(const VideoFrames &composite, const SegmentLayout &segment) {
  if (segment.y_offset + segment.height > composite.height() ||
      segment.width != composite.width()) {
    throw Error(ErrorCategory::validation,
                "segment '" + segment.label + "' lies outside the composite");
  }
  VideoFrames out;
  out.fps = composite.fps;
  out.label = segment.label;
  const std::size_t row_bytes = 3 * segment.width;
  for (const auto &frame : composite.frames) {
    const auto begin = frame.rgb.begin() +
                       static_cast<std::ptrdiff_t>(segment.y_offset * row_bytes);
    out.frames.emplace_back(
        segment.width, segment.height,
        std::vector<std::uint8_t>(
            begin, begin + static_cast<std::ptrdiff_t>(segment.height * row_bytes)));
  }
  return out;
}

std::vector<double> mean_intensity_curve(const VideoFrames &video) {
  std::vector<double> curve;
  curve.reserve(video.frames.size());
  for (const auto &frame : video.frames) {
    double acc = 0.0;
    for (auto v : frame.rgb) {
      acc += v;
    }
    curve.push_back(frame.rgb.empty() ? 0.0 : acc / static_cast<double>(frame.rgb.size()));
  }
  return curve;
}

} // namespace vfxopt
