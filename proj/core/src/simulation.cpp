#include "vfxopt/simulation.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <regex>

namespace vfxopt {

namespace {

const std::regex &intensity_pattern() {
  static const std::regex re(R"(\bintensity=([-+]?[0-9]*\.?[0-9]+))");
  return re;
}

const std::regex &onset_pattern() {
  static const std::regex re(R"(\bonset=([-+]?[0-9]*\.?[0-9]+))");
  return re;
}

const std::regex &speed_pattern() {
  static const std::regex re(R"(\bspeed=(slow|fast)\b)");
  return re;
}

double to_double(const std::string &text) {
  double value = 0.0;
  const auto *first = text.data();
  const auto *last = first + text.size();
  if (*first == '+') {
    ++first;
  }
  std::from_chars(first, last, value);
  return value;
}

const char *speed_name(EffectSpeed speed) {
  return speed == EffectSpeed::fast ? "fast" : "slow";
}

double ramp_fraction(EffectSpeed speed) {
  return speed == EffectSpeed::fast ? 0.25 : 0.75;
}

// Replaces the first match of `re` with `replacement`, or appends it.
std::string replace_or_append(std::string text, const std::regex &re,
                              const std::string &replacement) {
  std::smatch m;
  if (std::regex_search(text, m, re)) {
    return text.replace(static_cast<std::size_t>(m.position(0)),
                        static_cast<std::size_t>(m.length(0)), replacement);
  }
  if (!text.empty() && text.back() != ' ') {
    text += ' ';
  }
  return text + replacement;
}

double round_to(double value, double quantum) {
  return std::round(value / quantum) * quantum;
}

} // namespace

EffectTokens find_effect_tokens(std::string_view prompt) {
  const std::string text(prompt);
  EffectTokens tokens;
  std::smatch m;
  if (std::regex_search(text, m, intensity_pattern())) {
    tokens.intensity = to_double(m[1].str());
  }
  if (std::regex_search(text, m, onset_pattern())) {
    tokens.onset = to_double(m[1].str());
  }
  if (std::regex_search(text, m, speed_pattern())) {
    tokens.speed = m[1].str() == "fast" ? EffectSpeed::fast : EffectSpeed::slow;
  }
  return tokens;
}

EffectParams parse_effect_tokens(std::string_view prompt) {
  const auto tokens = find_effect_tokens(prompt);
  EffectParams params;
  if (tokens.intensity) {
    params.intensity = std::clamp(*tokens.intensity, 0.0, 1.0);
  }
  if (tokens.onset) {
    params.onset = std::clamp(*tokens.onset, 0.0, 1.0);
  }
  if (tokens.speed) {
    params.speed = *tokens.speed;
  }
  return params;
}

std::string format_level(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  std::string out(buf);
  while (out.back() == '0') {
    out.pop_back();
  }
  if (out.back() == '.') {
    out.pop_back();
  }
  if (out == "-0") {
    out = "0";
  }
  return out;
}

std::string with_effect_tokens(std::string_view prompt, const EffectTokens &updates) {
  std::string out(prompt);
  if (updates.intensity) {
    out = replace_or_append(std::move(out), intensity_pattern(),
                            "intensity=" + format_level(*updates.intensity));
  }
  if (updates.onset) {
    out = replace_or_append(std::move(out), onset_pattern(),
                            "onset=" + format_level(*updates.onset));
  }
  if (updates.speed) {
    out = replace_or_append(std::move(out), speed_pattern(),
                            std::string("speed=") + speed_name(*updates.speed));
  }
  return out;
}

std::vector<double> effect_curve(const EffectParams &params, std::size_t frames) {
  const double f_total = static_cast<double>(frames);
  const double start = params.onset * f_total;
  const double ramp = std::max(1.0, ramp_fraction(params.speed) * f_total);
  std::vector<double> curve(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    curve[f] = params.intensity *
               std::clamp((static_cast<double>(f) - start) / ramp, 0.0, 1.0);
  }
  return curve;
}

std::vector<double> latent_effect_curve(const LatentTensor &latent) {
  const auto &s = latent.shape();
  const std::size_t plane = s.h * s.w;
  std::vector<double> curve(s.f, 0.0);
  const float *data = latent.data();
  for (std::size_t c = 0; c < s.c; ++c) {
    for (std::size_t f = 0; f < s.f; ++f) {
      const float *p = data + (c * s.f + f) * plane;
      curve[f] += std::accumulate(p, p + plane, 0.0);
    }
  }
  for (auto &v : curve) {
    v /= static_cast<double>(s.c * plane);
  }
  return curve;
}

double effect_discrepancy(const LatentTensor &generated, const LatentTensor &reference) {
  const auto a = latent_effect_curve(generated);
  const auto b = latent_effect_curve(reference);
  if (a.size() != b.size()) {
    throw Error(ErrorCategory::validation,
                "effect discrepancy needs equal frame counts (" + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()) + ")");
  }
  double acc = 0.0;
  for (std::size_t f = 0; f < a.size(); ++f) {
    acc += std::abs(a[f] - b[f]);
  }
  return acc / static_cast<double>(a.size());
}

std::uint8_t level_to_pixel(double level) noexcept {
  const double p = (level - kLevelLow) / (kLevelHigh - kLevelLow) * 255.0;
  return static_cast<std::uint8_t>(std::clamp(std::round(p), 0.0, 255.0));
}

double pixel_to_level(double pixel) noexcept {
  return kLevelLow + pixel / 255.0 * (kLevelHigh - kLevelLow);
}

std::vector<Image> render_latent(const LatentTensor &latent, std::size_t pixel_scale) {
  if (pixel_scale == 0) {
    throw Error(ErrorCategory::validation, "pixel scale must be positive");
  }
  const auto &s = latent.shape();
  std::vector<Image> frames;
  frames.reserve(s.f);
  for (std::size_t f = 0; f < s.f; ++f) {
    Image image(s.w * pixel_scale, s.h * pixel_scale);
    for (std::size_t y = 0; y < s.h; ++y) {
      for (std::size_t x = 0; x < s.w; ++x) {
        double acc = 0.0;
        for (std::size_t c = 0; c < s.c; ++c) {
          acc += latent.at(c, f, y, x);
        }
        const auto gray = level_to_pixel(acc / static_cast<double>(s.c));
        for (std::size_t dy = 0; dy < pixel_scale; ++dy) {
          for (std::size_t dx = 0; dx < pixel_scale; ++dx) {
            auto *px = image.pixel(x * pixel_scale + dx, y * pixel_scale + dy);
            px[0] = px[1] = px[2] = gray;
          }
        }
      }
    }
    frames.push_back(std::move(image));
  }
  return frames;
}

SimulatedGenerator::SimulatedGenerator(SimulatedGeneratorParams params)
    : params_(params) {
  if (params_.channels == 0 || params_.pixel_scale == 0 ||
      !std::isfinite(params_.texture_scale) || params_.texture_scale < 0.0) {
    throw Error(ErrorCategory::validation, "invalid simulated generator parameters");
  }
}

LatentTensor SimulatedGenerator::clean_latent(std::string_view prompt,
                                              const TensorShape &shape) const {
  const auto curve = effect_curve(parse_effect_tokens(prompt), shape.f);
  std::vector<float> values(shape.numel());
  const std::size_t plane = shape.h * shape.w;
  for (std::size_t c = 0; c < shape.c; ++c) {
    for (std::size_t f = 0; f < shape.f; ++f) {
      std::fill_n(values.begin() + static_cast<std::ptrdiff_t>((c * shape.f + f) * plane),
                  plane, static_cast<float>(curve[f]));
    }
  }
  return LatentTensor(shape, std::move(values));
}

GeneratorResponse SimulatedGenerator::generate(const GeneratorRequest &request) {
  request.validate();
  ++calls_;
  const TensorShape shape{params_.channels, request.geometry.frames, request.geometry.height,
                          request.geometry.width};
  const LatentTensor noise =
      request.noise ? *request.noise : gaussian_noise(shape, *request.seed);
  const auto &ns = noise.shape();
  const auto curve = effect_curve(parse_effect_tokens(request.prompt), ns.f);

  // Texture is the noise with each frame's mean removed, so the per-frame
  // latent mean is exactly the effect curve.
  const std::size_t plane = ns.h * ns.w;
  std::vector<double> frame_mean(ns.f, 0.0);
  const float *src = noise.data();
  for (std::size_t c = 0; c < ns.c; ++c) {
    for (std::size_t f = 0; f < ns.f; ++f) {
      const float *p = src + (c * ns.f + f) * plane;
      frame_mean[f] += std::accumulate(p, p + plane, 0.0);
    }
  }
  for (auto &m : frame_mean) {
    m /= static_cast<double>(ns.c * plane);
  }

  std::vector<float> values(noise.size());
  for (std::size_t c = 0; c < ns.c; ++c) {
    for (std::size_t f = 0; f < ns.f; ++f) {
      const std::size_t base = (c * ns.f + f) * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        values[base + k] = static_cast<float>(
            curve[f] + params_.texture_scale * (src[base + k] - frame_mean[f]));
      }
    }
  }
  GeneratorResponse response{LatentTensor(ns, std::move(values)), {}};
  response.frames = render_latent(response.latent, params_.pixel_scale);
  return response;
}

std::unique_ptr<SimulatedGenerator> simulated_generator(SimulatedGeneratorParams params) {
  return std::make_unique<SimulatedGenerator>(params);
}

std::unique_ptr<VelocityField> make_simulation_field(SimulatedGeneratorParams params,
                                                     double horizon, double epsilon) {
  ToyFieldParams toy;
  toy.horizon = horizon;
  toy.epsilon = epsilon;
  toy.target = [generator = SimulatedGenerator(params)](const Condition &condition,
                                                        const TensorShape &shape) {
    return generator.clean_latent(condition.prompt, shape);
  };
  return make_toy_field(ToyFieldKind::target_attractor, std::move(toy));
}

ScriptedVlm::ScriptedVlm(std::vector<std::string> replies)
    : replies_(std::make_move_iterator(replies.begin()),
               std::make_move_iterator(replies.end())) {}

VlmResponse ScriptedVlm::refine(const VlmRequest &request) {
  ++calls_;
  instructions_.push_back(request.instruction);
  if (replies_.empty()) {
    throw GatewayError(GatewayError::Kind::script_exhausted,
                       "scripted VLM has no reply left for call " + std::to_string(calls_));
  }
  VlmResponse response{std::move(replies_.front())};
  replies_.pop_front();
  return response;
}

MeasuredEffect measure_effect(const VideoFrames &segment) {
  std::vector<double> curve = mean_intensity_curve(segment);
  for (auto &v : curve) {
    v = pixel_to_level(v);
  }
  MeasuredEffect out;
  if (curve.empty()) {
    return out;
  }
  const double peak = *std::max_element(curve.begin(), curve.end());
  // Readings finer than this are below the rendering's noise floor.
  out.intensity = std::max(0.0, round_to(peak, 1e-3));
  if (peak < 0.01) {
    return out;
  }

  // Ramp samples: strictly between the floor and the plateau.
  const double low = 0.05 * peak;
  const double high = 0.98 * peak;
  const double frames = static_cast<double>(curve.size());
  std::vector<std::size_t> ramp;
  std::size_t first_active = curve.size();
  for (std::size_t f = 0; f < curve.size(); ++f) {
    if (curve[f] > low && first_active == curve.size()) {
      first_active = f;
    }
    if (curve[f] > low && curve[f] < high) {
      ramp.push_back(f);
    }
  }
  if (first_active == curve.size()) {
    return out;
  }

  if (ramp.size() >= 2) {
    // Least-squares line through the ramp; its zero crossing is the start.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto f : ramp) {
      const double x = static_cast<double>(f);
      sx += x;
      sy += curve[f];
      sxx += x * x;
      sxy += x * curve[f];
    }
    const double n = static_cast<double>(ramp.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    if (slope > 0.0) {
      const double start = -intercept / slope;
      out.onset = std::clamp(round_to(start / frames, 0.01), 0.0, 1.0);
      const bool settled = curve.back() >= high;
      const double ramp_frames = peak / slope;
      if (settled || ramp_frames / frames > 0.5) {
        out.speed = ramp_frames / frames > 0.5 ? EffectSpeed::slow : EffectSpeed::fast;
      }
      return out;
    }
  }
  // Too few ramp samples to fit: the ramp is short.
  out.onset = std::clamp(
      round_to((static_cast<double>(first_active) - 1.0) / frames, 0.01), 0.0, 1.0);
  out.speed = EffectSpeed::fast;
  return out;
}

std::string instruction_field(std::string_view instruction, std::string_view label) {
  const std::string key = std::string(label) + ": ";
  std::size_t pos = std::string_view::npos;
  std::size_t search = 0;
  while (true) {
    const auto hit = instruction.find(key, search);
    if (hit == std::string_view::npos) {
      break;
    }
    if (hit == 0 || instruction[hit - 1] == '\n') {
      pos = hit;
    }
    search = hit + 1;
  }
  if (pos == std::string_view::npos) {
    return {};
  }
  const auto begin = pos + key.size();
  const auto end = instruction.find('\n', begin);
  return std::string(instruction.substr(begin, end == std::string_view::npos
                                                   ? std::string_view::npos
                                                   : end - begin));
}

namespace {

const SegmentLayout *find_segment(const Composite &composite, std::string_view label) {
  for (const auto &s : composite.segments) {
    if (s.label == label) {
      return &s;
    }
  }
  return nullptr;
}

VideoFrames segment_video(const Composite &composite, const SegmentLayout &layout) {
  auto video = crop_segment(composite.video, layout);
  if (layout.frame_count > 0 && layout.frame_count < video.frames.size()) {
    video.frames.resize(layout.frame_count);
  }
  return video;
}

std::string describe(const MeasuredEffect &m) {
  std::string text = "effect reaches intensity " + format_level(m.intensity);
  if (m.onset) {
    text += ", starting at " + format_level(*m.onset) + " of the clip";
  } else {
    text += ", no visible onset";
  }
  if (m.speed) {
    text += std::string(", ") + speed_name(*m.speed) + " ramp";
  }
  return text;
}

} // namespace

VlmResponse OracleVlm::refine(const VlmRequest &request) {
  ++calls_;
  const auto *a_layout = find_segment(request.video, kReferenceLabel);
  const auto *c_layout = find_segment(request.video, kCurrentLabel);
  if (a_layout == nullptr || c_layout == nullptr) {
    throw GatewayError(GatewayError::Kind::backend,
                       "oracle VLM needs segments A and C in the composite");
  }
  const std::string current = instruction_field(request.instruction, "Current prompt");
  if (current.empty()) {
    throw GatewayError(GatewayError::Kind::backend,
                       "oracle VLM found no current prompt in the instruction");
  }

  const auto a = measure_effect(segment_video(request.video, *a_layout));
  const auto c = measure_effect(segment_video(request.video, *c_layout));
  const auto params = parse_effect_tokens(current);

  EffectTokens updates;
  std::vector<std::string> differences;
  const double intensity_gap = a.intensity - c.intensity;
  if (std::abs(intensity_gap) > kIntensityTolerance) {
    updates.intensity = std::clamp(params.intensity + 0.5 * intensity_gap, 0.0, 1.0);
    differences.push_back(std::string("C is ") + (intensity_gap > 0 ? "weaker" : "stronger") +
                          " than A by " + format_level(std::abs(intensity_gap)));
  }
  if (a.onset && c.onset && std::abs(*a.onset - *c.onset) > 0.015) {
    updates.onset = std::clamp(params.onset + 0.5 * (*a.onset - *c.onset), 0.0, 1.0);
    differences.push_back(std::string("C starts ") + (*a.onset < *c.onset ? "later" : "earlier") +
                          " than A");
  }
  if (a.speed && c.speed && *a.speed != *c.speed) {
    updates.speed = *a.speed;
    differences.push_back(std::string("C ramps ") + speed_name(*c.speed) + " while A ramps " +
                          speed_name(*a.speed));
  }

  nlohmann::json analysis = {
      {"reference_description", describe(a)},
      {"new_generated_description", describe(c)},
      {"comparison", differences.empty() ? std::string("C matches A")
                                         : [&] {
                                             std::string joined;
                                             for (const auto &d : differences) {
                                               joined += (joined.empty() ? "" : "; ") + d;
                                             }
                                             return joined;
                                           }()},
  };
  if (const auto *b_layout = find_segment(request.video, kPreviousLabel)) {
    analysis["last_generated_description"] =
        describe(measure_effect(segment_video(request.video, *b_layout)));
  }
  const nlohmann::json reply = {
      {"analysis", std::move(analysis)},
      {"refined_prompt", with_effect_tokens(current, updates)},
  };
  return {"Here is my assessment.\n```json\n" + reply.dump(2) + "\n```\n"};
}

LatentTensor latent_from_frames(const VideoFrames &video, const TensorShape &shape) {
  shape.validate();
  video.validate();
  std::vector<float> values(shape.numel());
  const std::size_t plane = shape.h * shape.w;
  const std::size_t count = video.frames.size();
  for (std::size_t f = 0; f < shape.f; ++f) {
    const std::size_t src = std::min(count - 1, f * count / shape.f);
    const Image small = resize_image_bilinear(video.frames[src], shape.w, shape.h);
    for (std::size_t k = 0; k < plane; ++k) {
      const auto *px = small.rgb.data() + 3 * k;
      const double level = pixel_to_level((px[0] + px[1] + px[2]) / 3.0);
      for (std::size_t c = 0; c < shape.c; ++c) {
        values[(c * shape.f + f) * plane + k] = static_cast<float>(level);
      }
    }
  }
  return LatentTensor(shape, std::move(values));
}

std::unique_ptr<VlmBackend> simulated_vlm(SimulatedVlmMode mode,
                                          std::vector<std::string> script) {
  if (mode == SimulatedVlmMode::oracle) {
    return std::make_unique<OracleVlm>();
  }
  return std::make_unique<ScriptedVlm>(std::move(script));
}

} // namespace vfxopt
