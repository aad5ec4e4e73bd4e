#include "vfxopt/orchestrator.hpp"

#include "vfxopt/http_client.hpp"
#include "vfxopt/image_io.hpp"
#include "vfxopt/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace vfxopt {

namespace {

std::string iteration_dir(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "iter_%03zu", i);
  return buf;
}

VlmAnalysis failed_analysis(const std::string &prompt, const std::string &reason) {
  VlmAnalysis a;
  a.comparison = "no usable reply: " + reason;
  a.refined_prompt = prompt;
  return a;
}

} // namespace

const char *to_string(GenerationMode mode) noexcept {
  return mode == GenerationMode::image_to_video ? "image-to-video" : "text-to-video";
}

GenerationMode parse_generation_mode(std::string_view name) {
  if (name == "text-to-video" || name == "t2v") {
    return GenerationMode::text_to_video;
  }
  if (name == "image-to-video" || name == "i2v") {
    return GenerationMode::image_to_video;
  }
  throw Error(ErrorCategory::validation, "unknown generation mode '" + std::string(name) + "'");
}

std::string AblationSwitches::variant() const {
  std::string out;
  const auto add = [&](bool on, const char *name) {
    if (!on) {
      out += (out.empty() ? "" : "+");
      out += name;
    }
  };
  add(noise_enhance, "no-noise-enhance");
  add(visual_context, "no-visual-context");
  add(logic_context, "no-logic-context");
  return out.empty() ? "default" : out;
}

void OptimizationConfig::validate() const {
  thresholds.validate();
  integrator.validate();
  geometry.validate();
  if (i_max < 1) {
    throw Error(ErrorCategory::validation, "i_max must be at least 1");
  }
  if (!(generated_fps > 0.0) || !std::isfinite(generated_fps)) {
    throw Error(ErrorCategory::validation, "generated fps must be positive");
  }
  if (!endpoints.simulate &&
      (endpoints.generator_url.empty() || endpoints.vlm_url.empty())) {
    throw Error(ErrorCategory::usage,
                "generator and VLM URLs are required unless simulating");
  }
  if (endpoints.simulate && endpoints.simulated_vlm != "oracle" &&
      endpoints.simulated_vlm != "scripted") {
    throw Error(ErrorCategory::validation,
                "simulated VLM must be 'oracle' or 'scripted'");
  }
}

std::vector<double> OptimizationResult::discrepancies() const {
  std::vector<double> out;
  for (const auto &it : iterations) {
    if (it.discrepancy) {
      out.push_back(*it.discrepancy);
    }
  }
  return out;
}

LatentGeometry adapt_geometry(const LatentGeometry &base, std::size_t image_width,
                              std::size_t image_height) {
  if (image_width == 0 || image_height == 0) {
    throw Error(ErrorCategory::validation, "conditioning image is empty");
  }
  const double area = static_cast<double>(base.height * base.width);
  const double aspect = static_cast<double>(image_width) / static_cast<double>(image_height);
  const auto round8 = [](double v) {
    return std::max<std::size_t>(8, static_cast<std::size_t>(std::llround(v / 8.0)) * 8);
  };
  LatentGeometry out = base;
  out.height = round8(std::sqrt(area / aspect));
  out.width = round8(std::sqrt(area * aspect));
  return out;
}

LatentTensor resize_latent(const LatentTensor &latent, std::size_t height, std::size_t width) {
  const auto &s = latent.shape();
  if (s.h == height && s.w == width) {
    return latent;
  }
  const TensorShape out_shape{s.c, s.f, height, width};
  out_shape.validate();
  std::vector<float> out(out_shape.numel());
  const double sy = static_cast<double>(s.h) / static_cast<double>(height);
  const double sx = static_cast<double>(s.w) / static_cast<double>(width);
  for (std::size_t c = 0; c < s.c; ++c) {
    for (std::size_t f = 0; f < s.f; ++f) {
      for (std::size_t y = 0; y < height; ++y) {
        const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                                     static_cast<double>(s.h - 1));
        const auto y0 = static_cast<std::size_t>(fy);
        const auto y1 = std::min(y0 + 1, s.h - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t x = 0; x < width; ++x) {
          const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0,
                                       static_cast<double>(s.w - 1));
          const auto x0 = static_cast<std::size_t>(fx);
          const auto x1 = std::min(x0 + 1, s.w - 1);
          const double wx = fx - static_cast<double>(x0);
          const double top = (1 - wx) * latent.at(c, f, y0, x0) + wx * latent.at(c, f, y0, x1);
          const double bottom =
              (1 - wx) * latent.at(c, f, y1, x0) + wx * latent.at(c, f, y1, x1);
          out[((c * s.f + f) * height + y) * width + x] =
              static_cast<float>((1 - wy) * top + wy * bottom);
        }
      }
    }
  }
  return LatentTensor(out_shape, std::move(out));
}

double consecutive_latent_variance(const OptimizationResult &result) {
  if (result.iterations.size() < 2) {
    return 0.0;
  }
  double acc = 0.0;
  for (std::size_t i = 1; i < result.iterations.size(); ++i) {
    const auto &a = result.iterations[i - 1].latent;
    const auto &b = result.iterations[i].latent;
    acc += squared_distance(a, b) / static_cast<double>(a.size());
  }
  return acc / static_cast<double>(result.iterations.size() - 1);
}

OptimizationResult run_optimization(const OptimizationConfig &config, RunBackends backends,
                                    const ReferenceInput &reference,
                                    const std::string &initial_prompt,
                                    const RunOptions &options) {
  config.validate();
  reference.video.validate();
  if (initial_prompt.empty()) {
    throw Error(ErrorCategory::validation, "initial prompt must not be empty");
  }
  if (config.mode == GenerationMode::image_to_video && !options.image_png) {
    throw Error(ErrorCategory::usage, "image-to-video mode needs a conditioning image");
  }

  OptimizationResult result;
  result.config = config;
  result.initial_prompt = initial_prompt;
  result.inversion_condition = config.inversion_condition.value_or(initial_prompt);

  // Text mode keeps the reference latent's geometry; image mode follows the
  // image's aspect ratio at the same latent area.
  const auto &ref_shape = reference.latent.shape();
  LatentGeometry geometry{ref_shape.f, ref_shape.h, ref_shape.w};
  if (config.mode == GenerationMode::image_to_video) {
    const Image image = decode_png(*options.image_png);
    geometry = adapt_geometry(geometry, image.width, image.height);
  }
  result.latent_shape = {ref_shape.c, geometry.frames, geometry.height, geometry.width};

  const auto save = [&] {
    if (options.out_dir) {
      persist_trajectory(result, *options.out_dir);
    }
  };

  Condition condition{result.inversion_condition, std::nullopt};
  if (options.image_png) {
    condition.image_ref = "conditioning-image";
  }
  result.eta_inv = invert(backends.field, reference.latent, condition, config.integrator);
  result.eta_temporal = resize_latent(enhance_noise(result.eta_inv, config.thresholds),
                                      geometry.height, geometry.width);
  save();

  PromptState state;
  state.subject = config.subject;
  state.environment = config.environment;
  state.desired_effect = config.desired_effect;
  state.current_prompt = initial_prompt;
  std::optional<VideoFrames> previous;
  std::optional<std::string> previous_prompt;

  try {
    for (std::size_t i = 0; i < config.i_max; ++i) {
      IterationRecord record;
      record.iteration = i;
      record.noise_seed = config.base_seed + i;
      const auto fresh = gaussian_noise(result.latent_shape, record.noise_seed);
      record.noise = config.ablation.noise_enhance
                         ? blend(result.eta_temporal, fresh, config.alpha)
                         : fresh;

      GeneratorRequest request;
      request.prompt = state.current_prompt;
      request.noise = record.noise;
      request.image_png = options.image_png;
      request.geometry = geometry;
      auto generated = generate(backends.generator, request);
      record.latent = std::move(generated.latent);
      record.video.frames = std::move(generated.frames);
      record.video.fps = config.generated_fps;
      record.video.label = std::string(kCurrentLabel);

      const bool show_previous = config.ablation.visual_context && previous.has_value();
      const auto context = select_visual_context(
          reference.video, show_previous ? previous : std::nullopt, record.video);
      const auto composite = vstack_videos(context);
      record.composite_segments = composite.segments.size();
      std::vector<std::string> sources{"reference"};
      if (show_previous) {
        sources.push_back(iteration_dir(i - 1) + "/frames");
      }
      sources.push_back(iteration_dir(i) + "/frames");
      record.composite = composite_manifest(composite, sources);

      state.last_prompt = show_previous ? previous_prompt : std::nullopt;
      InstructionOptions instruction_options;
      instruction_options.has_previous = show_previous;
      instruction_options.include_memory = config.ablation.logic_context;
      const VlmRequest vlm_request{build_instruction(state, result.trajectory, instruction_options),
                                   composite};

      std::optional<VlmAnalysis> analysis;
      std::string last_parse_error;
      for (std::size_t attempt = 0; attempt <= config.vlm_retry_cap && !analysis; ++attempt) {
        ++record.vlm_calls;
        const auto reply = refine(backends.vlm, vlm_request);
        try {
          analysis = parse_vlm_response(reply.text);
        } catch (const ParseError &e) {
          last_parse_error = e.what();
        }
      }

      bool accepted = false;
      const bool failed = !analysis;
      if (failed) {
        analysis = failed_analysis(state.current_prompt, last_parse_error);
        record.next_prompt = state.current_prompt;
      } else {
        const auto checked = enforce_content_constraints(state, analysis->refined_prompt);
        accepted = checked.accepted;
        record.next_prompt = checked.prompt;
      }

      if (config.endpoints.simulate) {
        record.discrepancy = effect_discrepancy(record.latent, reference.latent);
      }
      update_history(result.trajectory, state.current_prompt, std::move(*analysis),
                     iteration_dir(i) + "/frames", accepted, failed);

      previous = record.video;
      previous_prompt = state.current_prompt;
      state.current_prompt = record.next_prompt;
      result.iterations.push_back(std::move(record));
      result.final_prompt = state.current_prompt;
      result.final_video = iteration_dir(i) + "/frames";
      save();
    }
  } catch (const std::exception &e) {
    result.error = e.what();
    try {
      save();
    } catch (...) {
      // Report the original failure.
    }
    throw;
  }

  result.complete = true;
  save();
  return result;
}

BackendSet make_backends(const OptimizationConfig &config, const BackendTokens &tokens,
                         std::vector<std::string> vlm_script,
                         std::optional<std::string> image_png) {
  BackendSet set;
  if (config.endpoints.simulate) {
    set.generator = simulated_generator();
    set.vlm = simulated_vlm(config.endpoints.simulated_vlm == "scripted"
                                ? SimulatedVlmMode::scripted
                                : SimulatedVlmMode::oracle,
                            std::move(vlm_script));
    set.field = make_simulation_field({}, config.integrator.horizon);
    return set;
  }
  EndpointConfig generator{config.endpoints.generator_url, kGeneratorTimeout, {},
                           tokens.generator};
  EndpointConfig vlm{config.endpoints.vlm_url, kVlmTimeout, {}, tokens.vlm};
  set.generator = std::make_unique<HttpGeneratorBackend>(generator);
  set.vlm = std::make_unique<HttpVlmBackend>(vlm);
  set.field = std::make_unique<RemoteVelocityField>(generator, std::move(image_png));
  return set;
}

} // namespace vfxopt
