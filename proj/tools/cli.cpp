#include "cli.hpp"

#include "vfxopt/flow.hpp"
#include "vfxopt/http_client.hpp"
#include "vfxopt/image_io.hpp"
#include "vfxopt/media.hpp"
#include "vfxopt/noise_prior.hpp"
#include "vfxopt/npy.hpp"
#include "vfxopt/orchestrator.hpp"
#include "vfxopt/simulation.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vfxopt::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char *kDefaultSubject = "paper lantern";
constexpr const char *kDefaultEnvironment = "still pond";
constexpr const char *kDefaultEffect = "glowing light";
constexpr const char *kDefaultReferencePrompt =
    "a paper lantern drifting above a still pond at dusk, glowing light, intensity=0.8";
constexpr const char *kDefaultInitialPrompt =
    "a paper lantern drifting above a still pond at dusk, glowing light, intensity=0.2";

/// Everything the subcommands may read; unset optionals mean "not given".
struct Options {
  std::string config_path;
  std::string ref_video;
  std::string prompt;
  std::string image;
  std::optional<double> alpha;
  double rho_s = 0.1;
  double rho_m = 0.9;
  std::size_t iters = 10;
  std::size_t steps = 50;
  std::uint64_t seed = 0;
  std::string generator_url;
  std::string vlm_url;
  bool simulate = false;
  std::string out_dir = "out";
  std::string subject;
  std::string environment;
  std::string effect;
  std::string inversion_prompt;
  bool no_noise_enhance = false;
  bool no_visual_context = false;
  bool no_logic_context = false;

  // simulate
  std::string ref_prompt = kDefaultReferencePrompt;
  std::uint64_t ref_seed = 7;

  // invert / enhance / compose
  std::string latent;
  std::string input;
  std::string output;
  std::vector<std::string> videos;
};

int exit_code_for(ErrorCategory category) {
  switch (category) {
  case ErrorCategory::usage:
    return kUsage;
  case ErrorCategory::io:
    return kIo;
  case ErrorCategory::numerical:
    return kNumerical;
  case ErrorCategory::backend:
    return kBackend;
  case ErrorCategory::validation:
  case ErrorCategory::format:
    return kInvalid;
  case ErrorCategory::internal:
    break;
  }
  return kOther;
}

std::optional<std::string> env_token(const char *name) {
  if (const char *value = std::getenv(name); value != nullptr && *value != '\0') {
    return std::string(value);
  }
  return std::nullopt;
}

// Config-file keys are flag names; each becomes "--key=value" placed ahead
// of the real arguments so that explicit flags win.
std::vector<std::string> config_arguments(const std::string &path) {
  json config;
  try {
    config = json::parse(read_file(path));
  } catch (const json::exception &e) {
    throw Error(ErrorCategory::format, "cannot parse config " + path + ": " + e.what());
  }
  if (!config.is_object()) {
    throw Error(ErrorCategory::format, "config " + path + " must be a JSON object");
  }
  std::vector<std::string> args;
  const auto scalar = [](const json &v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  };
  for (const auto &[key, value] : config.items()) {
    if (key == "config") {
      throw Error(ErrorCategory::usage, "config files cannot include other config files");
    }
    if (value.is_array()) {
      for (const auto &item : value) {
        args.push_back("--" + key + "=" + scalar(item));
      }
    } else if (!value.is_null()) {
      args.push_back("--" + key + "=" + scalar(value));
    }
  }
  return args;
}

std::optional<std::string> find_config_path(const std::vector<std::string> &args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      return args[i + 1];
    }
    if (args[i].starts_with("--config=")) {
      return args[i].substr(9);
    }
  }
  return std::nullopt;
}

void add_run_options(CLI::App &cmd, Options &o) {
  cmd.add_option("--config", o.config_path, "JSON file with flag values (flags win)");
  cmd.add_option("--prompt", o.prompt, "Initial text prompt");
  cmd.add_option("--image", o.image, "PNG image for image-to-video mode");
  cmd.add_option("--alpha", o.alpha, "Blend weight of the temporal prior")
      ->check(CLI::Range(0.0, 1.0));
  cmd.add_option("--rho-s", o.rho_s, "Spatial energy removed")->check(CLI::Range(0.0, 1.0));
  cmd.add_option("--rho-m", o.rho_m, "Temporal energy retained")->check(CLI::Range(0.0, 1.0));
  cmd.add_option("--iters", o.iters, "Optimization iterations")->check(CLI::PositiveNumber);
  cmd.add_option("--steps", o.steps, "Inversion Euler steps")->check(CLI::PositiveNumber);
  cmd.add_option("--seed", o.seed, "Base seed; iteration i uses seed + i");
  cmd.add_option("--generator-url", o.generator_url, "Generator service base URL");
  cmd.add_option("--vlm-url", o.vlm_url, "VLM service base URL");
  cmd.add_option("--out-dir", o.out_dir, "Output directory");
  cmd.add_option("--subject", o.subject, "Subject text every prompt must keep");
  cmd.add_option("--environment", o.environment, "Environment text every prompt must keep");
  cmd.add_option("--effect", o.effect, "Desired visual effect");
  cmd.add_option("--inversion-prompt", o.inversion_prompt,
                 "Condition for inverting the reference (default: --prompt)");
  cmd.add_flag("--no-noise-enhance", o.no_noise_enhance, "Ablation: pure fresh noise");
  cmd.add_flag("--no-visual-context", o.no_visual_context,
               "Ablation: never show the previous generation");
  cmd.add_flag("--no-logic-context", o.no_logic_context, "Ablation: withhold text history");
}

OptimizationConfig make_config(const Options &o, bool simulate) {
  OptimizationConfig config;
  config.alpha = BlendWeight(o.alpha.value_or(0.001));
  config.thresholds = {o.rho_s, o.rho_m};
  config.i_max = o.iters;
  config.integrator.steps = o.steps;
  config.base_seed = o.seed;
  config.endpoints.simulate = simulate;
  config.endpoints.generator_url = o.generator_url;
  config.endpoints.vlm_url = o.vlm_url;
  config.mode = o.image.empty() ? GenerationMode::text_to_video : GenerationMode::image_to_video;
  if (!o.inversion_prompt.empty()) {
    config.inversion_condition = o.inversion_prompt;
  }
  config.ablation = {!o.no_noise_enhance, !o.no_visual_context, !o.no_logic_context};
  config.subject = o.subject;
  config.environment = o.environment;
  config.desired_effect = o.effect;
  return config;
}

ReferenceInput load_reference(const std::string &dir, const OptimizationConfig &config) {
  auto loaded = read_video_directory(dir);
  loaded.video.label = std::string(kReferenceLabel);
  if (loaded.latent) {
    return {std::move(loaded.video), std::move(*loaded.latent)};
  }
  if (!config.endpoints.simulate) {
    throw Error(ErrorCategory::validation,
                "reference directory " + dir + " has no latent.npy; encode it first");
  }
  const TensorShape shape{SimulatedGeneratorParams{}.channels, config.geometry.frames,
                          config.geometry.height, config.geometry.width};
  auto latent = latent_from_frames(loaded.video, shape);
  return {std::move(loaded.video), std::move(latent)};
}

int run_and_report(const OptimizationConfig &config, const ReferenceInput &reference,
                   const std::string &prompt, const std::string &image,
                   const std::string &out_dir, std::ostream &out) {
  RunOptions options;
  options.out_dir = fs::path(out_dir);
  if (!image.empty()) {
    options.image_png = read_file(image);
  }
  auto backends = make_backends(
      config, {env_token("VFX_GENERATOR_TOKEN"), env_token("VFX_VLM_TOKEN")}, {},
      options.image_png);
  const auto result =
      run_optimization(config, backends.view(), reference, prompt, options);

  out << "variant: " << config.ablation.variant() << "\n";
  for (const auto &record : result.iterations) {
    const auto &entry = result.trajectory.entries[record.iteration];
    out << "iteration " << record.iteration << ": "
        << (entry.failed ? "failed" : entry.accepted ? "accepted" : "rejected");
    if (record.discrepancy) {
      out << ", discrepancy " << *record.discrepancy;
    }
    out << "\n";
  }
  out << "final prompt: " << result.final_prompt << "\n";
  out << "manifest: " << (fs::path(out_dir) / kManifestName).string() << "\n";
  return kOk;
}

int cmd_optimize(const Options &o, std::ostream &out) {
  if (o.ref_video.empty()) {
    throw Error(ErrorCategory::usage, "optimize needs --ref-video");
  }
  if (o.prompt.empty()) {
    throw Error(ErrorCategory::usage, "optimize needs --prompt");
  }
  const auto config = make_config(o, o.simulate);
  config.validate();
  return run_and_report(config, load_reference(o.ref_video, config), o.prompt, o.image,
                        o.out_dir, out);
}

int cmd_simulate(const Options &o, std::ostream &out) {
  Options opts = o;
  if (opts.prompt.empty()) {
    opts.prompt = kDefaultInitialPrompt;
  }
  if (opts.subject.empty() && opts.environment.empty() && opts.effect.empty() &&
      o.prompt.empty()) {
    opts.subject = kDefaultSubject;
    opts.environment = kDefaultEnvironment;
    opts.effect = kDefaultEffect;
  }
  auto config = make_config(opts, true);

  ReferenceInput reference;
  if (!opts.ref_video.empty()) {
    reference = load_reference(opts.ref_video, config);
  } else {
    if (!config.inversion_condition) {
      config.inversion_condition = opts.ref_prompt;
    }
    SimulatedGenerator generator;
    GeneratorRequest request;
    request.prompt = opts.ref_prompt;
    request.seed = opts.ref_seed;
    request.geometry = config.geometry;
    auto generated = generate(generator, request);
    reference.video.frames = std::move(generated.frames);
    reference.video.fps = config.generated_fps;
    reference.video.label = std::string(kReferenceLabel);
    reference.latent = std::move(generated.latent);
    write_video_directory(fs::path(opts.out_dir) / "reference", reference.video,
                          &reference.latent);
  }
  config.validate();
  return run_and_report(config, reference, opts.prompt, opts.image, opts.out_dir, out);
}

int cmd_invert(const Options &o, std::ostream &out) {
  if (o.output.empty()) {
    throw Error(ErrorCategory::usage, "invert needs --output");
  }
  if (o.latent.empty() == o.ref_video.empty()) {
    throw Error(ErrorCategory::usage, "invert needs exactly one of --latent and --ref-video");
  }
  if (o.prompt.empty()) {
    throw Error(ErrorCategory::usage, "invert needs --prompt (the inversion condition)");
  }
  LatentTensor data;
  if (!o.latent.empty()) {
    data = load_tensor(o.latent);
  } else {
    auto dir = read_video_directory(o.ref_video);
    if (!dir.latent) {
      throw Error(ErrorCategory::validation,
                  "reference directory " + o.ref_video + " has no latent.npy");
    }
    data = std::move(*dir.latent);
  }
  IntegratorConfig integrator;
  integrator.steps = o.steps;
  std::unique_ptr<VelocityField> field;
  if (o.simulate) {
    field = make_simulation_field({}, integrator.horizon);
  } else if (!o.generator_url.empty()) {
    field = std::make_unique<RemoteVelocityField>(EndpointConfig{
        o.generator_url, kGeneratorTimeout, {}, env_token("VFX_GENERATOR_TOKEN")});
  } else {
    throw Error(ErrorCategory::usage, "invert needs --simulate or --generator-url");
  }
  const auto noise = invert(*field, data, Condition{o.prompt, std::nullopt}, integrator);
  save_tensor(noise, o.output);
  const auto stats = tensor_stats(noise);
  out << "wrote " << o.output << " " << noise.shape().to_string() << " mean " << stats.mean
      << " variance " << stats.variance << "\n";
  return kOk;
}

int cmd_enhance(const Options &o, std::ostream &out) {
  if (o.input.empty() || o.output.empty()) {
    throw Error(ErrorCategory::usage, "enhance needs --input and --output");
  }
  const auto inverted = load_tensor(o.input);
  auto result = enhance_noise(inverted, {o.rho_s, o.rho_m});
  if (o.alpha) {
    result = blend(result, gaussian_noise(result.shape(), o.seed), BlendWeight(*o.alpha));
  }
  save_tensor(result, o.output);
  out << "wrote " << o.output << " " << result.shape().to_string() << "\n";
  return kOk;
}

int cmd_compose(const Options &o, std::ostream &out) {
  if (o.videos.size() < 2 || o.videos.size() > 3) {
    throw Error(ErrorCategory::usage, "compose needs two or three --video directories");
  }
  static constexpr std::string_view kLabels2[] = {kReferenceLabel, kCurrentLabel};
  static constexpr std::string_view kLabels3[] = {kReferenceLabel, kPreviousLabel,
                                                  kCurrentLabel};
  std::vector<VideoFrames> videos;
  for (std::size_t i = 0; i < o.videos.size(); ++i) {
    auto video = read_video_directory(o.videos[i]).video;
    video.label = std::string(o.videos.size() == 2 ? kLabels2[i] : kLabels3[i]);
    videos.push_back(std::move(video));
  }
  const auto composite = vstack_videos(videos);
  const fs::path dir(o.out_dir);
  write_video_directory(dir / "frames", composite.video);
  write_file(dir / "composite.json", composite_manifest(composite, o.videos).dump(2) + "\n");
  out << "wrote " << (dir / "composite.json").string() << " (" << composite.segments.size()
      << " segments, " << composite.video.frames.size() << " frames)\n";
  return kOk;
}

} // namespace

int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  std::vector<std::string> args(argv + std::min(argc, 1), argv + argc);

  CLI::App app{"Test-time prompt optimization for visual-effect video generation", "vfxopt"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  Options o;

  auto *optimize = app.add_subcommand("optimize", "Optimize a prompt against a reference video");
  add_run_options(*optimize, o);
  optimize->add_option("--ref-video", o.ref_video, "Reference video directory");
  optimize->add_flag("--simulate", o.simulate, "Use the in-process simulators");

  auto *simulate = app.add_subcommand("simulate", "Full run against in-process simulators");
  add_run_options(*simulate, o);
  simulate->add_option("--ref-video", o.ref_video,
                       "Reference video directory (default: synthesized)");
  simulate->add_option("--ref-prompt", o.ref_prompt, "Prompt that synthesizes the reference");
  simulate->add_option("--ref-seed", o.ref_seed, "Seed for the synthesized reference");

  auto *invert_cmd = app.add_subcommand("invert", "Invert a latent to noise");
  invert_cmd->add_option("--config", o.config_path, "JSON file with flag values");
  invert_cmd->add_option("--latent", o.latent, "Input latent (.npy)");
  invert_cmd->add_option("--ref-video", o.ref_video, "Reference directory with latent.npy");
  invert_cmd->add_option("--prompt", o.prompt, "Inversion condition");
  invert_cmd->add_option("--steps", o.steps, "Euler steps")->check(CLI::PositiveNumber);
  invert_cmd->add_option("--generator-url", o.generator_url, "Velocity service base URL");
  invert_cmd->add_flag("--simulate", o.simulate, "Use the simulation velocity field");
  invert_cmd->add_option("--output", o.output, "Output noise (.npy)");

  auto *enhance = app.add_subcommand("enhance", "Build the temporal noise prior");
  enhance->add_option("--config", o.config_path, "JSON file with flag values");
  enhance->add_option("--input", o.input, "Inverted noise (.npy)");
  enhance->add_option("--output", o.output, "Output (.npy)");
  enhance->add_option("--rho-s", o.rho_s, "Spatial energy removed")->check(CLI::Range(0.0, 1.0));
  enhance->add_option("--rho-m", o.rho_m, "Temporal energy retained")
      ->check(CLI::Range(0.0, 1.0));
  enhance->add_option("--alpha", o.alpha, "Also blend with fresh noise at this weight")
      ->check(CLI::Range(0.0, 1.0));
  enhance->add_option("--seed", o.seed, "Seed of the fresh noise");

  auto *compose = app.add_subcommand("compose", "Stack two or three videos vertically");
  compose->add_option("--config", o.config_path, "JSON file with flag values");
  compose->add_option("--video", o.videos, "Video directory (repeat: reference first)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  compose->add_option("--out-dir", o.out_dir, "Output directory");

  try {
    if (auto path = find_config_path(args); path && !args.empty() && !args[0].starts_with("-")) {
      auto extra = config_arguments(*path);
      args.insert(args.begin() + 1, extra.begin(), extra.end());
    }
    std::reverse(args.begin(), args.end()); // CLI11 consumes a reversed vector
    app.parse(args);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.category());
  }

  try {
    if (optimize->parsed()) return cmd_optimize(o, out);
    if (simulate->parsed()) return cmd_simulate(o, out);
    if (invert_cmd->parsed()) return cmd_invert(o, out);
    if (enhance->parsed()) return cmd_enhance(o, out);
    if (compose->parsed()) return cmd_compose(o, out);
  } catch (const Error &e) {
    err << "error [" << to_string(e.category()) << "]: " << e.what() << "\n";
    return exit_code_for(e.category());
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kOther;
  }
  return kUsage;
}

} // namespace vfxopt::cli
