#pragma once

#include "vfxopt/flow.hpp"
#include "vfxopt/gateway.hpp"
#include "vfxopt/noise_prior.hpp"
#include "vfxopt/prompt.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace vfxopt {

enum class GenerationMode { text_to_video, image_to_video };

const char *to_string(GenerationMode mode) noexcept;
GenerationMode parse_generation_mode(std::string_view name);

/// Loop switches for ablation runs. All on is the full method.
struct AblationSwitches {
  bool noise_enhance = true;  // off: the generator gets pure fresh noise
  bool visual_context = true; // off: the previous generation is never shown
  bool logic_context = true;  // off: the text history is withheld

  /// "default", or the disabled switches joined with '+'.
  std::string variant() const;
  friend bool operator==(const AblationSwitches &, const AblationSwitches &) = default;
};

/// Where the generator and the VLM live.
struct Endpoints {
  bool simulate = false;
  std::string generator_url;
  std::string vlm_url;
  std::string simulated_vlm = "oracle"; // oracle | scripted

  friend bool operator==(const Endpoints &, const Endpoints &) = default;
};

struct OptimizationConfig {
  BlendWeight alpha{0.001};
  ProjectionThresholds thresholds;
  std::size_t i_max = 10;
  IntegratorConfig integrator;
  std::uint64_t base_seed = 0;
  Endpoints endpoints;
  GenerationMode mode = GenerationMode::text_to_video;
  std::optional<std::string> inversion_condition;
  LatentGeometry geometry;  // text-to-video default; image mode adapts it
  double generated_fps = 8.0;
  std::size_t vlm_retry_cap = 3; // re-asks after a malformed reply
  AblationSwitches ablation;

  std::string subject;
  std::string environment;
  std::string desired_effect;

  void validate() const;
};

nlohmann::json to_json(const OptimizationConfig &config);
/// Missing keys keep their defaults; unknown keys are rejected.
OptimizationConfig config_from_json(const nlohmann::json &j);

/// Per-iteration bookkeeping beyond the trajectory entry.
struct IterationRecord {
  std::size_t iteration = 0;
  std::uint64_t noise_seed = 0;
  std::size_t composite_segments = 0;
  std::size_t vlm_calls = 0;
  std::optional<double> discrepancy; // simulation only
  std::string next_prompt;
  LatentTensor latent;
  LatentTensor noise;
  VideoFrames video;
  nlohmann::json composite; // layout manifest
};

struct OptimizationResult {
  OptimizationConfig config;
  std::string initial_prompt;
  std::string inversion_condition;
  std::string final_prompt;
  std::string final_video; // relative reference to the last generation
  TensorShape latent_shape;
  LatentTensor eta_inv;
  LatentTensor eta_temporal;
  Trajectory trajectory;
  std::vector<IterationRecord> iterations;
  bool complete = false;
  std::string error; // set when the run aborted

  std::vector<double> discrepancies() const;
};

/// Backends the loop talks to; none are owned.
struct RunBackends {
  GeneratorBackend &generator;
  VlmBackend &vlm;
  const VelocityField &field;
};

/// Reference clip and its latent (the inversion starts from the latent).
struct ReferenceInput {
  VideoFrames video;
  LatentTensor latent;
};

struct RunOptions {
  /// Written incrementally when set: a failed run leaves a partial manifest.
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::string> image_png; // image-to-video conditioning
};

/// Inverts the reference once, builds the temporal prior, then runs i_max
/// rounds of blend -> generate -> compose -> refine -> constrain -> record.
OptimizationResult run_optimization(const OptimizationConfig &config, RunBackends backends,
                                    const ReferenceInput &reference,
                                    const std::string &initial_prompt,
                                    const RunOptions &options = {});

/// Latent (height, width) for an image: same area as the base geometry,
/// the image's aspect ratio, each side rounded to a multiple of 8.
LatentGeometry adapt_geometry(const LatentGeometry &base, std::size_t image_width,
                              std::size_t image_height);

/// Bilinear resize of every (channel, frame) plane.
LatentTensor resize_latent(const LatentTensor &latent, std::size_t height, std::size_t width);

/// Mean squared per-element difference between consecutive latents.
double consecutive_latent_variance(const OptimizationResult &result);

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr const char *kManifestName = "manifest.json";

nlohmann::json build_manifest(const OptimizationResult &result);
void persist_trajectory(const OptimizationResult &result, const std::filesystem::path &dir);
OptimizationResult load_trajectory(const std::filesystem::path &dir);

/// Owns whatever backends a config asks for (simulators or HTTP clients).
struct BackendSet {
  std::unique_ptr<GeneratorBackend> generator;
  std::unique_ptr<VlmBackend> vlm;
  std::unique_ptr<VelocityField> field;

  RunBackends view() const { return {*generator, *vlm, *field}; }
};

struct BackendTokens {
  std::optional<std::string> generator;
  std::optional<std::string> vlm;
};

BackendSet make_backends(const OptimizationConfig &config, const BackendTokens &tokens = {},
                         std::vector<std::string> vlm_script = {},
                         std::optional<std::string> image_png = std::nullopt);

} // namespace vfxopt
