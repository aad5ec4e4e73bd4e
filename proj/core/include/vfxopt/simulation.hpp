#pragma once

#include "vfxopt/flow.hpp"
#include "vfxopt/gateway.hpp"

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vfxopt {

/// In-process stand-ins for the generator and the VLM. The generator reads
/// control tokens from the prompt:
///
///   intensity=<x>      plateau level of the effect curve (default 0.5)
///   onset=<fraction>   start of the ramp as a fraction of the clip (default 0)
///   speed=slow|fast    ramp spans 75% or 25% of the frames (default slow)
///
/// The curve is intensity * clamp((f - onset*F) / ramp, 0, 1).
enum class EffectSpeed { slow, fast };

struct EffectParams {
  double intensity = 0.5;
  double onset = 0.0;
  EffectSpeed speed = EffectSpeed::slow;

  friend bool operator==(const EffectParams &, const EffectParams &) = default;
};

/// Token values found in a prompt; absent tokens stay empty.
struct EffectTokens {
  std::optional<double> intensity;
  std::optional<double> onset;
  std::optional<EffectSpeed> speed;
};

EffectTokens find_effect_tokens(std::string_view prompt);
EffectParams parse_effect_tokens(std::string_view prompt);

/// Rewrites the given tokens in place, appending any the prompt lacks.
/// Tokens left empty in `updates` are not touched.
std::string with_effect_tokens(std::string_view prompt, const EffectTokens &updates);

std::string format_level(double value);

std::vector<double> effect_curve(const EffectParams &params, std::size_t frames);

/// Per-frame mean of a latent over channels and space.
std::vector<double> latent_effect_curve(const LatentTensor &latent);

/// Mean absolute gap between two latents' effect curves (simulation only).
double effect_discrepancy(const LatentTensor &generated, const LatentTensor &reference);

/// Latent levels in [kLevelLow, kLevelHigh] map linearly to 8-bit gray.
inline constexpr double kLevelLow = -0.25;
inline constexpr double kLevelHigh = 1.25;

std::uint8_t level_to_pixel(double level) noexcept;
double pixel_to_level(double pixel) noexcept;

/// Renders each frame as the channel mean of the latent, each latent cell
/// drawn as a pixel_scale x pixel_scale block.
std::vector<Image> render_latent(const LatentTensor &latent, std::size_t pixel_scale);

/// Inverse of render_latent for the simulator: frames resampled to the
/// latent grid, gray levels mapped back, copied to every channel.
LatentTensor latent_from_frames(const VideoFrames &video, const TensorShape &shape);

struct SimulatedGeneratorParams {
  std::size_t channels = 4;
  double texture_scale = 0.05;
  std::size_t pixel_scale = 4;
};

/// Deterministic toy renderer. Latent = effect curve per frame plus a
/// per-frame zero-mean texture scaled from the request noise (or from
/// gaussian_noise(seed) when no noise is sent).
class SimulatedGenerator final : public GeneratorBackend {
public:
  explicit SimulatedGenerator(SimulatedGeneratorParams params = {});

  GeneratorResponse generate(const GeneratorRequest &request) override;

  /// The texture-free latent for a prompt.
  LatentTensor clean_latent(std::string_view prompt, const TensorShape &shape) const;

  const SimulatedGeneratorParams &params() const noexcept { return params_; }
  std::size_t calls() const noexcept { return calls_; }

private:
  SimulatedGeneratorParams params_;
  std::size_t calls_ = 0;
};

std::unique_ptr<SimulatedGenerator> simulated_generator(SimulatedGeneratorParams params = {});

/// Target-attractor field flowing to the simulator's clean latent for the
/// condition prompt.
std::unique_ptr<VelocityField> make_simulation_field(SimulatedGeneratorParams params = {},
                                                     double horizon = 1.0,
                                                     double epsilon = 1.0);

/// Replays canned replies in order.
class ScriptedVlm final : public VlmBackend {
public:
  explicit ScriptedVlm(std::vector<std::string> replies);

  VlmResponse refine(const VlmRequest &request) override;

  std::size_t calls() const noexcept { return calls_; }
  const std::vector<std::string> &instructions() const noexcept { return instructions_; }

private:
  std::deque<std::string> replies_;
  std::vector<std::string> instructions_;
  std::size_t calls_ = 0;
};

/// Effect parameters read back from rendered pixels.
struct MeasuredEffect {
  double intensity = 0.0;
  std::optional<double> onset;       // empty when no activity is visible
  std::optional<EffectSpeed> speed;  // empty when the ramp never settles
};

MeasuredEffect measure_effect(const VideoFrames &segment);

/// Measures segments A and C of the composite and answers in the structured
/// JSON format, moving each control token of the current prompt halfway
/// across the measured A-C gap. Equal measurements return the current prompt
/// unchanged.
class OracleVlm final : public VlmBackend {
public:
  /// Intensity gaps at or below this are treated as equal.
  static constexpr double kIntensityTolerance = 5e-4;

  VlmResponse refine(const VlmRequest &request) override;

  std::size_t calls() const noexcept { return calls_; }

private:
  std::size_t calls_ = 0;
};

enum class SimulatedVlmMode { scripted, oracle };

std::unique_ptr<VlmBackend> simulated_vlm(SimulatedVlmMode mode,
                                          std::vector<std::string> script = {});

/// Text after the last "<label>: " line of an instruction, or empty.
std::string instruction_field(std::string_view instruction, std::string_view label);

} // namespace vfxopt
