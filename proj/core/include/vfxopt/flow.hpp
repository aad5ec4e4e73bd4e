#pragma once

#include "vfxopt/tensor.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace vfxopt {

/// Conditioning passed to a velocity field: the text prompt and, in
/// image-to-video mode, an opaque reference to the input image.
struct Condition {
  std::string prompt;
  std::optional<std::string> image_ref;

  void validate() const;
};

struct IntegratorConfig {
  std::size_t steps = 50;
  double horizon = 1.0;

  void validate() const;
  double step_size() const noexcept {
    return horizon / static_cast<double>(steps);
  }
};

/// dx/dt = v(x, t; condition). Implementations return a tensor of the same
/// shape as x.
class VelocityField {
public:
  virtual ~VelocityField() = default;

  virtual LatentTensor evaluate(const LatentTensor &x, double t,
                                const Condition &condition) const = 0;

  /// Whether evaluate() may be called from several threads at once.
  virtual bool concurrent_safe() const noexcept { return true; }
};

/// The integrator met a non-finite velocity or state.
class DivergenceError : public Error {
public:
  DivergenceError(std::size_t step, const std::string &detail);
  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

/// Explicit Euler from t = 0 to t = T: noise to data.
LatentTensor integrate_forward(const VelocityField &field,
                               const LatentTensor &noise,
                               const Condition &condition,
                               const IntegratorConfig &config);

/// Explicit Euler from t = T back to t = 0: data to noise. The velocity is
/// evaluated at the current backward state.
LatentTensor invert(const VelocityField &field, const LatentTensor &data,
                    const Condition &condition, const IntegratorConfig &config);

enum class ToyFieldKind { constant, linear, target_attractor };

ToyFieldKind parse_toy_field_kind(std::string_view name);
const char *to_string(ToyFieldKind kind) noexcept;

/// Maps a condition to the data point the target-attractor field flows to.
using TargetFn =
    std::function<LatentTensor(const Condition &, const TensorShape &)>;

struct ToyFieldParams {
  float constant = 0.0f; // constant: v = constant
  double rate = 0.0;     // linear: v = rate * x
  TargetFn target;       // target-attractor; zeros when empty
  double horizon = 1.0;
  double epsilon = 1e-3;
};

/// Analytic fields for verification. target-attractor is
/// v = (target(condition) - x) / (T - t + epsilon).
std::unique_ptr<VelocityField> make_toy_field(ToyFieldKind kind,
                                              ToyFieldParams params);

} // namespace vfxopt
