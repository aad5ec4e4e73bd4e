#include "vfxopt/flow.hpp"

#include <cmath>
#include <vector>

namespace vfxopt {

void Condition::validate() const {
  if (prompt.empty()) {
    throw Error(ErrorCategory::validation, "condition prompt must be non-empty");
  }
}

void IntegratorConfig::validate() const {
  if (steps < 1) {
    throw Error(ErrorCategory::validation, "integrator needs at least one step");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorCategory::validation, "integration horizon must be positive");
  }
}

DivergenceError::DivergenceError(std::size_t step, const std::string &detail)
    : Error(ErrorCategory::numerical,
            "integration diverged at step " + std::to_string(step) + ": " + detail),
      step_(step) {}

namespace {

// Shared Euler sweep. direction = +1 integrates forward from t = 0,
// direction = -1 integrates backward from t = T.
LatentTensor euler_sweep(const VelocityField &field, const LatentTensor &start,
                         const Condition &condition,
                         const IntegratorConfig &config, int direction) {
  condition.validate();
  config.validate();
  const auto &shape = start.shape();
  const double dt = config.step_size();

  std::vector<double> state(start.values().begin(), start.values().end());
  std::vector<float> snapshot(state.size());
  LatentTensor current = start;
  for (std::size_t k = 0; k < config.steps; ++k) {
    const double t = direction > 0
                         ? static_cast<double>(k) * dt
                         : config.horizon - static_cast<double>(k) * dt;
    LatentTensor velocity;
    try {
      velocity = field.evaluate(current, t, condition);
    } catch (const NonFiniteError &e) {
      throw DivergenceError(k, e.what());
    }
    if (velocity.shape() != shape) {
      throw Error(ErrorCategory::validation,
                  "velocity field changed the shape from " + shape.to_string() +
                      " to " + velocity.shape().to_string());
    }
    for (std::size_t i = 0; i < state.size(); ++i) {
      state[i] += direction * dt * velocity[i];
      snapshot[i] = static_cast<float>(state[i]);
      if (!std::isfinite(snapshot[i])) {
        throw DivergenceError(k, "state overflowed");
      }
    }
    current = LatentTensor(shape, snapshot);
  }
  return current;
}

class ConstantField final : public VelocityField {
public:
  explicit ConstantField(float value) : value_(value) {}
  LatentTensor evaluate(const LatentTensor &x, double,
                        const Condition &) const override {
    return LatentTensor::filled(x.shape(), value_);
  }

private:
  float value_;
};

class LinearField final : public VelocityField {
public:
  explicit LinearField(double rate) : rate_(rate) {}
  LatentTensor evaluate(const LatentTensor &x, double,
                        const Condition &) const override {
    std::vector<float> v(x.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = static_cast<float>(rate_ * x[i]);
    }
    return LatentTensor(x.shape(), std::move(v));
  }

private:
  double rate_;
};

class TargetAttractorField final : public VelocityField {
public:
  explicit TargetAttractorField(ToyFieldParams params)
      : params_(std::move(params)) {}

  LatentTensor evaluate(const LatentTensor &x, double t,
                        const Condition &condition) const override {
    const LatentTensor target = params_.target
                                    ? params_.target(condition, x.shape())
                                    : LatentTensor::zeros(x.shape());
    if (target.shape() != x.shape()) {
      throw Error(ErrorCategory::validation, "attractor target has the wrong shape");
    }
    const double denom = params_.horizon - t + params_.epsilon;
    std::vector<float> v(x.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = static_cast<float>((static_cast<double>(target[i]) - x[i]) / denom);
    }
    return LatentTensor(x.shape(), std::move(v));
  }

private:
  ToyFieldParams params_;
};

} // namespace

LatentTensor integrate_forward(const VelocityField &field,
                               const LatentTensor &noise,
                               const Condition &condition,
                               const IntegratorConfig &config) {
  return euler_sweep(field, noise, condition, config, +1);
}

LatentTensor invert(const VelocityField &field, const LatentTensor &data,
                    const Condition &condition, const IntegratorConfig &config) {
  return euler_sweep(field, data, condition, config, -1);
}

ToyFieldKind parse_toy_field_kind(std::string_view name) {
  if (name == "constant") {
    return ToyFieldKind::constant;
  }
  if (name == "linear") {
    return ToyFieldKind::linear;
  }
  if (name == "target-attractor" || name == "target_attractor") {
    return ToyFieldKind::target_attractor;
  }
  throw Error(ErrorCategory::validation,
              "unknown velocity field kind '" + std::string(name) + "'");
}

const char *to_string(ToyFieldKind kind) noexcept {
  switch (kind) {
  case ToyFieldKind::constant:
    return "constant";
  case ToyFieldKind::linear:
    return "linear";
  case ToyFieldKind::target_attractor:
    return "target-attractor";
  }
  return "unknown";
}

std::unique_ptr<VelocityField> make_toy_field(ToyFieldKind kind,
                                              ToyFieldParams params) {
  switch (kind) {
  case ToyFieldKind::constant:
    return std::make_unique<ConstantField>(params.constant);
  case ToyFieldKind::linear:
    return std::make_unique<LinearField>(params.rate);
  case ToyFieldKind::target_attractor:
    if (!(params.horizon > 0.0) || !(params.epsilon > 0.0)) {
      throw Error(ErrorCategory::validation,
                  "target-attractor needs a positive horizon and epsilon");
    }
    return std::make_unique<TargetAttractorField>(std::move(params));
  }
  throw Error(ErrorCategory::validation, "unknown velocity field kind");
}

} // namespace vfxopt
