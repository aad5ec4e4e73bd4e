#include "vfxopt/orchestrator.hpp"

namespace vfxopt {

using json = nlohmann::json;

json to_json(const OptimizationConfig &c) {
  return {
      {"alpha", c.alpha.alpha()},
      {"rho_s", c.thresholds.rho_s},
      {"rho_m", c.thresholds.rho_m},
      {"i_max", c.i_max},
      {"steps", c.integrator.steps},
      {"horizon", c.integrator.horizon},
      {"seed", c.base_seed},
      {"simulate", c.endpoints.simulate},
      {"generator_url", c.endpoints.generator_url},
      {"vlm_url", c.endpoints.vlm_url},
      {"simulated_vlm", c.endpoints.simulated_vlm},
      {"mode", to_string(c.mode)},
      {"inversion_condition",
       c.inversion_condition ? json(*c.inversion_condition) : json(nullptr)},
      {"frames", c.geometry.frames},
      {"height", c.geometry.height},
      {"width", c.geometry.width},
      {"generated_fps", c.generated_fps},
      {"vlm_retry_cap", c.vlm_retry_cap},
      {"noise_enhance", c.ablation.noise_enhance},
      {"visual_context", c.ablation.visual_context},
      {"logic_context", c.ablation.logic_context},
      {"subject", c.subject},
      {"environment", c.environment},
      {"desired_effect", c.desired_effect},
  };
}

OptimizationConfig config_from_json(const json &j) {
  if (!j.is_object()) {
    throw Error(ErrorCategory::format, "configuration must be a JSON object");
  }
  const json defaults = to_json(OptimizationConfig{});
  for (const auto &[key, value] : j.items()) {
    if (!defaults.contains(key)) {
      throw Error(ErrorCategory::validation, "unknown configuration key '" + key + "'");
    }
  }
  OptimizationConfig c;
  try {
    const auto get = [&](const char *key, auto &target) {
      if (const auto it = j.find(key); it != j.end() && !it->is_null()) {
        it->get_to(target);
      }
    };
    double alpha = c.alpha.alpha();
    get("alpha", alpha);
    c.alpha = BlendWeight(alpha);
    get("rho_s", c.thresholds.rho_s);
    get("rho_m", c.thresholds.rho_m);
    get("i_max", c.i_max);
    get("steps", c.integrator.steps);
    get("horizon", c.integrator.horizon);
    get("seed", c.base_seed);
    get("simulate", c.endpoints.simulate);
    get("generator_url", c.endpoints.generator_url);
    get("vlm_url", c.endpoints.vlm_url);
    get("simulated_vlm", c.endpoints.simulated_vlm);
    std::string mode = to_string(c.mode);
    get("mode", mode);
    c.mode = parse_generation_mode(mode);
    if (const auto it = j.find("inversion_condition"); it != j.end() && !it->is_null()) {
      c.inversion_condition = it->get<std::string>();
    }
    get("frames", c.geometry.frames);
    get("height", c.geometry.height);
    get("width", c.geometry.width);
    get("generated_fps", c.generated_fps);
    get("vlm_retry_cap", c.vlm_retry_cap);
    get("noise_enhance", c.ablation.noise_enhance);
    get("visual_context", c.ablation.visual_context);
    get("logic_context", c.ablation.logic_context);
    get("subject", c.subject);
    get("environment", c.environment);
    get("desired_effect", c.desired_effect);
  } catch (const json::exception &e) {
    throw Error(ErrorCategory::format, std::string("bad configuration value: ") + e.what());
  }
  return c;
}

} // namespace vfxopt
