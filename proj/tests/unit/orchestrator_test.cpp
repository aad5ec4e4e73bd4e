#include "vfxopt/image_io.hpp"
#include "vfxopt/npy.hpp"
#include "vfxopt/orchestrator.hpp"
#include "vfxopt/simulation.hpp"

#include "scenario.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

namespace vfxopt {
namespace {

using namespace testing_support;

std::string reply(const std::string &refined) {
  return nlohmann::json{{"analysis", {{"comparison", "scripted"}}}, {"refined_prompt", refined}}
      .dump();
}

/// Oracle that keeps every instruction it was given.
class RecordingVlm final : public VlmBackend {
public:
  VlmResponse refine(const VlmRequest &request) override {
    instructions.push_back(request.instruction);
    segments.push_back(request.video.segments.size());
    return oracle_.refine(request);
  }
  std::vector<std::string> instructions;
  std::vector<std::size_t> segments;

private:
  OracleVlm oracle_;
};

/// Simulated generator that fails on a chosen call.
class FailingGenerator final : public GeneratorBackend {
public:
  explicit FailingGenerator(std::size_t fail_on) : fail_on_(fail_on) {}
  GeneratorResponse generate(const GeneratorRequest &request) override {
    if (++calls_ == fail_on_) {
      throw GatewayError(GatewayError::Kind::backend, "generator crashed");
    }
    return inner_.generate(request);
  }

private:
  SimulatedGenerator inner_;
  std::size_t fail_on_;
  std::size_t calls_ = 0;
};

TEST(Orchestrator, DefaultRunConverges) {
  const auto result = run_scenario(scenario_config());
  ASSERT_TRUE(result.complete);
  ASSERT_EQ(result.trajectory.size(), 10u);
  ASSERT_EQ(result.iterations.size(), 10u);
  const auto d = result.discrepancies();
  ASSERT_EQ(d.size(), 10u);
  EXPECT_LE(d.back(), 0.1 * d.front());
  for (std::size_t i = 1; i < d.size(); ++i) {
    EXPECT_LE(d[i], d[i - 1] + 1e-12) << i;
  }
  EXPECT_EQ(result.iterations[0].composite_segments, 2u);
  for (std::size_t i = 1; i < 10; ++i) {
    EXPECT_EQ(result.iterations[i].composite_segments, 3u);
  }
  EXPECT_EQ(result.final_prompt, result.iterations.back().next_prompt);
  EXPECT_EQ(result.final_video, "iter_009/frames");
  EXPECT_EQ(result.inversion_condition, kReferencePrompt);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(result.iterations[i].noise_seed, i);
    EXPECT_EQ(result.iterations[i].vlm_calls, 1u);
    EXPECT_TRUE(result.trajectory.entries[i].accepted);
  }
}

TEST(Orchestrator, SingleIterationHasTwoSegments) {
  auto config = scenario_config();
  config.i_max = 1;
  const auto result = run_scenario(config);
  ASSERT_EQ(result.iterations.size(), 1u);
  EXPECT_EQ(result.iterations[0].composite_segments, 2u);
  EXPECT_EQ(result.iterations[0].composite["segments"].size(), 2u);
}

TEST(Orchestrator, NoiseIsTheVariancePreservingBlend) {
  auto config = scenario_config();
  config.i_max = 3;
  config.alpha = BlendWeight(0.3);
  TempDir dir;
  RunOptions options;
  options.out_dir = dir.path();
  const auto result = run_scenario(config, options);
  const auto temporal = load_tensor(dir / "eta_temporal.npy");
  EXPECT_EQ(temporal, result.eta_temporal);
  for (const auto &record : result.iterations) {
    const auto fresh = gaussian_noise(result.latent_shape, config.base_seed + record.iteration);
    EXPECT_EQ(record.noise, blend(temporal, fresh, config.alpha)) << record.iteration;
  }
}

TEST(Orchestrator, FullPriorWeightRepeatsTheSameNoise) {
  auto config = scenario_config();
  config.i_max = 3;
  config.alpha = BlendWeight(1.0);
  const auto result = run_scenario(config);
  for (const auto &record : result.iterations) {
    EXPECT_EQ(record.noise, result.eta_temporal);
  }
}

TEST(Orchestrator, PriorIsTheEnhancedInversion) {
  auto config = scenario_config();
  config.i_max = 1;
  const auto result = run_scenario(config);
  EXPECT_EQ(result.eta_temporal, enhance_noise(result.eta_inv, config.thresholds));
  const auto field = make_simulation_field();
  EXPECT_EQ(result.eta_inv, invert(*field, scenario_reference(config).latent,
                                   {kReferencePrompt, std::nullopt}, config.integrator));
}

TEST(Orchestrator, InversionConditionDefaultsToInitialPrompt) {
  auto config = scenario_config();
  config.i_max = 1;
  config.inversion_condition.reset();
  EXPECT_EQ(run_scenario(config).inversion_condition, kInitialPrompt);
}

TEST(Orchestrator, MalformedRepliesAreRetriedThenCarriedForward) {
  auto config = scenario_config();
  config.i_max = 2;
  config.endpoints.simulated_vlm = "scripted";
  std::vector<std::string> script(4, "I think it looks fine.");
  script.push_back("```json\n" + reply("a paper lantern on a still pond, intensity=0.5") +
                   "\n```");
  const auto result = run_scenario(config, {}, script);
  ASSERT_EQ(result.iterations.size(), 2u);
  EXPECT_EQ(result.iterations[0].vlm_calls, 4u);
  EXPECT_TRUE(result.trajectory.entries[0].failed);
  EXPECT_FALSE(result.trajectory.entries[0].accepted);
  EXPECT_EQ(result.iterations[0].next_prompt, kInitialPrompt);
  EXPECT_EQ(result.trajectory.entries[1].prompt, kInitialPrompt);
  EXPECT_EQ(result.iterations[1].vlm_calls, 1u);
  EXPECT_TRUE(result.trajectory.entries[1].accepted);
  EXPECT_EQ(result.final_prompt, "a paper lantern on a still pond, intensity=0.5");
}

TEST(Orchestrator, RetryCapIsConfigurable) {
  auto config = scenario_config();
  config.i_max = 1;
  config.vlm_retry_cap = 0;
  config.endpoints.simulated_vlm = "scripted";
  const auto result = run_scenario(config, {}, {"nope"});
  EXPECT_EQ(result.iterations[0].vlm_calls, 1u);
  EXPECT_TRUE(result.trajectory.entries[0].failed);
}

TEST(Orchestrator, DroppedSubjectIsRejected) {
  auto config = scenario_config();
  config.i_max = 3;
  config.endpoints.simulated_vlm = "scripted";
  const auto result = run_scenario(
      config, {},
      {reply("a glowing orb above a still pond, intensity=0.5"),
       reply("a paper lantern drifting above a still pond, intensity=0.6"),
       reply("a paper lantern in an empty void, intensity=0.7")});
  EXPECT_FALSE(result.trajectory.entries[0].accepted);
  EXPECT_EQ(result.iterations[0].next_prompt, kInitialPrompt);
  EXPECT_TRUE(result.trajectory.entries[1].accepted);
  EXPECT_FALSE(result.trajectory.entries[2].accepted);
  EXPECT_EQ(result.final_prompt, "a paper lantern drifting above a still pond, intensity=0.6");
}

TEST(Orchestrator, BackendFailureLeavesPartialManifest) {
  auto config = scenario_config();
  config.i_max = 5;
  TempDir dir;
  RunOptions options;
  options.out_dir = dir.path();
  FailingGenerator generator(3);
  OracleVlm vlm;
  const auto field = make_simulation_field();
  try {
    run_optimization(config, {generator, vlm, *field}, scenario_reference(config),
                     kInitialPrompt, options);
    FAIL() << "expected the generator failure to propagate";
  } catch (const GatewayError &e) {
    EXPECT_EQ(e.kind(), GatewayError::Kind::backend);
  }
  const auto manifest = nlohmann::json::parse(read_file(dir / kManifestName));
  EXPECT_EQ(manifest["status"], "partial");
  EXPECT_EQ(manifest["iterations"].size(), 2u);
  EXPECT_NE(manifest["error"].get<std::string>().find("generator crashed"), std::string::npos);
  const auto loaded = load_trajectory(dir.path());
  EXPECT_FALSE(loaded.complete);
  EXPECT_EQ(loaded.iterations.size(), 2u);
}

TEST(Orchestrator, ScriptExhaustionAbortsTheRun) {
  auto config = scenario_config();
  config.i_max = 2;
  config.endpoints.simulated_vlm = "scripted";
  EXPECT_THROW(run_scenario(config, {}, {reply("a paper lantern, still pond")}), GatewayError);
}

TEST(Orchestrator, RequiresUrlsUnlessSimulating) {
  auto config = scenario_config();
  config.endpoints.simulate = false;
  try {
    config.validate();
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.category(), ErrorCategory::usage);
  }
  config.endpoints.generator_url = "http://g";
  config.endpoints.vlm_url = "http://v";
  EXPECT_NO_THROW(config.validate());
}

TEST(Orchestrator, RejectsEmptyPromptAndBadIterations) {
  auto config = scenario_config();
  auto backends = make_backends(config);
  EXPECT_THROW(run_optimization(config, backends.view(), scenario_reference(config), ""), Error);
  config.i_max = 0;
  EXPECT_THROW(config.validate(), Error);
}

TEST(Ablation, VariantNames) {
  EXPECT_EQ(AblationSwitches{}.variant(), "default");
  EXPECT_EQ((AblationSwitches{false, true, true}).variant(), "no-noise-enhance");
  EXPECT_EQ((AblationSwitches{true, false, true}).variant(), "no-visual-context");
  EXPECT_EQ((AblationSwitches{true, true, false}).variant(), "no-logic-context");
  EXPECT_EQ((AblationSwitches{false, false, false}).variant(),
            "no-noise-enhance+no-visual-context+no-logic-context");
}

TEST(Ablation, NoNoiseEnhanceUsesFreshNoise) {
  auto config = scenario_config();
  config.i_max = 3;
  config.ablation.noise_enhance = false;
  const auto result = run_scenario(config);
  for (const auto &record : result.iterations) {
    EXPECT_EQ(record.noise, gaussian_noise(result.latent_shape, record.noise_seed));
  }
}

TEST(Ablation, NoNoiseEnhanceRaisesLatentVariance) {
  auto config = scenario_config();
  const auto with_prior = run_scenario(config);
  config.ablation.noise_enhance = false;
  const auto without = run_scenario(config);
  EXPECT_GT(consecutive_latent_variance(without), consecutive_latent_variance(with_prior));
}

TEST(Ablation, ContextSwitchesShapeTheVlmInput) {
  auto run = [](AblationSwitches switches) {
    auto config = scenario_config();
    config.i_max = 3;
    config.ablation = switches;
    auto backends = make_backends(config);
    RecordingVlm vlm;
    run_optimization(config, {*backends.generator, vlm, *backends.field},
                     scenario_reference(config), kInitialPrompt);
    return vlm;
  };
  const auto full = run({});
  EXPECT_EQ(full.segments, (std::vector<std::size_t>{2, 3, 3}));
  EXPECT_NE(full.instructions[2].find("1. iteration 0"), std::string::npos);

  const auto no_visual = run({true, false, true});
  EXPECT_EQ(no_visual.segments, (std::vector<std::size_t>{2, 2, 2}));
  EXPECT_EQ(no_visual.instructions[2].find("- \"B\""), std::string::npos);

  const auto no_logic = run({true, true, false});
  EXPECT_EQ(no_logic.segments, (std::vector<std::size_t>{2, 3, 3}));
  EXPECT_NE(no_logic.instructions[2].find("Previous history: none"), std::string::npos);
}

TEST(Geometry, AdaptKeepsAreaAndAspect) {
  const LatentGeometry base{16, 32, 32};
  EXPECT_EQ(adapt_geometry(base, 100, 100), base);
  const auto wide = adapt_geometry(base, 200, 100);
  EXPECT_EQ(wide.frames, 16u);
  EXPECT_EQ(wide.height, 24u);
  EXPECT_EQ(wide.width, 48u);
  const auto tall = adapt_geometry(base, 100, 200);
  EXPECT_EQ(tall.height, 48u);
  EXPECT_EQ(tall.width, 24u);
  EXPECT_EQ(adapt_geometry({4, 8, 8}, 1000, 1).height, 8u);
  EXPECT_THROW(adapt_geometry(base, 0, 10), Error);
}

TEST(Geometry, ResizeLatentPreservesConstants) {
  const auto flat = LatentTensor::filled({2, 3, 4, 4}, 0.25f);
  const auto resized = resize_latent(flat, 8, 16);
  EXPECT_EQ(resized.shape(), (TensorShape{2, 3, 8, 16}));
  for (const float v : resized.values()) {
    EXPECT_FLOAT_EQ(v, 0.25f);
  }
  EXPECT_EQ(resize_latent(flat, 4, 4), flat);
}

TEST(ImageToVideo, GeometryFollowsTheImage) {
  auto config = scenario_config();
  config.i_max = 2;
  config.mode = GenerationMode::image_to_video;
  RunOptions options;
  options.image_png = encode_png(Image(64, 32, std::vector<std::uint8_t>(64 * 32 * 3, 90)));
  const auto result = run_scenario(config, options);
  EXPECT_EQ(result.latent_shape, (TensorShape{4, 16, 8, 24}));
  EXPECT_EQ(result.eta_temporal.shape(), result.latent_shape);
  EXPECT_EQ(result.eta_inv.shape(), (TensorShape{4, 16, 16, 16}));
  EXPECT_EQ(result.iterations[1].latent.shape(), result.latent_shape);
  EXPECT_EQ(result.iterations[1].composite_segments, 3u);
}

TEST(ImageToVideo, NeedsAnImage) {
  auto config = scenario_config();
  config.mode = GenerationMode::image_to_video;
  try {
    run_scenario(config);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.category(), ErrorCategory::usage);
  }
}

TEST(Modes, Parse) {
  EXPECT_EQ(parse_generation_mode("t2v"), GenerationMode::text_to_video);
  EXPECT_EQ(parse_generation_mode("image-to-video"), GenerationMode::image_to_video);
  EXPECT_STREQ(to_string(GenerationMode::image_to_video), "image-to-video");
  EXPECT_THROW(parse_generation_mode("audio"), Error);
}

TEST(Orchestrator, RepeatedRunsAreIdentical) {
  auto config = scenario_config();
  config.i_max = 3;
  TempDir a;
  TempDir b;
  RunOptions oa;
  oa.out_dir = a.path();
  RunOptions ob;
  ob.out_dir = b.path();
  run_scenario(config, oa);
  run_scenario(config, ob);
  EXPECT_EQ(read_file(a / kManifestName), read_file(b / kManifestName));
  EXPECT_EQ(read_file(a / "iter_002/latent.npy"), read_file(b / "iter_002/latent.npy"));
}

} // namespace
} // namespace vfxopt
