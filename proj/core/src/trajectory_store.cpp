#include "vfxopt/image_io.hpp"
#include "vfxopt/npy.hpp"
#include "vfxopt/orchestrator.hpp"

#include <cstdio>
#include <system_error>

namespace vfxopt {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string iteration_dir(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "iter_%03zu", i);
  return buf;
}

const json &require(const json &j, const char *key) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw Error(ErrorCategory::format, std::string("manifest lacks \"") + key + "\"");
  }
  return *it;
}

fs::path existing(const fs::path &dir, const std::string &relative) {
  const auto path = dir / relative;
  std::error_code ec;
  if (!fs::exists(path, ec)) {
    throw Error(ErrorCategory::io, "missing file: " + path.string());
  }
  return path;
}

} // namespace

json build_manifest(const OptimizationResult &result) {
  json iterations = json::array();
  for (std::size_t i = 0; i < result.iterations.size(); ++i) {
    const auto &record = result.iterations[i];
    const auto &entry = result.trajectory.entries.at(i);
    const auto dir = iteration_dir(record.iteration);
    iterations.push_back({
        {"iteration", record.iteration},
        {"prompt", entry.prompt},
        {"response", to_json(entry.analysis)},
        {"accepted", entry.accepted},
        {"failed", entry.failed},
        {"next_prompt", record.next_prompt},
        {"noise_seed", record.noise_seed},
        {"vlm_calls", record.vlm_calls},
        {"composite_segments", record.composite_segments},
        {"discrepancy", record.discrepancy ? json(*record.discrepancy) : json(nullptr)},
        {"latent", dir + "/latent.npy"},
        {"noise", dir + "/noise.npy"},
        {"frames", entry.video_ref},
        {"composite", dir + "/composite.json"},
    });
  }
  const auto &s = result.latent_shape;
  json manifest = {
      {"schema_version", kManifestSchemaVersion},
      {"status", result.complete ? "complete" : "partial"},
      {"variant", result.config.ablation.variant()},
      {"config", to_json(result.config)},
      {"initial_prompt", result.initial_prompt},
      {"inversion_condition", result.inversion_condition},
      {"final_prompt", result.final_prompt},
      {"final_video", result.final_video},
      {"latent_shape", {s.c, s.f, s.h, s.w}},
      {"eta_inv", "eta_inv.npy"},
      {"eta_temporal", "eta_temporal.npy"},
      {"iterations", std::move(iterations)},
  };
  if (!result.error.empty()) {
    manifest["error"] = result.error;
  }
  return manifest;
}

void persist_trajectory(const OptimizationResult &result, const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCategory::io, "cannot create " + dir.string() + ": " + ec.message());
  }
  save_tensor(result.eta_inv, dir / "eta_inv.npy");
  save_tensor(result.eta_temporal, dir / "eta_temporal.npy");
  for (const auto &record : result.iterations) {
    const auto iter_dir = dir / iteration_dir(record.iteration);
    fs::create_directories(iter_dir / "frames", ec);
    if (ec) {
      throw Error(ErrorCategory::io, "cannot create " + iter_dir.string() + ": " + ec.message());
    }
    save_tensor(record.latent, iter_dir / "latent.npy");
    save_tensor(record.noise, iter_dir / "noise.npy");
    write_video_directory(iter_dir / "frames", record.video);
    write_file(iter_dir / "composite.json", record.composite.dump(2) + "\n");
  }
  // Replace the manifest last so readers never see it ahead of its files.
  const auto tmp = dir / (std::string(kManifestName) + ".tmp");
  write_file(tmp, build_manifest(result).dump(2) + "\n");
  fs::rename(tmp, dir / kManifestName, ec);
  if (ec) {
    throw Error(ErrorCategory::io, "cannot write manifest in " + dir.string() + ": " +
                                       ec.message());
  }
}

OptimizationResult load_trajectory(const fs::path &dir) {
  const auto manifest_path = existing(dir, kManifestName);
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception &e) {
    throw Error(ErrorCategory::format,
                "cannot parse " + manifest_path.string() + ": " + e.what());
  }

  OptimizationResult result;
  try {
    const auto version = require(manifest, "schema_version").get<int>();
    if (version != kManifestSchemaVersion) {
      throw Error(ErrorCategory::format,
                  "unsupported manifest schema version " + std::to_string(version) +
                      " (expected " + std::to_string(kManifestSchemaVersion) + ")");
    }
    result.config = config_from_json(require(manifest, "config"));
    result.complete = require(manifest, "status").get<std::string>() == "complete";
    result.error = manifest.value("error", std::string{});
    result.initial_prompt = require(manifest, "initial_prompt").get<std::string>();
    result.inversion_condition = require(manifest, "inversion_condition").get<std::string>();
    result.final_prompt = require(manifest, "final_prompt").get<std::string>();
    result.final_video = require(manifest, "final_video").get<std::string>();
    const auto shape = require(manifest, "latent_shape").get<std::vector<std::size_t>>();
    if (shape.size() != 4) {
      throw Error(ErrorCategory::format, "latent_shape must have four extents");
    }
    result.latent_shape = {shape[0], shape[1], shape[2], shape[3]};
    result.eta_inv =
        load_tensor(existing(dir, require(manifest, "eta_inv").get<std::string>()));
    result.eta_temporal =
        load_tensor(existing(dir, require(manifest, "eta_temporal").get<std::string>()));

    for (const auto &item : require(manifest, "iterations")) {
      IterationRecord record;
      record.iteration = require(item, "iteration").get<std::size_t>();
      if (record.iteration != result.iterations.size()) {
        throw Error(ErrorCategory::format, "manifest iterations are not contiguous");
      }
      record.noise_seed = require(item, "noise_seed").get<std::uint64_t>();
      record.vlm_calls = require(item, "vlm_calls").get<std::size_t>();
      record.composite_segments = require(item, "composite_segments").get<std::size_t>();
      if (const auto &d = require(item, "discrepancy"); !d.is_null()) {
        record.discrepancy = d.get<double>();
      }
      record.next_prompt = require(item, "next_prompt").get<std::string>();
      record.latent = load_tensor(existing(dir, require(item, "latent").get<std::string>()));
      record.noise = load_tensor(existing(dir, require(item, "noise").get<std::string>()));
      const auto frames = require(item, "frames").get<std::string>();
      record.video = read_video_directory(existing(dir, frames)).video;
      record.composite =
          json::parse(read_file(existing(dir, require(item, "composite").get<std::string>())));

      update_history(result.trajectory, require(item, "prompt").get<std::string>(),
                     analysis_from_json(require(item, "response")), frames,
                     require(item, "accepted").get<bool>(), require(item, "failed").get<bool>());
      result.iterations.push_back(std::move(record));
    }
  } catch (const json::exception &e) {
    throw Error(ErrorCategory::format,
                "malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  return result;
}

} // namespace vfxopt
