#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "trackanno/engine/types.hpp"
#include "trackanno/evaluation/evaluation.hpp"

namespace trackanno::pipeline {

/// External detector. Commands run through /bin/sh with placeholders
/// replaced by shell-quoted paths.
///   train: {train_list} {model_out}
///   infer: {model} {frame_list} {detections_out}
/// Both may also use {iteration} and {seed}.
struct DetectorContract {
  std::string train_command;
  std::string infer_command;
  double timeout_s = 600.0;

  /// Throws InvalidArgument when a required placeholder is missing or an
  /// unknown one is present.
  void validate() const;
};

/// Contract driving the bundled mock detector over a synthetic corpus.
DetectorContract mock_detector_contract(const std::filesystem::path& executable, const std::filesystem::path& objects,
                                        const std::filesystem::path& manifest, double miss = 0.1, double fp = 0.05,
                                        double jitter = 2.0);

struct PipelineConfig {
  std::filesystem::path corpus;        // corpus manifest
  std::filesystem::path ground_truth;  // optional; needed for simulated review and metrics
  std::filesystem::path workdir;
  std::uint64_t seed = 1;
  engine::EngineConfig engine;
  int review_n = 7;
  evaluation::SimOpConfig op;
  double min_gain_pct = 0.5;
  int max_iter = 10;
  DetectorContract detector;

  void validate() const;
};

/// Reads the JSON configuration; relative paths resolve against the file's
/// directory. Missing keys keep their defaults, unknown keys are an error.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& json, const std::filesystem::path& base_dir);
/// Every effective setting, paths absolute.
std::string config_to_json(const PipelineConfig& cfg);

/// Config path from the command line, else TRACKANNO_CONFIG, else
/// ./trackanno.json.
std::filesystem::path resolve_config_path(const std::optional<std::filesystem::path>& cli);

}  // namespace trackanno::pipeline
