#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "trackanno/pipeline/config.hpp"

namespace trackanno::pipeline {

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string output_tail;  // last lines of combined stdout/stderr
};

/// Runs `command` via /bin/sh -c in its own process group, output going to
/// `log`. On timeout the whole group is killed.
ProcessResult run_command(const std::string& command, double timeout_s, const std::filesystem::path& log);

/// POSIX single-quote quoting.
std::string shell_quote(std::string_view s);

/// Replaces {name} with shell_quote(values[name]). Throws InvalidArgument
/// for placeholders without a value.
std::string expand_command(std::string_view tmpl, const std::map<std::string, std::string>& values);

/// Throw ProcessError with the command, exit status and output tail when
/// the process fails, times out or leaves no output file.
void run_inference(const DetectorContract& d, const std::filesystem::path& model,
                   const std::filesystem::path& frame_list, const std::filesystem::path& detections_out,
                   int iteration, std::uint64_t seed, const std::filesystem::path& log);
void run_training(const DetectorContract& d, const std::filesystem::path& train_list,
                  const std::filesystem::path& model_out, int iteration, std::uint64_t seed,
                  const std::filesystem::path& log);

}  // namespace trackanno::pipeline
