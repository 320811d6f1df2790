#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "trackanno/core/records.hpp"
#include "trackanno/core/video.hpp"

namespace trackanno::pipeline {

struct IngestResult {
  DetectionIndex detections;  // each frame in canonical order
  std::size_t count = 0;
  std::vector<std::string> warnings;
};

/// Reads a detection file. Exact duplicate lines are dropped with a warning.
/// Malformed lines throw InputError, out-of-range values ValidationError;
/// both list every offending line number. With a corpus, unknown videos and
/// frames outside the video are validation errors too.
IngestResult ingest_detections(const std::filesystem::path& path, const Corpus* corpus = nullptr);
IngestResult parse_detections(std::string_view content, const std::string& origin, const Corpus* corpus = nullptr);

}  // namespace trackanno::pipeline
