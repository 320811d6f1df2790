#pragma once

#include <filesystem>
#include <string>

#include "trackanno/core/annotation_store.hpp"
#include "trackanno/core/video.hpp"

namespace trackanno::pipeline {

struct TrainingSet {
  std::filesystem::path manifest;  // train_list.txt, one frame image path per line
  std::filesystem::path label_dir;
  std::size_t frames = 0;
};

/// "0 cx cy w h", normalized to the frame, six decimals.
std::string yolo_label(const BoundingBox& box, int width, int height);

/// One label file per accepted frame (labels/<video>_<frame>.txt) and a
/// manifest of the frame images, sorted by video then frame. Stale label
/// files are removed. Throws InputError naming a frame whose image is missing.
TrainingSet emit_training_set(const AnnotationStore& store, const Corpus& corpus, const std::filesystem::path& out_dir);

}  // namespace trackanno::pipeline
