#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trackanno/core/image.hpp"
#include "trackanno/core/records.hpp"
#include "trackanno/core/video.hpp"
#include "trackanno/motion/kalman.hpp"

namespace trackanno::synth {

/// Procedural video: a static textured world seen through a panning camera,
/// with sprite objects moving smoothly in world coordinates. Object 0 is the
/// annotated target; the rest are distractors. Frames are
/// rendered on demand and are a pure function of (config, frame).
struct SceneConfig {
  int width = 320;
  int height = 240;
  int frames = 600;
  int distractors = 0;  // detectable objects absent from ground truth
  double pan_amplitude = 50.0;
  double pan_period = 240.0;
  double object_amplitude = 0.25;  // fraction of the frame size swept by object paths
  double object_period = 500.0;
  std::uint64_t seed = 1;
};

class Scene {
 public:
  explicit Scene(const SceneConfig& cfg);

  const SceneConfig& config() const { return cfg_; }
  int object_count() const { return static_cast<int>(objects_.size()); }

  Image render(int frame) const;
  /// Box where `object` is drawn in `frame`; integer-aligned.
  BoundingBox object_box(int object, int frame) const;
  BoundingBox target_box(int frame) const { return object_box(0, frame); }
  std::vector<BoundingBox> visible_boxes(int frame) const;
  /// Integer camera offset of the frame in world coordinates.
  std::pair<int, int> camera_offset(int frame) const;
  /// True motion from `frame` to `frame + 1` (static points move by this).
  motion::CameraMotion camera_motion(int frame) const;

 private:
  struct Sprite {
    int w = 0, h = 0;
    std::vector<std::uint8_t> rgb;
    std::vector<std::uint8_t> alpha;
    double cx = 0, cy = 0, ax = 0, ay = 0, px = 0, py = 0, tx = 1, ty = 1;
  };
  SceneConfig cfg_;
  int world_w_ = 0, world_h_ = 0, margin_ = 0;
  std::vector<std::uint8_t> world_rgb_;
  std::vector<Sprite> objects_;
  double pan_phase_ = 0.0;
};

/// Detector stand-in driven by the scene's object boxes.
struct MockDetectorConfig {
  double miss_rate = 0.1;
  double fp_rate = 0.05;  // expected false positives per frame
  double jitter_sigma = 2.0;
  double true_objectness_min = 0.75;
  double true_objectness_max = 0.99;
  double fp_objectness_min = 0.12;
  double fp_objectness_max = 0.6;
  std::uint64_t seed = 1;
};

/// Deterministic per (seed, iteration, video, frame).
std::vector<Detection> mock_detect(const MockDetectorConfig& cfg, const std::string& video_id, int frame_index,
                                   std::span<const BoundingBox> objects, int width, int height, int iteration);

struct WrittenCorpus {
  Corpus corpus;
  GroundTruth ground_truth;
  std::filesystem::path manifest;
  std::filesystem::path ground_truth_path;
  std::filesystem::path objects_path;
};

/// Writes videos/<id>/NNNNNN.png, corpus.json, gt.csv and objects.csv
/// (video_id,frame,x,y,w,h for every visible object). Video i uses seed
/// base.seed * 1000 + i.
WrittenCorpus write_corpus(const std::filesystem::path& dir, int videos, const SceneConfig& base);

/// Objects fixture: every visible object box, keyed by video then frame.
using ObjectIndex = std::map<std::string, std::map<int, std::vector<BoundingBox>>>;
ObjectIndex read_objects(const std::filesystem::path& path);

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t hash_string(const std::string& s);

}  // namespace trackanno::synth
