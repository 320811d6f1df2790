#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "trackanno/core/geometry.hpp"
#include "trackanno/motion/kalman.hpp"
#include "trackanno/visual/template.hpp"

namespace trackanno::engine {

/// Tracklet formation thresholds. Defaults are configuration, recorded with
/// every run.
struct EngineConfig {
  double theta_low = 0.1;   // alarms need objectness > theta_low
  double theta_high = 0.7;  // births need objectness > theta_high
  double theta_avg = 0.4;   // hypotheses with mean window objectness below this die
  int window = 5;           // objectness window length W
  double gamma = 9.21;      // gate: chi-square, 2 dof, 99%
  double c_low = 0.5;
  double c_high = 0.8;
  int min_len = 2;  // measured instances needed to finalize
  motion::KalmanParams kalman;
  double initial_velocity_var = 100.0;

  /// Throws InvalidArgument when thresholds are out of range or inconsistent.
  void validate() const;
};

/// One frame of a hypothesis. `box` is empty for a no-measurement update.
struct Instance {
  int frame_index = 0;
  std::optional<BoundingBox> box;
  double objectness = 0.0;
  std::optional<double> correlation;
  Point predicted_center;
  std::optional<double> distance_to_prediction;
  double p_avg = 0.0;  // window mean after this frame
  double width = 0.0;  // box size, carried from the last measurement when box is empty
  double height = 0.0;

  bool measured() const { return box.has_value(); }
  /// Measured box, or the prediction rendered with the carried size.
  BoundingBox rendered_box() const {
    return box ? *box : BoundingBox::from_center(predicted_center, width, height);
  }
  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Finalized hypothesis: consecutive frames, first and last instance measured.
struct Tracklet {
  std::uint64_t id = 0;
  std::string video_id;
  std::vector<Instance> instances;

  int birth_frame() const { return instances.empty() ? -1 : instances.front().frame_index; }
  int death_frame() const { return instances.empty() ? -1 : instances.back().frame_index; }
  std::size_t measured_count() const;
  /// "video:id", unique across a corpus.
  std::string key() const { return video_id + ":" + std::to_string(id); }

  friend bool operator==(const Tracklet&, const Tracklet&) = default;
};

struct Hypothesis {
  std::uint64_t id = 0;
  visual::Template appearance;
  motion::TrajectoryState trajectory;
  std::vector<Instance> history;
  std::deque<double> objectness_window;
  double last_w = 0.0;
  double last_h = 0.0;
  // Index into the current frame's alarm list of the measurement taken this
  // frame, if any.
  std::optional<std::size_t> alarm_this_frame;

  double p_avg() const;
  std::size_t measured_count() const;
};

}  // namespace trackanno::engine
