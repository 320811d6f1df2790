#pragma once

#include <functional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "trackanno/core/records.hpp"
#include "trackanno/core/video.hpp"
#include "trackanno/engine/types.hpp"
#include "trackanno/motion/motion_cache.hpp"

namespace trackanno::engine {

/// Which of the best-matching alarm's roles are allowed for a hypothesis.
///
///                  C < c_low     c_low <= C < c_high    C >= c_high
///   in gate        ∅, d          d                      d
///   not in gate    ∅             ∅, d                   d
///
/// `primary` means the hypothesis itself is updated with d (otherwise it
/// continues without a measurement); `alternative` means a clone is spawned
/// and updated with d.
struct MeasurementRoles {
  bool primary = false;
  bool alternative = false;

  friend bool operator==(const MeasurementRoles&, const MeasurementRoles&) = default;
};

MeasurementRoles classify_measurement(double score, bool in_gate, const EngineConfig& cfg);

/// Multi-hypothesis tracklet formation over one video, one frame at a time.
class TrackletEngine {
 public:
  TrackletEngine(std::string video_id, EngineConfig cfg);

  /// Advance to `frame_index`. `motion` is the camera motion from the
  /// previous frame to this one. Returns tracklets finalized during the step.
  /// Throws InvalidArgument for detections of another video or frame.
  std::vector<Tracklet> step(int frame_index, std::span<const Detection> detections, const Image& frame,
                             const motion::CameraMotion& motion);

  /// End of video: finalize every surviving hypothesis that qualifies and
  /// is not contained in a longer one.
  std::vector<Tracklet> finish();

  const std::vector<Hypothesis>& hypotheses() const { return hypotheses_; }
  /// Alarms of the most recent step, in canonical order.
  const std::vector<Detection>& alarms() const { return alarms_; }
  const EngineConfig& config() const { return cfg_; }

 private:
  using MeasuredSet = std::set<std::tuple<int, double, double, double, double>>;

  std::optional<Tracklet> finalize(const Hypothesis& h);
  /// True when every measurement of `h` already belongs to a finalized
  /// tracklet or to one of `live`.
  bool covered(const Hypothesis& h, const std::vector<const Hypothesis*>& live) const;
  Hypothesis birth(const Detection& d, const visual::Template& appearance, std::size_t alarm, int frame_index);

  std::string video_id_;
  EngineConfig cfg_;
  std::vector<Hypothesis> hypotheses_;
  std::vector<Detection> alarms_;
  std::vector<MeasuredSet> finalized_sets_;
  std::uint64_t next_id_ = 1;
  int last_frame_ = -1;
};

using FrameLoader = std::function<Image(int frame_index)>;

/// Fold `step` over frames 0..frame_count-1 and finish. Camera motion is read
/// from `cache` when present, otherwise estimated and written back into it.
/// Output is sorted by birth frame, then id.
std::vector<Tracklet> run_video(const std::string& video_id, int frame_count, const FrameLoader& load,
                                const FrameDetections& detections, const EngineConfig& cfg,
                                motion::MotionCache* cache = nullptr);

std::vector<Tracklet> run_video(const VideoSource& src, const FrameDetections& detections, const EngineConfig& cfg,
                                motion::MotionCache* cache = nullptr);

}  // namespace trackanno::engine
