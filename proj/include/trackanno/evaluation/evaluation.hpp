#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trackanno/core/annotation_store.hpp"
#include "trackanno/core/records.hpp"
#include "trackanno/review/review.hpp"

namespace trackanno::evaluation {

/// Simulated operator: accepts a sample iff the ground truth has a box on
/// that frame with IoU >= theta_iou.
struct SimOpConfig {
  double theta_iou = 0.5;

  void validate() const;
};

/// Minimal click sequence reproducing the operator's per-sample intent under
/// fill-forward: the first sample, every change point, and the last sample.
review::ClickSequence simulate_clicks(std::span<const review::ReviewSample> samples, const GroundTruth& gt,
                                      const std::string& video_id, const SimOpConfig& cfg);

/// Same, from an explicit per-sample intent.
review::ClickSequence minimal_clicks(std::span<const review::ReviewSample> samples,
                                     std::span<const Decision> desired);

/// One proposal shown to the operator before review.
struct Proposal {
  std::string video_id;
  int frame_index = 0;
  BoundingBox box;
};

struct IterationMetrics {
  int iteration = 0;
  std::optional<double> recall_pct;  // needs ground truth
  std::optional<long> fa_before;
  std::optional<long> fa_after;
  long clicks = 0;
  long annotated = 0;  // frames with an operator-confirmed annotation
  double annotated_pct = 0.0;
  long frames_with_object = 0;  // denominator of annotated_pct and recall
  long new_annotations = 0;     // accepted this iteration
};

struct MetricsInput {
  int iteration = 0;
  long clicks = 0;
  std::vector<Proposal> proposals;  // pre-review, per instance
  /// Used as the annotated_pct denominator when no ground truth is given.
  long corpus_frames = 0;
};

/// Frame-level metrics over the operator-annotated part of the corpus (frames
/// seeded manually are excluded from numerators and denominators).
/// Recall matches at IoU >= 0.5; false alarms at cfg.theta_iou. FA-A counts
/// accepted records of this iteration only. Throws InputError when an
/// annotated video has no ground truth.
IterationMetrics compute_metrics(const AnnotationStore& store, const MetricsInput& in, const GroundTruth* gt,
                                 const SimOpConfig& cfg);

/// 100 * (1 - (2*initial + clicks + 2*manual) / (2*total)).
/// Throws InvalidArgument when total is zero or any count is negative.
double workload_reduction(long initial_boxes, long review_clicks, long manual_boxes, long total_boxes);

/// Delimited per-iteration table plus a totals row.
std::string iteration_report(std::span<const IterationMetrics> rows);

}  // namespace trackanno::evaluation
