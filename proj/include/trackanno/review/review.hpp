#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trackanno/core/annotation_store.hpp"
#include "trackanno/engine/types.hpp"

namespace trackanno::review {

enum class Reason {
  Spaced,
  LowObjectness,
  LowCorrelation,
  LowAvgObjectness,
  FarFromPrediction,
  TemporalCoverage,
};

const char* to_string(Reason r);

/// A tracklet as put in front of the operator. Suppressed instances already
/// have a decision in the store and are neither sampled nor re-committed.
struct PromptTracklet {
  engine::Tracklet tracklet;
  std::vector<bool> suppressed;  // one flag per instance

  std::string key() const { return tracklet.key(); }
  /// Measured, unsuppressed instance indices in temporal order.
  std::vector<std::size_t> reviewable() const;
  std::size_t suppressed_measured() const;
};

PromptTracklet make_prompt(engine::Tracklet t);

struct ReviewSample {
  std::string sample_id;  // "<video>:<tracklet>:<frame>"
  std::string tracklet_key;
  std::size_t instance_index = 0;
  int frame_index = 0;
  BoundingBox box;
  std::vector<Reason> reasons;
  std::string crop_ref;  // same as sample_id; resolved by the review service
};

std::string sample_id_for(const std::string& tracklet_key, int frame_index);

/// N equally spaced reviewable instances plus up to five hard examples:
/// lowest objectness, lowest correlation, lowest P_avg, farthest from the
/// prediction and the instance farthest in time from every other sample.
/// Throws InvalidArgument when N < 2 or nothing is reviewable.
std::vector<ReviewSample> select_samples(const PromptTracklet& t, int n);
std::vector<ReviewSample> select_samples(const engine::Tracklet& t, int n);

struct Click {
  std::string sample_id;
  Decision decision = Decision::Accepted;
};
using ClickSequence = std::vector<Click>;

/// Fill-forward: each unclicked sample inherits the closest preceding click.
/// Throws InvalidArgument for unknown or out-of-order samples and
/// IncompleteReview when the first or last sample is not clicked.
std::vector<Decision> sample_decisions(std::span<const ReviewSample> samples, const ClickSequence& clicks);

struct InstanceDecision {
  std::size_t instance_index = 0;
  int frame_index = 0;
  Decision decision = Decision::Accepted;

  friend bool operator==(const InstanceDecision&, const InstanceDecision&) = default;
};

struct ReviewOutcome {
  std::string tracklet_key;
  std::vector<InstanceDecision> decisions;  // every reviewable instance, temporal order
  std::vector<Decision> sample_decisions;
  int click_count = 0;
  std::size_t suppressed = 0;

  std::size_t accepted() const;
  std::size_t rejected() const;
};

/// Sample decisions by fill-forward; an unsampled instance between two
/// samples takes their decision when they agree and is rejected when they
/// differ.
ReviewOutcome propagate(const PromptTracklet& t, std::span<const ReviewSample> samples, const ClickSequence& clicks);

/// Rejected proposals only suppress instances whose box overlaps them at
/// least this much; an accepted frame suppresses everything on it.
inline constexpr double kRejectedOverlapIou = 0.5;

bool is_suppressed(const AnnotationStore& store, const std::string& video_id, const engine::Instance& inst);

/// Mark instances already decided in the store; nullopt when nothing
/// reviewable remains.
std::optional<PromptTracklet> filter_prompt(PromptTracklet t, const AnnotationStore& store);
std::vector<PromptTracklet> filter_prompt_set(const std::vector<engine::Tracklet>& tracklets,
                                              const AnnotationStore& store);
std::vector<PromptTracklet> filter_prompt_set(const std::vector<PromptTracklet>& tracklets,
                                              const AnnotationStore& store);

/// Records an outcome would add: measured, unsuppressed instances only, and
/// nothing the store already holds with the same box and decision.
std::vector<AnnotationRecord> outcome_records(const ReviewOutcome& outcome, const PromptTracklet& t,
                                              const AnnotationStore& store, int iteration);

/// Throws ConflictError when an accepted instance lands on a frame accepted
/// with a different box.
void commit_outcome(const ReviewOutcome& outcome, const PromptTracklet& t, AnnotationStore& store, int iteration);

}  // namespace trackanno::review
