#pragma once

#include <array>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trackanno/core/annotation_store.hpp"
#include "trackanno/core/error.hpp"
#include "trackanno/core/image.hpp"
#include "trackanno/engine/types.hpp"
#include "trackanno/evaluation/evaluation.hpp"
#include "trackanno/review/journal.hpp"
#include "trackanno/review/review.hpp"

namespace trackanno::service {

using Clock = std::function<std::int64_t()>;
using FrameSource = std::function<Image(const std::string& video_id, int frame_index)>;

/// Milliseconds since the epoch.
std::int64_t wall_clock_ms();

struct SessionDescriptor {
  std::string session_id;
  int iteration = 0;
  std::vector<std::string> videos;  // empty: every video
  std::size_t queued = 0;
  bool empty = false;
};

struct TrackletSummary {
  std::string tracklet_key;
  std::string video_id;
  int birth_frame = 0;
  int death_frame = 0;
  std::size_t length = 0;
  std::size_t measured = 0;
  std::size_t suppressed = 0;
};

struct NextTracklet {
  bool done = false;
  TrackletSummary tracklet;
  std::vector<review::ReviewSample> samples;
  int n = 0;
};

struct DecisionSummary {
  std::string tracklet_key;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t suppressed = 0;
  int click_count = 0;

  friend bool operator==(const DecisionSummary&, const DecisionSummary&) = default;
};

struct Progress {
  std::string session_id;
  std::size_t done = 0;
  std::size_t total = 0;
  long clicks = 0;
  long annotated = 0;  // frames with an accepted annotation in the store
  bool closed = false;
};

/// Decisions for a tracklet that was already committed; carries the outcome
/// recorded the first time.
class ReplayConflict : public ConflictError {
 public:
  ReplayConflict(const std::string& msg, DecisionSummary prior) : ConflictError(msg), prior_(std::move(prior)) {}
  const DecisionSummary& prior() const { return prior_; }

 private:
  DecisionSummary prior_;
};

/// Tracklet review for one iteration, independent of transport. Sessions
/// queue the iteration's prompt set (restricted to a video filter) in order
/// of birth frame; decisions are posted per tracklet, propagated here and
/// committed to `store`. Every click is journaled, and constructing the
/// service over an existing journal replays it, restoring sessions and
/// cursors. All methods are serialized on one mutex.
class ReviewService {
 public:
  ReviewService(int iteration, std::vector<engine::Tracklet> tracklets, AnnotationStore& store, int n,
                FrameSource frames, std::filesystem::path journal, Clock clock = wall_clock_ms);

  int iteration() const { return iteration_; }
  int n() const { return n_; }

  /// Idempotent per filter. Throws ConflictError when the filter overlaps
  /// another open session, InvalidArgument for a different iteration.
  SessionDescriptor create_session(int iteration, std::vector<std::string> videos);
  /// Throws NotFound for unknown sessions.
  NextTracklet next_tracklet(const std::string& session_id);
  /// Throws NotFound (session or tracklet), ReplayConflict (tracklet already
  /// committed), InvalidArgument (not the current tracklet, bad clicks,
  /// closed session) and IncompleteReview.
  DecisionSummary post_decisions(const std::string& session_id, const std::string& tracklet_key,
                                 const review::ClickSequence& clicks);
  /// PNG of the sample's box with 20% context on each side, clipped to the
  /// frame. Throws NotFound for samples never served.
  std::vector<std::uint8_t> get_crop(const std::string& sample_id);
  Progress progress(const std::string& session_id) const;
  Progress close(const std::string& session_id);

  std::vector<SessionDescriptor> sessions() const;
  long total_clicks() const;
  /// True once every queued tracklet of every session is done, or at least
  /// one session exists and all sessions are closed.
  bool finished();
  /// Blocks until finished().
  void wait_finished();

 private:
  struct Item {
    review::PromptTracklet prompt;
    std::optional<std::vector<review::ReviewSample>> samples;
    std::optional<DecisionSummary> outcome;
    bool skipped = false;
  };
  struct Session {
    SessionDescriptor desc;
    std::vector<std::size_t> queue;  // indices into items_
    std::size_t cursor = 0;
    long clicks = 0;
    bool closed = false;
  };
  struct SampleRef {
    std::string video_id;
    int frame_index = 0;
    BoundingBox box;
  };

  static std::string session_id_for(int iteration, const std::vector<std::string>& videos);
  SessionDescriptor create_locked(int iteration, std::vector<std::string> videos);
  Session& session(const std::string& id);
  const Session& session(const std::string& id) const;
  /// Skips tracklets with nothing left to review; returns the cursor item.
  Item* current(Session& s);
  DecisionSummary post_locked(Session& s, const std::string& tracklet_key, const review::ClickSequence& clicks,
                              bool journal);
  bool finished_locked();
  void replay();

  int iteration_;
  int n_;
  AnnotationStore& store_;
  FrameSource frames_;
  review::ReviewJournal journal_;
  Clock clock_;
  std::vector<Item> items_;
  std::map<std::string, std::size_t> by_key_;
  std::map<std::string, Session> sessions_;
  std::map<std::string, SampleRef> samples_;
  std::map<std::string, std::vector<std::uint8_t>> crops_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
};

/// How a pipeline iteration gets its tracklets reviewed.
using ReviewDriver = std::function<void(ReviewService&)>;

/// Reviews every pending tracklet in one session over all videos, clicking
/// as the ground truth dictates, then closes the session.
ReviewDriver simulated_operator(const GroundTruth& gt, evaluation::SimOpConfig cfg);

/// Crop rectangle for a box: 20% margin per side, clipped to the frame.
/// Returns [x0, y0, x1, y1) in integer pixels.
std::array<int, 4> crop_rect(const BoundingBox& box, int width, int height);

}  // namespace trackanno::service
