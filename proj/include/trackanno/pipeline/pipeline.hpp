#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "trackanno/core/annotation_store.hpp"
#include "trackanno/core/records.hpp"
#include "trackanno/core/video.hpp"
#include "trackanno/evaluation/evaluation.hpp"
#include "trackanno/pipeline/config.hpp"
#include "trackanno/service/review_service.hpp"

namespace trackanno::pipeline {

/// A completed iteration, as recorded in history.jsonl.
struct IterationState {
  int iteration = 0;
  std::filesystem::path model_ref;
  std::filesystem::path store_snapshot;
  evaluation::IterationMetrics metrics;
  double gain_pct = 0.0;  // new accepted frames, percent of the corpus
};

std::string state_to_json(const IterationState& s);
IterationState state_from_json(const std::string& line);

/// True when the last iteration gained less than min_gain_pct (strictly) or
/// reached max_iter. Throws InvalidArgument on an empty history.
bool stop_condition(std::span<const IterationState> history, const PipelineConfig& cfg);

/// Paths inside the work directory.
///   store.jsonl, history.jsonl, .lock, initial/model, motion/<video>.csv,
///   iteration_<k>/{frames.txt, detections.csv, tracklets.csv, journal.jsonl,
///                  store.snapshot.jsonl, metrics.json, train_list.txt, labels/,
///                  model, detector.log}
struct Workspace {
  std::filesystem::path root;

  std::filesystem::path store() const { return root / "store.jsonl"; }
  std::filesystem::path history() const { return root / "history.jsonl"; }
  std::filesystem::path lock() const { return root / ".lock"; }
  std::filesystem::path initial_dir() const { return root / "initial"; }
  std::filesystem::path motion(const std::string& video_id) const { return root / "motion" / (video_id + ".csv"); }
  std::filesystem::path iteration_dir(int k) const { return root / ("iteration_" + std::to_string(k)); }
  std::filesystem::path staging_dir(int k) const { return root / ("iteration_" + std::to_string(k) + ".tmp"); }
};

/// Exclusive O_EXCL lock file, one iteration in flight per work directory.
/// Throws ConflictError when the lock is held.
class WorkspaceLock {
 public:
  explicit WorkspaceLock(std::filesystem::path path);
  ~WorkspaceLock();
  WorkspaceLock(const WorkspaceLock&) = delete;
  WorkspaceLock& operator=(const WorkspaceLock&) = delete;

 private:
  std::filesystem::path path_;
};

std::vector<IterationState> load_history(const Workspace& ws);

struct IterationOptions {
  service::ReviewDriver review;
  const GroundTruth* ground_truth = nullptr;  // metrics; optional
  service::Clock clock = service::wall_clock_ms;
  std::ostream* log = nullptr;
};

/// One pass of the loop: infer on frames without an accepted annotation,
/// ingest, form tracklets per video, review, commit, emit the training set,
/// train, and record metrics. The work directory only changes if every step
/// succeeds; on failure the store is left byte-identical.
IterationState run_iteration(const PipelineConfig& cfg, const Corpus& corpus, const IterationOptions& opts);

/// Iterate until stop_condition or `max_iterations` more iterations.
std::vector<IterationState> run_loop(const PipelineConfig& cfg, const Corpus& corpus, const IterationOptions& opts,
                                     std::optional<int> max_iterations = std::nullopt);

/// Seed the store with manual annotations taken from `gt`: every K-th frame
/// of every video, or whole videos. Returns the number of records added.
long bootstrap_every(const PipelineConfig& cfg, const Corpus& corpus, const GroundTruth& gt, int every);
long bootstrap_videos(const PipelineConfig& cfg, const Corpus& corpus, const GroundTruth& gt,
                      const std::vector<std::string>& videos);

/// Per-iteration table and, with ground truth, the workload reduction.
std::string report(const PipelineConfig& cfg, const Corpus& corpus, const GroundTruth* gt);

/// Accepted annotations of the store as a ground-truth style CSV.
void export_annotations(const AnnotationStore& store, const std::filesystem::path& path);

}  // namespace trackanno::pipeline
