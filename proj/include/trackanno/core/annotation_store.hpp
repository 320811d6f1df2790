#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trackanno/core/geometry.hpp"

namespace trackanno {

enum class Decision { Accepted, Rejected };
enum class Source { ManualInitial, OperatorConfirmed, OperatorRejected };
enum class FrameStatus { None, Accepted, Rejected };

const char* to_string(Decision d);
const char* to_string(Source s);
const char* to_string(FrameStatus s);
Decision parse_decision(std::string_view s);
Source parse_source(std::string_view s);

struct AnnotationRecord {
  std::string video_id;
  int frame_index = 0;
  BoundingBox box;
  Decision decision = Decision::Accepted;
  Source source = Source::OperatorConfirmed;
  int iteration = 0;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

/// Per-frame accepted/rejected boxes with provenance, in commit order.
///
/// Single-object mode: a frame holds at most one accepted record. Rejected
/// records may accumulate (one per rejected proposal). The store is a plain
/// value; callers that share it across threads serialise commits themselves.
class AnnotationStore {
 public:
  /// Append `records` atomically. Throws ConflictError naming the frame when
  /// an accepted record would land on an already-accepted frame (or two in the
  /// batch collide), InvalidArgument for invalid boxes or iterations that go
  /// backwards. On error the store is unchanged.
  void commit(std::span<const AnnotationRecord> records);

  /// Latest decision state of a frame; accepted dominates rejected.
  FrameStatus status(const std::string& video_id, int frame_index) const;

  const AnnotationRecord* accepted_at(const std::string& video_id, int frame_index) const;
  std::vector<const AnnotationRecord*> records_at(const std::string& video_id, int frame_index) const;
  bool contains(const AnnotationRecord& r) const;

  const std::vector<AnnotationRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  int max_iteration() const { return max_iteration_; }

  /// Number of frames with an accepted record, optionally restricted to one source.
  long accepted_frames() const;
  long accepted_frames(Source source) const;

  /// One JSON object per line, stable field order.
  std::string serialize() const;
  static AnnotationStore parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  /// A missing file loads as an empty store.
  static AnnotationStore load(const std::filesystem::path& path);

  friend bool operator==(const AnnotationStore& a, const AnnotationStore& b) { return a.records_ == b.records_; }

 private:
  using Key = std::pair<std::string, int>;
  std::vector<AnnotationRecord> records_;
  std::map<Key, std::vector<std::size_t>> by_frame_;
  int max_iteration_ = 0;
};

}  // namespace trackanno
