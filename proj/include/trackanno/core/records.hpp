#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trackanno/core/geometry.hpp"

namespace trackanno {

struct Detection {
  std::string video_id;
  int frame_index = 0;
  BoundingBox box;
  double objectness = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Canonical in-frame order: box coordinates, then objectness. Used wherever
/// a result must not depend on the order a detector happened to emit boxes.
bool canonical_less(const Detection& a, const Detection& b);

/// Detections of one video keyed by frame.
using FrameDetections = std::map<int, std::vector<Detection>>;
/// All detections keyed by video, then frame.
using DetectionIndex = std::map<std::string, FrameDetections>;

/// Single-object ground truth: at most one box per (video, frame).
class GroundTruth {
 public:
  void add(const std::string& video_id, int frame_index, const BoundingBox& box);
  std::optional<BoundingBox> at(const std::string& video_id, int frame_index) const;
  bool covers(const std::string& video_id) const { return boxes_.count(video_id) != 0; }
  const std::map<int, BoundingBox>& video(const std::string& video_id) const;
  const std::map<std::string, std::map<int, BoundingBox>>& all() const { return boxes_; }
  long frame_count() const;

 private:
  std::map<std::string, std::map<int, BoundingBox>> boxes_;
};

// Line-delimited interchange formats. One record per line, comma separated,
// '#' starts a comment line, blank lines are ignored.
//   detections:   video_id,frame,x,y,w,h,objectness
//   ground truth: video_id,frame,x,y,w,h

std::string format_detection(const Detection& d);
void write_detections(const std::filesystem::path& path, const std::vector<Detection>& dets);

GroundTruth read_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt);

// Text helpers shared by the line formats.
namespace text {

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);
bool skippable(std::string_view line);
std::optional<double> parse_double(std::string_view s);
std::optional<long> parse_long(std::string_view s);
/// Shortest representation that parses back to the same double.
std::string format_double(double v);
std::string read_file(const std::filesystem::path& path);
/// Write via a sibling temp file and rename, so readers never see a torn file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace text

}  // namespace trackanno
