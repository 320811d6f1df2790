#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "trackanno/motion/kalman.hpp"

namespace trackanno::motion {

/// Camera motion per (video, frame k), meaning the motion from k to k+1.
/// Persisted one record per line: video_id,frame,du,dv
class MotionCache {
 public:
  std::optional<CameraMotion> get(const std::string& video_id, int frame_index) const;
  void put(const std::string& video_id, int frame_index, const CameraMotion& m);
  std::size_t size() const { return entries_.size(); }

  void save(const std::filesystem::path& path) const;
  /// Missing file loads empty. Malformed lines throw InputError.
  static MotionCache load(const std::filesystem::path& path);

 private:
  std::map<std::pair<std::string, int>, CameraMotion> entries_;
};

}  // namespace trackanno::motion
