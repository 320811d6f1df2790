#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "trackanno/engine/types.hpp"

namespace trackanno::engine {

// One instance per line:
//   tracklet_id,video_id,frame,x,y,w,h,objectness,correlation,P_avg,dist_to_pred
// No-measurement instances carry the predicted box and leave correlation and
// dist_to_pred empty.

std::string format_tracklets(const std::vector<Tracklet>& tracklets);
void write_tracklets(const std::filesystem::path& path, const std::vector<Tracklet>& tracklets);
/// Inverse of write_tracklets. Throws InputError with the line number.
std::vector<Tracklet> read_tracklets(const std::filesystem::path& path);
std::vector<Tracklet> parse_tracklets(const std::string& content);

}  // namespace trackanno::engine
