#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "trackanno/core/image.hpp"

namespace trackanno {

/// A video stored as a directory of zero-padded, numbered PNG frames.
struct VideoSource {
  std::string video_id;
  std::filesystem::path frame_dir;
  int frame_count = 0;
  int width = 0;
  int height = 0;

  std::filesystem::path frame_path(int frame_index) const;
};

/// "000042.png"
std::string frame_filename(int frame_index);

/// Throws RangeError for indices outside [0, frame_count) and InputError
/// (naming the path) for missing, unreadable or mis-sized frames.
Image load_frame(const VideoSource& src, int frame_index);

/// Video ids end up in file names and URLs: [A-Za-z0-9_.-]+ only.
bool valid_video_id(const std::string& id);

struct Corpus {
  std::vector<VideoSource> videos;

  const VideoSource& find(const std::string& video_id) const;
  bool contains(const std::string& video_id) const;
  long total_frames() const;
};

/// Corpus manifest (JSON). Relative frame_dir entries resolve against the
/// manifest's directory.
Corpus load_corpus(const std::filesystem::path& manifest);
void save_corpus(const std::filesystem::path& manifest, const Corpus& corpus);

}  // namespace trackanno
