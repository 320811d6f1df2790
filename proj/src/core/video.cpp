#include "trackanno/core/video.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "trackanno/core/error.hpp"
#include "trackanno/core/records.hpp"

namespace trackanno {

std::string frame_filename(int frame_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d.png", frame_index);
  return buf;
}

std::filesystem::path VideoSource::frame_path(int frame_index) const { return frame_dir / frame_filename(frame_index); }

Image load_frame(const VideoSource& src, int frame_index) {
  if (frame_index < 0 || frame_index >= src.frame_count)
    throw RangeError("frame " + std::to_string(frame_index) + " outside [0, " + std::to_string(src.frame_count) +
                     ") for video " + src.video_id);
  const auto path = src.frame_path(frame_index);
  if (!std::filesystem::exists(path)) throw InputError("missing frame: " + path.string());
  Image img = read_png(path);
  if (img.width != src.width || img.height != src.height)
    throw InputError("frame " + path.string() + " is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                     ", expected " + std::to_string(src.width) + "x" + std::to_string(src.height));
  return img;
}

bool valid_video_id(const std::string& id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
           c == '.';
  });
}

const VideoSource& Corpus::find(const std::string& video_id) const {
  for (const auto& v : videos)
    if (v.video_id == video_id) return v;
  throw NotFound("unknown video: " + video_id);
}

bool Corpus::contains(const std::string& video_id) const {
  return std::any_of(videos.begin(), videos.end(), [&](const VideoSource& v) { return v.video_id == video_id; });
}

long Corpus::total_frames() const {
  long n = 0;
  for (const auto& v : videos) n += v.frame_count;
  return n;
}

Corpus load_corpus(const std::filesystem::path& manifest) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text::read_file(manifest));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("corpus manifest " + manifest.string() + ": " + e.what());
  }
  Corpus corpus;
  const auto base = manifest.parent_path();
  try {
    for (const auto& v : j.at("videos")) {
      VideoSource src;
      src.video_id = v.at("video_id").get<std::string>();
      std::filesystem::path dir = v.at("frame_dir").get<std::string>();
      src.frame_dir = dir.is_absolute() ? dir : base / dir;
      src.frame_count = v.at("frame_count").get<int>();
      src.width = v.at("width").get<int>();
      src.height = v.at("height").get<int>();
      if (!valid_video_id(src.video_id)) throw InputError("invalid video id '" + src.video_id + "'");
      if (src.frame_count < 1 || src.width < 1 || src.height < 1)
        throw InputError("video " + src.video_id + ": frame_count, width and height must be positive");
      if (corpus.contains(src.video_id)) throw InputError("duplicate video id " + src.video_id);
      corpus.videos.push_back(std::move(src));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError("corpus manifest " + manifest.string() + ": " + e.what());
  }
  return corpus;
}

void save_corpus(const std::filesystem::path& manifest, const Corpus& corpus) {
  nlohmann::ordered_json j;
  j["videos"] = nlohmann::ordered_json::array();
  const auto base = manifest.parent_path();
  for (const auto& v : corpus.videos) {
    nlohmann::ordered_json e;
    e["video_id"] = v.video_id;
    std::filesystem::path dir = v.frame_dir;
    if (!base.empty()) dir = std::filesystem::relative(std::filesystem::absolute(dir), std::filesystem::absolute(base));
    e["frame_dir"] = dir.string();
    e["frame_count"] = v.frame_count;
    e["width"] = v.width;
    e["height"] = v.height;
    j["videos"].push_back(std::move(e));
  }
  text::write_file_atomic(manifest, j.dump(2) + "\n");
}

}  // namespace trackanno
