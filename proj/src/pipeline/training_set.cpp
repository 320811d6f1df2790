#include "trackanno/pipeline/training_set.hpp"

#include <cstdio>
#include <set>

#include "trackanno/core/error.hpp"
#include "trackanno/core/records.hpp"

namespace trackanno::pipeline {

namespace fs = std::filesystem;

std::string yolo_label(const BoundingBox& box, int width, int height) {
  if (width <= 0 || height <= 0) throw InvalidArgument("frame size must be positive");
  Point c = box.center();
  char buf[160];
  std::snprintf(buf, sizeof buf, "0 %.6f %.6f %.6f %.6f", c.x / width, c.y / height, box.w / width,
                box.h / height);
  return buf;
}

TrainingSet emit_training_set(const AnnotationStore& store, const Corpus& corpus, const fs::path& out_dir) {
  std::map<std::pair<std::string, int>, BoundingBox> accepted;
  for (const auto& r : store.records()) {
    if (r.decision == Decision::Accepted) accepted[{r.video_id, r.frame_index}] = r.box;
  }

  TrainingSet ts;
  ts.manifest = out_dir / "train_list.txt";
  ts.label_dir = out_dir / "labels";
  fs::create_directories(ts.label_dir);

  std::string manifest;
  std::set<std::string> written;
  for (const auto& [key, box] : accepted) {
    if (!corpus.contains(key.first)) throw InputError("accepted frame in unknown video " + key.first);
    const VideoSource& v = corpus.find(key.first);
    fs::path image = fs::absolute(v.frame_path(key.second));
    if (!fs::exists(image)) {
      throw InputError("missing frame image for " + key.first + " frame " + std::to_string(key.second) + ": " +
                       image.string());
    }
    std::string name = key.first + "_" + frame_filename(key.second);
    name.replace(name.size() - 4, 4, ".txt");
    fs::path label = ts.label_dir / name;
    std::string content = yolo_label(box, v.width, v.height) + "\n";
    if (!fs::exists(label) || text::read_file(label) != content) text::write_file_atomic(label, content);
    written.insert(name);
    manifest += image.string() + "\n";
  }
  for (const auto& entry : fs::directory_iterator(ts.label_dir)) {
    if (!written.count(entry.path().filename().string())) fs::remove(entry.path());
  }
  text::write_file_atomic(ts.manifest, manifest);
  ts.frames = accepted.size();
  return ts;
}

}  // namespace trackanno::pipeline
