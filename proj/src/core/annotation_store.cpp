#include "trackanno/core/annotation_store.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

#include "trackanno/core/error.hpp"
#include "trackanno/core/records.hpp"

namespace trackanno {

const char* to_string(Decision d) { return d == Decision::Accepted ? "accepted" : "rejected"; }

const char* to_string(Source s) {
  switch (s) {
    case Source::ManualInitial: return "manual-initial";
    case Source::OperatorConfirmed: return "operator-confirmed";
    case Source::OperatorRejected: return "operator-rejected";
  }
  return "?";
}

const char* to_string(FrameStatus s) {
  switch (s) {
    case FrameStatus::None: return "none";
    case FrameStatus::Accepted: return "accepted";
    case FrameStatus::Rejected: return "rejected";
  }
  return "?";
}

Decision parse_decision(std::string_view s) {
  if (s == "accepted" || s == "accept") return Decision::Accepted;
  if (s == "rejected" || s == "reject") return Decision::Rejected;
  throw InvalidArgument("unknown decision '" + std::string(s) + "'");
}

Source parse_source(std::string_view s) {
  if (s == "manual-initial") return Source::ManualInitial;
  if (s == "operator-confirmed") return Source::OperatorConfirmed;
  if (s == "operator-rejected") return Source::OperatorRejected;
  throw InvalidArgument("unknown source '" + std::string(s) + "'");
}

void AnnotationStore::commit(std::span<const AnnotationRecord> records) {
  std::set<Key> batch_accepted;
  int max_iter = max_iteration_;
  for (const auto& r : records) {
    const std::string where = r.video_id + ":" + std::to_string(r.frame_index);
    if (r.video_id.empty() || r.frame_index < 0) throw InvalidArgument("invalid record key " + where);
    if (!r.box.valid()) throw InvalidArgument("invalid box in record " + where);
    if (r.iteration < 0 || r.iteration < max_iteration_)
      throw InvalidArgument("record " + where + " has iteration " + std::to_string(r.iteration) +
                            " behind store iteration " + std::to_string(max_iteration_));
    if (r.decision == Decision::Accepted) {
      Key key{r.video_id, r.frame_index};
      if (accepted_at(r.video_id, r.frame_index) || !batch_accepted.insert(key).second)
        throw ConflictError("frame " + where + " already has an accepted annotation");
    }
    max_iter = std::max(max_iter, r.iteration);
  }
  records_.reserve(records_.size() + records.size());
  for (const auto& r : records) {
    by_frame_[{r.video_id, r.frame_index}].push_back(records_.size());
    records_.push_back(r);
  }
  max_iteration_ = max_iter;
}

FrameStatus AnnotationStore::status(const std::string& video_id, int frame_index) const {
  const auto it = by_frame_.find({video_id, frame_index});
  if (it == by_frame_.end()) return FrameStatus::None;
  for (auto idx : it->second)
    if (records_[idx].decision == Decision::Accepted) return FrameStatus::Accepted;
  return FrameStatus::Rejected;
}

const AnnotationRecord* AnnotationStore::accepted_at(const std::string& video_id, int frame_index) const {
  const auto it = by_frame_.find({video_id, frame_index});
  if (it == by_frame_.end()) return nullptr;
  for (auto idx : it->second)
    if (records_[idx].decision == Decision::Accepted) return &records_[idx];
  return nullptr;
}

std::vector<const AnnotationRecord*> AnnotationStore::records_at(const std::string& video_id, int frame_index) const {
  std::vector<const AnnotationRecord*> out;
  const auto it = by_frame_.find({video_id, frame_index});
  if (it != by_frame_.end())
    for (auto idx : it->second) out.push_back(&records_[idx]);
  return out;
}

bool AnnotationStore::contains(const AnnotationRecord& r) const {
  for (const auto* e : records_at(r.video_id, r.frame_index))
    if (*e == r) return true;
  return false;
}

long AnnotationStore::accepted_frames() const {
  return std::count_if(records_.begin(), records_.end(),
                       [](const AnnotationRecord& r) { return r.decision == Decision::Accepted; });
}

long AnnotationStore::accepted_frames(Source source) const {
  return std::count_if(records_.begin(), records_.end(), [&](const AnnotationRecord& r) {
    return r.decision == Decision::Accepted && r.source == source;
  });
}

std::string AnnotationStore::serialize() const {
  std::string out;
  for (const auto& r : records_) {
    nlohmann::ordered_json j;
    j["video_id"] = r.video_id;
    j["frame"] = r.frame_index;
    j["x"] = r.box.x;
    j["y"] = r.box.y;
    j["w"] = r.box.w;
    j["h"] = r.box.h;
    j["decision"] = to_string(r.decision);
    j["source"] = to_string(r.source);
    j["iteration"] = r.iteration;
    out += j.dump();
    out += '\n';
  }
  return out;
}

AnnotationStore AnnotationStore::parse(std::string_view content) {
  std::vector<AnnotationRecord> recs;
  std::istringstream in{std::string(content)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::skippable(line)) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      AnnotationRecord r;
      r.video_id = j.at("video_id").get<std::string>();
      r.frame_index = j.at("frame").get<int>();
      r.box = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(), j.at("h").get<double>()};
      r.decision = parse_decision(j.at("decision").get<std::string>());
      r.source = parse_source(j.at("source").get<std::string>());
      r.iteration = j.at("iteration").get<int>();
      recs.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("annotation store line " + std::to_string(line_no) + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw InputError("annotation store line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  AnnotationStore store;
  // Records were committed in iteration order; replay one at a time so the
  // same validation applies on load.
  for (const auto& r : recs) store.commit(std::span(&r, 1));
  return store;
}

void AnnotationStore::save(const std::filesystem::path& path) const { text::write_file_atomic(path, serialize()); }

AnnotationStore AnnotationStore::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  return parse(text::read_file(path));
}

}  // namespace trackanno
