#include "trackanno/core/records.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <tuple>
#include <unistd.h>

#include "trackanno/core/error.hpp"

namespace trackanno {

bool canonical_less(const Detection& a, const Detection& b) {
  return std::tie(a.box.x, a.box.y, a.box.w, a.box.h, a.objectness) <
         std::tie(b.box.x, b.box.y, b.box.w, b.box.h, b.objectness);
}

void GroundTruth::add(const std::string& video_id, int frame_index, const BoundingBox& box) {
  if (!box.valid()) throw InvalidArgument("ground truth: invalid box at " + video_id + ":" + std::to_string(frame_index));
  auto& frames = boxes_[video_id];
  if (!frames.emplace(frame_index, box).second)
    throw InvalidArgument("ground truth: two boxes for " + video_id + ":" + std::to_string(frame_index) +
                          " (single-object mode)");
}

std::optional<BoundingBox> GroundTruth::at(const std::string& video_id, int frame_index) const {
  const auto v = boxes_.find(video_id);
  if (v == boxes_.end()) return std::nullopt;
  const auto f = v->second.find(frame_index);
  if (f == v->second.end()) return std::nullopt;
  return f->second;
}

const std::map<int, BoundingBox>& GroundTruth::video(const std::string& video_id) const {
  static const std::map<int, BoundingBox> kEmpty;
  const auto v = boxes_.find(video_id);
  return v == boxes_.end() ? kEmpty : v->second;
}

long GroundTruth::frame_count() const {
  long n = 0;
  for (const auto& [_, frames] : boxes_) n += static_cast<long>(frames.size());
  return n;
}

namespace text {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool skippable(std::string_view line) {
  line = trim(line);
  return line.empty() || line.front() == '#';
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<long> parse_long(std::string_view s) {
  s = trim(s);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InputError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace text

std::string format_detection(const Detection& d) {
  std::string s = d.video_id;
  s += ',' + std::to_string(d.frame_index);
  for (double v : {d.box.x, d.box.y, d.box.w, d.box.h, d.objectness}) s += ',' + text::format_double(v);
  return s;
}

void write_detections(const std::filesystem::path& path, const std::vector<Detection>& dets) {
  std::string out = "# video_id,frame,x,y,w,h,objectness\n";
  for (const auto& d : dets) out += format_detection(d) + '\n';
  text::write_file_atomic(path, out);
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  const std::string content = text::read_file(path);
  GroundTruth gt;
  std::istringstream in(content);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::skippable(line)) continue;
    const auto f = text::split(line, ',');
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 6) throw InputError(where + ": expected 6 fields, got " + std::to_string(f.size()));
    const auto frame = text::parse_long(f[1]);
    const auto x = text::parse_double(f[2]), y = text::parse_double(f[3]);
    const auto w = text::parse_double(f[4]), h = text::parse_double(f[5]);
    if (!frame || !x || !y || !w || !h || *frame < 0) throw InputError(where + ": malformed record");
    const BoundingBox box{*x, *y, *w, *h};
    if (!box.valid()) throw InputError(where + ": invalid box");
    try {
      gt.add(std::string(text::trim(f[0])), static_cast<int>(*frame), box);
    } catch (const InvalidArgument& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  return gt;
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt) {
  std::string out = "# video_id,frame,x,y,w,h\n";
  for (const auto& [vid, frames] : gt.all()) {
    for (const auto& [frame, b] : frames) {
      out += vid + ',' + std::to_string(frame);
      for (double v : {b.x, b.y, b.w, b.h}) out += ',' + text::format_double(v);
      out += '\n';
    }
  }
  text::write_file_atomic(path, out);
}

}  // namespace trackanno
