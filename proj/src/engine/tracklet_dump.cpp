#include "trackanno/engine/tracklet_dump.hpp"

#include <sstream>

#include "trackanno/core/error.hpp"
#include "trackanno/core/records.hpp"

namespace trackanno::engine {

std::string format_tracklets(const std::vector<Tracklet>& tracklets) {
  using text::format_double;
  std::string out = "# tracklet_id,video_id,frame,x,y,w,h,objectness,correlation,P_avg,dist_to_pred\n";
  for (const auto& t : tracklets) {
    for (const auto& i : t.instances) {
      const auto b = i.rendered_box();
      out += std::to_string(t.id) + ',' + t.video_id + ',' + std::to_string(i.frame_index);
      for (double v : {b.x, b.y, b.w, b.h, i.objectness}) out += ',' + format_double(v);
      out += ',' + (i.correlation ? format_double(*i.correlation) : std::string());
      out += ',' + format_double(i.p_avg);
      out += ',' + (i.distance_to_prediction ? format_double(*i.distance_to_prediction) : std::string());
      out += '\n';
    }
  }
  return out;
}

void write_tracklets(const std::filesystem::path& path, const std::vector<Tracklet>& tracklets) {
  text::write_file_atomic(path, format_tracklets(tracklets));
}

std::vector<Tracklet> parse_tracklets(const std::string& content) {
  std::vector<Tracklet> out;
  std::istringstream in(content);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::skippable(line)) continue;
    const auto where = "tracklet dump line " + std::to_string(line_no);
    const auto f = text::split(line, ',');
    if (f.size() != 11) throw InputError(where + ": expected 11 fields");
    const auto id = text::parse_long(f[0]);
    const auto frame = text::parse_long(f[2]);
    const auto x = text::parse_double(f[3]), y = text::parse_double(f[4]);
    const auto w = text::parse_double(f[5]), h = text::parse_double(f[6]);
    const auto obj = text::parse_double(f[7]), pavg = text::parse_double(f[9]);
    if (!id || !frame || !x || !y || !w || !h || !obj || !pavg) throw InputError(where + ": malformed record");
    const bool measured = !text::trim(f[8]).empty();
    Instance inst;
    inst.frame_index = static_cast<int>(*frame);
    inst.objectness = *obj;
    inst.p_avg = *pavg;
    inst.width = *w;
    inst.height = *h;
    const BoundingBox box{*x, *y, *w, *h};
    if (measured) {
      const auto corr = text::parse_double(f[8]);
      const auto dist = text::parse_double(f[10]);
      if (!corr || !dist) throw InputError(where + ": malformed measured instance");
      inst.box = box;
      inst.correlation = *corr;
      inst.distance_to_prediction = *dist;
    }
    inst.predicted_center = box.center();
    const std::string video(text::trim(f[1]));
    if (out.empty() || out.back().id != static_cast<std::uint64_t>(*id) || out.back().video_id != video) {
      Tracklet t;
      t.id = static_cast<std::uint64_t>(*id);
      t.video_id = video;
      out.push_back(std::move(t));
    } else if (out.back().instances.back().frame_index + 1 != inst.frame_index) {
      throw InputError(where + ": instance frames of a tracklet must be consecutive");
    }
    out.back().instances.push_back(inst);
  }
  return out;
}

std::vector<Tracklet> read_tracklets(const std::filesystem::path& path) { return parse_tracklets(text::read_file(path)); }

}  // namespace trackanno::engine
