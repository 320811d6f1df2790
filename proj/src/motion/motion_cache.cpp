#include "trackanno/motion/motion_cache.hpp"

#include <sstream>

#include "trackanno/core/error.hpp"
#include "trackanno/core/records.hpp"

namespace trackanno::motion {

std::optional<CameraMotion> MotionCache::get(const std::string& video_id, int frame_index) const {
  const auto it = entries_.find({video_id, frame_index});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void MotionCache::put(const std::string& video_id, int frame_index, const CameraMotion& m) {
  entries_[{video_id, frame_index}] = m;
}

void MotionCache::save(const std::filesystem::path& path) const {
  std::string out = "# video_id,frame,du,dv\n";
  for (const auto& [key, m] : entries_) {
    out += key.first + ',' + std::to_string(key.second) + ',' + text::format_double(m.du) + ',' +
           text::format_double(m.dv) + (m.degenerate ? ",degenerate" : "") + '\n';
  }
  text::write_file_atomic(path, out);
}

MotionCache MotionCache::load(const std::filesystem::path& path) {
  MotionCache cache;
  if (!std::filesystem::exists(path)) return cache;
  std::istringstream in(text::read_file(path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::skippable(line)) continue;
    const auto f = text::split(line, ',');
    const auto frame = f.size() >= 4 ? text::parse_long(f[1]) : std::nullopt;
    const auto du = f.size() >= 4 ? text::parse_double(f[2]) : std::nullopt;
    const auto dv = f.size() >= 4 ? text::parse_double(f[3]) : std::nullopt;
    if (!frame || !du || !dv || f.size() > 5)
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed motion record");
    cache.put(std::string(text::trim(f[0])), static_cast<int>(*frame),
              {*du, *dv, f.size() == 5 && text::trim(f[4]) == "degenerate"});
  }
  return cache;
}

}  // namespace trackanno::motion
