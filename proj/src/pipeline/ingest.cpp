#include "trackanno/pipeline/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "trackanno/core/error.hpp"

namespace trackanno::pipeline {

namespace {

std::string join_lines(const std::vector<std::string>& problems, std::size_t limit = 20) {
  std::string out;
  for (std::size_t i = 0; i < problems.size() && i < limit; ++i) out += "\n  " + problems[i];
  if (problems.size() > limit) out += "\n  ... " + std::to_string(problems.size() - limit) + " more";
  return out;
}

}  // namespace

IngestResult parse_detections(std::string_view content, const std::string& origin, const Corpus* corpus) {
  struct Row {
    Detection d;
    int line;
  };
  std::map<std::pair<std::string, int>, std::vector<Row>> rows;
  std::vector<std::string> malformed, invalid;

  std::size_t pos = 0;
  int lineno = 0;
  while (pos <= content.size()) {
    std::size_t nl = content.find('\n', pos);
    std::string_view line = content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
    ++lineno;
    if (text::skippable(line)) continue;
    const std::string where = "line " + std::to_string(lineno);
    auto f = text::split(line, ',');
    if (f.size() != 7) {
      malformed.push_back(where + ": expected 7 fields, got " + std::to_string(f.size()));
      continue;
    }
    Detection d;
    d.video_id = std::string(text::trim(f[0]));
    auto frame = text::parse_long(f[1]);
    std::optional<double> v[5];
    bool ok = frame.has_value() && !d.video_id.empty();
    for (int i = 0; i < 5; ++i) {
      v[i] = text::parse_double(f[2 + i]);
      ok = ok && v[i].has_value();
    }
    if (!ok) {
      malformed.push_back(where + ": unparsable field");
      continue;
    }
    d.frame_index = static_cast<int>(*frame);
    d.box = {*v[0], *v[1], *v[2], *v[3]};
    d.objectness = *v[4];

    if (!(d.objectness >= 0.0 && d.objectness <= 1.0)) {
      invalid.push_back(where + ": objectness " + text::format_double(d.objectness) + " outside [0,1]");
      continue;
    }
    if (!d.box.valid()) {
      invalid.push_back(where + ": invalid box");
      continue;
    }
    if (*frame < 0) {
      invalid.push_back(where + ": negative frame index");
      continue;
    }
    if (corpus) {
      if (!corpus->contains(d.video_id)) {
        invalid.push_back(where + ": unknown video " + d.video_id);
        continue;
      }
      if (d.frame_index >= corpus->find(d.video_id).frame_count) {
        invalid.push_back(where + ": frame " + std::to_string(d.frame_index) + " beyond end of " + d.video_id);
        continue;
      }
    }
    rows[{d.video_id, d.frame_index}].push_back({std::move(d), lineno});
  }
  if (!malformed.empty()) throw InputError(origin + ": malformed detections" + join_lines(malformed));
  if (!invalid.empty()) throw ValidationError(origin + ": invalid detections" + join_lines(invalid));

  IngestResult out;
  for (auto& [key, list] : rows) {
    std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) { return canonical_less(a.d, b.d); });
    auto& frame = out.detections[key.first][key.second];
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!frame.empty() && frame.back() == list[i].d) {
        out.warnings.push_back(origin + ": line " + std::to_string(list[i].line) + " duplicates an earlier detection");
        continue;
      }
      frame.push_back(list[i].d);
      ++out.count;
    }
  }
  return out;
}

IngestResult ingest_detections(const std::filesystem::path& path, const Corpus* corpus) {
  return parse_detections(text::read_file(path), path.string(), corpus);
}

}  // namespace trackanno::pipeline
