#include "trackanno/review/journal.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "trackanno/core/error.hpp"
#include "trackanno/core/records.hpp"

namespace trackanno::review {

ReviewJournal::ReviewJournal(std::filesystem::path path) : path_(std::move(path)) {}

void ReviewJournal::append(std::span<const JournalEntry> entries) {
  std::string block;
  for (const auto& e : entries) {
    nlohmann::ordered_json j;
    j["session"] = e.session;
    j["tracklet"] = e.tracklet;
    j["sample"] = e.sample;
    j["decision"] = to_string(e.decision);
    j["timestamp"] = e.timestamp;
    block += j.dump();
    block += '\n';
  }
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw InputError("cannot open review journal " + path_.string());
  out.write(block.data(), static_cast<std::streamsize>(block.size()));
  out.flush();
  if (!out) throw InputError("short write to review journal " + path_.string());
}

std::vector<JournalEntry> ReviewJournal::read(const std::filesystem::path& path) {
  std::vector<JournalEntry> out;
  if (!std::filesystem::exists(path)) return out;
  const std::string content = text::read_file(path);
  std::istringstream in(content);
  std::string line;
  int line_no = 0;
  const bool ends_clean = content.empty() || content.back() == '\n';
  while (std::getline(in, line)) {
    ++line_no;
    if (text::skippable(line)) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("session").get<std::string>(), j.at("tracklet").get<std::string>(),
                     j.at("sample").get<std::string>(), parse_decision(j.at("decision").get<std::string>()),
                     j.at("timestamp").get<std::int64_t>()});
    } catch (const std::exception& e) {
      if (!ends_clean && in.peek() == EOF) break;  // torn tail
      throw InputError("review journal " + path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace trackanno::review
