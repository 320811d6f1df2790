#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "trackanno/core/annotation_store.hpp"

namespace trackanno::review {

/// One operator click, as written to the append-only review journal.
struct JournalEntry {
  std::string session;
  std::string tracklet;
  std::string sample;
  Decision decision = Decision::Accepted;
  std::int64_t timestamp = 0;

  friend bool operator==(const JournalEntry&, const JournalEntry&) = default;
};

class ReviewJournal {
 public:
  explicit ReviewJournal(std::filesystem::path path);

  /// Appends and flushes; entries of one call land together.
  void append(std::span<const JournalEntry> entries);
  const std::filesystem::path& path() const { return path_; }

  /// Missing file reads as empty. A torn final line (crash mid-write) is
  /// dropped; any other malformed line throws InputError.
  static std::vector<JournalEntry> read(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
};

}  // namespace trackanno::review
