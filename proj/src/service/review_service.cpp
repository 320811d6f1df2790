#include "trackanno/service/review_service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>

#include "trackanno/core/error.hpp"
#include "trackanno/core/records.hpp"
#include "trackanno/core/video.hpp"

namespace trackanno::service {

namespace fs = std::filesystem;

std::int64_t wall_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::array<int, 4> crop_rect(const BoundingBox& box, int width, int height) {
  const double mx = 0.2 * box.w, my = 0.2 * box.h;
  int x0 = static_cast<int>(std::floor(box.x - mx));
  int y0 = static_cast<int>(std::floor(box.y - my));
  int x1 = static_cast<int>(std::ceil(box.right() + mx));
  int y1 = static_cast<int>(std::ceil(box.bottom() + my));
  x0 = std::clamp(x0, 0, width);
  x1 = std::clamp(x1, 0, width);
  y0 = std::clamp(y0, 0, height);
  y1 = std::clamp(y1, 0, height);
  if (x1 <= x0 || y1 <= y0) throw InvalidArgument("box lies outside the frame");
  return {x0, y0, x1, y1};
}

ReviewService::ReviewService(int iteration, std::vector<engine::Tracklet> tracklets, AnnotationStore& store, int n,
                             FrameSource frames, fs::path journal, Clock clock)
    : iteration_(iteration),
      n_(n),
      store_(store),
      frames_(std::move(frames)),
      journal_(std::move(journal)),
      clock_(std::move(clock)) {
  if (n < 2) throw InvalidArgument("N must be at least 2");
  std::stable_sort(tracklets.begin(), tracklets.end(), [](const engine::Tracklet& a, const engine::Tracklet& b) {
    if (a.birth_frame() != b.birth_frame()) return a.birth_frame() < b.birth_frame();
    if (a.video_id != b.video_id) return a.video_id < b.video_id;
    return a.id < b.id;
  });
  for (auto& t : tracklets) {
    std::string key = t.key();
    if (by_key_.count(key)) throw InvalidArgument("duplicate tracklet " + key);
    by_key_[key] = items_.size();
    items_.push_back({review::make_prompt(std::move(t)), std::nullopt, std::nullopt, false});
  }
  replay();
}

std::string ReviewService::session_id_for(int iteration, const std::vector<std::string>& videos) {
  std::string id = "s" + std::to_string(iteration) + "-";
  if (videos.empty()) return id + "all";
  for (std::size_t i = 0; i < videos.size(); ++i) id += (i ? "+" : "") + videos[i];
  return id;
}

SessionDescriptor ReviewService::create_session(int iteration, std::vector<std::string> videos) {
  std::lock_guard lock(mu_);
  return create_locked(iteration, std::move(videos));
}

SessionDescriptor ReviewService::create_locked(int iteration, std::vector<std::string> videos) {
  if (iteration != iteration_) {
    throw InvalidArgument("iteration " + std::to_string(iteration) + " is not under review (current " +
                          std::to_string(iteration_) + ")");
  }
  std::sort(videos.begin(), videos.end());
  videos.erase(std::unique(videos.begin(), videos.end()), videos.end());
  for (const auto& v : videos) {
    if (!valid_video_id(v)) throw InvalidArgument("invalid video id '" + v + "'");
  }
  const std::string id = session_id_for(iteration, videos);
  if (auto it = sessions_.find(id); it != sessions_.end()) return it->second.desc;

  auto in_filter = [](const std::vector<std::string>& filter, const std::string& v) {
    return filter.empty() || std::binary_search(filter.begin(), filter.end(), v);
  };
  for (const auto& [other_id, other] : sessions_) {
    if (other.closed) continue;
    const auto& f = other.desc.videos;
    bool overlap = videos.empty() || f.empty() ||
                   std::any_of(videos.begin(), videos.end(), [&](const auto& v) { return in_filter(f, v); });
    if (overlap) throw ConflictError("video filter overlaps open session " + other_id);
  }

  Session s;
  s.desc.session_id = id;
  s.desc.iteration = iteration;
  s.desc.videos = videos;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    Item& item = items_[i];
    if (!in_filter(videos, item.prompt.tracklet.video_id)) continue;
    if (item.outcome || item.skipped) continue;
    bool claimed = false;
    for (const auto& [oid, o] : sessions_) claimed = claimed || std::count(o.queue.begin(), o.queue.end(), i);
    if (claimed) continue;
    if (!item.samples) {
      auto filtered = review::filter_prompt(item.prompt, store_);
      if (!filtered) {
        item.skipped = true;
        continue;
      }
      item.prompt = std::move(*filtered);
    }
    s.queue.push_back(i);
  }
  s.desc.queued = s.queue.size();
  s.desc.empty = s.queue.empty();
  auto [it, inserted] = sessions_.emplace(id, std::move(s));
  cv_.notify_all();
  return it->second.desc;
}

ReviewService::Session& ReviewService::session(const std::string& id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFound("unknown session " + id);
  return it->second;
}

const ReviewService::Session& ReviewService::session(const std::string& id) const {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFound("unknown session " + id);
  return it->second;
}

ReviewService::Item* ReviewService::current(Session& s) {
  while (s.cursor < s.queue.size()) {
    Item& item = items_[s.queue[s.cursor]];
    if (item.outcome || item.skipped) {
      ++s.cursor;
      continue;
    }
    if (!item.samples) {
      auto filtered = review::filter_prompt(item.prompt, store_);
      if (!filtered) {
        item.skipped = true;
        ++s.cursor;
        continue;
      }
      item.prompt = std::move(*filtered);
      item.samples = review::select_samples(item.prompt, n_);
      for (const auto& sm : *item.samples) {
        samples_[sm.sample_id] = {item.prompt.tracklet.video_id, sm.frame_index, sm.box};
      }
    }
    return &item;
  }
  return nullptr;
}

NextTracklet ReviewService::next_tracklet(const std::string& session_id) {
  std::lock_guard lock(mu_);
  Session& s = session(session_id);
  NextTracklet out;
  out.n = n_;
  Item* item = s.closed ? nullptr : current(s);
  if (!item) {
    out.done = true;
    cv_.notify_all();
    return out;
  }
  const auto& t = item->prompt.tracklet;
  out.tracklet.tracklet_key = t.key();
  out.tracklet.video_id = t.video_id;
  out.tracklet.birth_frame = t.birth_frame();
  out.tracklet.death_frame = t.death_frame();
  out.tracklet.length = t.instances.size();
  out.tracklet.measured = t.measured_count();
  out.tracklet.suppressed = item->prompt.suppressed_measured();
  out.samples = *item->samples;
  return out;
}

DecisionSummary ReviewService::post_decisions(const std::string& session_id, const std::string& tracklet_key,
                                              const review::ClickSequence& clicks) {
  std::lock_guard lock(mu_);
  return post_locked(session(session_id), tracklet_key, clicks, true);
}

DecisionSummary ReviewService::post_locked(Session& s, const std::string& tracklet_key,
                                           const review::ClickSequence& clicks, bool journal) {
  auto it = by_key_.find(tracklet_key);
  if (it == by_key_.end()) throw NotFound("unknown tracklet " + tracklet_key);
  Item& item = items_[it->second];
  if (item.outcome) throw ReplayConflict("tracklet " + tracklet_key + " already committed", *item.outcome);
  if (s.closed) throw InvalidArgument("session " + s.desc.session_id + " is closed");
  if (std::find(s.queue.begin(), s.queue.end(), it->second) == s.queue.end()) {
    throw NotFound("tracklet " + tracklet_key + " is not part of session " + s.desc.session_id);
  }
  Item* cur = current(s);
  if (cur != &item) throw InvalidArgument("tracklet " + tracklet_key + " is not the current tracklet");

  review::ReviewOutcome outcome = review::propagate(item.prompt, *item.samples, clicks);
  review::commit_outcome(outcome, item.prompt, store_, iteration_);

  DecisionSummary summary{tracklet_key, outcome.accepted(), outcome.rejected(), outcome.suppressed,
                          outcome.click_count};
  item.outcome = summary;
  s.clicks += outcome.click_count;
  ++s.cursor;
  if (journal) {
    std::vector<review::JournalEntry> entries;
    for (const auto& c : clicks) entries.push_back({s.desc.session_id, tracklet_key, c.sample_id, c.decision, clock_()});
    journal_.append(entries);
  }
  cv_.notify_all();
  return summary;
}

std::vector<std::uint8_t> ReviewService::get_crop(const std::string& sample_id) {
  std::unique_lock lock(mu_);
  if (auto it = crops_.find(sample_id); it != crops_.end()) return it->second;
  auto ref = samples_.find(sample_id);
  if (ref == samples_.end()) throw NotFound("unknown sample " + sample_id);
  SampleRef r = ref->second;
  lock.unlock();
  Image frame = frames_(r.video_id, r.frame_index);
  auto rect = crop_rect(r.box, frame.width, frame.height);
  auto bytes = encode_png(crop(frame, rect[0], rect[1], rect[2], rect[3]));
  lock.lock();
  return crops_.emplace(sample_id, std::move(bytes)).first->second;
}

Progress ReviewService::progress(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  const Session& s = session(session_id);
  Progress p;
  p.session_id = session_id;
  p.total = s.queue.size();
  for (auto i : s.queue) p.done += items_[i].outcome || items_[i].skipped ? 1 : 0;
  p.clicks = s.clicks;
  p.annotated = store_.accepted_frames();
  p.closed = s.closed;
  return p;
}

Progress ReviewService::close(const std::string& session_id) {
  {
    std::lock_guard lock(mu_);
    session(session_id).closed = true;
    cv_.notify_all();
  }
  return progress(session_id);
}

std::vector<SessionDescriptor> ReviewService::sessions() const {
  std::lock_guard lock(mu_);
  std::vector<SessionDescriptor> out;
  for (const auto& [id, s] : sessions_) out.push_back(s.desc);
  return out;
}

long ReviewService::total_clicks() const {
  std::lock_guard lock(mu_);
  long n = 0;
  for (const auto& [id, s] : sessions_) n += s.clicks;
  return n;
}

bool ReviewService::finished_locked() {
  if (!sessions_.empty() &&
      std::all_of(sessions_.begin(), sessions_.end(), [](const auto& kv) { return kv.second.closed; })) {
    return true;
  }
  for (Item& item : items_) {
    if (item.outcome || item.skipped) continue;
    if (item.samples) return false;
    auto filtered = review::filter_prompt(item.prompt, store_);
    if (filtered) return false;
    item.skipped = true;
  }
  return true;
}

bool ReviewService::finished() {
  std::lock_guard lock(mu_);
  return finished_locked();
}

void ReviewService::wait_finished() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return finished_locked(); });
}

void ReviewService::replay() {
  auto entries = review::ReviewJournal::read(journal_.path());
  std::size_t i = 0;
  while (i < entries.size()) {
    std::size_t j = i;
    review::ClickSequence clicks;
    while (j < entries.size() && entries[j].session == entries[i].session && entries[j].tracklet == entries[i].tracklet) {
      clicks.push_back({entries[j].sample, entries[j].decision});
      ++j;
    }
    const std::string& sid = entries[i].session;
    auto dash = sid.find('-');
    if (sid.size() < 3 || sid[0] != 's' || dash == std::string::npos) {
      throw InputError("journal " + journal_.path().string() + ": bad session id " + sid);
    }
    std::vector<std::string> videos;
    std::string filter = sid.substr(dash + 1);
    if (filter != "all") {
      for (auto part : text::split(filter, '+')) videos.emplace_back(part);
    }
    int it = static_cast<int>(text::parse_long(sid.substr(1, dash - 1)).value_or(-1));
    Session& s = sessions_.count(sid) ? sessions_.at(sid) : session(create_locked(it, videos).session_id);
    post_locked(s, entries[i].tracklet, clicks, false);
    i = j;
  }
}

ReviewDriver simulated_operator(const GroundTruth& gt, evaluation::SimOpConfig cfg) {
  cfg.validate();
  return [&gt, cfg](ReviewService& svc) {
    const auto desc = svc.create_session(svc.iteration(), {});
    for (;;) {
      NextTracklet next = svc.next_tracklet(desc.session_id);
      if (next.done) break;
      auto clicks = evaluation::simulate_clicks(next.samples, gt, next.tracklet.video_id, cfg);
      svc.post_decisions(desc.session_id, next.tracklet.tracklet_key, clicks);
    }
    svc.close(desc.session_id);
  };
}

}  // namespace trackanno::service
