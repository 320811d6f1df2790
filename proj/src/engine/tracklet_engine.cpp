#include "trackanno/engine/tracklet_engine.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "trackanno/core/error.hpp"
#include "trackanno/motion/phase_correlation.hpp"

namespace trackanno::engine {

void EngineConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(theta_low) || !unit(theta_high) || !unit(theta_avg))
    throw InvalidArgument("engine config: objectness thresholds must lie in [0, 1]");
  if (theta_low > theta_high) throw InvalidArgument("engine config: theta_L must not exceed theta_H");
  if (!(c_low > 0.0 && c_low < c_high && c_high <= 1.0))
    throw InvalidArgument("engine config: need 0 < c_low < c_high <= 1");
  if (window < 1) throw InvalidArgument("engine config: W must be >= 1");
  if (!(gamma > 0.0)) throw InvalidArgument("engine config: gamma must be positive");
  if (min_len < 1) throw InvalidArgument("engine config: min_len must be >= 1");
  if (!(kalman.t > 0.0 && kalman.sigma_w_sq >= 0.0 && kalman.sigma_v_sq > 0.0))
    throw InvalidArgument("engine config: invalid Kalman noise parameters");
}

std::size_t Tracklet::measured_count() const {
  return std::count_if(instances.begin(), instances.end(), [](const Instance& i) { return i.measured(); });
}

double Hypothesis::p_avg() const {
  if (objectness_window.empty()) return 0.0;
  return std::accumulate(objectness_window.begin(), objectness_window.end(), 0.0) /
         static_cast<double>(objectness_window.size());
}

std::size_t Hypothesis::measured_count() const {
  return std::count_if(history.begin(), history.end(), [](const Instance& i) { return i.measured(); });
}

MeasurementRoles classify_measurement(double score, bool in_gate, const EngineConfig& cfg) {
  if (score >= cfg.c_high) return {true, false};
  if (score >= cfg.c_low) return in_gate ? MeasurementRoles{true, false} : MeasurementRoles{false, true};
  return in_gate ? MeasurementRoles{false, true} : MeasurementRoles{false, false};
}

namespace {

void push_objectness(Hypothesis& h, double value, int window) {
  h.objectness_window.push_back(value);
  while (static_cast<int>(h.objectness_window.size()) > window) h.objectness_window.pop_front();
}

// Update with a measurement. `predicted` is the trajectory after predict.
void apply_measurement(Hypothesis& h, const motion::TrajectoryState& predicted, const Detection& d,
                       const visual::Template& appearance, double score, std::size_t alarm, int frame_index,
                       const EngineConfig& cfg) {
  const Point c = d.box.center();
  const Point pred = predicted.position();
  h.trajectory = motion::update(predicted, cfg.kalman, c);
  h.appearance = appearance;
  h.appearance.source_frame = frame_index;
  push_objectness(h, d.objectness, cfg.window);
  h.last_w = d.box.w;
  h.last_h = d.box.h;
  h.alarm_this_frame = alarm;
  Instance inst;
  inst.frame_index = frame_index;
  inst.box = d.box;
  inst.objectness = d.objectness;
  inst.correlation = score;
  inst.predicted_center = pred;
  inst.distance_to_prediction = distance(c, pred);
  inst.p_avg = h.p_avg();
  inst.width = d.box.w;
  inst.height = d.box.h;
  h.history.push_back(inst);
}

// Predict-only update: appearance untouched, objectness 0.
void apply_no_measurement(Hypothesis& h, const motion::TrajectoryState& predicted, int frame_index,
                          const EngineConfig& cfg) {
  h.trajectory = predicted;
  push_objectness(h, 0.0, cfg.window);
  h.alarm_this_frame.reset();
  Instance inst;
  inst.frame_index = frame_index;
  inst.objectness = 0.0;
  inst.predicted_center = predicted.position();
  inst.p_avg = h.p_avg();
  inst.width = h.last_w;
  inst.height = h.last_h;
  h.history.push_back(inst);
}

std::set<std::tuple<int, double, double, double, double>> measured_set(const Hypothesis& h) {
  std::set<std::tuple<int, double, double, double, double>> s;
  for (const auto& i : h.history)
    if (i.box) s.emplace(i.frame_index, i.box->x, i.box->y, i.box->w, i.box->h);
  return s;
}

}  // namespace

TrackletEngine::TrackletEngine(std::string video_id, EngineConfig cfg) : video_id_(std::move(video_id)), cfg_(cfg) {
  cfg_.validate();
}

Hypothesis TrackletEngine::birth(const Detection& d, const visual::Template& appearance, std::size_t alarm,
                                 int frame_index) {
  Hypothesis h;
  h.id = next_id_++;
  h.trajectory = motion::TrajectoryState::born_at(d.box.center(), cfg_.kalman, cfg_.initial_velocity_var);
  h.appearance = appearance;
  h.appearance.source_frame = frame_index;
  push_objectness(h, d.objectness, cfg_.window);
  h.last_w = d.box.w;
  h.last_h = d.box.h;
  h.alarm_this_frame = alarm;
  Instance inst;
  inst.frame_index = frame_index;
  inst.box = d.box;
  inst.objectness = d.objectness;
  inst.correlation = 1.0;
  inst.predicted_center = d.box.center();
  inst.distance_to_prediction = 0.0;
  inst.p_avg = h.p_avg();
  inst.width = d.box.w;
  inst.height = d.box.h;
  h.history.push_back(inst);
  return h;
}

std::optional<Tracklet> TrackletEngine::finalize(const Hypothesis& h) {
  if (static_cast<int>(h.measured_count()) < cfg_.min_len) return std::nullopt;
  finalized_sets_.push_back(measured_set(h));
  Tracklet t;
  t.id = h.id;
  t.video_id = video_id_;
  t.instances = h.history;
  while (!t.instances.empty() && !t.instances.back().measured()) t.instances.pop_back();
  return t;
}

std::vector<Tracklet> TrackletEngine::step(int frame_index, std::span<const Detection> detections, const Image& frame,
                                           const motion::CameraMotion& camera) {
  if (frame_index <= last_frame_)
    throw InvalidArgument("tracklet engine: frame " + std::to_string(frame_index) + " does not follow frame " +
                          std::to_string(last_frame_));
  if (last_frame_ >= 0 && frame_index != last_frame_ + 1 && !hypotheses_.empty())
    throw InvalidArgument("tracklet engine: frames must be consecutive while hypotheses are alive");
  for (const auto& d : detections) {
    if (d.video_id != video_id_ || d.frame_index != frame_index)
      throw InvalidArgument("tracklet engine: detection for " + d.video_id + ":" + std::to_string(d.frame_index) +
                            " passed to step of " + video_id_ + ":" + std::to_string(frame_index));
  }
  last_frame_ = frame_index;

  // 1. Alarms above theta_L, in canonical order.
  alarms_.clear();
  for (const auto& d : detections)
    if (d.objectness > cfg_.theta_low && d.box.valid() && intersect(d.box, frame.bounds())) alarms_.push_back(d);
  std::sort(alarms_.begin(), alarms_.end(), canonical_less);
  std::vector<visual::Template> candidates;
  candidates.reserve(alarms_.size());
  for (const auto& d : alarms_) candidates.push_back(visual::extract_template(frame, d.box, frame_index));
  std::vector<bool> assigned(alarms_.size(), false);

  // 2. Measurement update per hypothesis, spawning clones for alternatives.
  std::vector<Hypothesis> spawned;
  for (auto& h : hypotheses_) {
    const auto predicted = motion::predict(h.trajectory, cfg_.kalman, camera);
    const auto match = visual::best_match(h.appearance, candidates, alarms_);
    MeasurementRoles roles;
    if (match) {
      const bool in_gate =
          motion::gate_contains(predicted, cfg_.kalman, alarms_[match->index].box.center(), cfg_.gamma);
      roles = classify_measurement(match->score.value, in_gate, cfg_);
    }
    if (roles.alternative) {
      Hypothesis clone = h;
      clone.id = next_id_++;
      apply_measurement(clone, predicted, alarms_[match->index], candidates[match->index], match->score.value,
                        match->index, frame_index, cfg_);
      spawned.push_back(std::move(clone));
      assigned[match->index] = true;
    }
    if (roles.primary) {
      apply_measurement(h, predicted, alarms_[match->index], candidates[match->index], match->score.value,
                        match->index, frame_index, cfg_);
      assigned[match->index] = true;
    } else {
      apply_no_measurement(h, predicted, frame_index, cfg_);
    }
  }
  for (auto& s : spawned) hypotheses_.push_back(std::move(s));

  // 3. Births from confident alarms nobody took.
  for (std::size_t i = 0; i < alarms_.size(); ++i) {
    if (!assigned[i] && alarms_[i].objectness > cfg_.theta_high)
      hypotheses_.push_back(birth(alarms_[i], candidates[i], i, frame_index));
  }

  std::vector<Tracklet> finalized;

  // 4. Merge hypotheses that took the same alarm: keep the highest P_avg
  // (after this frame's update), ties to the older hypothesis.
  std::map<std::size_t, std::vector<std::size_t>> by_alarm;
  for (std::size_t i = 0; i < hypotheses_.size(); ++i)
    if (hypotheses_[i].alarm_this_frame) by_alarm[*hypotheses_[i].alarm_this_frame].push_back(i);
  std::vector<bool> removed(hypotheses_.size(), false);
  for (const auto& [alarm, members] : by_alarm) {
    if (members.size() < 2) continue;
    std::size_t keep = members.front();
    for (auto m : members) {
      const auto& cand = hypotheses_[m];
      const auto& cur = hypotheses_[keep];
      if (cand.p_avg() > cur.p_avg() || (cand.p_avg() == cur.p_avg() && cand.id < cur.id)) keep = m;
    }
    const auto survivor_set = measured_set(hypotheses_[keep]);
    for (auto m : members) {
      if (m == keep) continue;
      removed[m] = true;
      const auto loser_set = measured_set(hypotheses_[m]);
      const bool subset = std::includes(survivor_set.begin(), survivor_set.end(), loser_set.begin(), loser_set.end());
      if (!subset)
        if (auto t = finalize(hypotheses_[m])) finalized.push_back(std::move(*t));
    }
  }

  // 5. Prune weak hypotheses. A pruned branch whose measurements all live
  // on in another hypothesis is dropped rather than finalized.
  std::vector<std::size_t> pruned, kept;
  std::vector<const Hypothesis*> live;
  for (std::size_t i = 0; i < hypotheses_.size(); ++i) {
    if (removed[i]) continue;
    if (hypotheses_[i].p_avg() < cfg_.theta_avg) {
      pruned.push_back(i);
    } else {
      kept.push_back(i);
      live.push_back(&hypotheses_[i]);
    }
  }
  std::sort(pruned.begin(), pruned.end(), [&](std::size_t a, std::size_t b) {
    const auto ma = hypotheses_[a].measured_count(), mb = hypotheses_[b].measured_count();
    return ma != mb ? ma > mb : hypotheses_[a].id < hypotheses_[b].id;
  });
  for (auto i : pruned) {
    if (covered(hypotheses_[i], live)) continue;
    if (auto t = finalize(hypotheses_[i])) finalized.push_back(std::move(*t));
  }

  std::vector<Hypothesis> survivors;
  survivors.reserve(kept.size());
  for (auto i : kept) survivors.push_back(std::move(hypotheses_[i]));
  hypotheses_ = std::move(survivors);
  std::sort(hypotheses_.begin(), hypotheses_.end(), [](const Hypothesis& a, const Hypothesis& b) { return a.id < b.id; });

  // finalized sets can only cover hypotheses born before they end
  int earliest = std::numeric_limits<int>::max();
  for (const auto& h : hypotheses_) earliest = std::min(earliest, h.history.front().frame_index);
  std::erase_if(finalized_sets_, [&](const MeasuredSet& s) { return s.empty() || std::get<0>(*s.rbegin()) < earliest; });
  return finalized;
}

bool TrackletEngine::covered(const Hypothesis& h, const std::vector<const Hypothesis*>& live) const {
  const auto mine = measured_set(h);
  auto contains = [&](const MeasuredSet& other) {
    return std::includes(other.begin(), other.end(), mine.begin(), mine.end());
  };
  for (const auto& s : finalized_sets_)
    if (contains(s)) return true;
  for (const Hypothesis* o : live)
    if (o != &h && contains(measured_set(*o))) return true;
  return false;
}

std::vector<Tracklet> TrackletEngine::finish() {
  std::sort(hypotheses_.begin(), hypotheses_.end(), [](const Hypothesis& a, const Hypothesis& b) {
    const auto ma = a.measured_count(), mb = b.measured_count();
    return ma != mb ? ma > mb : a.id < b.id;
  });
  std::vector<Tracklet> out;
  for (const auto& h : hypotheses_) {
    if (covered(h, {})) continue;
    if (auto t = finalize(h)) out.push_back(std::move(*t));
  }
  hypotheses_.clear();
  finalized_sets_.clear();
  return out;
}

std::vector<Tracklet> run_video(const std::string& video_id, int frame_count, const FrameLoader& load,
                                const FrameDetections& detections, const EngineConfig& cfg,
                                motion::MotionCache* cache) {
  if (frame_count < 1) throw InvalidArgument("run_video: empty video " + video_id);
  TrackletEngine engine(video_id, cfg);
  std::vector<Tracklet> out;
  static const std::vector<Detection> kNone;
  Image previous;
  for (int k = 0; k < frame_count; ++k) {
    Image frame;
    try {
      frame = load(k);
    } catch (const Error& e) {
      throw InputError("video " + video_id + " frame " + std::to_string(k) + ": " + e.what());
    }
    motion::CameraMotion cam;
    if (k > 0) {
      const auto cached = cache ? cache->get(video_id, k - 1) : std::nullopt;
      if (cached) {
        cam = *cached;
      } else {
        cam = motion::estimate_camera_motion(previous, frame);
        if (cache) cache->put(video_id, k - 1, cam);
      }
    }
    const auto it = detections.find(k);
    const auto& dets = it == detections.end() ? kNone : it->second;
    auto done = engine.step(k, dets, frame, cam);
    out.insert(out.end(), std::make_move_iterator(done.begin()), std::make_move_iterator(done.end()));
    previous = std::move(frame);
  }
  auto rest = engine.finish();
  out.insert(out.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
  std::sort(out.begin(), out.end(), [](const Tracklet& a, const Tracklet& b) {
    return a.birth_frame() != b.birth_frame() ? a.birth_frame() < b.birth_frame() : a.id < b.id;
  });
  return out;
}

std::vector<Tracklet> run_video(const VideoSource& src, const FrameDetections& detections, const EngineConfig& cfg,
                                motion::MotionCache* cache) {
  for (const auto& [frame, _] : detections)
    if (frame < 0 || frame >= src.frame_count)
      throw InvalidArgument("run_video: detection at frame " + std::to_string(frame) + " outside video " +
                            src.video_id);
  return run_video(
      src.video_id, src.frame_count, [&](int k) { return load_frame(src, k); }, detections, cfg, cache);
}

}  // namespace trackanno::engine
