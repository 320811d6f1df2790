#include "trackanno/review/review.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <set>

#include "trackanno/core/error.hpp"

namespace trackanno::review {

const char* to_string(Reason r) {
  switch (r) {
    case Reason::Spaced: return "spaced";
    case Reason::LowObjectness: return "low-objectness";
    case Reason::LowCorrelation: return "low-correlation";
    case Reason::LowAvgObjectness: return "low-avg-objectness";
    case Reason::FarFromPrediction: return "far-from-prediction";
    case Reason::TemporalCoverage: return "temporal-coverage";
  }
  return "?";
}

std::vector<std::size_t> PromptTracklet::reviewable() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tracklet.instances.size(); ++i)
    if (tracklet.instances[i].measured() && !(i < suppressed.size() && suppressed[i])) out.push_back(i);
  return out;
}

std::size_t PromptTracklet::suppressed_measured() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < tracklet.instances.size(); ++i)
    if (tracklet.instances[i].measured() && i < suppressed.size() && suppressed[i]) ++n;
  return n;
}

PromptTracklet make_prompt(engine::Tracklet t) {
  PromptTracklet p;
  p.suppressed.assign(t.instances.size(), false);
  p.tracklet = std::move(t);
  return p;
}

std::string sample_id_for(const std::string& tracklet_key, int frame_index) {
  return tracklet_key + ":" + std::to_string(frame_index);
}

std::vector<ReviewSample> select_samples(const PromptTracklet& t, int n) {
  if (n < 2) throw InvalidArgument("select_samples: N must be at least 2");
  const auto cand = t.reviewable();
  if (cand.empty()) throw InvalidArgument("select_samples: tracklet " + t.key() + " has no reviewable instance");
  const auto& inst = t.tracklet.instances;
  const std::size_t L = cand.size();

  // Positions into `cand` -> reasons.
  std::map<std::size_t, std::set<Reason>> chosen;
  for (int i = 0; i < n; ++i) {
    const auto pos = static_cast<std::size_t>(
        std::lround(static_cast<double>(i) * static_cast<double>(L - 1) / static_cast<double>(n - 1)));
    chosen[pos].insert(Reason::Spaced);
  }
  std::vector<std::size_t> remainder;
  for (std::size_t p = 0; p < L; ++p)
    if (!chosen.count(p)) remainder.push_back(p);

  // Global extremum over the remainder; first occurrence wins ties.
  auto pick = [&](auto key, Reason reason) {
    if (remainder.empty()) return;
    std::size_t best = remainder.front();
    for (auto p : remainder)
      if (key(inst[cand[p]]) < key(inst[cand[best]])) best = p;
    chosen[best].insert(reason);
  };
  pick([](const engine::Instance& i) { return i.objectness; }, Reason::LowObjectness);
  pick([](const engine::Instance& i) { return i.correlation.value_or(1.0); }, Reason::LowCorrelation);
  pick([](const engine::Instance& i) { return i.p_avg; }, Reason::LowAvgObjectness);
  pick([](const engine::Instance& i) { return -i.distance_to_prediction.value_or(0.0); }, Reason::FarFromPrediction);

  // Instance farthest in time from everything displayed so far.
  {
    std::size_t best = L;
    int best_gap = -1;
    for (auto p : remainder) {
      if (chosen.count(p)) continue;
      int gap = std::numeric_limits<int>::max();
      for (const auto& [q, _] : chosen) gap = std::min(gap, std::abs(inst[cand[p]].frame_index - inst[cand[q]].frame_index));
      if (gap > best_gap) {
        best_gap = gap;
        best = p;
      }
    }
    if (best < L) chosen[best].insert(Reason::TemporalCoverage);
  }

  std::vector<ReviewSample> out;
  out.reserve(chosen.size());
  const auto key = t.key();
  for (const auto& [pos, reasons] : chosen) {
    const auto& i = inst[cand[pos]];
    ReviewSample s;
    s.tracklet_key = key;
    s.instance_index = cand[pos];
    s.frame_index = i.frame_index;
    s.box = *i.box;
    s.reasons.assign(reasons.begin(), reasons.end());
    s.sample_id = sample_id_for(key, i.frame_index);
    s.crop_ref = s.sample_id;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ReviewSample> select_samples(const engine::Tracklet& t, int n) { return select_samples(make_prompt(t), n); }

std::vector<Decision> sample_decisions(std::span<const ReviewSample> samples, const ClickSequence& clicks) {
  if (samples.empty()) throw InvalidArgument("propagate: no samples");
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < samples.size(); ++i) position.emplace(samples[i].sample_id, i);

  std::vector<std::optional<Decision>> clicked(samples.size());
  std::optional<std::size_t> prev;
  for (const auto& c : clicks) {
    const auto it = position.find(c.sample_id);
    if (it == position.end()) throw InvalidArgument("propagate: unknown sample " + c.sample_id);
    if (prev && it->second <= *prev) throw InvalidArgument("propagate: clicks out of temporal order at " + c.sample_id);
    clicked[it->second] = c.decision;
    prev = it->second;
  }
  if (!clicked.front()) throw IncompleteReview("review incomplete: first sample not clicked");
  if (!clicked.back()) throw IncompleteReview("review incomplete: last sample not confirmed");

  std::vector<Decision> out(samples.size());
  Decision current = *clicked.front();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (clicked[i]) current = *clicked[i];
    out[i] = current;
  }
  return out;
}

std::size_t ReviewOutcome::accepted() const {
  return std::count_if(decisions.begin(), decisions.end(),
                       [](const InstanceDecision& d) { return d.decision == Decision::Accepted; });
}

std::size_t ReviewOutcome::rejected() const { return decisions.size() - accepted(); }

ReviewOutcome propagate(const PromptTracklet& t, std::span<const ReviewSample> samples, const ClickSequence& clicks) {
  ReviewOutcome out;
  out.tracklet_key = t.key();
  out.sample_decisions = sample_decisions(samples, clicks);
  out.click_count = static_cast<int>(clicks.size());
  out.suppressed = t.suppressed_measured();

  const auto& inst = t.tracklet.instances;
  std::size_t s = 0;  // first sample at or after the current instance
  for (auto idx : t.reviewable()) {
    while (s < samples.size() && samples[s].instance_index < idx) ++s;
    Decision d;
    if (s < samples.size() && samples[s].instance_index == idx) {
      d = out.sample_decisions[s];
    } else if (s == 0 || s == samples.size()) {
      // Outside the sampled span; cannot happen for samples from select_samples.
      throw InvalidArgument("propagate: instance " + std::to_string(inst[idx].frame_index) +
                            " is not bracketed by samples");
    } else {
      const Decision before = out.sample_decisions[s - 1];
      const Decision after = out.sample_decisions[s];
      d = before == after ? before : Decision::Rejected;
    }
    out.decisions.push_back({idx, inst[idx].frame_index, d});
  }
  return out;
}

bool is_suppressed(const AnnotationStore& store, const std::string& video_id, const engine::Instance& inst) {
  const auto recs = store.records_at(video_id, inst.frame_index);
  if (recs.empty()) return false;
  for (const auto* r : recs) {
    if (r->decision == Decision::Accepted) return true;
    if (inst.box && iou(*inst.box, r->box) >= kRejectedOverlapIou) return true;
  }
  return false;
}

std::optional<PromptTracklet> filter_prompt(PromptTracklet t, const AnnotationStore& store) {
  t.suppressed.resize(t.tracklet.instances.size(), false);
  for (std::size_t i = 0; i < t.tracklet.instances.size(); ++i) {
    if (!t.suppressed[i] && is_suppressed(store, t.tracklet.video_id, t.tracklet.instances[i])) t.suppressed[i] = true;
  }
  if (t.reviewable().empty()) return std::nullopt;
  return t;
}

std::vector<PromptTracklet> filter_prompt_set(const std::vector<engine::Tracklet>& tracklets,
                                              const AnnotationStore& store) {
  std::vector<PromptTracklet> out;
  for (const auto& t : tracklets)
    if (auto p = filter_prompt(make_prompt(t), store)) out.push_back(std::move(*p));
  return out;
}

std::vector<PromptTracklet> filter_prompt_set(const std::vector<PromptTracklet>& tracklets,
                                              const AnnotationStore& store) {
  std::vector<PromptTracklet> out;
  for (const auto& t : tracklets)
    if (auto p = filter_prompt(t, store)) out.push_back(std::move(*p));
  return out;
}

std::vector<AnnotationRecord> outcome_records(const ReviewOutcome& outcome, const PromptTracklet& t,
                                              const AnnotationStore& store, int iteration) {
  if (outcome.tracklet_key != t.key())
    throw InvalidArgument("commit_outcome: outcome for " + outcome.tracklet_key + " applied to " + t.key());
  std::vector<AnnotationRecord> out;
  for (const auto& d : outcome.decisions) {
    if (d.instance_index >= t.tracklet.instances.size()) throw InvalidArgument("commit_outcome: bad instance index");
    const auto& inst = t.tracklet.instances[d.instance_index];
    if (!inst.measured()) continue;
    if (d.instance_index < t.suppressed.size() && t.suppressed[d.instance_index]) continue;
    AnnotationRecord r;
    r.video_id = t.tracklet.video_id;
    r.frame_index = inst.frame_index;
    r.box = *inst.box;
    r.decision = d.decision;
    r.source = d.decision == Decision::Accepted ? Source::OperatorConfirmed : Source::OperatorRejected;
    r.iteration = iteration;
    const bool already = [&] {
      for (const auto* e : store.records_at(r.video_id, r.frame_index))
        if (e->decision == r.decision && e->box == r.box) return true;
      return false;
    }();
    if (!already) out.push_back(std::move(r));
  }
  return out;
}

void commit_outcome(const ReviewOutcome& outcome, const PromptTracklet& t, AnnotationStore& store, int iteration) {
  const auto records = outcome_records(outcome, t, store, iteration);
  store.commit(records);
}

}  // namespace trackanno::review
