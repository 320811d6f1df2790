#include "trackanno/evaluation/evaluation.hpp"

#include <cstdio>
#include <set>
#include <type_traits>

#include "trackanno/core/error.hpp"

namespace trackanno::evaluation {

void SimOpConfig::validate() const {
  if (!(theta_iou > 0.0 && theta_iou <= 1.0)) throw InvalidArgument("theta_iou must lie in (0, 1]");
}

review::ClickSequence minimal_clicks(std::span<const review::ReviewSample> samples, std::span<const Decision> desired) {
  if (samples.size() != desired.size()) throw InvalidArgument("minimal_clicks: size mismatch");
  review::ClickSequence clicks;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const bool first = i == 0;
    const bool last = i + 1 == samples.size();
    if (first || last || desired[i] != desired[i - 1]) clicks.push_back({samples[i].sample_id, desired[i]});
  }
  return clicks;
}

review::ClickSequence simulate_clicks(std::span<const review::ReviewSample> samples, const GroundTruth& gt,
                                      const std::string& video_id, const SimOpConfig& cfg) {
  std::vector<Decision> desired;
  desired.reserve(samples.size());
  for (const auto& s : samples) {
    const auto truth = gt.at(video_id, s.frame_index);
    desired.push_back(truth && iou(*truth, s.box) >= cfg.theta_iou ? Decision::Accepted : Decision::Rejected);
  }
  return minimal_clicks(samples, desired);
}

namespace {

bool matches(const GroundTruth& gt, const std::string& video, int frame, const BoundingBox& box, double theta) {
  const auto truth = gt.at(video, frame);
  return truth && iou(*truth, box) >= theta;
}

}  // namespace

IterationMetrics compute_metrics(const AnnotationStore& store, const MetricsInput& in, const GroundTruth* gt,
                                 const SimOpConfig& cfg) {
  cfg.validate();
  IterationMetrics m;
  m.iteration = in.iteration;
  m.clicks = in.clicks;

  std::set<std::pair<std::string, int>> manual;
  for (const auto& r : store.records()) {
    if (r.decision != Decision::Accepted) continue;
    if (r.source == Source::ManualInitial) {
      manual.emplace(r.video_id, r.frame_index);
      continue;
    }
    ++m.annotated;
    if (r.iteration == in.iteration) ++m.new_annotations;
  }

  if (gt) {
    for (const auto& r : store.records())
      if (r.decision == Decision::Accepted && !gt->covers(r.video_id))
        throw InputError("no ground truth for annotated video " + r.video_id);

    long gt_frames = 0, matched = 0;
    for (const auto& [video, frames] : gt->all()) {
      for (const auto& [frame, box] : frames) {
        if (manual.count({video, frame})) continue;
        ++gt_frames;
        const auto* acc = store.accepted_at(video, frame);
        if (acc && iou(acc->box, box) >= 0.5) ++matched;
      }
    }
    m.frames_with_object = gt_frames;
    m.recall_pct = gt_frames > 0 ? 100.0 * static_cast<double>(matched) / static_cast<double>(gt_frames) : 0.0;

    long fa_b = 0;
    for (const auto& p : in.proposals)
      if (!matches(*gt, p.video_id, p.frame_index, p.box, cfg.theta_iou)) ++fa_b;
    long fa_a = 0;
    for (const auto& r : store.records())
      if (r.decision == Decision::Accepted && r.source == Source::OperatorConfirmed && r.iteration == in.iteration &&
          !matches(*gt, r.video_id, r.frame_index, r.box, cfg.theta_iou))
        ++fa_a;
    m.fa_before = fa_b;
    m.fa_after = fa_a;
  } else {
    m.frames_with_object = in.corpus_frames - static_cast<long>(manual.size());
  }
  m.annotated_pct =
      m.frames_with_object > 0 ? 100.0 * static_cast<double>(m.annotated) / static_cast<double>(m.frames_with_object) : 0.0;
  return m;
}

double workload_reduction(long initial_boxes, long review_clicks, long manual_boxes, long total_boxes) {
  if (total_boxes <= 0) throw InvalidArgument("workload_reduction: total_boxes must be positive");
  if (initial_boxes < 0 || review_clicks < 0 || manual_boxes < 0)
    throw InvalidArgument("workload_reduction: counts must be non-negative");
  const double spent = 2.0 * initial_boxes + review_clicks + 2.0 * manual_boxes;
  return 100.0 * (1.0 - spent / (2.0 * static_cast<double>(total_boxes)));
}

namespace {

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

template <typename T>
std::string or_dash(const std::optional<T>& v) {
  if (!v) return "-";
  if constexpr (std::is_floating_point_v<T>)
    return fixed2(*v);
  else
    return std::to_string(*v);
}

}  // namespace

std::string iteration_report(std::span<const IterationMetrics> rows) {
  std::string out = "Iter\tRec\tFA-B\tFA-A\tClick\tAnn #\tAnn %\n";
  long clicks = 0;
  for (const auto& r : rows) {
    clicks += r.clicks;
    out += std::to_string(r.iteration) + '\t' + or_dash(r.recall_pct) + '\t' + or_dash(r.fa_before) + '\t' +
           or_dash(r.fa_after) + '\t' + std::to_string(r.clicks) + '\t' + std::to_string(r.annotated) + '\t' +
           fixed2(r.annotated_pct) + '\n';
  }
  const long annotated = rows.empty() ? 0 : rows.back().annotated;
  const double pct = rows.empty() ? 0.0 : rows.back().annotated_pct;
  out += "Total\t" + std::to_string(clicks) + " / " + std::to_string(annotated) + " (" + fixed2(pct) + "%)\n";
  return out;
}

}  // namespace trackanno::evaluation
