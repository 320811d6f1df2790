#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "trackanno/evaluation/evaluation.hpp"

using namespace trackanno;
using namespace trackanno::evaluation;
using trackanno::testing::line_tracklet;
using trackanno::testing::make_tracklet;

namespace {

constexpr Decision A = Decision::Accepted;
constexpr Decision R = Decision::Rejected;

std::vector<review::ReviewSample> samples_for(const std::vector<BoundingBox>& boxes, int first_frame = 0) {
  std::vector<review::ReviewSample> out;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    review::ReviewSample s;
    s.instance_index = i;
    s.frame_index = first_frame + static_cast<int>(i);
    s.box = boxes[i];
    s.sample_id = "v:1:" + std::to_string(s.frame_index);
    out.push_back(s);
  }
  return out;
}

AnnotationRecord rec(int frame, BoundingBox b, Source src = Source::OperatorConfirmed, int iteration = 1) {
  return {"v", frame, b, A, src, iteration};
}

IterationMetrics row(int iter, double rec, long fab, long faa, long clicks, long ann, double pct) {
  IterationMetrics m;
  m.iteration = iter;
  m.recall_pct = rec;
  m.fa_before = fab;
  m.fa_after = faa;
  m.clicks = clicks;
  m.annotated = ann;
  m.annotated_pct = pct;
  return m;
}

}  // namespace

TEST(SimulateClicks, UniformlyCorrectSamplesCostTwo) {
  GroundTruth gt;
  std::vector<BoundingBox> boxes;
  for (int f = 0; f < 7; ++f) {
    gt.add("v", f, {10.0 * f, 0, 20, 20});
    boxes.push_back({10.0 * f + 1, 0, 20, 20});  // IoU 0.9
  }
  const auto s = samples_for(boxes);
  const auto clicks = simulate_clicks(s, gt, "v", {0.5});
  ASSERT_EQ(clicks.size(), 2u);
  EXPECT_EQ(clicks[0].sample_id, s.front().sample_id);
  EXPECT_EQ(clicks[1].sample_id, s.back().sample_id);
  EXPECT_EQ(clicks[0].decision, A);
  EXPECT_EQ(clicks[1].decision, A);
}

TEST(SimulateClicks, SingleBadSampleIsOneReject) {
  GroundTruth gt;
  gt.add("v", 0, {0, 0, 10, 10});
  const auto s = samples_for({{8, 8, 10, 10}});
  const auto clicks = simulate_clicks(s, gt, "v", {0.5});
  ASSERT_EQ(clicks.size(), 1u);
  EXPECT_EQ(clicks[0].decision, R);
}

TEST(SimulateClicks, ChangePoints) {
  const auto s = samples_for(std::vector<BoundingBox>(5, BoundingBox{0, 0, 5, 5}));
  const std::vector<Decision> want{A, A, R, R, A};
  const auto clicks = minimal_clicks(s, want);
  ASSERT_EQ(clicks.size(), 3u);
  EXPECT_EQ(clicks[0].sample_id, s[0].sample_id);
  EXPECT_EQ(clicks[1].sample_id, s[2].sample_id);
  EXPECT_EQ(clicks[2].sample_id, s[4].sample_id);
  EXPECT_EQ(review::sample_decisions(s, clicks), want);
}

TEST(SimulateClicks, RoundTripRandomPatterns) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    const auto s = samples_for(std::vector<BoundingBox>(n, BoundingBox{0, 0, 5, 5}));
    std::vector<Decision> want(n);
    for (auto& d : want) d = rng() % 2 ? A : R;
    const auto clicks = minimal_clicks(s, want);
    EXPECT_EQ(review::sample_decisions(s, clicks), want);
    std::size_t changes = 0;
    for (std::size_t i = 1; i < n; ++i) changes += want[i] != want[i - 1];
    const std::size_t expect = n == 1 ? 1 : changes + 1 + (want[n - 1] == want[n - 2] ? 1 : 0);
    EXPECT_EQ(clicks.size(), expect);
  }
}

TEST(SimOpConfig, Range) {
  EXPECT_THROW(SimOpConfig{0.0}.validate(), InvalidArgument);
  EXPECT_THROW(SimOpConfig{1.5}.validate(), InvalidArgument);
  EXPECT_NO_THROW(SimOpConfig{0.2}.validate());
}

TEST(Metrics, RecallRatio) {
  GroundTruth gt;
  AnnotationStore store;
  std::vector<AnnotationRecord> recs;
  for (int f = 0; f < 10; ++f) {
    gt.add("v", f, {0, 0, 10, 10});
    if (f < 8) recs.push_back(rec(f, {0, 0, 10, 10}));
  }
  store.commit(recs);
  const auto m = compute_metrics(store, {1, 0, {}, 10}, &gt, {});
  EXPECT_DOUBLE_EQ(*m.recall_pct, 80.0);
  EXPECT_EQ(m.annotated, 8);
  EXPECT_DOUBLE_EQ(m.annotated_pct, 80.0);
}

TEST(Metrics, EmptyStore) {
  GroundTruth gt;
  gt.add("v", 0, {0, 0, 10, 10});
  const auto m = compute_metrics(AnnotationStore{}, {1, 0, {}, 1}, &gt, {});
  EXPECT_DOUBLE_EQ(*m.recall_pct, 0.0);
  EXPECT_EQ(*m.fa_after, 0);
  EXPECT_EQ(m.annotated, 0);
}

TEST(Metrics, MissingGroundTruthForAnnotatedVideo) {
  GroundTruth gt;
  gt.add("w", 0, {0, 0, 10, 10});
  AnnotationStore store;
  std::vector<AnnotationRecord> recs{rec(0, {0, 0, 10, 10})};
  store.commit(recs);
  EXPECT_THROW(compute_metrics(store, {1, 0, {}, 1}, &gt, {}), InputError);
}

TEST(Metrics, WithoutGroundTruthRatesAreAbsent) {
  AnnotationStore store;
  std::vector<AnnotationRecord> recs{rec(0, {0, 0, 10, 10}, Source::ManualInitial, 0), rec(1, {0, 0, 10, 10})};
  store.commit(recs);
  const auto m = compute_metrics(store, {1, 0, {}, 11}, nullptr, {});
  EXPECT_FALSE(m.recall_pct);
  EXPECT_FALSE(m.fa_before);
  EXPECT_EQ(m.frames_with_object, 10);
  EXPECT_DOUBLE_EQ(m.annotated_pct, 10.0);
}

TEST(Metrics, PlantedFalseTrackletsRejectedByReview) {
  // Target tracklet plus three persistent false tracklets on frames without the object.
  GroundTruth gt;
  for (int f = 0; f < 40; ++f) gt.add("v", f, {10.0 + f, 20, 40, 30});
  std::vector<engine::Tracklet> ts{line_tracklet("v", 1, 0, 40)};
  const int min_len = engine::EngineConfig{}.min_len;
  for (std::uint64_t k = 0; k < 3; ++k) {
    std::vector<std::optional<BoundingBox>> boxes(static_cast<std::size_t>(min_len + 3 * k),
                                                  BoundingBox{200.0 + 50 * k, 150, 20, 20});
    ts.push_back(make_tracklet("v", 2 + k, static_cast<int>(50 + 5 * k), boxes, 0.8));
  }
  AnnotationStore store;
  std::vector<Proposal> proposals;
  long clicks = 0;
  for (const auto& p : review::filter_prompt_set(ts, store)) {
    for (auto i : p.reviewable()) proposals.push_back({"v", p.tracklet.instances[i].frame_index, *p.tracklet.instances[i].box});
    const auto s = review::select_samples(p, 7);
    const auto c = simulate_clicks(s, gt, "v", {0.5});
    clicks += static_cast<long>(c.size());
    auto fresh = review::filter_prompt(p, store);
    ASSERT_TRUE(fresh);
    review::commit_outcome(review::propagate(*fresh, s, c), *fresh, store, 1);
  }
  const auto m = compute_metrics(store, {1, clicks, proposals, 100}, &gt, {0.5});
  EXPECT_GE(*m.fa_before, 3L * min_len);
  EXPECT_EQ(*m.fa_after, 0);
  EXPECT_LE(*m.fa_after, *m.fa_before);
  EXPECT_DOUBLE_EQ(*m.recall_pct, 100.0);
  EXPECT_EQ(clicks, 2 + 2 * 3);
}

TEST(Workload, QuotedFigures) {
  EXPECT_NEAR(workload_reduction(4803, 2712, 1005, 41768), 82.84, 0.01);
  EXPECT_NEAR(workload_reduction(421, 1518, 1291, 42181), 94.14, 0.01);
  EXPECT_NEAR(workload_reduction(0, 810, 447, 22709), 96.25, 0.01);
}

TEST(Workload, BoundaryIdentities) {
  EXPECT_DOUBLE_EQ(workload_reduction(0, 0, 100, 100), 0.0);
  EXPECT_DOUBLE_EQ(workload_reduction(0, 0, 0, 100), 100.0);
  EXPECT_DOUBLE_EQ(workload_reduction(100, 0, 0, 100), 0.0);
  EXPECT_THROW(workload_reduction(0, 0, 0, 0), InvalidArgument);
  EXPECT_THROW(workload_reduction(-1, 0, 0, 10), InvalidArgument);
}

TEST(Workload, StrictlyDecreasing) {
  for (long c = 0; c < 100; ++c) {
    EXPECT_GT(workload_reduction(10, c, 5, 1000), workload_reduction(10, c + 1, 5, 1000));
    EXPECT_GT(workload_reduction(10, 5, c, 1000), workload_reduction(10, 5, c + 1, 1000));
  }
}

TEST(Report, OneRowPlusTotals) {
  const std::vector<IterationMetrics> rows{row(1, 90.0, 10, 0, 20, 500, 83.33)};
  const auto text = iteration_report(rows);
  EXPECT_EQ(text,
            "Iter\tRec\tFA-B\tFA-A\tClick\tAnn #\tAnn %\n"
            "1\t90.00\t10\t0\t20\t500\t83.33\n"
            "Total\t20 / 500 (83.33%)\n");
}

TEST(Report, QuotedTableTotals) {
  const std::vector<IterationMetrics> rows{
      row(1, 66.81, 1809, 6, 757, 26162, 70.77), row(2, 82.11, 573, 6, 737, 31694, 85.74),
      row(3, 85.93, 437, 6, 533, 33074, 89.47),  row(4, 88.74, 139, 6, 410, 34136, 92.34),
      row(5, 96.23, 56, 6, 99, 35666, 96.48),    row(6, 96.92, 53, 6, 90, 35899, 97.11),
      row(7, 97.09, 103, 6, 86, 35960, 97.28)};
  const auto text = iteration_report(rows);
  EXPECT_NE(text.find("Total\t2712 / 35960 (97.28%)"), std::string::npos);
}

TEST(Report, DashesWithoutGroundTruth) {
  IterationMetrics m;
  m.iteration = 1;
  m.clicks = 4;
  m.annotated = 10;
  m.annotated_pct = 50.0;
  const auto text = iteration_report(std::vector<IterationMetrics>{m});
  EXPECT_NE(text.find("1\t-\t-\t-\t4\t10\t50.00\n"), std::string::npos);
}
