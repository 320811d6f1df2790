// Acceptance suite. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "dense_kalman.hpp"
#include "test_support.hpp"
#include "trackanno/engine/tracklet_engine.hpp"
#include "trackanno/evaluation/evaluation.hpp"
#include "trackanno/motion/kalman.hpp"
#include "trackanno/motion/phase_correlation.hpp"
#include "trackanno/pipeline/pipeline.hpp"
#include "trackanno/review/review.hpp"
#include "trackanno/synth/scenario.hpp"

using namespace trackanno;
namespace fs = std::filesystem;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------

Result measurement_roles() {
  using engine::MeasurementRoles;
  const engine::EngineConfig cfg;
  struct Cell {
    double c;
    bool gate;
    MeasurementRoles want;
  };
  const Cell cells[] = {
      {0.3, true, {false, true}},  {0.6, true, {true, false}},  {0.9, true, {true, false}},
      {0.3, false, {false, false}}, {0.6, false, {false, true}}, {0.9, false, {true, false}},
  };
  int ok = 0;
  for (const auto& c : cells) ok += engine::classify_measurement(c.c, c.gate, cfg) == c.want;
  return {ok == 6, std::to_string(ok) + "/6 cells"};
}

Result kalman_oracle() {
  motion::KalmanParams p;
  const motion::Mat2 q = p.process_cov();
  const bool theta_exact =
      q[0] == 1.0 / 3.0 * 0.005 && q[1] == 0.5 * 0.005 && q[2] == 0.5 * 0.005 && q[3] == 0.005;

  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-5, 5), y(-50, 50);
  motion::AxisState s;
  s.P = {p.sigma_v_sq, 0.0, 0.0, 100.0};
  testing::DenseAxis d(p.t, p.sigma_w_sq, p.sigma_v_sq);
  d.P = testing::Dense(2, 2, {p.sigma_v_sq, 0, 0, 100});
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double uk = u(rng);
    s = motion::predict(s, p, uk);
    d.predict(uk);
    if (rng() % 4 != 0) {
      const double yk = s.position() + 0.1 * y(rng);
      s = motion::update(s, p, yk);
      d.update(yk);
    }
    worst = std::max({worst, std::abs(s.x[0] - d.x(0, 0)), std::abs(s.x[1] - d.x(1, 0))});
    for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(s.P[i] - d.P.v[i]));
  }
  return {theta_exact && worst <= 1e-9,
          "max deviation " + fmt("%.3g", worst) + ", process covariance " + (theta_exact ? "exact" : "MISMATCH")};
}

Image textured(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  for (auto& v : px) v = static_cast<std::uint8_t>(rng() & 0xff);
  return Image::from_gray(w, h, std::move(px));
}

Image shifted(const Image& a, int dx, int dy, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  std::vector<std::uint8_t> px(a.gray.size());
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      const int tx = ((x + dx) % a.width + a.width) % a.width;
      const int ty = ((y + dy) % a.height + a.height) % a.height;
      const double v = a.gray_at(x, y) + (sigma > 0 ? n(rng) : 0.0);
      px[static_cast<std::size_t>(ty) * a.width + tx] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  return Image::from_gray(a.width, a.height, std::move(px));
}

Image noisy(const Image& a, double sigma, std::mt19937_64& rng) { return shifted(a, 0, 0, sigma, rng); }

Result phase_correlation() {
  constexpr int kSize = 512, kPairs = 200;
  motion::PhaseCorrelator pc(kSize, kSize);
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> shift(-32, 32);
  int exact_clean = 0, exact_noisy = 0;
  double worst_ms = 0.0;
  for (int i = 0; i < kPairs; ++i) {
    const Image a = textured(kSize, kSize, 1000 + static_cast<std::uint64_t>(i));
    const int dx = shift(rng), dy = shift(rng);
    const Image b = shifted(a, dx, dy, 0.0, rng);
    const auto t0 = Clock::now();
    const auto m = pc.estimate(a, b);
    worst_ms = std::max(worst_ms, 1000.0 * seconds_since(t0));
    exact_clean += m.du == dx && m.dv == dy;

    const Image an = noisy(a, 5.0, rng);
    const Image bn = shifted(a, dx, dy, 5.0, rng);
    const auto mn = pc.estimate(an, bn);
    exact_noisy += mn.du == dx && mn.dv == dy;
  }
  const bool pass = exact_clean == kPairs && exact_noisy >= 0.95 * kPairs && worst_ms < 100.0;
  return {pass, std::to_string(exact_clean) + "/200 noiseless, " + std::to_string(exact_noisy) +
                    "/200 noisy, slowest pair " + fmt("%.1f", worst_ms) + " ms"};
}

Result workload_arithmetic() {
  // Reference totals: annotated frames and their percentage of the frames
  // left after the initial set, plus the quoted reduction.
  struct Row {
    long initial, clicks, annotated;
    double annotated_pct, quoted;
    long manual, total;  // fixture
  };
  const Row rows[] = {
      {4803, 2712, 35960, 97.28, 82.84, 1005, 41768},
      {421, 1518, 40469, 96.91, 94.14, 1291, 42181},
      {0, 810, 22262, 98.03, 96.25, 447, 22709},
  };
  bool pass = true;
  std::string detail;
  for (const auto& r : rows) {
    // The fixture must be consistent with the reference counts.
    const long rest = r.total - r.initial;
    const bool consistent = r.manual == rest - r.annotated &&
                            std::lround(10000.0 * r.annotated / rest) == std::lround(100.0 * r.annotated_pct);
    // Independent evaluation in integer units of 1/(2T).
    const long num = 2 * r.initial + r.clicks + 2 * r.manual, den = 2 * r.total;
    const double oracle = 100.0 * static_cast<double>(den - num) / static_cast<double>(den);
    const double got = evaluation::workload_reduction(r.initial, r.clicks, r.manual, r.total);
    const bool ok = consistent && std::abs(got - oracle) < 1e-9 && std::abs(got - r.quoted) <= 0.01;
    pass = pass && ok;
    if (!detail.empty()) detail += ", ";
    detail += fmt("%.3f", got) + (ok ? "" : " (bad)");
  }
  return {pass, detail};
}

Result click_semantics() {
  std::mt19937_64 rng(5);
  int uniform_bad = 0, roundtrip_bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int len = 2 + static_cast<int>(rng() % 400);
    const auto t = testing::line_tracklet("v", static_cast<std::uint64_t>(trial + 1), 0, len);
    const auto samples = review::select_samples(t, 2 + static_cast<int>(rng() % 10));
    const std::size_t n = samples.size();

    for (Decision uni : {Decision::Accepted, Decision::Rejected}) {
      const auto clicks = evaluation::minimal_clicks(samples, std::vector<Decision>(n, uni));
      if (n >= 2 && clicks.size() != 2) ++uniform_bad;
    }
    std::vector<Decision> want(n);
    for (auto& d : want) d = rng() % 2 ? Decision::Accepted : Decision::Rejected;
    const auto clicks = evaluation::minimal_clicks(samples, want);
    const auto out = review::propagate(review::make_prompt(t), samples, clicks);
    if (out.sample_decisions != want) ++roundtrip_bad;
  }

  // Simulated operator on uniformly correct samples.
  GroundTruth gt;
  for (int f = 0; f < 300; ++f) gt.add("v", f, {10.0 + f, 20, 40, 30});
  const auto t = testing::line_tracklet("v", 1, 0, 300);
  const auto sim = evaluation::simulate_clicks(review::select_samples(t, 7), gt, "v", {0.5});
  const bool two = sim.size() == 2;
  return {uniform_bad == 0 && roundtrip_bad == 0 && two,
          std::to_string(uniform_bad) + " uniform tracklets not at 2 clicks, " + std::to_string(roundtrip_bad) +
              "/1000 round-trip mismatches"};
}

struct RunOutcome {
  std::vector<pipeline::IterationState> states;
  std::string store;
  std::vector<std::string> metrics;
  double seconds = 0.0;
};

RunOutcome run_pipeline(const testing::SyntheticSetup& setup, const fs::path& workdir) {
  pipeline::PipelineConfig cfg = setup.config;
  cfg.workdir = workdir;
  cfg.min_gain_pct = 0.0;
  cfg.op.theta_iou = 0.5;
  const auto t0 = Clock::now();
  pipeline::bootstrap_every(cfg, setup.corpus.corpus, setup.corpus.ground_truth, 100);
  pipeline::IterationOptions opts;
  opts.review = service::simulated_operator(setup.corpus.ground_truth, cfg.op);
  opts.ground_truth = &setup.corpus.ground_truth;
  opts.clock = [] { return std::int64_t{0}; };
  RunOutcome out;
  out.states = pipeline::run_loop(cfg, setup.corpus.corpus, opts, 3);
  out.seconds = seconds_since(t0);
  const pipeline::Workspace ws{workdir};
  out.store = slurp(ws.store());
  for (const auto& s : out.states) out.metrics.push_back(slurp(ws.iteration_dir(s.iteration) / "metrics.json"));
  return out;
}

Result synthetic_end_to_end(const fs::path& scratch) {
  synth::SceneConfig scene;
  scene.frames = 600;
  scene.seed = 17;
  const auto setup = testing::synthetic_setup(scratch / "e2e", 3, scene, 0.10, 0.05, 2.0);
  const RunOutcome a = run_pipeline(setup, scratch / "e2e" / "run_a");
  const RunOutcome b = run_pipeline(setup, scratch / "e2e" / "run_b");
  if (a.states.size() != 3) return {false, "loop stopped after " + std::to_string(a.states.size()) + " iterations"};

  long clicks = 0, fa_after = 0;
  for (const auto& s : a.states) {
    clicks += s.metrics.clicks;
    fa_after += s.metrics.fa_after.value_or(-1);
  }
  const double recall = a.states.back().metrics.recall_pct.value_or(0.0);
  const long target_frames = setup.corpus.ground_truth.frame_count();
  const double budget = 0.05 * 2.0 * static_cast<double>(target_frames);
  const bool same = a.store == b.store && a.metrics == b.metrics;
  const bool pass = recall >= 95.0 && fa_after == 0 && clicks <= budget && same && a.seconds < 300.0;
  return {pass, "recall " + fmt("%.2f", recall) + "%, FA-A " + std::to_string(fa_after) + ", clicks " +
                    std::to_string(clicks) + " (budget " + fmt("%.0f", budget) + "), runs " +
                    (same ? "identical" : "DIFFER") + ", " + fmt("%.1f", a.seconds) + " s per run"};
}

Result engine_invariants() {
  constexpr int kSeeds = 500;
  long violations = 0, steps = 0, tracklets = 0;
  std::string first;
  auto flag = [&](std::uint64_t seed, int frame, const std::string& what) {
    if (violations++ == 0) first = "seed " + std::to_string(seed) + " frame " + std::to_string(frame) + ": " + what;
  };
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    synth::SceneConfig sc;
    sc.width = 160;
    sc.height = 120;
    sc.frames = 100;
    sc.distractors = static_cast<int>(rng() % 4);
    sc.pan_amplitude = 30.0 * unit(rng);
    sc.seed = seed;
    const synth::Scene scene(sc);

    synth::MockDetectorConfig mc;
    mc.miss_rate = 0.4 * unit(rng);
    mc.fp_rate = 1.5 * unit(rng);
    mc.jitter_sigma = 4.0 * unit(rng);
    mc.seed = seed;

    engine::EngineConfig cfg;
    cfg.window = 2 + static_cast<int>(rng() % 6);
    cfg.theta_avg = 0.2 + 0.4 * unit(rng);
    cfg.theta_high = std::max(cfg.theta_avg, 0.5 + 0.3 * unit(rng));
    cfg.min_len = 2 + static_cast<int>(rng() % 4);
    cfg.validate();

    engine::TrackletEngine eng("v", cfg);
    std::vector<engine::Tracklet> done;
    for (int f = 0; f < sc.frames; ++f) {
      const auto boxes = scene.visible_boxes(f);
      auto dets = synth::mock_detect(mc, "v", f, boxes, sc.width, sc.height, 1);
      std::sort(dets.begin(), dets.end(), canonical_less);
      const motion::CameraMotion m = f == 0 ? motion::CameraMotion{} : scene.camera_motion(f - 1);
      auto out = eng.step(f, dets, scene.render(f), m);
      done.insert(done.end(), out.begin(), out.end());
      ++steps;

      std::set<std::size_t> used;
      for (const auto& h : eng.hypotheses()) {
        if (h.alarm_this_frame && !used.insert(*h.alarm_this_frame).second) flag(seed, f, "alarm assigned twice");
        if (h.p_avg() < cfg.theta_avg) flag(seed, f, "survivor below theta_avg");
        const auto& hist = h.history;
        if (static_cast<int>(hist.size()) >= cfg.window &&
            std::none_of(hist.end() - cfg.window, hist.end(), [](const engine::Instance& i) { return i.measured(); })) {
          flag(seed, f, "survivor starved for W frames");
        }
      }
    }
    auto rest = eng.finish();
    done.insert(done.end(), rest.begin(), rest.end());
    for (const auto& t : done) {
      ++tracklets;
      if (t.instances.empty() || !t.instances.front().measured() || !t.instances.back().measured())
        flag(seed, t.death_frame(), "tracklet does not begin and end measured");
      if (static_cast<int>(t.measured_count()) < cfg.min_len) flag(seed, t.death_frame(), "tracklet below min_len");
      for (std::size_t i = 1; i < t.instances.size(); ++i)
        if (t.instances[i].frame_index != t.instances[i - 1].frame_index + 1)
          flag(seed, t.death_frame(), "tracklet frames not consecutive");
    }
  }
  std::string detail = std::to_string(kSeeds) + " seeds, " + std::to_string(steps) + " steps, " +
                       std::to_string(tracklets) + " tracklets, " + std::to_string(violations) + " violations";
  if (!first.empty()) detail += " (first: " + first + ")";
  return {violations == 0, detail};
}

Result incremental_review(const fs::path& scratch) {
  synth::SceneConfig scene;
  scene.frames = 600;
  scene.seed = 29;
  auto setup = testing::synthetic_setup(scratch / "incr", 1, scene);
  setup.config.min_gain_pct = 0.0;
  const auto& corpus = setup.corpus.corpus;
  const auto& gt = setup.corpus.ground_truth;
  const std::string video = corpus.videos[0].video_id;

  AnnotationStore store;
  std::vector<AnnotationRecord> recs;
  for (int f = 0; f < 300; ++f) {
    const auto box = gt.at(video, f);
    if (!box) return {false, "target missing from frame " + std::to_string(f)};
    recs.push_back({video, f, *box, Decision::Accepted, Source::ManualInitial, 0});
  }
  store.commit(recs);
  const pipeline::Workspace ws{setup.config.workdir};
  fs::create_directories(ws.root);
  store.save(ws.store());

  pipeline::IterationOptions opts;
  opts.clock = [] { return std::int64_t{0}; };
  opts.review = [](service::ReviewService& svc) { svc.close(svc.create_session(svc.iteration(), {}).session_id); };
  pipeline::run_iteration(setup.config, corpus, opts);
  if (slurp(ws.store()) != store.serialize()) return {false, "iteration 1 changed the store"};

  long served = 0, violations = 0;
  opts.review = [&](service::ReviewService& svc) {
    const auto sid = svc.create_session(svc.iteration(), {}).session_id;
    for (;;) {
      const auto next = svc.next_tracklet(sid);
      if (next.done) break;
      for (const auto& s : next.samples) {
        ++served;
        violations += s.frame_index < 300;
      }
      svc.post_decisions(sid, next.tracklet.tracklet_key,
                         evaluation::simulate_clicks(next.samples, gt, next.tracklet.video_id, setup.config.op));
    }
    svc.close(sid);
  };
  const auto s2 = pipeline::run_iteration(setup.config, corpus, opts);
  if (s2.iteration != 2) return {false, "second run was iteration " + std::to_string(s2.iteration)};

  std::istringstream frames(slurp(ws.iteration_dir(2) / "frames.txt"));
  std::string line;
  long inferred_early = 0;
  while (std::getline(frames, line)) {
    const auto a = line.find(','), b = line.find(',', a + 1);
    inferred_early += std::stoi(line.substr(a + 1, b - a - 1)) < 300;
  }
  return {served > 0 && violations == 0 && inferred_early == 0,
          std::to_string(served) + " samples served, " + std::to_string(violations) + " before frame 300, " +
              std::to_string(inferred_early) + " covered frames sent to inference"};
}

}  // namespace

int main() {
  testing::TempDir scratch;
  const std::vector<std::pair<std::string, std::function<Result()>>> checks = {
      {"measurement-role table", measurement_roles},
      {"kalman oracle equivalence", kalman_oracle},
      {"phase correlation shift recovery", phase_correlation},
      {"workload arithmetic", workload_arithmetic},
      {"click semantics", click_semantics},
      {"synthetic end-to-end", [&] { return synthetic_end_to_end(scratch.path()); }},
      {"engine invariants under fuzzing", engine_invariants},
      {"incremental review", [&] { return incremental_review(scratch.path()); }},
  };
  int failed = 0;
  for (const auto& [name, check] : checks) {
    Result r;
    const auto t0 = Clock::now();
    try {
      r = check();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failed += !r.pass;
    std::cout << (r.pass ? "PASS " : "FAIL ") << name << ": " << r.detail << " [" << fmt("%.1f", seconds_since(t0))
              << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
