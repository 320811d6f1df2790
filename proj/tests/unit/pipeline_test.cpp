#include <gtest/gtest.h>

#include <chrono>
#include <fstream>

#include "test_support.hpp"
#include "trackanno/core/error.hpp"
#include "trackanno/engine/tracklet_dump.hpp"
#include "trackanno/pipeline/config.hpp"
#include "trackanno/pipeline/detector.hpp"
#include "trackanno/pipeline/ingest.hpp"
#include "trackanno/pipeline/pipeline.hpp"
#include "trackanno/pipeline/training_set.hpp"

using namespace trackanno;
using namespace trackanno::pipeline;
using trackanno::testing::SyntheticSetup;
using trackanno::testing::TempDir;
namespace fs = std::filesystem;

namespace {

synth::SceneConfig small_scene(int frames = 60) {
  synth::SceneConfig s;
  s.width = 160;
  s.height = 120;
  s.frames = frames;
  s.pan_amplitude = 10.0;
  s.seed = 3;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

IterationState state(int k, double gain) {
  IterationState s;
  s.iteration = k;
  s.gain_pct = gain;
  return s;
}

IterationOptions simulated(const GroundTruth& gt, const PipelineConfig& cfg) {
  IterationOptions o;
  o.review = service::simulated_operator(gt, cfg.op);
  o.ground_truth = &gt;
  o.clock = [] { return std::int64_t{0}; };
  return o;
}

}  // namespace

TEST(Ingest, ThreeValidLines) {
  const auto r = parse_detections(
      "v1,0,10,10,20,20,0.9\n"
      "v1,0,50,50,10,10,0.4\n"
      "v2,3,0,0,5,5,0.1\n",
      "test");
  EXPECT_EQ(r.count, 3u);
  EXPECT_TRUE(r.warnings.empty());
  ASSERT_EQ(r.detections.at("v1").at(0).size(), 2u);
  EXPECT_DOUBLE_EQ(r.detections.at("v1").at(0)[0].objectness, 0.9);
}

TEST(Ingest, ExactDuplicateDroppedWithWarning) {
  const auto r = parse_detections("v1,0,10,10,20,20,0.9\nv1,0,10,10,20,20,0.9\n", "test");
  EXPECT_EQ(r.count, 1u);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("line 2"), std::string::npos);
}

TEST(Ingest, OutOfRangeObjectnessNamesLine) {
  try {
    parse_detections("v1,0,10,10,20,20,1.5\n", "test");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
}

TEST(Ingest, MalformedListsEveryLine) {
  try {
    parse_detections("v1,0,10,10,20,20\nv1,1,1,1,1,1,0.5\nv1,x,1,1,1,1,0.5\n", "test");
    FAIL();
  } catch (const InputError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 1"), std::string::npos);
    EXPECT_NE(msg.find("line 3"), std::string::npos);
    EXPECT_EQ(msg.find("line 2"), std::string::npos);
  }
}

TEST(Ingest, UnknownVideoAndFrameOutsideCorpus) {
  Corpus c;
  c.videos.push_back({"v1", "/nowhere", 10, 64, 48});
  EXPECT_THROW(parse_detections("v9,0,1,1,5,5,0.5\n", "t", &c), ValidationError);
  EXPECT_THROW(parse_detections("v1,10,1,1,5,5,0.5\n", "t", &c), ValidationError);
  EXPECT_NO_THROW(parse_detections("v1,9,1,1,5,5,0.5\n", "t", &c));
}

TEST(Ingest, CommentsAndBlankLinesSkipped) {
  const auto r = parse_detections("# header\n\nv1,0,1,1,5,5,0.5\n", "t");
  EXPECT_EQ(r.count, 1u);
}

class TrainingSetTest : public ::testing::Test {
 protected:
  void SetUp() override { written = synth::write_corpus(dir / "corpus", 1, small_scene(20)); }

  AnnotationStore store_of(int frames) const {
    AnnotationStore s;
    std::vector<AnnotationRecord> recs;
    const auto& v = written.corpus.videos[0];
    for (int f = 0; f < frames; ++f)
      recs.push_back({v.video_id, f, *written.ground_truth.at(v.video_id, f), Decision::Accepted,
                      Source::ManualInitial, 0});
    s.commit(recs);
    return s;
  }

  TempDir dir;
  synth::WrittenCorpus written;
};

TEST_F(TrainingSetTest, OneLabelPerAcceptedFrame) {
  const auto ts = emit_training_set(store_of(10), written.corpus, dir / "out");
  EXPECT_EQ(ts.frames, 10u);
  std::size_t labels = 0;
  for (const auto& e : fs::directory_iterator(ts.label_dir)) labels += e.is_regular_file();
  EXPECT_EQ(labels, 10u);
  std::ifstream in(ts.manifest);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    EXPECT_TRUE(fs::exists(line)) << line;
    ++lines;
  }
  EXPECT_EQ(lines, 10u);
}

TEST_F(TrainingSetTest, ReemissionIsByteIdentical) {
  const auto a = emit_training_set(store_of(10), written.corpus, dir / "a");
  const auto b = emit_training_set(store_of(10), written.corpus, dir / "b");
  EXPECT_EQ(slurp(a.manifest), slurp(b.manifest));
  for (const auto& e : fs::directory_iterator(a.label_dir))
    EXPECT_EQ(slurp(e.path()), slurp(b.label_dir / e.path().filename()));
}

TEST_F(TrainingSetTest, StaleLabelsRemoved) {
  emit_training_set(store_of(10), written.corpus, dir / "out");
  const auto ts = emit_training_set(store_of(5), written.corpus, dir / "out");
  std::size_t labels = 0;
  for (const auto& e : fs::directory_iterator(ts.label_dir)) labels += e.is_regular_file();
  EXPECT_EQ(labels, 5u);
}

TEST_F(TrainingSetTest, MissingImageNamesFrame) {
  const auto& v = written.corpus.videos[0];
  fs::remove(v.frame_path(3));
  try {
    emit_training_set(store_of(10), written.corpus, dir / "out");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find(v.frame_path(3).filename().string()), std::string::npos);
  }
}

TEST(YoloLabel, FullFrame) {
  EXPECT_EQ(yolo_label({0, 0, 640, 480}, 640, 480), "0 0.500000 0.500000 1.000000 1.000000");
  EXPECT_EQ(yolo_label({0, 0, 320, 120}, 640, 480), "0 0.250000 0.125000 0.500000 0.250000");
}

TEST(StopCondition, GainBelowThreshold) {
  PipelineConfig cfg;
  cfg.min_gain_pct = 0.5;
  std::vector<IterationState> h{state(1, 5.0)};
  EXPECT_FALSE(stop_condition(h, cfg));
  h.push_back(state(2, 3.0));
  EXPECT_FALSE(stop_condition(h, cfg));
  h.push_back(state(3, 0.2));
  EXPECT_TRUE(stop_condition(h, cfg));
}

TEST(StopCondition, ExactThresholdContinues) {
  PipelineConfig cfg;
  cfg.min_gain_pct = 0.5;
  std::vector<IterationState> h{state(1, 0.5)};
  EXPECT_FALSE(stop_condition(h, cfg));
}

TEST(StopCondition, MaxIterations) {
  PipelineConfig cfg;
  cfg.max_iter = 10;
  std::vector<IterationState> h{state(9, 50.0)};
  EXPECT_FALSE(stop_condition(h, cfg));
  h.push_back(state(10, 50.0));
  EXPECT_TRUE(stop_condition(h, cfg));
}

TEST(StopCondition, EmptyHistoryThrows) {
  EXPECT_THROW(stop_condition(std::vector<IterationState>{}, PipelineConfig{}), InvalidArgument);
}

TEST(IterationStateJson, RoundTrip) {
  IterationState s = state(4, 1.25);
  s.model_ref = "/w/iteration_4/model";
  s.metrics.iteration = 4;
  s.metrics.clicks = 17;
  s.metrics.recall_pct = 91.5;
  const auto back = state_from_json(state_to_json(s));
  EXPECT_EQ(back.iteration, 4);
  EXPECT_EQ(back.model_ref, s.model_ref);
  EXPECT_DOUBLE_EQ(back.gain_pct, 1.25);
  EXPECT_EQ(back.metrics.clicks, 17);
  EXPECT_DOUBLE_EQ(*back.metrics.recall_pct, 91.5);
  EXPECT_FALSE(back.metrics.fa_before);
  EXPECT_THROW(state_from_json("{oops"), InputError);
}

TEST(Config, ParseDefaultsAndRelativePaths) {
  const auto c = parse_config(R"({"corpus": "c/corpus.json", "workdir": "/abs/work",
    "engine": {"W": 5, "theta_avg": 0.3}, "review": {"N": 9},
    "detector": {"train_command": "t {train_list} {model_out}", "infer_command": "i {model} {frame_list} {detections_out}"}})",
                              "/base");
  EXPECT_EQ(c.corpus, fs::path("/base/c/corpus.json"));
  EXPECT_EQ(c.workdir, fs::path("/abs/work"));
  EXPECT_EQ(c.engine.window, 5);
  EXPECT_DOUBLE_EQ(c.engine.theta_avg, 0.3);
  EXPECT_EQ(c.review_n, 9);
  EXPECT_DOUBLE_EQ(c.engine.gamma, engine::EngineConfig{}.gamma);
  EXPECT_DOUBLE_EQ(c.min_gain_pct, 0.5);
}

TEST(Config, UnknownKeyRejected) {
  EXPECT_THROW(parse_config(R"({"corpus": "c", "workdir": "w", "bogus": 1})", "/b"), InvalidArgument);
  EXPECT_THROW(parse_config(R"({"engine": {"thetaL": 0.2}})", "/b"), InvalidArgument);
  EXPECT_THROW(parse_config("not json", "/b"), InputError);
}

TEST(Config, DumpReparses) {
  PipelineConfig c;
  c.corpus = "/x/corpus.json";
  c.workdir = "/x/work";
  c.seed = 42;
  c.engine.min_len = 7;
  c.detector.train_command = "t {train_list} {model_out}";
  c.detector.infer_command = "i {model} {frame_list} {detections_out}";
  const auto back = parse_config(config_to_json(c), "/elsewhere");
  EXPECT_EQ(back.corpus, c.corpus);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.engine.min_len, 7);
  EXPECT_EQ(back.detector.infer_command, c.detector.infer_command);
}

TEST(Config, ContractPlaceholders) {
  DetectorContract d{"t {train_list} {model_out}", "i {model} {frame_list} {detections_out} {seed}"};
  EXPECT_NO_THROW(d.validate());
  d.infer_command = "i {model} {frame_list}";
  EXPECT_THROW(d.validate(), InvalidArgument);
  d.infer_command = "i {model} {frame_list} {detections_out} {nope}";
  EXPECT_THROW(d.validate(), InvalidArgument);
}

TEST(Command, QuoteAndExpand) {
  EXPECT_EQ(shell_quote("a b"), "'a b'");
  EXPECT_EQ(shell_quote("it's"), "'it'\\''s'");
  EXPECT_EQ(expand_command("run {x} --y {y}", {{"x", "/p q"}, {"y", "1"}}), "run '/p q' --y '1'");
  EXPECT_THROW(expand_command("run {z}", {}), InvalidArgument);
}

TEST(Command, TimeoutKillsProcess) {
  TempDir dir;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_command("sleep 20", 0.3, dir / "log");
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_TRUE(r.timed_out);
  EXPECT_LT(s, 5.0);
}

TEST(Command, ExitCodeAndOutputTail) {
  TempDir dir;
  const auto r = run_command("echo hello; exit 3", 10.0, dir / "log");
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_FALSE(r.timed_out);
  EXPECT_NE(r.output_tail.find("hello"), std::string::npos);
}

class PipelineRun : public ::testing::Test {
 protected:
  void SetUp() override { setup = trackanno::testing::synthetic_setup(dir.path(), 1, small_scene()); }

  TempDir dir;
  SyntheticSetup setup;
};

TEST_F(PipelineRun, RequiresBootstrap) {
  EXPECT_THROW(run_iteration(setup.config, setup.corpus.corpus, simulated(setup.corpus.ground_truth, setup.config)),
               InvalidArgument);
}

TEST_F(PipelineRun, DetectorFailureLeavesStoreUntouched) {
  const auto& cfg = setup.config;
  bootstrap_every(cfg, setup.corpus.corpus, setup.corpus.ground_truth, 10);
  const std::string before = slurp(Workspace{cfg.workdir}.store());
  PipelineConfig broken = cfg;
  broken.detector.infer_command = "echo failing >&2; exit 7; : {model} {frame_list} {detections_out}";
  try {
    run_iteration(broken, setup.corpus.corpus, simulated(setup.corpus.ground_truth, broken));
    FAIL();
  } catch (const ProcessError& e) {
    EXPECT_NE(std::string(e.what()).find("7"), std::string::npos);
  }
  EXPECT_EQ(slurp(Workspace{cfg.workdir}.store()), before);
  EXPECT_TRUE(load_history(Workspace{cfg.workdir}).empty());
  EXPECT_FALSE(fs::exists(Workspace{cfg.workdir}.lock()));
}

TEST_F(PipelineRun, FullyAnnotatedCorpusNeedsNoReview) {
  const auto& cfg = setup.config;
  const long n = bootstrap_every(cfg, setup.corpus.corpus, setup.corpus.ground_truth, 1);
  EXPECT_EQ(n, setup.corpus.ground_truth.frame_count());
  const auto s = run_iteration(cfg, setup.corpus.corpus, simulated(setup.corpus.ground_truth, cfg));
  EXPECT_EQ(s.metrics.clicks, 0);
  EXPECT_EQ(s.metrics.new_annotations, 0);
  EXPECT_EQ(s.metrics.annotated, 0);
  EXPECT_TRUE(slurp(Workspace{cfg.workdir}.iteration_dir(1) / "frames.txt").empty());
}

TEST_F(PipelineRun, NoDetectionsNoTracklets) {
  PipelineConfig cfg = setup.config;
  cfg.detector = pipeline::mock_detector_contract(trackanno::testing::mock_detector(),
                                                  fs::absolute(setup.corpus.objects_path), cfg.corpus, 1.0, 0.0);
  bootstrap_every(cfg, setup.corpus.corpus, setup.corpus.ground_truth, 20);
  const Workspace ws{cfg.workdir};
  const std::string before = slurp(ws.store());
  const auto s = run_iteration(cfg, setup.corpus.corpus, simulated(setup.corpus.ground_truth, cfg));
  EXPECT_EQ(s.metrics.clicks, 0);
  EXPECT_EQ(s.metrics.annotated, 0);
  EXPECT_EQ(pipeline::ingest_detections(ws.iteration_dir(1) / "detections.csv").count, 0u);
  EXPECT_TRUE(engine::read_tracklets(ws.iteration_dir(1) / "tracklets.csv").empty());
  EXPECT_EQ(slurp(ws.store()), before);
}

TEST_F(PipelineRun, LockHeldIsConflict) {
  const auto& cfg = setup.config;
  bootstrap_every(cfg, setup.corpus.corpus, setup.corpus.ground_truth, 10);
  WorkspaceLock held(Workspace{cfg.workdir}.lock());
  EXPECT_THROW(run_iteration(cfg, setup.corpus.corpus, simulated(setup.corpus.ground_truth, cfg)), ConflictError);
}

TEST_F(PipelineRun, AnnotationCoverageGrows) {
  const auto& cfg = setup.config;
  bootstrap_every(cfg, setup.corpus.corpus, setup.corpus.ground_truth, 20);
  const auto opts = simulated(setup.corpus.ground_truth, cfg);
  const auto runs = run_loop(cfg, setup.corpus.corpus, opts, 2);
  ASSERT_FALSE(runs.empty());
  EXPECT_EQ(runs[0].iteration, 1);
  EXPECT_GT(runs[0].metrics.annotated, 0);
  EXPECT_GT(runs[0].metrics.clicks, 0);
  for (std::size_t i = 1; i < runs.size(); ++i) {
    EXPECT_EQ(runs[i].iteration, runs[i - 1].iteration + 1);
    EXPECT_GE(runs[i].metrics.annotated_pct, runs[i - 1].metrics.annotated_pct);
  }
  EXPECT_EQ(*runs[0].metrics.fa_after, 0);
  const auto h = load_history(Workspace{cfg.workdir});
  EXPECT_EQ(h.size(), runs.size());
  const std::string rep = report(cfg, setup.corpus.corpus, &setup.corpus.ground_truth);
  EXPECT_NE(rep.find("Workload reduction"), std::string::npos);
}

TEST_F(PipelineRun, BootstrapAfterIterationRejected) {
  const auto& cfg = setup.config;
  bootstrap_every(cfg, setup.corpus.corpus, setup.corpus.ground_truth, 1);
  run_iteration(cfg, setup.corpus.corpus, simulated(setup.corpus.ground_truth, cfg));
  EXPECT_THROW(bootstrap_every(cfg, setup.corpus.corpus, setup.corpus.ground_truth, 5), ConflictError);
}
