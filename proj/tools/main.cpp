#include <unistd.h>

#include <iostream>

#include <CLI11.hpp>

#include "trackanno/core/error.hpp"
#include "trackanno/engine/tracklet_dump.hpp"
#include "trackanno/engine/tracklet_engine.hpp"
#include "trackanno/pipeline/config.hpp"
#include "trackanno/pipeline/detector.hpp"
#include "trackanno/pipeline/ingest.hpp"
#include "trackanno/pipeline/pipeline.hpp"
#include "trackanno/pipeline/training_set.hpp"
#include "trackanno/service/http_server.hpp"
#include "trackanno/synth/scenario.hpp"

namespace fs = std::filesystem;
using namespace trackanno;

namespace {

fs::path self_dir() {
  std::error_code ec;
  auto p = fs::read_symlink("/proc/self/exe", ec);
  return ec ? fs::current_path() : p.parent_path();
}

std::string synth_config(const fs::path& dir, const synth::WrittenCorpus& wc, std::uint64_t seed) {
  pipeline::PipelineConfig cfg;
  cfg.corpus = fs::absolute(wc.manifest);
  cfg.ground_truth = fs::absolute(wc.ground_truth_path);
  cfg.workdir = fs::absolute(dir / "work");
  cfg.seed = seed;
  cfg.detector = pipeline::mock_detector_contract(self_dir() / "trackanno-mock-detector", fs::absolute(wc.objects_path),
                                                  cfg.corpus);
  return pipeline::config_to_json(cfg);
}

GroundTruth load_gt(const pipeline::PipelineConfig& cfg, const fs::path& override_path) {
  fs::path p = override_path.empty() ? cfg.ground_truth : override_path;
  if (p.empty()) throw InvalidArgument("no ground truth configured");
  return read_ground_truth(p);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trackanno: semi-automatic single-object video annotation"};
  app.require_subcommand(1);

  std::optional<fs::path> config_opt;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_opt, "configuration file (default: $TRACKANNO_CONFIG or ./trackanno.json)");
  };

  // synth
  fs::path synth_out;
  int synth_videos = 3;
  synth::SceneConfig scene;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic corpus, ground truth and config");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--videos", synth_videos)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--frames", scene.frames)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--width", scene.width);
  synth_cmd->add_option("--height", scene.height);
  synth_cmd->add_option("--distractors", scene.distractors);
  synth_cmd->add_option("--seed", scene.seed);

  // bootstrap
  int every = 0;
  std::vector<std::string> boot_videos;
  fs::path gt_override;
  auto* boot_cmd = app.add_subcommand("bootstrap", "seed the store with manual annotations");
  add_config(boot_cmd);
  auto* every_opt = boot_cmd->add_option("--every", every, "annotate one frame in every K")->check(CLI::PositiveNumber);
  auto* videos_opt = boot_cmd->add_option("--videos", boot_videos, "annotate these videos completely")->delimiter(',');
  every_opt->excludes(videos_opt);
  boot_cmd->add_option("--gt", gt_override, "annotation source (default: configured ground truth)");

  // iterate
  std::string op_mode = "simulated";
  std::optional<double> theta_iou;
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* iter_cmd = app.add_subcommand("iterate", "run annotation iterations");
  add_config(iter_cmd);
  iter_cmd->add_option("--operator", op_mode)->check(CLI::IsMember({"simulated", "interactive"}));
  iter_cmd->add_option("--theta-iou", theta_iou, "simulated operator acceptance IoU");
  iter_cmd->add_option("--seed", seed);
  iter_cmd->add_option("--iterations", iterations, "run at most this many iterations")->check(CLI::PositiveNumber);
  iter_cmd->add_option("--host", host);
  iter_cmd->add_option("--port", port);

  // report / export
  auto* report_cmd = app.add_subcommand("report", "per-iteration metrics table");
  add_config(report_cmd);
  fs::path export_out;
  auto* export_cmd = app.add_subcommand("export", "write the training set and accepted annotations");
  add_config(export_cmd);
  export_cmd->add_option("--out", export_out)->required();

  // track
  fs::path track_dets, track_out;
  std::string track_video;
  auto* track_cmd = app.add_subcommand("track", "form tracklets from a detection file");
  add_config(track_cmd);
  track_cmd->add_option("--detections", track_dets)->required();
  track_cmd->add_option("--video", track_video, "restrict to one video");
  track_cmd->add_option("--out", track_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      auto wc = synth::write_corpus(synth_out, synth_videos, scene);
      text::write_file_atomic(synth_out / "trackanno.json", synth_config(synth_out, wc, scene.seed));
      std::cout << "wrote " << wc.corpus.videos.size() << " videos, " << wc.corpus.total_frames() << " frames to "
                << synth_out.string() << "\n";
      return 0;
    }

    const auto cfg_path = pipeline::resolve_config_path(config_opt);
    auto cfg = pipeline::load_config(cfg_path);
    const Corpus corpus = load_corpus(cfg.corpus);

    if (*boot_cmd) {
      const GroundTruth gt = load_gt(cfg, gt_override);
      long n = 0;
      if (*every_opt) {
        n = pipeline::bootstrap_every(cfg, corpus, gt, every);
      } else if (*videos_opt) {
        n = pipeline::bootstrap_videos(cfg, corpus, gt, boot_videos);
      } else {
        throw InvalidArgument("bootstrap needs --every K or --videos list");
      }
      std::cout << "added " << n << " initial annotations\n";
    } else if (*iter_cmd) {
      if (theta_iou) cfg.op.theta_iou = *theta_iou;
      if (seed) cfg.seed = *seed;
      cfg.validate();
      std::optional<GroundTruth> gt;
      if (!cfg.ground_truth.empty()) gt = read_ground_truth(cfg.ground_truth);
      pipeline::IterationOptions opts;
      opts.log = &std::cerr;
      opts.ground_truth = gt ? &*gt : nullptr;
      if (op_mode == "simulated") {
        if (!gt) throw InvalidArgument("the simulated operator needs ground truth");
        opts.review = service::simulated_operator(*gt, cfg.op);
        auto tick = std::make_shared<std::int64_t>(0);
        opts.clock = [tick] { return ++*tick; };
      } else {
        opts.review = service::interactive_operator(host, port, std::cerr);
      }
      auto done = pipeline::run_loop(cfg, corpus, opts, iterations);
      if (done.empty()) std::cerr << "stop condition already met; nothing to do\n";
      std::cout << pipeline::report(cfg, corpus, opts.ground_truth);
    } else if (*report_cmd) {
      std::optional<GroundTruth> gt;
      if (!cfg.ground_truth.empty()) gt = read_ground_truth(cfg.ground_truth);
      std::cout << pipeline::report(cfg, corpus, gt ? &*gt : nullptr);
    } else if (*export_cmd) {
      const auto store = AnnotationStore::load(pipeline::Workspace{cfg.workdir}.store());
      auto ts = pipeline::emit_training_set(store, corpus, export_out);
      pipeline::export_annotations(store, export_out / "annotations.csv");
      std::cout << "exported " << ts.frames << " frames to " << export_out.string() << "\n";
    } else if (*track_cmd) {
      auto ingested = pipeline::ingest_detections(track_dets, &corpus);
      for (const auto& w : ingested.warnings) std::cerr << "warning: " << w << "\n";
      std::vector<engine::Tracklet> all;
      for (const auto& v : corpus.videos) {
        if (!track_video.empty() && v.video_id != track_video) continue;
        FrameDetections dets;
        if (auto it = ingested.detections.find(v.video_id); it != ingested.detections.end()) dets = it->second;
        auto part = engine::run_video(v, dets, cfg.engine);
        all.insert(all.end(), part.begin(), part.end());
      }
      engine::write_tracklets(track_out, all);
      std::cout << all.size() << " tracklets\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "trackanno: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
