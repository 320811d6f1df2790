#include "trackanno/pipeline/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "trackanno/core/error.hpp"
#include "trackanno/engine/tracklet_dump.hpp"
#include "trackanno/engine/tracklet_engine.hpp"
#include "trackanno/motion/motion_cache.hpp"
#include "trackanno/pipeline/detector.hpp"
#include "trackanno/pipeline/ingest.hpp"
#include "trackanno/pipeline/training_set.hpp"

namespace trackanno::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

json metrics_json(const evaluation::IterationMetrics& m) {
  json j;
  j["iteration"] = m.iteration;
  j["recall_pct"] = m.recall_pct ? json(*m.recall_pct) : json(nullptr);
  j["fa_before"] = m.fa_before ? json(*m.fa_before) : json(nullptr);
  j["fa_after"] = m.fa_after ? json(*m.fa_after) : json(nullptr);
  j["clicks"] = m.clicks;
  j["annotated"] = m.annotated;
  j["annotated_pct"] = m.annotated_pct;
  j["frames_with_object"] = m.frames_with_object;
  j["new_annotations"] = m.new_annotations;
  return j;
}

evaluation::IterationMetrics metrics_from(const json& j) {
  evaluation::IterationMetrics m;
  m.iteration = j.at("iteration").get<int>();
  if (!j.at("recall_pct").is_null()) m.recall_pct = j["recall_pct"].get<double>();
  if (!j.at("fa_before").is_null()) m.fa_before = j["fa_before"].get<long>();
  if (!j.at("fa_after").is_null()) m.fa_after = j["fa_after"].get<long>();
  m.clicks = j.at("clicks").get<long>();
  m.annotated = j.at("annotated").get<long>();
  m.annotated_pct = j.at("annotated_pct").get<double>();
  m.frames_with_object = j.at("frames_with_object").get<long>();
  m.new_annotations = j.at("new_annotations").get<long>();
  return m;
}

void say(const IterationOptions& o, const std::string& msg) {
  if (o.log) *o.log << msg << "\n" << std::flush;
}

void append_line(const fs::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  out << line << "\n";
  out.flush();
  if (!out) throw Error("cannot append to " + path.string());
}

/// Finish or discard an iteration directory left behind by an interrupted run.
void recover(const Workspace& ws, int k) {
  fs::path dir = ws.iteration_dir(k);
  if (!fs::exists(dir)) return;
  fs::path snapshot = dir / "store.snapshot.jsonl";
  fs::path state = dir / "state.json";
  if (fs::exists(snapshot) && fs::exists(state) && fs::exists(ws.store()) &&
      text::read_file(snapshot) == text::read_file(ws.store())) {
    append_line(ws.history(), std::string(text::trim(text::read_file(state))));
    return;
  }
  fs::remove_all(dir);
}

std::vector<Detection> accepted_as_detections(const AnnotationStore& store, const std::string& video_id) {
  std::vector<Detection> out;
  for (const auto& r : store.records()) {
    if (r.video_id == video_id && r.decision == Decision::Accepted) out.push_back({r.video_id, r.frame_index, r.box, 1.0});
  }
  return out;
}

}  // namespace

std::string state_to_json(const IterationState& s) {
  json j;
  j["iteration"] = s.iteration;
  j["model_ref"] = s.model_ref.string();
  j["store_snapshot"] = s.store_snapshot.string();
  j["gain_pct"] = s.gain_pct;
  j["metrics"] = metrics_json(s.metrics);
  return j.dump();
}

IterationState state_from_json(const std::string& line) {
  try {
    json j = json::parse(line);
    IterationState s;
    s.iteration = j.at("iteration").get<int>();
    s.model_ref = j.at("model_ref").get<std::string>();
    s.store_snapshot = j.at("store_snapshot").get<std::string>();
    s.gain_pct = j.at("gain_pct").get<double>();
    s.metrics = metrics_from(j.at("metrics"));
    return s;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed iteration state: ") + e.what());
  }
}

bool stop_condition(std::span<const IterationState> history, const PipelineConfig& cfg) {
  if (history.empty()) throw InvalidArgument("stop_condition needs at least one completed iteration");
  const IterationState& last = history.back();
  return last.gain_pct < cfg.min_gain_pct || last.iteration >= cfg.max_iter;
}

WorkspaceLock::WorkspaceLock(fs::path path) : path_(std::move(path)) {
  fs::create_directories(path_.parent_path());
  int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw ConflictError("work directory is locked by another run (" + path_.string() +
                        "); remove the file if no run is active");
  }
  std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

WorkspaceLock::~WorkspaceLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

std::vector<IterationState> load_history(const Workspace& ws) {
  std::vector<IterationState> out;
  if (!fs::exists(ws.history())) return out;
  std::istringstream in(text::read_file(ws.history()));
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    out.push_back(state_from_json(line));
    if (out.size() > 1 && out.back().iteration <= out[out.size() - 2].iteration) {
      throw InputError(ws.history().string() + ": iterations not strictly increasing");
    }
  }
  return out;
}

IterationState run_iteration(const PipelineConfig& cfg, const Corpus& corpus, const IterationOptions& opts) {
  cfg.validate();
  if (!opts.review) throw InvalidArgument("no review driver");
  const Workspace ws{cfg.workdir};
  fs::create_directories(ws.root);
  WorkspaceLock lock(ws.lock());

  auto history = load_history(ws);
  int k = history.empty() ? 1 : history.back().iteration + 1;
  recover(ws, k);
  history = load_history(ws);
  k = history.empty() ? 1 : history.back().iteration + 1;

  const AnnotationStore store = AnnotationStore::load(ws.store());
  if (k == 1 && store.accepted_frames() == 0) {
    throw InvalidArgument("the store holds no initial annotations; run bootstrap first");
  }

  const fs::path stage = ws.staging_dir(k);
  std::string kept_journal;
  if (fs::exists(stage / "journal.jsonl")) kept_journal = text::read_file(stage / "journal.jsonl");
  fs::remove_all(stage);
  fs::create_directories(stage);
  if (!kept_journal.empty()) text::write_file_atomic(stage / "journal.jsonl", kept_journal);
  say(opts, "iteration " + std::to_string(k));

  fs::path model = history.empty() ? ws.initial_dir() / "model" : history.back().model_ref;
  if (history.empty() && !fs::exists(model)) {
    say(opts, "  training initial model on " + std::to_string(store.accepted_frames()) + " frames");
    auto ts = emit_training_set(store, corpus, ws.initial_dir());
    run_training(cfg.detector, ts.manifest, model, 0, cfg.seed, ws.initial_dir() / "detector.log");
  }

  // inference on every frame without an accepted annotation
  std::string frame_list;
  long to_infer = 0;
  for (const auto& v : corpus.videos) {
    for (int f = 0; f < v.frame_count; ++f) {
      if (store.accepted_at(v.video_id, f)) continue;
      frame_list += v.video_id + "," + std::to_string(f) + "," + fs::absolute(v.frame_path(f)).string() + "\n";
      ++to_infer;
    }
  }
  text::write_file_atomic(stage / "frames.txt", frame_list);
  const fs::path det_path = stage / "detections.csv";
  if (to_infer > 0) {
    run_inference(cfg.detector, model, stage / "frames.txt", det_path, k, cfg.seed, stage / "detector.log");
  } else {
    text::write_file_atomic(det_path, "");
  }
  IngestResult ingested = ingest_detections(det_path, &corpus);
  for (const auto& w : ingested.warnings) say(opts, "  warning: " + w);
  say(opts, "  " + std::to_string(to_infer) + " frames inferred, " + std::to_string(ingested.count) + " detections");

  // tracklet formation, one task per video
  std::vector<std::future<std::vector<engine::Tracklet>>> jobs;
  for (const auto& v : corpus.videos) {
    FrameDetections dets;
    if (auto it = ingested.detections.find(v.video_id); it != ingested.detections.end()) dets = it->second;
    for (auto& d : accepted_as_detections(store, v.video_id)) dets[d.frame_index].push_back(std::move(d));
    jobs.push_back(std::async(std::launch::async, [&ws, &cfg, v, dets = std::move(dets)] {
      auto cache = motion::MotionCache::load(ws.motion(v.video_id));
      std::size_t before = cache.size();
      auto out = engine::run_video(v, dets, cfg.engine, &cache);
      if (cache.size() != before) {
        fs::create_directories(ws.motion(v.video_id).parent_path());
        cache.save(ws.motion(v.video_id));
      }
      return out;
    }));
  }
  std::vector<engine::Tracklet> tracklets;
  for (auto& j : jobs) {
    auto part = j.get();
    tracklets.insert(tracklets.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  engine::write_tracklets(stage / "tracklets.csv", tracklets);

  std::vector<evaluation::Proposal> proposals;
  const auto prompts = review::filter_prompt_set(tracklets, store);
  for (const auto& p : prompts) {
    for (auto i : p.reviewable()) {
      proposals.push_back({p.tracklet.video_id, p.tracklet.instances[i].frame_index, *p.tracklet.instances[i].box});
    }
  }
  say(opts, "  " + std::to_string(tracklets.size()) + " tracklets, " + std::to_string(prompts.size()) + " to review");

  // review against a working copy; the real store is only replaced at the end
  AnnotationStore work = store;
  auto frames = [&corpus](const std::string& video, int frame) { return load_frame(corpus.find(video), frame); };
  std::unique_ptr<service::ReviewService> svc;
  try {
    svc = std::make_unique<service::ReviewService>(k, tracklets, work, cfg.review_n, frames, stage / "journal.jsonl",
                                                   opts.clock);
  } catch (const Error& e) {
    say(opts, std::string("  review journal does not replay (") + e.what() + "); starting over");
    fs::rename(stage / "journal.jsonl", stage / "journal.stale.jsonl");
    work = store;
    svc = std::make_unique<service::ReviewService>(k, tracklets, work, cfg.review_n, frames, stage / "journal.jsonl",
                                                   opts.clock);
  }
  opts.review(*svc);
  const long clicks = svc->total_clicks();
  svc.reset();
  work.save(stage / "store.snapshot.jsonl");

  auto ts = emit_training_set(work, corpus, stage);
  run_training(cfg.detector, ts.manifest, stage / "model", k, cfg.seed, stage / "detector.log");

  IterationState state;
  state.iteration = k;
  state.model_ref = ws.iteration_dir(k) / "model";
  state.store_snapshot = ws.iteration_dir(k) / "store.snapshot.jsonl";
  state.metrics = evaluation::compute_metrics(work, {k, clicks, proposals, corpus.total_frames()}, opts.ground_truth,
                                              cfg.op);
  const long total = corpus.total_frames();
  state.gain_pct = total > 0 ? 100.0 * static_cast<double>(state.metrics.new_annotations) / static_cast<double>(total)
                             : 0.0;
  text::write_file_atomic(stage / "metrics.json", metrics_json(state.metrics).dump(2) + "\n");
  text::write_file_atomic(stage / "config.json", config_to_json(cfg));
  const std::string line = state_to_json(state);
  text::write_file_atomic(stage / "state.json", line + "\n");

  fs::remove_all(ws.iteration_dir(k));
  fs::rename(stage, ws.iteration_dir(k));
  work.save(ws.store());
  append_line(ws.history(), line);
  say(opts, "  " + std::to_string(clicks) + " clicks, " + std::to_string(state.metrics.new_annotations) +
                " new annotations");
  return state;
}

std::vector<IterationState> run_loop(const PipelineConfig& cfg, const Corpus& corpus, const IterationOptions& opts,
                                     std::optional<int> max_iterations) {
  std::vector<IterationState> done;
  auto history = load_history(Workspace{cfg.workdir});
  if (!history.empty() && stop_condition(history, cfg)) return done;
  while (!max_iterations || static_cast<int>(done.size()) < *max_iterations) {
    done.push_back(run_iteration(cfg, corpus, opts));
    history.push_back(done.back());
    if (stop_condition(history, cfg)) break;
  }
  return done;
}

namespace {

long bootstrap(const PipelineConfig& cfg, const std::vector<AnnotationRecord>& candidates) {
  const Workspace ws{cfg.workdir};
  fs::create_directories(ws.root);
  WorkspaceLock lock(ws.lock());
  if (!load_history(ws).empty()) throw ConflictError("bootstrap after the first iteration is not supported");
  AnnotationStore store = AnnotationStore::load(ws.store());
  std::vector<AnnotationRecord> fresh;
  for (const auto& r : candidates)
    if (!store.contains(r)) fresh.push_back(r);
  store.commit(fresh);
  store.save(ws.store());
  return static_cast<long>(fresh.size());
}

AnnotationRecord manual(const std::string& video, int frame, const BoundingBox& box) {
  return {video, frame, box, Decision::Accepted, Source::ManualInitial, 0};
}

}  // namespace

long bootstrap_every(const PipelineConfig& cfg, const Corpus& corpus, const GroundTruth& gt, int every) {
  if (every < 1) throw InvalidArgument("--every must be at least 1");
  std::vector<AnnotationRecord> recs;
  for (const auto& v : corpus.videos) {
    for (int f = 0; f < v.frame_count; f += every) {
      if (auto box = gt.at(v.video_id, f)) recs.push_back(manual(v.video_id, f, *box));
    }
  }
  return bootstrap(cfg, recs);
}

long bootstrap_videos(const PipelineConfig& cfg, const Corpus& corpus, const GroundTruth& gt,
                      const std::vector<std::string>& videos) {
  std::vector<AnnotationRecord> recs;
  for (const auto& id : videos) {
    if (!corpus.contains(id)) throw InvalidArgument("unknown video " + id);
    if (!gt.covers(id)) continue;
    for (const auto& [f, box] : gt.video(id)) recs.push_back(manual(id, f, box));
  }
  return bootstrap(cfg, recs);
}

std::string report(const PipelineConfig& cfg, const Corpus& corpus, const GroundTruth* gt) {
  const Workspace ws{cfg.workdir};
  auto history = load_history(ws);
  std::vector<evaluation::IterationMetrics> rows;
  long clicks = 0;
  for (const auto& s : history) {
    rows.push_back(s.metrics);
    clicks += s.metrics.clicks;
  }
  std::string out = evaluation::iteration_report(rows);
  if (gt && gt->frame_count() > 0) {
    const AnnotationStore store = AnnotationStore::load(ws.store());
    long initial = 0, manual = 0;
    for (const auto& [video, frames] : gt->all()) {
      if (!corpus.contains(video)) continue;
      for (const auto& [f, box] : frames) {
        const auto* acc = store.accepted_at(video, f);
        if (acc && acc->source == Source::ManualInitial) {
          ++initial;
        } else if (!acc || iou(acc->box, box) < 0.5) {
          ++manual;
        }
      }
    }
    double wr = evaluation::workload_reduction(initial, clicks, manual, gt->frame_count());
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", wr);
    out += "Workload reduction\t" + std::string(buf) + "%  (initial " + std::to_string(initial) + ", clicks " +
           std::to_string(clicks) + ", manual " + std::to_string(manual) + ", total " +
           std::to_string(gt->frame_count()) + ")\n";
  }
  return out;
}

void export_annotations(const AnnotationStore& store, const fs::path& path) {
  GroundTruth out;
  for (const auto& r : store.records()) {
    if (r.decision == Decision::Accepted) out.add(r.video_id, r.frame_index, r.box);
  }
  write_ground_truth(path, out);
}

}  // namespace trackanno::pipeline
