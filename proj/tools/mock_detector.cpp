// Stand-in detector for the external detector contract. `infer` reads the
// visible-object fixture written by `trackanno synth` and reports each object
// with a miss rate, box jitter and random false positives; `train` writes a
// placeholder model.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "trackanno/core/error.hpp"
#include "trackanno/core/records.hpp"
#include "trackanno/core/video.hpp"
#include "trackanno/synth/scenario.hpp"

namespace fs = std::filesystem;
using namespace trackanno;

int main(int argc, char** argv) {
  CLI::App app{"trackanno mock detector"};
  app.require_subcommand(1);

  synth::MockDetectorConfig mc;
  fs::path objects, corpus_path, frames, out, model;
  int iteration = 0;
  auto* infer = app.add_subcommand("infer", "emit detections for a frame list");
  infer->add_option("--objects", objects, "visible-object fixture")->required();
  infer->add_option("--corpus", corpus_path, "corpus manifest")->required();
  infer->add_option("--frames", frames, "frame list (video_id,frame,path)")->required();
  infer->add_option("--out", out, "detection file to write")->required();
  infer->add_option("--model", model, "model file");
  infer->add_option("--seed", mc.seed);
  infer->add_option("--iteration", iteration);
  infer->add_option("--miss", mc.miss_rate)->check(CLI::Range(0.0, 1.0));
  infer->add_option("--fp", mc.fp_rate)->check(CLI::NonNegativeNumber);
  infer->add_option("--jitter", mc.jitter_sigma)->check(CLI::NonNegativeNumber);

  fs::path train_list, model_out;
  auto* train = app.add_subcommand("train", "write a placeholder model");
  train->add_option("--train-list", train_list)->required();
  train->add_option("--model-out", model_out)->required();
  train->add_option("--seed", mc.seed);
  train->add_option("--iteration", iteration);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*infer) {
      if (!model.empty() && !fs::exists(model)) throw InputError("model not found: " + model.string());
      const Corpus corpus = load_corpus(corpus_path);
      const auto index = synth::read_objects(objects);
      std::istringstream in(text::read_file(frames));
      std::string line, body = "# video_id,frame,x,y,w,h,objectness\n";
      int lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (text::skippable(line)) continue;
        auto f = text::split(line, ',');
        auto frame = f.size() >= 2 ? text::parse_long(f[1]) : std::nullopt;
        if (!frame) throw InputError(frames.string() + ":" + std::to_string(lineno) + ": malformed frame entry");
        const std::string video(text::trim(f[0]));
        const VideoSource& v = corpus.find(video);
        std::vector<BoundingBox> boxes;
        if (auto vi = index.find(video); vi != index.end()) {
          if (auto fi = vi->second.find(static_cast<int>(*frame)); fi != vi->second.end()) boxes = fi->second;
        }
        for (const auto& d : synth::mock_detect(mc, video, static_cast<int>(*frame), boxes, v.width, v.height, iteration)) {
          body += format_detection(d) + "\n";
        }
      }
      text::write_file_atomic(out, body);
    } else {
      std::size_t n = 0;
      std::istringstream in(text::read_file(train_list));
      for (std::string line; std::getline(in, line);) n += text::trim(line).empty() ? 0 : 1;
      text::write_file_atomic(model_out, "mock-model iteration " + std::to_string(iteration) + " frames " +
                                             std::to_string(n) + "\n");
    }
  } catch (const std::exception& e) {
    std::cerr << "trackanno-mock-detector: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
