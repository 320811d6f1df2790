#include "trackanno/pipeline/config.hpp"

#include <cstdlib>
#include <regex>
#include <set>

#include <json.hpp>

#include "trackanno/core/error.hpp"
#include "trackanno/core/records.hpp"
#include "trackanno/pipeline/detector.hpp"

namespace trackanno::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::set<std::string> placeholders(const std::string& tmpl) {
  static const std::regex re(R"(\{([A-Za-z_]+)\})");
  std::set<std::string> out;
  for (auto it = std::sregex_iterator(tmpl.begin(), tmpl.end(), re); it != std::sregex_iterator(); ++it) {
    out.insert((*it)[1].str());
  }
  return out;
}

void check_template(const std::string& name, const std::string& tmpl, const std::set<std::string>& required) {
  if (tmpl.empty()) throw InvalidArgument("detector." + name + " is empty");
  auto found = placeholders(tmpl);
  for (const auto& r : required) {
    if (!found.count(r)) throw InvalidArgument("detector." + name + " lacks placeholder {" + r + "}");
  }
  for (const auto& f : found) {
    if (!required.count(f) && f != "iteration" && f != "seed") {
      throw InvalidArgument("detector." + name + " uses unknown placeholder {" + f + "}");
    }
  }
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw InvalidArgument(where + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw InvalidArgument("unknown configuration key " + where + "." + k);
  }
}

template <typename T>
void take(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument("configuration key " + where + "." + key + " has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

}  // namespace

void DetectorContract::validate() const {
  check_template("train_command", train_command, {"train_list", "model_out"});
  check_template("infer_command", infer_command, {"model", "frame_list", "detections_out"});
  if (!(timeout_s > 0)) throw InvalidArgument("detector.timeout_s must be positive");
}

DetectorContract mock_detector_contract(const fs::path& executable, const fs::path& objects, const fs::path& manifest,
                                        double miss, double fp, double jitter) {
  const std::string exe = shell_quote(executable.string());
  DetectorContract d;
  d.train_command = exe + " train --train-list {train_list} --model-out {model_out} --iteration {iteration}";
  d.infer_command = exe + " infer --objects " + shell_quote(objects.string()) + " --corpus " +
                    shell_quote(manifest.string()) +
                    " --model {model} --frames {frame_list} --out {detections_out} --seed {seed} --iteration {iteration}" +
                    " --miss " + text::format_double(miss) + " --fp " + text::format_double(fp) + " --jitter " +
                    text::format_double(jitter);
  return d;
}

void PipelineConfig::validate() const {
  if (corpus.empty()) throw InvalidArgument("corpus path missing");
  if (workdir.empty()) throw InvalidArgument("workdir path missing");
  engine.validate();
  op.validate();
  if (review_n < 2) throw InvalidArgument("review.N must be at least 2");
  if (!(min_gain_pct >= 0)) throw InvalidArgument("pipeline.min_gain_pct must be non-negative");
  if (max_iter < 1) throw InvalidArgument("pipeline.max_iter must be at least 1");
  detector.validate();
}

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("configuration is not valid JSON: ") + e.what());
  }
  check_keys(j, "config",
             {"corpus", "ground_truth", "workdir", "seed", "engine", "review", "operator", "pipeline", "detector"});
  PipelineConfig c;
  std::string corpus, gt, workdir;
  take(j, "corpus", corpus, "config");
  take(j, "ground_truth", gt, "config");
  take(j, "workdir", workdir, "config");
  take(j, "seed", c.seed, "config");
  c.corpus = resolve(base_dir, corpus);
  c.ground_truth = resolve(base_dir, gt);
  c.workdir = resolve(base_dir, workdir);

  if (j.contains("engine")) {
    const json& e = j["engine"];
    check_keys(e, "engine",
               {"theta_L", "theta_H", "theta_avg", "W", "gamma", "c_low", "c_high", "min_len", "sigma_w_sq",
                "sigma_v_sq", "initial_velocity_var"});
    take(e, "theta_L", c.engine.theta_low, "engine");
    take(e, "theta_H", c.engine.theta_high, "engine");
    take(e, "theta_avg", c.engine.theta_avg, "engine");
    take(e, "W", c.engine.window, "engine");
    take(e, "gamma", c.engine.gamma, "engine");
    take(e, "c_low", c.engine.c_low, "engine");
    take(e, "c_high", c.engine.c_high, "engine");
    take(e, "min_len", c.engine.min_len, "engine");
    take(e, "sigma_w_sq", c.engine.kalman.sigma_w_sq, "engine");
    take(e, "sigma_v_sq", c.engine.kalman.sigma_v_sq, "engine");
    take(e, "initial_velocity_var", c.engine.initial_velocity_var, "engine");
  }
  if (j.contains("review")) {
    check_keys(j["review"], "review", {"N"});
    take(j["review"], "N", c.review_n, "review");
  }
  if (j.contains("operator")) {
    check_keys(j["operator"], "operator", {"theta_iou"});
    take(j["operator"], "theta_iou", c.op.theta_iou, "operator");
  }
  if (j.contains("pipeline")) {
    check_keys(j["pipeline"], "pipeline", {"min_gain_pct", "max_iter"});
    take(j["pipeline"], "min_gain_pct", c.min_gain_pct, "pipeline");
    take(j["pipeline"], "max_iter", c.max_iter, "pipeline");
  }
  if (j.contains("detector")) {
    check_keys(j["detector"], "detector", {"train_command", "infer_command", "timeout_s"});
    take(j["detector"], "train_command", c.detector.train_command, "detector");
    take(j["detector"], "infer_command", c.detector.infer_command, "detector");
    take(j["detector"], "timeout_s", c.detector.timeout_s, "detector");
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = text::read_file(path);
  } catch (const Error&) {
    throw InputError("cannot read configuration " + path.string());
  }
  return parse_config(text, fs::absolute(path).parent_path());
}

std::string config_to_json(const PipelineConfig& c) {
  json j;
  j["corpus"] = c.corpus.string();
  j["ground_truth"] = c.ground_truth.string();
  j["workdir"] = c.workdir.string();
  j["seed"] = c.seed;
  j["engine"] = {{"theta_L", c.engine.theta_low},
                 {"theta_H", c.engine.theta_high},
                 {"theta_avg", c.engine.theta_avg},
                 {"W", c.engine.window},
                 {"gamma", c.engine.gamma},
                 {"c_low", c.engine.c_low},
                 {"c_high", c.engine.c_high},
                 {"min_len", c.engine.min_len},
                 {"sigma_w_sq", c.engine.kalman.sigma_w_sq},
                 {"sigma_v_sq", c.engine.kalman.sigma_v_sq},
                 {"initial_velocity_var", c.engine.initial_velocity_var}};
  j["review"] = {{"N", c.review_n}};
  j["operator"] = {{"theta_iou", c.op.theta_iou}};
  j["pipeline"] = {{"min_gain_pct", c.min_gain_pct}, {"max_iter", c.max_iter}};
  j["detector"] = {{"train_command", c.detector.train_command},
                   {"infer_command", c.detector.infer_command},
                   {"timeout_s", c.detector.timeout_s}};
  return j.dump(2) + "\n";
}

fs::path resolve_config_path(const std::optional<fs::path>& cli) {
  if (cli && !cli->empty()) return *cli;
  if (const char* env = std::getenv("TRACKANNO_CONFIG"); env && *env) return env;
  return "trackanno.json";
}

}  // namespace trackanno::pipeline
