#include "trackanno/synth/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "trackanno/core/error.hpp"

namespace trackanno::synth {

namespace fs = std::filesystem;

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::uint8_t clamp_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

/// Smoothed lattice noise in [0, 1].
class ValueNoise {
 public:
  ValueNoise(int w, int h, int cell, std::mt19937_64& rng) : cell_(cell), gw_(w / cell + 2), gh_(h / cell + 2) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    lattice_.resize(static_cast<std::size_t>(gw_) * gh_);
    for (auto& v : lattice_) v = u(rng);
  }
  double at(double x, double y) const {
    double fx = x / cell_, fy = y / cell_;
    int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
    double tx = smooth(fx - ix), ty = smooth(fy - iy);
    auto g = [&](int a, int b) { return lattice_[static_cast<std::size_t>(b) * gw_ + a]; };
    double top = g(ix, iy) * (1 - tx) + g(ix + 1, iy) * tx;
    double bot = g(ix, iy + 1) * (1 - tx) + g(ix + 1, iy + 1) * tx;
    return top * (1 - ty) + bot * ty;
  }

 private:
  static double smooth(double t) { return t * t * (3 - 2 * t); }
  int cell_, gw_, gh_;
  std::vector<double> lattice_;
};

}  // namespace

Scene::Scene(const SceneConfig& cfg) : cfg_(cfg) {
  if (cfg.width < 64 || cfg.height < 64 || cfg.frames < 1) throw InvalidArgument("scene too small");
  if (cfg.distractors < 0) throw InvalidArgument("negative distractor count");
  if (cfg.pan_period <= 0 || cfg.object_period <= 0) throw InvalidArgument("periods must be positive");
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x5ce9e));
  margin_ = static_cast<int>(std::ceil(std::abs(cfg.pan_amplitude))) + 2;
  world_w_ = cfg.width + 2 * margin_;
  world_h_ = cfg.height + 2 * margin_;
  pan_phase_ = std::uniform_real_distribution<double>(0.0, 2 * std::numbers::pi)(rng);

  ValueNoise coarse(world_w_, world_h_, 28, rng);
  ValueNoise fine(world_w_, world_h_, 7, rng);
  std::uniform_int_distribution<int> grain(-7, 7);
  world_rgb_.resize(static_cast<std::size_t>(world_w_) * world_h_ * 3);
  for (int y = 0; y < world_h_; ++y) {
    for (int x = 0; x < world_w_; ++x) {
      double v = 70.0 + 120.0 * coarse.at(x, y) + 40.0 * (fine.at(x, y) - 0.5) + grain(rng);
      std::size_t i = (static_cast<std::size_t>(y) * world_w_ + x) * 3;
      world_rgb_[i] = clamp_u8(v * 0.95 + 8);
      world_rgb_[i + 1] = clamp_u8(v);
      world_rgb_[i + 2] = clamp_u8(v * 0.8 + 20);
    }
  }

  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int o = 0; o <= cfg.distractors; ++o) {
    Sprite s;
    s.w = 44 + static_cast<int>(u(rng) * 12);
    s.h = 32 + static_cast<int>(u(rng) * 8);
    ValueNoise body(s.w, s.h, 16, rng);
    const double angle = u(rng) * 2 * std::numbers::pi;
    const double gx = std::cos(angle), gy = std::sin(angle);
    const double base = 60.0 + 120.0 * u(rng);
    double tint[3] = {0.8 + 0.4 * u(rng), 0.8 + 0.4 * u(rng), 0.8 + 0.4 * u(rng)};
    s.rgb.resize(static_cast<std::size_t>(s.w) * s.h * 3);
    s.alpha.resize(static_cast<std::size_t>(s.w) * s.h);
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        double nx = (x + 0.5) / s.w * 2 - 1, ny = (y + 0.5) / s.h * 2 - 1;
        double r = std::sqrt(nx * nx + ny * ny * 0.6);
        double v = base + 80.0 * (gx * nx + gy * ny) + 16.0 * (body.at(x, y) - 0.5);
        std::size_t i = static_cast<std::size_t>(y) * s.w + x;
        for (int c = 0; c < 3; ++c) s.rgb[i * 3 + c] = clamp_u8(v * tint[c]);
        s.alpha[i] = r <= 0.75 ? 255 : (r < 1.1 ? clamp_u8(255.0 * (1.1 - r) / 0.35) : 0);
      }
    }
    double amp_x = cfg.object_amplitude * cfg.width;
    double amp_y = cfg.object_amplitude * cfg.height;
    s.cx = margin_ + cfg.width / 2.0 + (o == 0 ? 0.0 : (u(rng) - 0.5) * amp_x);
    s.cy = margin_ + cfg.height / 2.0 + (o == 0 ? 0.0 : (u(rng) - 0.5) * amp_y);
    s.ax = amp_x * (0.6 + 0.4 * u(rng));
    s.ay = amp_y * (0.6 + 0.4 * u(rng));
    s.px = u(rng) * 2 * std::numbers::pi;
    s.py = u(rng) * 2 * std::numbers::pi;
    s.tx = cfg.object_period * (0.8 + 0.4 * u(rng));
    s.ty = cfg.object_period * (0.6 + 0.6 * u(rng));
    objects_.push_back(std::move(s));
  }
}

std::pair<int, int> Scene::camera_offset(int frame) const {
  double a = 2 * std::numbers::pi * frame / cfg_.pan_period + pan_phase_;
  return {static_cast<int>(std::lround(cfg_.pan_amplitude * std::sin(a))),
          static_cast<int>(std::lround(0.5 * cfg_.pan_amplitude * std::sin(0.7 * a + 1.0)))};
}

motion::CameraMotion Scene::camera_motion(int frame) const {
  auto [x0, y0] = camera_offset(frame);
  auto [x1, y1] = camera_offset(frame + 1);
  return {static_cast<double>(x0 - x1), static_cast<double>(y0 - y1), false};
}

BoundingBox Scene::object_box(int object, int frame) const {
  const Sprite& s = objects_.at(static_cast<std::size_t>(object));
  double wx = s.cx + s.ax * std::sin(2 * std::numbers::pi * frame / s.tx + s.px);
  double wy = s.cy + s.ay * std::sin(2 * std::numbers::pi * frame / s.ty + s.py);
  auto [ox, oy] = camera_offset(frame);
  long x = std::lround(wx - margin_ - ox - s.w / 2.0);
  long y = std::lround(wy - margin_ - oy - s.h / 2.0);
  x = std::clamp(x, 0L, static_cast<long>(cfg_.width - s.w));
  y = std::clamp(y, 0L, static_cast<long>(cfg_.height - s.h));
  return {static_cast<double>(x), static_cast<double>(y), static_cast<double>(s.w), static_cast<double>(s.h)};
}

std::vector<BoundingBox> Scene::visible_boxes(int frame) const {
  std::vector<BoundingBox> out;
  for (int o = 0; o < object_count(); ++o) out.push_back(object_box(o, frame));
  return out;
}

Image Scene::render(int frame) const {
  if (frame < 0 || frame >= cfg_.frames) throw RangeError("frame " + std::to_string(frame) + " outside scene");
  auto [ox, oy] = camera_offset(frame);
  const int w = cfg_.width, h = cfg_.height;
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* src = &world_rgb_[(static_cast<std::size_t>(y + oy + margin_) * world_w_ + ox + margin_) * 3];
    std::copy(src, src + static_cast<std::size_t>(w) * 3, &rgb[static_cast<std::size_t>(y) * w * 3]);
  }
  // distractors first so the target is drawn on top
  for (int o = object_count() - 1; o >= 0; --o) {
    const Sprite& s = objects_[static_cast<std::size_t>(o)];
    BoundingBox b = object_box(o, frame);
    int bx = static_cast<int>(b.x), by = static_cast<int>(b.y);
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        std::size_t si = static_cast<std::size_t>(y) * s.w + x;
        int a = s.alpha[si];
        if (a == 0) continue;
        std::size_t di = (static_cast<std::size_t>(by + y) * w + bx + x) * 3;
        for (int c = 0; c < 3; ++c) rgb[di + c] = static_cast<std::uint8_t>((s.rgb[si * 3 + c] * a + rgb[di + c] * (255 - a) + 127) / 255);
      }
    }
  }
  return Image::from_rgb(w, h, std::move(rgb));
}

std::vector<Detection> mock_detect(const MockDetectorConfig& cfg, const std::string& video_id, int frame_index,
                                   std::span<const BoundingBox> objects, int width, int height, int iteration) {
  std::uint64_t s = mix_seed(cfg.seed, static_cast<std::uint64_t>(iteration));
  s = mix_seed(s, hash_string(video_id));
  s = mix_seed(s, static_cast<std::uint64_t>(frame_index));
  std::mt19937_64 rng(s);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  auto q = [](double v) { return std::round(v * 100.0) / 100.0; };
  BoundingBox frame{0, 0, static_cast<double>(width), static_cast<double>(height)};

  std::vector<Detection> out;
  for (const BoundingBox& b : objects) {
    double miss = u(rng);
    double jx = n(rng), jy = n(rng), jw = n(rng), jh = n(rng), o = u(rng);
    if (miss < cfg.miss_rate) continue;
    double sigma = cfg.jitter_sigma;
    double w = std::max(4.0, b.w + jw * sigma * 0.5), h = std::max(4.0, b.h + jh * sigma * 0.5);
    Point c = b.center();
    auto clipped = intersect(BoundingBox::from_center({c.x + jx * sigma, c.y + jy * sigma}, w, h), frame);
    if (!clipped || !clipped->valid()) continue;
    const BoundingBox& d = *clipped;
    double obj = cfg.true_objectness_min + (cfg.true_objectness_max - cfg.true_objectness_min) * o;
    out.push_back({video_id, frame_index, {q(d.x), q(d.y), q(d.w), q(d.h)}, q(obj)});
  }
  int fps = static_cast<int>(std::poisson_distribution<int>(cfg.fp_rate)(rng));
  for (int i = 0; i < fps; ++i) {
    double w = 28 + 18 * u(rng), h = 20 + 12 * u(rng);
    double x = u(rng) * (width - w), y = u(rng) * (height - h);
    double obj = cfg.fp_objectness_min + (cfg.fp_objectness_max - cfg.fp_objectness_min) * u(rng);
    out.push_back({video_id, frame_index, {q(x), q(y), q(w), q(h)}, q(obj)});
  }
  return out;
}

WrittenCorpus write_corpus(const fs::path& dir, int videos, const SceneConfig& base) {
  if (videos < 1) throw InvalidArgument("need at least one video");
  WrittenCorpus out;
  fs::create_directories(dir / "videos");
  std::ostringstream objects;
  objects << "# video_id,frame,x,y,w,h\n";
  for (int v = 0; v < videos; ++v) {
    SceneConfig cfg = base;
    cfg.seed = base.seed * 1000 + static_cast<std::uint64_t>(v);
    Scene scene(cfg);
    std::string id = "video_" + std::to_string(v + 1);
    fs::path frames = dir / "videos" / id;
    fs::create_directories(frames);
    for (int f = 0; f < cfg.frames; ++f) {
      write_png(frames / frame_filename(f), scene.render(f));
      out.ground_truth.add(id, f, scene.target_box(f));
      for (const auto& b : scene.visible_boxes(f)) {
        objects << id << ',' << f << ',' << text::format_double(b.x) << ',' << text::format_double(b.y) << ','
                << text::format_double(b.w) << ',' << text::format_double(b.h) << '\n';
      }
    }
    out.corpus.videos.push_back({id, frames, cfg.frames, cfg.width, cfg.height});
  }
  out.manifest = dir / "corpus.json";
  out.ground_truth_path = dir / "gt.csv";
  out.objects_path = dir / "objects.csv";
  save_corpus(out.manifest, out.corpus);
  write_ground_truth(out.ground_truth_path, out.ground_truth);
  text::write_file_atomic(out.objects_path, objects.str());
  return out;
}

ObjectIndex read_objects(const fs::path& path) {
  ObjectIndex out;
  std::istringstream in(text::read_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::skippable(line)) continue;
    auto f = text::split(line, ',');
    auto bad = [&] { return InputError(path.string() + ":" + std::to_string(lineno) + ": malformed object row"); };
    if (f.size() != 6) throw bad();
    auto frame = text::parse_long(f[1]);
    double v[4];
    for (int i = 0; i < 4; ++i) {
      auto d = text::parse_double(f[2 + i]);
      if (!d) throw bad();
      v[i] = *d;
    }
    if (!frame) throw bad();
    out[std::string(text::trim(f[0]))][static_cast<int>(*frame)].push_back({v[0], v[1], v[2], v[3]});
  }
  return out;
}

}  // namespace trackanno::synth
