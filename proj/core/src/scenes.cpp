#include "fgrf/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fgrf {

namespace {

namespace fs = std::filesystem;

// [t0,t1] of the ray inside the primitive, or nothing
std::optional<std::pair<double, double>> intersect(const Primitive& p, const Ray& ray) {
  if (p.kind == Primitive::Kind::Sphere) {
    Vec3 oc = {ray.origin[0] - p.center[0], ray.origin[1] - p.center[1],
               ray.origin[2] - p.center[2]};
    const double b = oc[0] * ray.dir[0] + oc[1] * ray.dir[1] + oc[2] * ray.dir[2];
    const double c = oc[0] * oc[0] + oc[1] * oc[1] + oc[2] * oc[2] - p.radius * p.radius;
    const double disc = b * b - c;
    if (disc <= 0) return std::nullopt;
    const double s = std::sqrt(disc);
    double t0 = -b - s, t1 = -b + s;
    t0 = std::max(t0, 0.0);
    if (t1 <= t0) return std::nullopt;
    return std::make_pair(t0, t1);
  }
  double t0 = 0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double lo = p.box_min[static_cast<size_t>(a)], hi = p.box_max[static_cast<size_t>(a)];
    if (ray.dir[static_cast<size_t>(a)] == 0.0) {
      if (ray.origin[static_cast<size_t>(a)] < lo || ray.origin[static_cast<size_t>(a)] > hi)
        return std::nullopt;
      continue;
    }
    double ta = (lo - ray.origin[static_cast<size_t>(a)]) / ray.dir[static_cast<size_t>(a)];
    double tb = (hi - ray.origin[static_cast<size_t>(a)]) / ray.dir[static_cast<size_t>(a)];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t1 <= t0) return std::nullopt;
  return std::make_pair(t0, t1);
}

}  // namespace

OracleSample render_oracle(const SyntheticScene& scene, const Ray& ray) {
  std::vector<std::pair<double, double>> spans;
  std::vector<double> bounds;
  for (const auto& p : scene.primitives) {
    auto s = intersect(p, ray);
    if (s) {
      spans.push_back(*s);
      bounds.push_back(s->first);
      bounds.push_back(s->second);
    } else {
      spans.emplace_back(0.0, -1.0);  // empty
    }
  }
  OracleSample out{scene.background, 0.0};
  if (bounds.empty()) return out;
  std::sort(bounds.begin(), bounds.end());
  bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());

  double transmittance = 1.0;
  Vec3 color = {0, 0, 0};
  double depth = 0;
  for (size_t i = 0; i + 1 < bounds.size(); ++i) {
    const double t0 = bounds[i], t1 = bounds[i + 1];
    const double mid = 0.5 * (t0 + t1);
    double sigma = 0;
    Vec3 emit = {0, 0, 0};
    for (size_t k = 0; k < scene.primitives.size(); ++k) {
      if (mid >= spans[k].first && mid <= spans[k].second) {
        const Primitive& p = scene.primitives[k];
        sigma += p.sigma;
        for (int c = 0; c < 3; ++c) emit[static_cast<size_t>(c)] += p.sigma * p.color[static_cast<size_t>(c)];
      }
    }
    if (sigma <= 0) continue;
    const double len = t1 - t0;
    const double absorbed = 1.0 - std::exp(-sigma * len);
    for (int c = 0; c < 3; ++c)
      color[static_cast<size_t>(c)] += transmittance * absorbed * emit[static_cast<size_t>(c)] / sigma;
    // integral of T(t) sigma t over the constant-density segment
    depth += transmittance *
             ((t0 + 1.0 / sigma) - std::exp(-sigma * len) * (t1 + 1.0 / sigma));
    transmittance *= std::exp(-sigma * len);
  }
  for (int c = 0; c < 3; ++c)
    out.color[static_cast<size_t>(c)] =
        color[static_cast<size_t>(c)] + transmittance * scene.background[static_cast<size_t>(c)];
  out.depth = depth;
  return out;
}

Image render_oracle_image(const SyntheticScene& scene, const Camera& cam, FloatGrid* depth_out) {
  cam.validate();
  Image img(cam.intr.width, cam.intr.height);
  if (depth_out) *depth_out = FloatGrid(cam.intr.width, cam.intr.height);
  for (int y = 0; y < cam.intr.height; ++y)
    for (int x = 0; x < cam.intr.width; ++x) {
      OracleSample s = render_oracle(scene, generate_ray(cam, x, y));
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = std::min(1.0, s.color[static_cast<size_t>(c)]);
      if (depth_out) depth_out->at(x, y) = s.depth;
    }
  return img;
}

SyntheticScene parse_scene(const std::string& text) {
  SyntheticScene scene;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    auto want = [&](int n, double* out) {
      for (int i = 0; i < n; ++i)
        if (!(ls >> out[i]))
          throw std::runtime_error("scene line " + std::to_string(lineno) + ": expected " +
                                   std::to_string(n) + " numbers after '" + kind + "'");
    };
    if (kind == "sphere") {
      double v[8];
      want(8, v);
      Primitive p;
      p.kind = Primitive::Kind::Sphere;
      p.center = {v[0], v[1], v[2]};
      p.radius = v[3];
      p.sigma = v[4];
      p.color = {v[5], v[6], v[7]};
      scene.primitives.push_back(p);
    } else if (kind == "box") {
      double v[10];
      want(10, v);
      Primitive p;
      p.kind = Primitive::Kind::Box;
      p.box_min = {v[0], v[1], v[2]};
      p.box_max = {v[3], v[4], v[5]};
      p.sigma = v[6];
      p.color = {v[7], v[8], v[9]};
      scene.primitives.push_back(p);
    } else if (kind == "background") {
      double v[3];
      want(3, v);
      scene.background = {v[0], v[1], v[2]};
    } else {
      throw std::runtime_error("scene line " + std::to_string(lineno) + ": unknown primitive '" +
                               kind + "'");
    }
  }
  for (const auto& p : scene.primitives) {
    if (p.sigma < 0) throw std::runtime_error("scene: density must be >= 0");
    for (double c : p.color)
      if (c < 0 || c > 1) throw std::runtime_error("scene: colors must be in [0,1]");
  }
  return scene;
}

SyntheticScene load_scene(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open scene file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_scene(ss.str());
}

Camera look_at_camera(const Vec3& position, const Vec3& target, const Intrinsics& intr) {
  Vec3 fwd = {target[0] - position[0], target[1] - position[1], target[2] - position[2]};
  double n = std::sqrt(fwd[0] * fwd[0] + fwd[1] * fwd[1] + fwd[2] * fwd[2]);
  for (auto& v : fwd) v /= n;
  Vec3 up = {0, 0, 1};
  if (std::abs(fwd[2]) > 0.99) up = {0, 1, 0};
  Vec3 right = {up[1] * fwd[2] - up[2] * fwd[1], up[2] * fwd[0] - up[0] * fwd[2],
                up[0] * fwd[1] - up[1] * fwd[0]};
  n = std::sqrt(right[0] * right[0] + right[1] * right[1] + right[2] * right[2]);
  for (auto& v : right) v /= n;
  Vec3 down = {fwd[1] * right[2] - fwd[2] * right[1], fwd[2] * right[0] - fwd[0] * right[2],
               fwd[0] * right[1] - fwd[1] * right[0]};
  Camera cam;
  cam.intr = intr;
  for (int r = 0; r < 3; ++r) {
    cam.c2w[static_cast<size_t>(r) * 4 + 0] = right[static_cast<size_t>(r)];
    cam.c2w[static_cast<size_t>(r) * 4 + 1] = down[static_cast<size_t>(r)];
    cam.c2w[static_cast<size_t>(r) * 4 + 2] = fwd[static_cast<size_t>(r)];
    cam.c2w[static_cast<size_t>(r) * 4 + 3] = position[static_cast<size_t>(r)];
  }
  cam.validate();
  return cam;
}

Dataset generate_dataset(const SyntheticScene& scene, int n_views, int width, int height,
                         ViewDistribution dist, uint64_t seed, double camera_radius,
                         bool with_depth) {
  if (n_views < 1) throw std::invalid_argument("generate_dataset: need n_views >= 1");
  Dataset ds;
  ds.intrinsics.width = width;
  ds.intrinsics.height = height;
  ds.intrinsics.fx = ds.intrinsics.fy = 1.2 * std::max(width, height);
  ds.intrinsics.cx = (width - 1) / 2.0;
  ds.intrinsics.cy = (height - 1) / 2.0;
  const Vec3 center = {0.5, 0.5, 0.5};
  Rng rng = make_stream(seed, 77);
  for (int i = 0; i < n_views; ++i) {
    const double phi = uniform(rng, 0.0, 2.0 * M_PI);
    // keep a margin from the pole so look_at stays well conditioned
    const double cos_lo = dist == ViewDistribution::Hemisphere ? 0.05 : -0.95;
    const double cos_theta = uniform(rng, cos_lo, 0.95);
    const double sin_theta = std::sqrt(1.0 - cos_theta * cos_theta);
    Vec3 pos = {center[0] + camera_radius * sin_theta * std::cos(phi),
                center[1] + camera_radius * sin_theta * std::sin(phi),
                center[2] + camera_radius * cos_theta};
    Camera cam = look_at_camera(pos, center, ds.intrinsics);
    FloatGrid depth;
    ds.images.push_back(render_oracle_image(scene, cam, with_depth ? &depth : nullptr));
    ds.cameras.push_back(cam);
    if (with_depth) ds.depths.push_back(std::move(depth));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "images");
  if (ds.has_depth()) fs::create_directories(fs::path(dir) / "depth");
  {
    std::ofstream f(fs::path(dir) / "intrinsics.txt");
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %d %d\n", ds.intrinsics.fx,
                  ds.intrinsics.fy, ds.intrinsics.cx, ds.intrinsics.cy, ds.intrinsics.width,
                  ds.intrinsics.height);
    f << buf;
  }
  {
    std::ofstream f(fs::path(dir) / "poses.txt");
    f << "# one camera per line: row-major 3x4 camera-to-world\n";
    for (const auto& cam : ds.cameras) {
      char buf[64];
      for (int i = 0; i < 12; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g%c", cam.c2w[static_cast<size_t>(i)],
                      i == 11 ? '\n' : ' ');
        f << buf;
      }
    }
  }
  char name[32];
  for (size_t i = 0; i < ds.images.size(); ++i) {
    std::snprintf(name, sizeof name, "%04zu.png", i);
    write_png(ds.images[i], (fs::path(dir) / "images" / name).string());
    if (ds.has_depth()) {
      std::snprintf(name, sizeof name, "%04zu.f32", i);
      write_grid(ds.depths[i], (fs::path(dir) / "depth" / name).string());
    }
  }
}

Dataset load_dataset(const std::string& dir) {
  Dataset ds;
  const fs::path root(dir);
  {
    std::ifstream f(root / "intrinsics.txt");
    if (!f) throw std::runtime_error("missing file: " + (root / "intrinsics.txt").string());
    if (!(f >> ds.intrinsics.fx >> ds.intrinsics.fy >> ds.intrinsics.cx >> ds.intrinsics.cy >>
          ds.intrinsics.width >> ds.intrinsics.height))
      throw std::runtime_error("malformed intrinsics.txt (want: fx fy cx cy W H)");
  }
  {
    std::ifstream f(root / "poses.txt");
    if (!f) throw std::runtime_error("missing file: " + (root / "poses.txt").string());
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      std::istringstream ls(line);
      std::vector<double> nums;
      double v;
      while (ls >> v) nums.push_back(v);
      if (nums.empty()) continue;
      if (nums.size() != 12)
        throw std::runtime_error("poses.txt row " + std::to_string(lineno) + ": expected 12 numbers, got " +
                                 std::to_string(nums.size()));
      Camera cam;
      cam.intr = ds.intrinsics;
      std::copy(nums.begin(), nums.end(), cam.c2w.begin());
      cam.validate();
      ds.cameras.push_back(cam);
    }
  }
  char name[32];
  for (size_t i = 0;; ++i) {
    std::snprintf(name, sizeof name, "%04zu.png", i);
    const fs::path p = root / "images" / name;
    if (!fs::exists(p)) break;
    ds.images.push_back(read_png(p.string()));
    if (ds.images.back().width != ds.intrinsics.width ||
        ds.images.back().height != ds.intrinsics.height)
      throw std::runtime_error("image size mismatch in " + p.string());
  }
  if (ds.images.size() != ds.cameras.size())
    throw std::runtime_error("dataset: " + std::to_string(ds.images.size()) + " images but " +
                             std::to_string(ds.cameras.size()) + " poses");
  if (fs::exists(root / "depth")) {
    for (size_t i = 0; i < ds.images.size(); ++i) {
      std::snprintf(name, sizeof name, "%04zu.f32", i);
      const fs::path p = root / "depth" / name;
      if (!fs::exists(p)) throw std::runtime_error("missing depth map: " + p.string());
      ds.depths.push_back(read_grid(p.string()));
    }
  }
  return ds;
}

}  // namespace fgrf
