#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fgrf/image.hpp"
#include "fgrf/sampling.hpp"

namespace fgrf {

/// Constant-density primitives; overlapping densities add. Piecewise-constant
/// density along any ray gives volume rendering an exact closed form, which
/// is what the rendering acceptance tests lean on.
struct Primitive {
  enum class Kind { Sphere, Box };
  Kind kind = Kind::Sphere;
  Vec3 center = {0.5, 0.5, 0.5};  // sphere
  double radius = 0.2;
  Vec3 box_min = {0, 0, 0};  // box
  Vec3 box_max = {1, 1, 1};
  double sigma = 1.0;
  Vec3 color = {1, 1, 1};
};

struct SyntheticScene {
  std::vector<Primitive> primitives;
  Vec3 background = {0, 0, 0};
};

struct OracleSample {
  Vec3 color;
  double depth = 0;  // transmittance-weighted expected t; 0 on a full miss
};

/// Exact piecewise-analytic volume rendering of the scene along a ray.
OracleSample render_oracle(const SyntheticScene& scene, const Ray& ray);

/// Full oracle render through a camera.
Image render_oracle_image(const SyntheticScene& scene, const Camera& cam,
                          FloatGrid* depth_out = nullptr);

/// Scene description text: one primitive per line,
///   sphere cx cy cz radius sigma r g b
///   box xmin ymin zmin xmax ymax zmax sigma r g b
///   background r g b
/// '#' starts a comment.
SyntheticScene parse_scene(const std::string& text);
SyntheticScene load_scene(const std::string& path);

struct Dataset {
  Intrinsics intrinsics;
  std::vector<Image> images;
  std::vector<Camera> cameras;
  std::vector<FloatGrid> depths;  // empty when depth is absent
  bool has_depth() const { return !depths.empty(); }
  size_t size() const { return images.size(); }
};

enum class ViewDistribution { Sphere, Hemisphere };

/// Cameras on a sphere/hemisphere around the unit-cube center, oracle-rendered
/// images and depth maps. Hemisphere keeps all camera z at or above the
/// center z.
Dataset generate_dataset(const SyntheticScene& scene, int n_views, int width, int height,
                         ViewDistribution dist, uint64_t seed, double camera_radius = 1.6,
                         bool with_depth = true);

/// Camera i of the deterministic view layout used by generate_dataset;
/// positive z_sign stays on the observed hemisphere, negative on the
/// opposite one.
Camera look_at_camera(const Vec3& position, const Vec3& target, const Intrinsics& intr);

/// Directory layout: images/NNNN.png, poses.txt, intrinsics.txt,
/// depth/NNNN.f32 (optional).
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace fgrf
