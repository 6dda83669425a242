#pragma once

#include <array>
#include <utility>
#include <vector>

#include "fgrf/rendering.hpp"
#include "fgrf/rng.hpp"

namespace fgrf {

struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
};

using Vec3 = std::array<double, 3>;

struct Camera {
  std::array<double, 12> c2w{};  // row-major 3x4 camera-to-world
  Intrinsics intr;

  void validate() const;  // rotation orthonormal within 1e-6, focal > 0
  Vec3 position() const { return {c2w[3], c2w[7], c2w[11]}; }
  Vec3 rotate(const Vec3& v) const;
  Vec3 optical_axis() const { return rotate({0, 0, 1}); }
};

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit
};

/// Pixel coordinates are (u,v) with u along width. Out-of-bounds pixels are
/// an error.
std::vector<Ray> generate_rays(const Camera& cam, const std::vector<std::pair<double, double>>& pixels);
Ray generate_ray(const Camera& cam, double u, double v);

/// One uniform draw per equal bin of [near,far]; last delta is the bin width.
void stratified_samples(double near, double far, int n, Rng& rng, double* t_out, double* delta_out);

/// Stratified skeleton for a batch of rays -> [R,N] grids.
RaySampleGrid stratified_grid(int rays, double near, double far, int n, Rng& rng);

struct PatchSpec {
  int side = 0;      // K
  double scale = 0;  // s
  double stride = 0;
  std::pair<double, double> center;
  std::vector<std::pair<double, double>> pixels;  // K*K integer-rounded coords, row-major
};

/// Evenly spaced K x K pixel grid with stride derived from the scale s, a
/// +-10% stride jitter, and a random center keeping the footprint inside the
/// image. Throws if s*min(W,H) < K.
PatchSpec sample_patch(int width, int height, int K, double s, Rng& rng,
                       double stride_jitter = 0.1);

/// Deterministic variant with explicit center and stride (test hook).
PatchSpec make_patch(int width, int height, int K, double s, std::pair<double, double> center,
                     double stride);

/// Exponential interpolation from s_start down to s_end over decay_steps,
/// constant s_end afterward.
double anneal_scale(int64_t step, double s_start, double s_end, int64_t decay_steps);

}  // namespace fgrf
