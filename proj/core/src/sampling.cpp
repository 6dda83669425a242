#include "fgrf/sampling.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fgrf {

void Camera::validate() const {
  if (intr.fx <= 0 || intr.fy <= 0) throw std::invalid_argument("camera: focal lengths must be > 0");
  if (intr.width <= 0 || intr.height <= 0)
    throw std::invalid_argument("camera: image size must be positive");
  // columns of the rotation block must be orthonormal
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double dot = 0;
      for (int r = 0; r < 3; ++r) dot += c2w[r * 4 + a] * c2w[r * 4 + b];
      const double want = a == b ? 1.0 : 0.0;
      if (std::abs(dot - want) > 1e-6)
        throw std::invalid_argument("camera: rotation block not orthonormal");
    }
}

Vec3 Camera::rotate(const Vec3& v) const {
  return {c2w[0] * v[0] + c2w[1] * v[1] + c2w[2] * v[2],
          c2w[4] * v[0] + c2w[5] * v[1] + c2w[6] * v[2],
          c2w[8] * v[0] + c2w[9] * v[1] + c2w[10] * v[2]};
}

Ray generate_ray(const Camera& cam, double u, double v) {
  if (u < 0 || v < 0 || u > cam.intr.width - 1 || v > cam.intr.height - 1)
    throw std::invalid_argument("generate_ray: pixel (" + std::to_string(u) + "," +
                                std::to_string(v) + ") outside image " +
                                std::to_string(cam.intr.width) + "x" +
                                std::to_string(cam.intr.height));
  Vec3 d_cam = {(u - cam.intr.cx) / cam.intr.fx, (v - cam.intr.cy) / cam.intr.fy, 1.0};
  Vec3 d = cam.rotate(d_cam);
  const double n = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  return {cam.position(), {d[0] / n, d[1] / n, d[2] / n}};
}

std::vector<Ray> generate_rays(const Camera& cam,
                               const std::vector<std::pair<double, double>>& pixels) {
  std::vector<Ray> out;
  out.reserve(pixels.size());
  for (const auto& [u, v] : pixels) out.push_back(generate_ray(cam, u, v));
  return out;
}

void stratified_samples(double near, double far, int n, Rng& rng, double* t_out, double* delta_out) {
  if (!(near < far)) throw std::invalid_argument("stratified_samples: need near < far");
  if (n < 2) throw std::invalid_argument("stratified_samples: need N >= 2");
  const double bin = (far - near) / n;
  for (int i = 0; i < n; ++i) t_out[i] = near + (i + uniform(rng)) * bin;
  for (int i = 0; i < n - 1; ++i) delta_out[i] = t_out[i + 1] - t_out[i];
  delta_out[n - 1] = bin;
}

RaySampleGrid stratified_grid(int rays, double near, double far, int n, Rng& rng) {
  RaySampleGrid g{Tensor::zeros({rays, n}), Tensor::zeros({rays, n})};
  for (int r = 0; r < rays; ++r)
    stratified_samples(near, far, n, rng, &g.t.data[static_cast<size_t>(r) * n],
                       &g.delta.data[static_cast<size_t>(r) * n]);
  return g;
}

namespace {

PatchSpec build_patch(int width, int height, int K, double s, std::pair<double, double> center,
                      double stride) {
  PatchSpec p;
  p.side = K;
  p.scale = s;
  p.stride = stride;
  p.center = center;
  p.pixels.reserve(static_cast<size_t>(K) * K);
  const double half = (K - 1) / 2.0;
  for (int row = 0; row < K; ++row)
    for (int col = 0; col < K; ++col) {
      double u = std::round(center.first + (col - half) * stride);
      double v = std::round(center.second + (row - half) * stride);
      u = std::min(std::max(u, 0.0), static_cast<double>(width - 1));
      v = std::min(std::max(v, 0.0), static_cast<double>(height - 1));
      p.pixels.emplace_back(u, v);
    }
  return p;
}

}  // namespace

PatchSpec sample_patch(int width, int height, int K, double s, Rng& rng, double stride_jitter) {
  const int side = std::min(width, height);
  if (K < 2) throw std::invalid_argument("sample_patch: K must be >= 2");
  if (s <= 0 || s > 1) throw std::invalid_argument("sample_patch: scale must be in (0,1]");
  if (s * side < K)
    throw std::invalid_argument("sample_patch: scale " + std::to_string(s) +
                                " infeasible for patch side " + std::to_string(K) + " on " +
                                std::to_string(width) + "x" + std::to_string(height));
  double stride = s * (side - 1) / (K - 1);
  stride *= 1.0 + stride_jitter * (2.0 * uniform(rng) - 1.0);
  stride = std::max(1.0, std::min(stride, static_cast<double>(side - 1) / (K - 1)));
  const double half_foot = stride * (K - 1) / 2.0;
  const double cu = uniform(rng, half_foot, width - 1 - half_foot);
  const double cv = uniform(rng, half_foot, height - 1 - half_foot);
  return build_patch(width, height, K, s, {cu, cv}, stride);
}

PatchSpec make_patch(int width, int height, int K, double s, std::pair<double, double> center,
                     double stride) {
  return build_patch(width, height, K, s, center, stride);
}

double anneal_scale(int64_t step, double s_start, double s_end, int64_t decay_steps) {
  if (!(s_start >= s_end) || s_end <= 0)
    throw std::invalid_argument("anneal_scale: need s_start >= s_end > 0");
  if (step >= decay_steps || decay_steps <= 0) return s_end;
  const double f = static_cast<double>(step) / static_cast<double>(decay_steps);
  return s_start * std::pow(s_end / s_start, f);
}

}  // namespace fgrf
