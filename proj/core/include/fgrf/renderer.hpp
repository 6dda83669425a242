#pragma once

#include <optional>

#include "fgrf/field.hpp"
#include "fgrf/image.hpp"
#include "fgrf/rendering.hpp"
#include "fgrf/sampling.hpp"

namespace fgrf {

struct RenderParams {
  double near = 0.1;
  double far = 2.5;
  int samples_per_ray = 32;
  std::array<double, 3> background = {0, 0, 0};
  int chunk = 1024;  // rays per forward pass
};

/// Deterministic render from the mean branch (sigma_mu, c_mu).
Image render_mean(RadianceField& field, const Camera& cam, const RenderParams& params,
                  uint64_t seed, FloatGrid* depth_out = nullptr);

/// One stochastic render: a single residual draw per point, composited with
/// the combined density and color. When strat_seed is set, the stratified
/// quadrature grid is derived from it instead of seed, so repeated draws can
/// share one grid and their spread measures model variance only.
Image render_stochastic(RadianceField& field, const Camera& cam, const RenderParams& params,
                        uint64_t seed, FloatGrid* depth_out = nullptr,
                        std::optional<uint64_t> strat_seed = std::nullopt);

/// Batched ray render used by both full-image paths and patch training.
/// Returns composited colors [R,3] (and optional depth [R,1]) as graph nodes
/// so callers can backpropagate.
struct RayRenderOutput {
  ad::Var color;  // [R,3]
  ad::Var depth;  // [R,1]
  ad::Var weights;  // [R,N]
};

/// Mean-branch compositing for a prepared sample grid.
RayRenderOutput render_rays_mean(const MeanOutput& mean, const RaySampleGrid& grid,
                                 const std::array<double, 3>& background);

/// Combined-field compositing for one stochastic draw.
RayRenderOutput render_rays_sample(const FieldSampleBatch& sample, const RaySampleGrid& grid,
                                   const std::array<double, 3>& background);

/// Flattened per-point positions/directions for a set of rays and their
/// sample grid: both [R*N, 3].
std::pair<Tensor, Tensor> ray_points(const std::vector<Ray>& rays, const RaySampleGrid& grid);

}  // namespace fgrf
