#include "fgrf/renderer.hpp"

namespace fgrf {

using ad::Var;

std::pair<Tensor, Tensor> ray_points(const std::vector<Ray>& rays, const RaySampleGrid& grid) {
  const int64_t R = grid.t.shape[0], N = grid.t.shape[1];
  if (static_cast<int64_t>(rays.size()) != R)
    throw std::invalid_argument("ray_points: ray count mismatch");
  Tensor xs = Tensor::zeros({R * N, 3});
  Tensor ds = Tensor::zeros({R * N, 3});
  for (int64_t r = 0; r < R; ++r) {
    const Ray& ray = rays[static_cast<size_t>(r)];
    for (int64_t i = 0; i < N; ++i) {
      const double t = grid.t[r * N + i];
      for (int c = 0; c < 3; ++c) {
        xs[(r * N + i) * 3 + c] = ray.origin[static_cast<size_t>(c)] + t * ray.dir[static_cast<size_t>(c)];
        ds[(r * N + i) * 3 + c] = ray.dir[static_cast<size_t>(c)];
      }
    }
  }
  return {std::move(xs), std::move(ds)};
}

namespace {

RayRenderOutput composite_points(const Var& sigma_flat, const Var& color_flat,
                                 const RaySampleGrid& grid,
                                 const std::array<double, 3>& background) {
  const int64_t R = grid.t.shape[0], N = grid.t.shape[1];
  Var sigma = ad::reshape(sigma_flat, {R, N});
  Var colors = ad::reshape(color_flat, {R, N, 3});
  auto cw = transmittance_weights(sigma, ad::constant(grid.delta));
  Var color = composite_color(cw, colors, background);
  Var depth = composite_depth(cw, grid.t);
  return {color, depth, cw.w};
}

}  // namespace

RayRenderOutput render_rays_mean(const MeanOutput& mean, const RaySampleGrid& grid,
                                 const std::array<double, 3>& background) {
  return composite_points(mean.sigma_mu, mean.c_mu, grid, background);
}

RayRenderOutput render_rays_sample(const FieldSampleBatch& sample, const RaySampleGrid& grid,
                                   const std::array<double, 3>& background) {
  return composite_points(sample.sigma, sample.c, grid, background);
}

namespace {

Image render_image(RadianceField& field, const Camera& cam, const RenderParams& params,
                   uint64_t seed, FloatGrid* depth_out, bool stochastic,
                   std::optional<uint64_t> strat_seed = std::nullopt) {
  cam.validate();
  const int W = cam.intr.width, H = cam.intr.height;
  Image img(W, H);
  if (depth_out) *depth_out = FloatGrid(W, H);

  std::vector<std::pair<double, double>> pixels;
  pixels.reserve(img.pixels());
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) pixels.emplace_back(x, y);

  Rng strat_rng = make_stream(strat_seed.value_or(seed), 1);
  Rng draw_rng = make_stream(seed, 2);
  const int64_t total = static_cast<int64_t>(pixels.size());
  for (int64_t start = 0; start < total; start += params.chunk) {
    const int64_t count = std::min<int64_t>(params.chunk, total - start);
    std::vector<std::pair<double, double>> chunk(pixels.begin() + start,
                                                 pixels.begin() + start + count);
    auto rays = generate_rays(cam, chunk);
    auto grid = stratified_grid(static_cast<int>(count), params.near, params.far,
                                params.samples_per_ray, strat_rng);
    auto [xs, ds] = ray_points(rays, grid);
    MeanOutput mean = field.eval_mean(xs, ds);
    RayRenderOutput out =
        stochastic ? render_rays_sample(field.sample(mean, draw_rng), grid, params.background)
                   : render_rays_mean(mean, grid, params.background);
    for (int64_t i = 0; i < count; ++i) {
      const int x = static_cast<int>(chunk[static_cast<size_t>(i)].first);
      const int y = static_cast<int>(chunk[static_cast<size_t>(i)].second);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = out.color->value[i * 3 + c];
      if (depth_out) depth_out->at(x, y) = out.depth->value[i];
    }
  }
  return img;
}

}  // namespace

Image render_mean(RadianceField& field, const Camera& cam, const RenderParams& params,
                  uint64_t seed, FloatGrid* depth_out) {
  return render_image(field, cam, params, seed, depth_out, false);
}

Image render_stochastic(RadianceField& field, const Camera& cam, const RenderParams& params,
                        uint64_t seed, FloatGrid* depth_out, std::optional<uint64_t> strat_seed) {
  return render_image(field, cam, params, seed, depth_out, true, strat_seed);
}

}  // namespace fgrf
