#include "fgrf/losses.hpp"

#include <cmath>

namespace fgrf {

using ad::Var;

Var det_rendering_loss(const Var& rendered, const Tensor& gt, bool mean_reduce) {
  if (rendered->value.shape != gt.shape)
    throw std::invalid_argument("det_rendering_loss: rendered " + rendered->value.shape_str() +
                                " vs ground truth " + gt.shape_str());
  Var diff = ad::sub(rendered, ad::constant(gt));
  Var loss = ad::sum_all(ad::mul(diff, diff));
  if (mean_reduce) loss = ad::mul_scalar(loss, 1.0 / static_cast<double>(gt.shape[0]));
  return loss;
}

std::vector<double> depth_target(const double* t, int n, double gt_depth, double sigma_depth) {
  std::vector<double> g(static_cast<size_t>(n));
  double total = 0;
  for (int i = 0; i < n; ++i) {
    const double d = t[i] - gt_depth;
    g[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * sigma_depth * sigma_depth));
    total += g[static_cast<size_t>(i)];
  }
  for (auto& v : g) v /= total;
  return g;
}

DepthLossResult depth_ce_loss(const Var& w, const Tensor& t, const Tensor& gt_depth, double near,
                              double far, double sigma_depth, double eps) {
  if (sigma_depth <= 0) throw std::invalid_argument("depth_ce_loss: sigma_depth must be > 0");
  const auto& ws = w->value.shape;
  if (ws.size() != 2 || t.shape != ws || gt_depth.numel() != ws[0])
    throw std::invalid_argument("depth_ce_loss: shapes w " + w->value.shape_str() + ", t " +
                                t.shape_str() + ", depth " + gt_depth.shape_str());
  const int64_t R = ws[0];
  const int n = static_cast<int>(ws[1]);

  Tensor targets = Tensor::zeros(ws);  // zero rows for skipped rays
  int64_t kept = 0, skipped = 0;
  for (int64_t r = 0; r < R; ++r) {
    const double d = gt_depth[r];
    if (d < near || d > far) {
      ++skipped;
      continue;
    }
    auto g = depth_target(&t.data[static_cast<size_t>(r) * n], n, d, sigma_depth);
    std::copy(g.begin(), g.end(), targets.data.begin() + r * n);
    ++kept;
  }
  if (kept == 0) return {ad::constant(Tensor::scalar(0.0)), skipped};

  Var logw = ad::log_(ad::add_scalar(w, eps));
  Var ce = ad::sum_all(ad::mul(ad::constant(targets), logw));
  return {ad::mul_scalar(ce, -1.0 / static_cast<double>(kept)), skipped};
}

Var depth_l2_loss(const Var& composited_depth, const Tensor& gt_depth) {
  if (composited_depth->value.numel() != gt_depth.numel())
    throw std::invalid_argument("depth_l2_loss: size mismatch");
  Tensor gt(composited_depth->value.shape, gt_depth.data);
  Var diff = ad::sub(composited_depth, ad::constant(gt));
  return ad::mean_all(ad::mul(diff, diff));
}

Var total_generator_loss(const Var& det, const Var& adv, const Var& depth,
                         const LossWeights& weights) {
  weights.validate();
  auto check = [](const Var& v, const char* name) {
    if (v->value.numel() != 1 || !std::isfinite(v->value[0]))
      throw std::runtime_error(std::string("total_generator_loss: non-finite component '") + name +
                               "'");
  };
  check(det, "det");
  check(adv, "adv");
  check(depth, "depth");
  return ad::add(ad::add(ad::mul_scalar(det, weights.det), ad::mul_scalar(adv, weights.adv)),
                 ad::mul_scalar(depth, weights.depth));
}

}  // namespace fgrf
