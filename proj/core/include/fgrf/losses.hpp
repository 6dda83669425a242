#pragma once

#include "fgrf/autodiff.hpp"

namespace fgrf {

struct LossWeights {
  double det = 1.0;
  double adv = 0.1;
  double depth = 0.05;

  void validate() const {
    if (det < 0 || adv < 0 || depth < 0)
      throw std::invalid_argument("loss weights must be non-negative");
  }
};

/// Sum of squared per-channel differences over the ray batch.
/// rendered, gt: [R,3]. mean_reduce divides by R (default is the plain sum).
ad::Var det_rendering_loss(const ad::Var& rendered, const Tensor& gt, bool mean_reduce = false);

struct DepthLossResult {
  ad::Var loss;          // scalar; zero constant if every ray was skipped
  int64_t skipped = 0;   // rays whose gt depth fell outside [near,far]
};

/// Cross entropy between compositing weights and a bin-normalized Gaussian
/// centered on the ground-truth depth.
/// w [R,N] (weights, >=0), t [R,N] (sample depths), gt_depth [R].
DepthLossResult depth_ce_loss(const ad::Var& w, const Tensor& t, const Tensor& gt_depth,
                              double near, double far, double sigma_depth = 0.1,
                              double eps = 1e-6);

/// Bin-normalized Gaussian target for one ray (exposed for tests).
std::vector<double> depth_target(const double* t, int n, double gt_depth, double sigma_depth);

/// Plain L2 depth loss, kept behind a flag for the ablation comparison.
ad::Var depth_l2_loss(const ad::Var& composited_depth, const Tensor& gt_depth);

/// weights.det*det + weights.adv*adv + weights.depth*depth.
/// Throws naming the offending component if one is non-finite.
ad::Var total_generator_loss(const ad::Var& det, const ad::Var& adv, const ad::Var& depth,
                             const LossWeights& weights);

}  // namespace fgrf
