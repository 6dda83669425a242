#pragma once

#include <utility>
#include <vector>

#include "fgrf/nn.hpp"

namespace fgrf {

/// One power-iteration step on w2d [out, rest], updating (u,v) in place.
/// Returns the top-singular-value estimate u^T W v.
double spectral_power_iteration(const Tensor& w2d, Tensor& u, Tensor& v);

/// One power iteration, then divide by the estimate. A zero weight is
/// returned unchanged.
Tensor spectral_normalize(const Tensor& w2d, Tensor& u, Tensor& v);

struct DiscriminatorConfig {
  int patch_side = 32;
  std::vector<int> widths = {32, 64, 128, 128};  // stride-2 conv blocks
  double leaky_slope = 0.2;
  int spectral_iters = 3;  // power iterations per update
};

/// Scale-conditioned convolutional patch discriminator with instance and
/// spectral normalization. Input patches are RGB in [0,1]; the scale s is
/// appended as a constant fourth channel.
class Discriminator {
 public:
  Discriminator(const DiscriminatorConfig& cfg, Rng& rng);

  /// patches [B,3,K,K] -> logits [B,1]
  ad::Var forward(const ad::Var& patches, double s);
  ad::Var forward(const Tensor& patches, double s) { return forward(ad::constant(patches), s); }

  /// Single patch given as K*K*3 row-major pixels.
  double discriminate(const Tensor& patch_hwc, double s);

  /// Re-estimate per-layer spectral norms from the current weights (called
  /// once per optimizer step; forward then uses w / sigma_hat).
  void update_spectral();

  /// Top singular value of each effective (normalized) conv weight, by dense
  /// power iteration to convergence. For invariant checks.
  std::vector<double> effective_conv_spectral_norms(int iters = 200) const;

  const DiscriminatorConfig& config() const { return cfg_; }
  void collect(std::vector<ad::Parameter*>& out);

 private:
  struct ConvLayer {
    ad::Parameter w;  // [Cout,Cin,3,3]
    ad::Parameter b;  // [Cout]
    Tensor u, v;      // power-iteration vectors over [Cout, Cin*9]
    double sigma_hat = 1.0;
  };
  struct Norm {
    ad::Parameter gamma, beta;  // [C]
  };

  ad::Var conv_block(const ad::Var& x, size_t i);

  DiscriminatorConfig cfg_;
  std::vector<ConvLayer> convs_;
  std::vector<Norm> norms_;  // for blocks 1..n-1
  nn::Linear head_;
  Tensor head_u_, head_v_;
  double head_sigma_ = 1.0;
  int64_t head_in_ = 0;
};

/// Non-saturating GAN losses from logits:
///   L_D = mean softplus(-real) + mean softplus(fake)
///   L_G = mean softplus(-fake)
std::pair<ad::Var, ad::Var> gan_losses(const ad::Var& real_logits, const ad::Var& fake_logits);
std::pair<double, double> gan_loss_values(const Tensor& real_logits, const Tensor& fake_logits);

/// x [B,C,H,W] normalized per (sample, channel) over the spatial extent.
ad::Var instance_norm(const ad::Var& x, const ad::Var& gamma, const ad::Var& beta,
                      double eps = 1e-5);

}  // namespace fgrf
