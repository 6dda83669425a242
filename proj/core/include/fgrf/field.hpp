#pragma once

#include <utility>
#include <vector>

#include "fgrf/encoding.hpp"
#include "fgrf/nn.hpp"

namespace fgrf {

struct FieldConfig {
  HashGridConfig hash;
  int sh_degree = 3;
  int hidden = 64;       // MLP hidden width
  int feat_dim = 16;     // width of the conditioning features h_sigma / h_color
  int flow_depth = 4;    // coupling steps per flow
  int cond_hidden = 32;  // flow conditioner hidden width
  int cond_res = 16;     // per-axis resolution of the flow conditioning grids

  int sh_dim() const { return (sh_degree + 1) * (sh_degree + 1); }
};

/// Per-point outputs of the deterministic pass, batched over P points.
/// h_sigma/h_color are the flow conditioning features; at the field level
/// they come from dedicated dense grids, not the trunk MLP.
struct MeanOutput {
  ad::Var sigma_mu;  // [P,1], >= 0 via softplus
  ad::Var c_mu;      // [P,3], in [0,1] via sigmoid
  ad::Var h_sigma;   // [P,feat_dim]
  ad::Var h_color;   // [P,feat_dim]
};

/// Density and color MLPs on top of the hash grid; provides the mean
/// density/radiance and the flow conditioning features.
class DeterministicBranch {
 public:
  DeterministicBranch(const FieldConfig& cfg, const std::string& name, Rng& rng);

  /// xs [P,3] in the unit cube, dirs [P,3] unit. Deterministic.
  MeanOutput eval(const Tensor& xs, const Tensor& dirs);

  HashGrid& grid() { return grid_; }
  void collect(std::vector<ad::Parameter*>& out);

 private:
  FieldConfig cfg_;
  HashGrid grid_;
  nn::Linear density_l1_, density_l2_, sigma_head_;
  nn::Linear color_l1_, color_l2_, color_head_;
};

/// One conditional affine coupling step. The active dims are transformed as
/// a' = a*exp(ls) + t with (ls, t) from a conditioner MLP on (passive, h);
/// the passive dims pass through unchanged. With no passive dims (1-d flows)
/// the step is a pure conditional affine. log-scale = 5*tanh(raw) in [-5,5].
/// The conditioner is bias-free with tanh hidden units, so h = 0 gives the
/// exact identity and the step cannot contract the residual without a live
/// conditioning feature (see the rationale in field.cpp).
class FlowStep {
 public:
  FlowStep(int dim, std::vector<int> active, int cond_dim, int hidden, const std::string& name,
           Rng& rng);

  /// u [P,dim], h [P,cond_dim] -> (out [P,dim], logdet [P,1])
  std::pair<ad::Var, ad::Var> forward(const ad::Var& u, const ad::Var& h);
  /// exact inverse; returned logdet is that of the inverse map
  std::pair<ad::Var, ad::Var> inverse(const ad::Var& v, const ad::Var& h);

  /// Pin the step to a fixed affine map (test hook).
  void set_constant_affine(double log_scale, double shift);
  void collect(std::vector<ad::Parameter*>& out);

 private:
  // (log_scale, shift), each [P,n_active]
  std::pair<ad::Var, ad::Var> conditioner(const ad::Var& u, const ad::Var& h);
  ad::Var reassemble(const ad::Var& u, const ad::Var& transformed_active);

  int dim_;
  std::vector<int> active_;
  std::vector<int> passive_;
  nn::Linear l1_, l2_;
};

/// K coupling steps with a standard Gaussian prior. Steps are initialized to
/// the identity so training starts from the deterministic solution.
class ConditionalFlow {
 public:
  ConditionalFlow(int dim, int depth, int cond_dim, int hidden, const std::string& name, Rng& rng);

  std::pair<ad::Var, ad::Var> forward(const ad::Var& u0, const ad::Var& h);
  std::pair<ad::Var, ad::Var> inverse(const ad::Var& value, const ad::Var& h);
  Tensor inverse_values(const Tensor& value, const Tensor& h);

  /// log p(value|h) per row -> [P,1]. Diagnostic; never used as a training
  /// loss (training is likelihood-free).
  ad::Var log_density(const ad::Var& value, const ad::Var& h);

  int dim() const { return dim_; }
  std::vector<FlowStep>& steps() { return steps_; }
  void collect(std::vector<ad::Parameter*>& out);

 private:
  int dim_;
  std::vector<FlowStep> steps_;
};

/// One stochastic realization of the field at P points.
struct FieldSampleBatch {
  ad::Var sigma_mu, c_mu;    // mean branch
  ad::Var sigma_eps, c_eps;  // flow residuals
  ad::Var sigma;             // max(0, sigma_mu + sigma_eps), [P,1]
  ad::Var c;                 // clamp(c_mu + c_eps, 0, 1), [P,3]
};

/// Generator radiance field: mean branch plus residual flows.
class RadianceField {
 public:
  RadianceField(const FieldConfig& cfg, Rng& rng);

  /// Mean branch plus the flow conditioning features (see eval_mean impl).
  MeanOutput eval_mean(const Tensor& xs, const Tensor& dirs);

  /// One residual draw pushed through both flows, reusing a MeanOutput so the
  /// mean branch runs once per point set regardless of draw count.
  FieldSampleBatch sample(const MeanOutput& mean, Rng& rng);

  /// n independent draws at the same points.
  std::vector<FieldSampleBatch> sample_field(const Tensor& xs, const Tensor& dirs, int n, Rng& rng);

  DeterministicBranch& mean() { return mean_; }
  DenseGrid& cond_sigma_grid() { return cond_sigma_; }
  DenseGrid& cond_color_grid() { return cond_color_; }
  ConditionalFlow& density_flow() { return density_flow_; }
  ConditionalFlow& color_flow() { return color_flow_; }
  const FieldConfig& config() const { return cfg_; }
  void collect(std::vector<ad::Parameter*>& out);

 private:
  FieldConfig cfg_;
  DeterministicBranch mean_;
  DenseGrid cond_sigma_, cond_color_;
  ConditionalFlow density_flow_;
  ConditionalFlow color_flow_;
};

/// clamp(v,0,1) as relu(v) - relu(v-1); gradient is zero outside [0,1]
ad::Var clamp01(const ad::Var& v);

}  // namespace fgrf
