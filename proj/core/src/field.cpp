#include "fgrf/field.hpp"

#include <algorithm>
#include <cmath>

namespace fgrf {

using ad::Var;

Var clamp01(const Var& v) { return ad::sub(ad::relu(v), ad::relu(ad::add_scalar(v, -1.0))); }

DeterministicBranch::DeterministicBranch(const FieldConfig& cfg, const std::string& name, Rng& rng)
    : cfg_(cfg),
      grid_(cfg.hash, name + ".grid", rng),
      density_l1_(name + ".density_l1", cfg.hash.out_dim(), cfg.hidden, rng),
      density_l2_(name + ".density_l2", cfg.hidden, cfg.feat_dim, rng),
      sigma_head_(name + ".sigma_head", cfg.feat_dim, 1, rng),
      color_l1_(name + ".color_l1", cfg.feat_dim + cfg.sh_dim(), cfg.hidden, rng),
      color_l2_(name + ".color_l2", cfg.hidden, cfg.feat_dim, rng),
      color_head_(name + ".color_head", cfg.feat_dim, 3, rng) {}

MeanOutput DeterministicBranch::eval(const Tensor& xs, const Tensor& dirs) {
  if (!xs.same_shape(dirs) && !(dirs.rank() == 2 && dirs.shape[1] == 3 && xs.shape[0] == dirs.shape[0]))
    throw std::invalid_argument("eval_mean: positions " + xs.shape_str() + " vs directions " +
                                dirs.shape_str());
  Var feats = grid_.encode(xs);
  Var h_sigma = density_l2_(ad::relu(density_l1_(feats)));
  Var sigma_mu = ad::softplus(sigma_head_(h_sigma));

  Var sh = ad::constant(sh_encode_batch(dirs, cfg_.sh_degree));
  Var h_color = color_l2_(ad::relu(color_l1_(ad::concat({h_sigma, sh}, 1))));
  Var c_mu = ad::sigmoid(color_head_(h_color));
  return {sigma_mu, c_mu, h_sigma, h_color};
}

void DeterministicBranch::collect(std::vector<ad::Parameter*>& out) {
  grid_.collect(out);
  density_l1_.collect(out);
  density_l2_.collect(out);
  sigma_head_.collect(out);
  color_l1_.collect(out);
  color_l2_.collect(out);
  color_head_.collect(out);
}

FlowStep::FlowStep(int dim, std::vector<int> active, int cond_dim, int hidden,
                   const std::string& name, Rng& rng)
    : dim_(dim), active_(std::move(active)) {
  std::sort(active_.begin(), active_.end());
  for (int d = 0; d < dim_; ++d)
    if (std::find(active_.begin(), active_.end(), d) == active_.end()) passive_.push_back(d);
  const int in = static_cast<int>(passive_.size()) + cond_dim;
  const int out = 2 * static_cast<int>(active_.size());
  l1_ = nn::Linear(name + ".l1", in, hidden, rng);
  l2_ = nn::Linear(name + ".l2", hidden, out, rng);
  l2_.zero_init();  // identity map at init
  // Bias-free conditioner: a zero condition feature always maps to the exact
  // identity transform, so the residual keeps its unit prior wherever the
  // conditioning grid is untrained. With the tanh hidden activation the whole
  // conditioner is an odd function of its input, which also rules out a
  // learned global contraction through the passive-dims pathway: for a
  // symmetric base draw the expected log-scale of any odd map is zero.
  l1_.train_bias = false;
  l2_.train_bias = false;
}

std::pair<Var, Var> FlowStep::conditioner(const Var& u, const Var& h) {
  std::vector<Var> in;
  for (int d : passive_) in.push_back(ad::slice(u, 1, d, 1));
  in.push_back(h);
  Var raw = l2_(ad::tanh_(l1_(ad::concat(in, 1))));
  const int64_t a = static_cast<int64_t>(active_.size());
  Var log_scale = ad::mul_scalar(ad::tanh_(ad::slice(raw, 1, 0, a)), 5.0);
  Var shift = ad::slice(raw, 1, a, a);
  return {log_scale, shift};
}

Var FlowStep::reassemble(const Var& u, const Var& transformed_active) {
  std::vector<Var> dims;
  size_t ai = 0;
  for (int d = 0; d < dim_; ++d) {
    if (ai < active_.size() && active_[ai] == d) {
      dims.push_back(ad::slice(transformed_active, 1, static_cast<int64_t>(ai), 1));
      ++ai;
    } else {
      dims.push_back(ad::slice(u, 1, d, 1));
    }
  }
  return dims.size() == 1 ? dims[0] : ad::concat(dims, 1);
}

std::pair<Var, Var> FlowStep::forward(const Var& u, const Var& h) {
  auto [log_scale, shift] = conditioner(u, h);
  Var a = active_.size() == static_cast<size_t>(dim_)
              ? u
              : [&] {
                  std::vector<Var> parts;
                  for (int d : active_) parts.push_back(ad::slice(u, 1, d, 1));
                  return parts.size() == 1 ? parts[0] : ad::concat(parts, 1);
                }();
  Var out_active = ad::add(ad::mul(a, ad::exp_(log_scale)), shift);
  if (!ad::all_finite(out_active->value))
    throw std::runtime_error("flow step: non-finite value in coupling output");
  Var logdet = ad::sum_axis(log_scale, 1, true);
  return {reassemble(u, out_active), logdet};
}

std::pair<Var, Var> FlowStep::inverse(const Var& v, const Var& h) {
  auto [log_scale, shift] = conditioner(v, h);  // passive dims are unchanged by forward
  Var a = active_.size() == static_cast<size_t>(dim_)
              ? v
              : [&] {
                  std::vector<Var> parts;
                  for (int d : active_) parts.push_back(ad::slice(v, 1, d, 1));
                  return parts.size() == 1 ? parts[0] : ad::concat(parts, 1);
                }();
  Var in_active = ad::mul(ad::sub(a, shift), ad::exp_(ad::neg(log_scale)));
  Var logdet = ad::neg(ad::sum_axis(log_scale, 1, true));
  return {reassemble(v, in_active), logdet};
}

void FlowStep::set_constant_affine(double log_scale, double shift) {
  l1_.zero_init();
  l2_.zero_init();
  if (std::abs(log_scale) >= 5.0)
    throw std::invalid_argument("set_constant_affine: |log_scale| must be < 5");
  const double raw = std::atanh(log_scale / 5.0);
  const int64_t a = static_cast<int64_t>(active_.size());
  for (int64_t i = 0; i < a; ++i) {
    l2_.b.value[i] = raw;
    l2_.b.value[a + i] = shift;
  }
}

void FlowStep::collect(std::vector<ad::Parameter*>& out) {
  l1_.collect(out);
  l2_.collect(out);
}

ConditionalFlow::ConditionalFlow(int dim, int depth, int cond_dim, int hidden,
                                 const std::string& name, Rng& rng)
    : dim_(dim) {
  if (dim != 1 && dim != 3)
    throw std::invalid_argument("ConditionalFlow: only 1-d and 3-d variables supported");
  for (int k = 0; k < depth; ++k) {
    std::vector<int> active;
    if (dim == 1) {
      active = {0};
    } else {
      // 2|1 alternating coupling split
      active = (k % 2 == 0) ? std::vector<int>{2} : std::vector<int>{0, 1};
    }
    steps_.emplace_back(dim, active, cond_dim, hidden, name + ".step" + std::to_string(k), rng);
  }
}

std::pair<Var, Var> ConditionalFlow::forward(const Var& u0, const Var& h) {
  Var u = u0;
  Var logdet;
  for (size_t k = 0; k < steps_.size(); ++k) {
    std::pair<Var, Var> r;
    try {
      r = steps_[k].forward(u, h);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(std::string(e.what()) + " (step " + std::to_string(k) + ")");
    }
    u = r.first;
    logdet = logdet ? ad::add(logdet, r.second) : r.second;
  }
  if (!logdet) logdet = ad::constant(Tensor::zeros({u0->value.shape[0], 1}));
  return {u, logdet};
}

std::pair<Var, Var> ConditionalFlow::inverse(const Var& value, const Var& h) {
  Var v = value;
  Var logdet;
  for (size_t k = steps_.size(); k-- > 0;) {
    auto r = steps_[k].inverse(v, h);
    v = r.first;
    logdet = logdet ? ad::add(logdet, r.second) : r.second;
  }
  if (!logdet) logdet = ad::constant(Tensor::zeros({value->value.shape[0], 1}));
  return {v, logdet};
}

Tensor ConditionalFlow::inverse_values(const Tensor& value, const Tensor& h) {
  return inverse(ad::constant(value), ad::constant(h)).first->value;
}

ad::Var ConditionalFlow::log_density(const Var& value, const Var& h) {
  auto [u0, logdet_inv] = inverse(value, h);
  // log N(u0; 0, I) summed over dims
  Var sq = ad::mul(u0, u0);
  Var logq = ad::add_scalar(ad::mul_scalar(ad::sum_axis(sq, 1, true), -0.5),
                            -0.5 * std::log(2.0 * M_PI) * dim_);
  return ad::add(logq, logdet_inv);
}

void ConditionalFlow::collect(std::vector<ad::Parameter*>& out) {
  for (auto& s : steps_) s.collect(out);
}

RadianceField::RadianceField(const FieldConfig& cfg, Rng& rng)
    : cfg_(cfg),
      mean_(cfg, "mean", rng),
      cond_sigma_(cfg.cond_res, cfg.feat_dim, "cond_sigma", rng),
      cond_color_(cfg.cond_res, cfg.feat_dim, "cond_color", rng),
      density_flow_(1, cfg.flow_depth, cfg.feat_dim, cfg.cond_hidden, "density_flow", rng),
      color_flow_(3, cfg.flow_depth, cfg.feat_dim, cfg.cond_hidden, "color_flow", rng) {}

MeanOutput RadianceField::eval_mean(const Tensor& xs, const Tensor& dirs) {
  MeanOutput out = mean_.eval(xs, dirs);
  // The flows are conditioned on dedicated collision-free grids rather than
  // the trunk features: the trunk generalizes through shared hash entries and
  // global weights, which would export the learned variance contraction into
  // space the training rays never covered. The dense grids only change where
  // gradients actually landed, so everywhere else h stays zero and the
  // residual distribution stays at its prior.
  out.h_sigma = cond_sigma_.encode(xs);
  out.h_color = cond_color_.encode(xs);
  return out;
}

FieldSampleBatch RadianceField::sample(const MeanOutput& mean, Rng& rng) {
  const int64_t P = mean.sigma_mu->value.shape[0];
  Tensor u_sigma = Tensor::zeros({P, 1});
  Tensor u_color = Tensor::zeros({P, 3});
  for (auto& v : u_sigma.data) v = gaussian(rng);
  for (auto& v : u_color.data) v = gaussian(rng);

  Var sigma_eps = density_flow_.forward(ad::constant(u_sigma), mean.h_sigma).first;
  Var c_eps = color_flow_.forward(ad::constant(u_color), mean.h_color).first;
  Var sigma = ad::relu(ad::add(mean.sigma_mu, sigma_eps));
  Var c = clamp01(ad::add(mean.c_mu, c_eps));
  return {mean.sigma_mu, mean.c_mu, sigma_eps, c_eps, sigma, c};
}

std::vector<FieldSampleBatch> RadianceField::sample_field(const Tensor& xs, const Tensor& dirs,
                                                          int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_field: draw count must be >= 1");
  MeanOutput mean = eval_mean(xs, dirs);
  std::vector<FieldSampleBatch> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(sample(mean, rng));
  return out;
}

void RadianceField::collect(std::vector<ad::Parameter*>& out) {
  mean_.collect(out);
  cond_sigma_.collect(out);
  cond_color_.collect(out);
  density_flow_.collect(out);
  color_flow_.collect(out);
}

}  // namespace fgrf
