#include "fgrf/adversarial.hpp"

#include <cmath>

namespace fgrf {

using ad::Var;

namespace {

double vec_norm(const Tensor& t) {
  double s = 0;
  for (double x : t.data) s += x * x;
  return std::sqrt(s);
}

void matvec(const Tensor& w, const Tensor& x, Tensor& out) {  // w [m,n] * x [n]
  const int64_t m = w.shape[0], n = w.shape[1];
  for (int64_t i = 0; i < m; ++i) {
    double s = 0;
    for (int64_t j = 0; j < n; ++j) s += w.data[static_cast<size_t>(i * n + j)] * x.data[static_cast<size_t>(j)];
    out.data[static_cast<size_t>(i)] = s;
  }
}

void mat_t_vec(const Tensor& w, const Tensor& x, Tensor& out) {  // w^T [n,m] * x [m]
  const int64_t m = w.shape[0], n = w.shape[1];
  std::fill(out.data.begin(), out.data.end(), 0.0);
  for (int64_t i = 0; i < m; ++i) {
    const double xi = x.data[static_cast<size_t>(i)];
    for (int64_t j = 0; j < n; ++j) out.data[static_cast<size_t>(j)] += w.data[static_cast<size_t>(i * n + j)] * xi;
  }
}

Tensor as_2d(const Tensor& w) {
  const int64_t out = w.shape[0];
  return Tensor({out, w.numel() / out}, w.data);
}

double estimate_sigma(const Tensor& w2d, Tensor& u, Tensor& v, int iters) {
  double sigma = 0;
  for (int i = 0; i < iters; ++i) sigma = spectral_power_iteration(w2d, u, v);
  return sigma;
}

}  // namespace

double spectral_power_iteration(const Tensor& w2d, Tensor& u, Tensor& v) {
  if (w2d.rank() != 2) throw std::invalid_argument("spectral_normalize: weight must be 2-D");
  const int64_t m = w2d.shape[0], n = w2d.shape[1];
  if (u.numel() != m) u = Tensor::full({m}, 1.0 / std::sqrt(static_cast<double>(m)));
  if (v.numel() != n) v = Tensor::full({n}, 1.0 / std::sqrt(static_cast<double>(n)));
  mat_t_vec(w2d, u, v);
  double nv = vec_norm(v);
  if (nv == 0) return 0.0;
  for (auto& x : v.data) x /= nv;
  matvec(w2d, v, u);
  double nu = vec_norm(u);
  if (nu == 0) return 0.0;
  for (auto& x : u.data) x /= nu;
  // sigma = u^T W v
  double sigma = 0;
  for (int64_t i = 0; i < m; ++i) {
    double s = 0;
    for (int64_t j = 0; j < n; ++j) s += w2d.data[static_cast<size_t>(i * n + j)] * v.data[static_cast<size_t>(j)];
    sigma += u.data[static_cast<size_t>(i)] * s;
  }
  return sigma;
}

Tensor spectral_normalize(const Tensor& w2d, Tensor& u, Tensor& v) {
  const double sigma = spectral_power_iteration(w2d, u, v);
  if (sigma == 0.0) return w2d;  // zero weight: skip
  Tensor out = w2d;
  for (auto& x : out.data) x /= sigma;
  return out;
}

Discriminator::Discriminator(const DiscriminatorConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg_.widths.empty()) throw std::invalid_argument("discriminator: need at least one conv block");
  int cin = 4;  // RGB + scale channel
  int hw = cfg_.patch_side;
  for (size_t i = 0; i < cfg_.widths.size(); ++i) {
    const int cout = cfg_.widths[i];
    Tensor w = Tensor::zeros({cout, cin, 3, 3});
    const double s = 1.0 / std::sqrt(static_cast<double>(cin) * 9.0);
    for (auto& x : w.data) x = uniform(rng, -s, s);
    ConvLayer layer;
    layer.w = ad::Parameter("disc.conv" + std::to_string(i) + ".w", std::move(w));
    layer.b = ad::Parameter("disc.conv" + std::to_string(i) + ".b", Tensor::zeros({cout}));
    convs_.push_back(std::move(layer));
    if (i > 0) {
      Norm nm;
      nm.gamma = ad::Parameter("disc.norm" + std::to_string(i) + ".gamma", Tensor::full({cout}, 1.0));
      nm.beta = ad::Parameter("disc.norm" + std::to_string(i) + ".beta", Tensor::zeros({cout}));
      norms_.push_back(std::move(nm));
    }
    cin = cout;
    hw = (hw + 2 - 3) / 2 + 1;  // stride 2, pad 1
    if (hw < 1) hw = 1;
  }
  head_in_ = static_cast<int64_t>(cin) * hw * hw;
  head_ = nn::Linear("disc.head", head_in_, 1, rng);
  update_spectral();
}

Var instance_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const auto& s = x->value.shape;
  if (s.size() != 4) throw std::invalid_argument("instance_norm: expected [B,C,H,W]");
  const int64_t B = s[0], C = s[1], H = s[2], W = s[3];
  Var xr = ad::reshape(x, {B * C, H * W});
  Var m = ad::mean_axis(xr, 1, true);
  Var cen = ad::sub(xr, m);
  Var var = ad::mean_axis(ad::mul(cen, cen), 1, true);
  Var y = ad::div(cen, ad::sqrt_(ad::add_scalar(var, eps)));
  y = ad::reshape(y, {B, C, H, W});
  Var g4 = ad::reshape(gamma, {1, C, 1, 1});
  Var b4 = ad::reshape(beta, {1, C, 1, 1});
  return ad::add(ad::mul(y, g4), b4);
}

Var Discriminator::conv_block(const Var& x, size_t i) {
  ConvLayer& layer = convs_[i];
  Var w = ad::param(layer.w);
  if (layer.sigma_hat != 0.0) w = ad::mul_scalar(w, 1.0 / layer.sigma_hat);
  Var y = ad::conv2d(x, w, ad::param(layer.b), 2, 1);
  // instance norm is skipped on the first block and on 1x1 spatial maps
  if (i > 0 && y->value.shape[2] * y->value.shape[3] > 1) {
    Norm& nm = norms_[i - 1];
    y = instance_norm(y, ad::param(nm.gamma), ad::param(nm.beta));
  }
  return ad::leaky_relu(y, cfg_.leaky_slope);
}

Var Discriminator::forward(const Var& patches, double s) {
  const auto& sh = patches->value.shape;
  if (sh.size() != 4 || sh[1] != 3 || sh[2] != cfg_.patch_side || sh[3] != cfg_.patch_side)
    throw std::invalid_argument("discriminator: expected patches [B,3," +
                                std::to_string(cfg_.patch_side) + "," +
                                std::to_string(cfg_.patch_side) + "], got " +
                                Tensor::shape_str(sh));
  const int64_t B = sh[0];
  Tensor scale_ch = Tensor::full({B, 1, sh[2], sh[3]}, s);
  Var x = ad::concat({patches, ad::constant(scale_ch)}, 1);
  for (size_t i = 0; i < convs_.size(); ++i) x = conv_block(x, i);
  x = ad::reshape(x, {B, head_in_});
  Var hw = ad::param(head_.W);
  if (head_sigma_ != 0.0) hw = ad::mul_scalar(hw, 1.0 / head_sigma_);
  return ad::add(ad::matmul(x, hw), ad::param(head_.b));
}

double Discriminator::discriminate(const Tensor& patch_hwc, double s) {
  const int K = cfg_.patch_side;
  if (patch_hwc.numel() != static_cast<int64_t>(K) * K * 3)
    throw std::invalid_argument("discriminate: patch must be " + std::to_string(K) + "x" +
                                std::to_string(K) + "x3, got " + patch_hwc.shape_str());
  for (double v : patch_hwc.data)
    if (v < 0.0 || v > 1.0)
      throw std::invalid_argument("discriminate: patch values must lie in [0,1]");
  Tensor chw = Tensor::zeros({1, 3, K, K});
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j)
      for (int c = 0; c < 3; ++c)
        chw.data[static_cast<size_t>((c * K + i) * K + j)] =
            patch_hwc.data[static_cast<size_t>((i * K + j) * 3 + c)];
  return forward(ad::constant(chw), s)->value[0];
}

void Discriminator::update_spectral() {
  for (auto& layer : convs_)
    layer.sigma_hat = estimate_sigma(as_2d(layer.w.value), layer.u, layer.v, cfg_.spectral_iters);
  // head weight is [in,1]; view it as [1,in] for the power iteration
  Tensor wt({1, head_in_}, head_.W.value.data);
  head_sigma_ = estimate_sigma(wt, head_u_, head_v_, cfg_.spectral_iters);
}

std::vector<double> Discriminator::effective_conv_spectral_norms(int iters) const {
  std::vector<double> out;
  for (const auto& layer : convs_) {
    Tensor w2d = as_2d(layer.w.value);
    if (layer.sigma_hat != 0.0)
      for (auto& x : w2d.data) x /= layer.sigma_hat;
    Tensor u, v;
    out.push_back(estimate_sigma(w2d, u, v, iters));
  }
  return out;
}

void Discriminator::collect(std::vector<ad::Parameter*>& out) {
  for (auto& layer : convs_) {
    out.push_back(&layer.w);
    out.push_back(&layer.b);
  }
  for (auto& nm : norms_) {
    out.push_back(&nm.gamma);
    out.push_back(&nm.beta);
  }
  head_.collect(out);
}

std::pair<Var, Var> gan_losses(const Var& real_logits, const Var& fake_logits) {
  for (double v : real_logits->value.data)
    if (!std::isfinite(v)) throw std::invalid_argument("gan_losses: non-finite real logit");
  for (double v : fake_logits->value.data)
    if (!std::isfinite(v)) throw std::invalid_argument("gan_losses: non-finite fake logit");
  Var d_loss = ad::add(ad::mean_all(ad::softplus(ad::neg(real_logits))),
                       ad::mean_all(ad::softplus(fake_logits)));
  Var g_loss = ad::mean_all(ad::softplus(ad::neg(fake_logits)));
  return {d_loss, g_loss};
}

std::pair<double, double> gan_loss_values(const Tensor& real_logits, const Tensor& fake_logits) {
  auto [d, g] = gan_losses(ad::constant(real_logits), ad::constant(fake_logits));
  return {d->value[0], g->value[0]};
}

}  // namespace fgrf
