#include "fgrf/rendering.hpp"

namespace fgrf {

using ad::Var;

CompositeWeights transmittance_weights(const Var& sigma, const Var& delta) {
  const Tensor& S = sigma->value;
  const Tensor& D = delta->value;
  if (S.shape != D.shape)
    throw std::invalid_argument("transmittance_weights: sigma " + S.shape_str() + " vs delta " +
                                D.shape_str());
  if (S.rank() != 2)
    throw std::invalid_argument("transmittance_weights: expected [R,N], got " + S.shape_str());
  for (double v : S.data)
    if (v < 0.0) throw std::invalid_argument("transmittance_weights: negative density " +
                                             std::to_string(v) + " (clamping happens upstream)");
  for (double v : D.data)
    if (v <= 0.0)
      throw std::invalid_argument("transmittance_weights: non-positive interval " +
                                  std::to_string(v));

  Var sd = ad::mul(sigma, delta);
  Var transmittance = ad::exp_(ad::neg(ad::cumsum_exclusive(sd)));  // T_i
  Var alpha = ad::sub(ad::constant(Tensor::scalar(1.0)), ad::exp_(ad::neg(sd)));
  Var w = ad::mul(transmittance, alpha);
  Var t_end = ad::exp_(ad::neg(ad::sum_axis(sd, 1, true)));
  return {w, t_end};
}

Var composite_color(const CompositeWeights& cw, const Var& colors,
                    const std::array<double, 3>& background) {
  const Tensor& C = colors->value;
  if (C.rank() != 3 || C.shape[2] != 3 || C.shape[0] != cw.w->value.shape[0] ||
      C.shape[1] != cw.w->value.shape[1])
    throw std::invalid_argument("composite_color: colors " + C.shape_str() +
                                " incompatible with weights " + cw.w->value.shape_str());
  const int64_t R = C.shape[0], N = C.shape[1];
  Var w3 = ad::reshape(cw.w, {R, N, 1});
  Var fg = ad::sum_axis(ad::mul(w3, colors), 1, false);  // [R,3]
  Tensor bg = Tensor::zeros({1, 3});
  bg[0] = background[0];
  bg[1] = background[1];
  bg[2] = background[2];
  return ad::add(fg, ad::mul(cw.t_end, ad::constant(bg)));
}

Var composite_depth(const CompositeWeights& cw, const Tensor& t) {
  if (t.shape != cw.w->value.shape)
    throw std::invalid_argument("composite_depth: t " + t.shape_str() + " vs weights " +
                                cw.w->value.shape_str());
  return ad::sum_axis(ad::mul(cw.w, ad::constant(t)), 1, true);
}

Var composite_depth_normalized(const CompositeWeights& cw, const Tensor& t, double eps) {
  Var num = composite_depth(cw, t);
  Var den = ad::add_scalar(ad::sum_axis(cw.w, 1, true), eps);
  return ad::div(num, den);
}

CompositeResult composite(const Tensor& sigma, const Tensor& delta, const Tensor& colors,
                          const Tensor& t, const std::array<double, 3>& background) {
  auto cw = transmittance_weights(ad::constant(sigma), ad::constant(delta));
  Tensor color = composite_color(cw, ad::constant(colors), background)->value;
  Tensor depth = composite_depth(cw, t)->value;
  return {cw.w->value, cw.t_end->value, std::move(color), std::move(depth)};
}

}  // namespace fgrf
