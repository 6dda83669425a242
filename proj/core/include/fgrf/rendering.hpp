#pragma once

#include <array>

#include "fgrf/autodiff.hpp"

namespace fgrf {

/// Per-ray sample skeleton: strictly increasing depths and positive
/// intervals, batched [R,N].
struct RaySampleGrid {
  Tensor t;      // [R,N]
  Tensor delta;  // [R,N]
};

struct CompositeWeights {
  ad::Var w;      // [R,N], w_i = T_i * alpha_i
  ad::Var t_end;  // [R,1], residual transmittance; sum(w) + t_end = 1
};

/// sigma [R,N] (>= 0), delta [R,N] (> 0). Throws on negative density.
CompositeWeights transmittance_weights(const ad::Var& sigma, const ad::Var& delta);

/// colors [R,N,3] -> [R,3]; escaped transmittance picks up the background.
ad::Var composite_color(const CompositeWeights& cw, const ad::Var& colors,
                        const std::array<double, 3>& background);

/// Unnormalized expected depth sum(w_i * t_i) -> [R,1].
ad::Var composite_depth(const CompositeWeights& cw, const Tensor& t);

/// Diagnostic variant: sum(w_i * t_i) / max(sum(w_i), eps).
ad::Var composite_depth_normalized(const CompositeWeights& cw, const Tensor& t,
                                   double eps = 1e-12);

// Plain-tensor conveniences (no gradients needed by callers).
struct CompositeResult {
  Tensor w;
  Tensor t_end;
  Tensor color;  // [R,3]
  Tensor depth;  // [R,1]
};
CompositeResult composite(const Tensor& sigma, const Tensor& delta, const Tensor& colors,
                          const Tensor& t, const std::array<double, 3>& background);

}  // namespace fgrf
