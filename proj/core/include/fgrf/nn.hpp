#pragma once

#include <string>
#include <vector>

#include "fgrf/autodiff.hpp"
#include "fgrf/rng.hpp"

namespace fgrf::nn {

/// Fully connected layer, weight stored [in, out] so forward is x @ W + b.
struct Linear {
  ad::Parameter W;
  ad::Parameter b;
  // When false the bias stays at its set value (zero unless assigned directly)
  // and is excluded from collect(), so it is neither optimized nor
  // checkpointed. Field networks freeze biases to keep all learned structure
  // in spatially local encoder features: positions the training rays never
  // touched then fall back to the prior instead of inheriting a global shift.
  bool train_bias = true;

  Linear() = default;
  Linear(const std::string& name, int64_t in, int64_t out, Rng& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(in));
    Tensor w = Tensor::zeros({in, out});
    for (auto& v : w.data) v = uniform(rng, -s, s);
    W = ad::Parameter(name + ".W", std::move(w));
    b = ad::Parameter(name + ".b", Tensor::zeros({1, out}));
  }

  /// x [P,in] -> [P,out]
  ad::Var operator()(const ad::Var& x) { return ad::add(ad::matmul(x, ad::param(W)), ad::param(b)); }

  /// Zeroing weight and bias makes downstream flow steps start at identity.
  void zero_init() {
    std::fill(W.value.data.begin(), W.value.data.end(), 0.0);
    std::fill(b.value.data.begin(), b.value.data.end(), 0.0);
  }

  void collect(std::vector<ad::Parameter*>& out) {
    out.push_back(&W);
    if (train_bias) out.push_back(&b);
  }
};

}  // namespace fgrf::nn
