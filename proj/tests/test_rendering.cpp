#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fgrf/rendering.hpp"
#include "fgrf/rng.hpp"
#include "fgrf/sampling.hpp"

using namespace fgrf;
using ad::Var;

namespace {

/// Straight-line compositing oracle, one ray.
struct NaiveComposite {
  std::vector<double> w;
  double t_end = 1.0;
};

NaiveComposite naive(const std::vector<double>& sigma, const std::vector<double>& delta) {
  NaiveComposite out;
  double trans = 1.0;
  for (size_t i = 0; i < sigma.size(); ++i) {
    const double alpha = 1.0 - std::exp(-sigma[i] * delta[i]);
    out.w.push_back(trans * alpha);
    trans *= 1.0 - alpha;
  }
  out.t_end = trans;
  return out;
}

}  // namespace

TEST_CASE("vacuum: zero weights, unit escape") {
  Tensor sigma = Tensor::zeros({1, 8});
  Tensor delta = Tensor::full({1, 8}, 0.25);
  auto cw = transmittance_weights(ad::constant(sigma), ad::constant(delta));
  for (int i = 0; i < 8; ++i) CHECK(cw.w->value[i] == 0.0);
  CHECK(cw.t_end->value[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("opaque wall: first sample takes all the weight") {
  Tensor sigma({1, 4}, {500.0, 1.0, 1.0, 1.0});
  Tensor delta = Tensor::full({1, 4}, 0.1);
  auto cw = transmittance_weights(ad::constant(sigma), ad::constant(delta));
  CHECK(cw.w->value[0] == doctest::Approx(1.0).epsilon(1e-9));
  for (int i = 1; i < 4; ++i) CHECK(cw.w->value[i] < 1e-9);
  CHECK(cw.t_end->value[0] < 1e-9);
}

TEST_CASE("random batches match the naive oracle; partition holds to 1e-12") {
  Rng rng = make_stream(201);
  for (int trial = 0; trial < 50; ++trial) {
    const int64_t N = 16;
    Tensor sigma = Tensor::zeros({2, N});
    Tensor delta = Tensor::zeros({2, N});
    for (auto& v : sigma.data) v = uniform(rng, 0, 5);
    for (auto& v : delta.data) v = uniform(rng, 0.01, 0.5);
    auto cw = transmittance_weights(ad::constant(sigma), ad::constant(delta));
    for (int64_t r = 0; r < 2; ++r) {
      std::vector<double> s(sigma.data.begin() + r * N, sigma.data.begin() + (r + 1) * N);
      std::vector<double> d(delta.data.begin() + r * N, delta.data.begin() + (r + 1) * N);
      auto oracle = naive(s, d);
      double total = cw.t_end->value[r];
      for (int64_t i = 0; i < N; ++i) {
        CHECK(cw.w->value[r * N + i] == doctest::Approx(oracle.w[static_cast<size_t>(i)]).epsilon(1e-12));
        total += cw.w->value[r * N + i];
      }
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("negative density rejected") {
  Tensor sigma({1, 2}, {1.0, -0.1});
  Tensor delta = Tensor::full({1, 2}, 0.1);
  CHECK_THROWS_AS(transmittance_weights(ad::constant(sigma), ad::constant(delta)),
                  std::invalid_argument);
}

TEST_CASE("composite_color basics") {
  SUBCASE("vacuum returns the background exactly") {
    Tensor sigma = Tensor::zeros({1, 4});
    Tensor delta = Tensor::full({1, 4}, 0.5);
    auto cw = transmittance_weights(ad::constant(sigma), ad::constant(delta));
    Var colors = ad::constant(Tensor::full({1, 4, 3}, 0.7));
    Var out = composite_color(cw, colors, {0.1, 0.2, 0.3});
    CHECK(out->value[0] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(out->value[1] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(out->value[2] == doctest::Approx(0.3).epsilon(1e-15));
  }
  SUBCASE("single opaque red sample") {
    Tensor sigma({1, 1}, {1e4});
    Tensor delta({1, 1}, {1.0});
    auto cw = transmittance_weights(ad::constant(sigma), ad::constant(delta));
    Tensor c({1, 1, 3}, {1.0, 0.0, 0.0});
    Var out = composite_color(cw, ad::constant(c), {0, 0, 0});
    CHECK(out->value[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(out->value[1]) < 1e-10);
  }
}

TEST_CASE("homogeneous medium converges to the closed form of the rendering integral") {
  // sigma=1 over [0,2]: each channel -> c * (1 - e^-2)
  const double target = 1.0 - std::exp(-2.0);
  const double c[3] = {0.3, 0.6, 0.9};
  Rng rng = make_stream(202);
  double prev_err = 1e9;
  int inversions = 0;
  for (int N : {64, 256, 1024, 4096}) {
    RaySampleGrid grid = stratified_grid(1, 1e-9, 2.0, N, rng);
    Tensor sigma = Tensor::full({1, N}, 1.0);
    Tensor colors = Tensor::zeros({1, N, 3});
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < 3; ++k) colors[i * 3 + k] = c[k];
    auto cw = transmittance_weights(ad::constant(sigma), ad::constant(grid.delta));
    Var out = composite_color(cw, ad::constant(colors), {0, 0, 0});
    double err = 0;
    for (int k = 0; k < 3; ++k)
      err = std::max(err, std::abs(out->value[k] - c[k] * target) / (c[k] * target));
    if (N == 4096) CHECK(err < 1e-3);
    if (err > prev_err) ++inversions;
    prev_err = err;
  }
  CHECK(inversions <= 1);  // monotone within stochastic noise
}

TEST_CASE("composite_depth") {
  SUBCASE("single opaque sample at t=1.5") {
    Tensor sigma({1, 1}, {1e6});
    Tensor delta({1, 1}, {1.0});
    auto cw = transmittance_weights(ad::constant(sigma), ad::constant(delta));
    Var d = composite_depth(cw, Tensor({1, 1}, {1.5}));
    CHECK(d->value[0] == doctest::Approx(1.5).epsilon(1e-9));
  }
  SUBCASE("vacuum depth is zero") {
    Tensor sigma = Tensor::zeros({1, 4});
    Tensor delta = Tensor::full({1, 4}, 0.5);
    auto cw = transmittance_weights(ad::constant(sigma), ad::constant(delta));
    Var d = composite_depth(cw, Tensor({1, 4}, {0.25, 0.75, 1.25, 1.75}));
    CHECK(d->value[0] == 0.0);
  }
  SUBCASE("opaque slab starting at t=1: depth in [1, 1+3/sigma], tightening with sigma") {
    Rng rng = make_stream(203);
    double prev_gap = 1e9;
    for (double s : {5.0, 20.0, 100.0}) {
      const int N = 2048;
      RaySampleGrid grid = stratified_grid(1, 1e-9, 2.0, N, rng);
      Tensor sigma = Tensor::zeros({1, N});
      for (int i = 0; i < N; ++i)
        if (grid.t[i] >= 1.0) sigma[i] = s;
      auto cw = transmittance_weights(ad::constant(sigma), ad::constant(grid.delta));
      const double d = composite_depth(cw, grid.t)->value[0];
      CHECK(d >= 1.0 - 1e-3);
      CHECK(d <= 1.0 + 3.0 / s);
      CHECK(d - 1.0 < prev_gap + 1e-6);
      prev_gap = d - 1.0;
    }
  }
}

TEST_CASE("normalized depth variant divides by the weight mass") {
  Tensor sigma({1, 2}, {0.5, 0.0});
  Tensor delta = Tensor::full({1, 2}, 0.4);
  Tensor t({1, 2}, {0.2, 0.6});
  auto cw = transmittance_weights(ad::constant(sigma), ad::constant(delta));
  const double mass = cw.w->value[0] + cw.w->value[1];
  Var dn = composite_depth_normalized(cw, t);
  Var d = composite_depth(cw, t);
  CHECK(dn->value[0] == doctest::Approx(d->value[0] / mass).epsilon(1e-12));
}

TEST_CASE("monotonicity: raising a density raises its weight and lowers escape") {
  Rng rng = make_stream(204);
  Tensor sigma = Tensor::zeros({1, 8});
  Tensor delta = Tensor::zeros({1, 8});
  for (auto& v : sigma.data) v = uniform(rng, 0, 3);
  for (auto& v : delta.data) v = uniform(rng, 0.05, 0.3);
  auto base = transmittance_weights(ad::constant(sigma), ad::constant(delta));
  for (int i = 0; i < 8; ++i) {
    Tensor bumped = sigma;
    bumped[i] += 0.5;
    auto up = transmittance_weights(ad::constant(bumped), ad::constant(delta));
    CHECK(up.w->value[i] >= base.w->value[i] - 1e-12);
    CHECK(up.t_end->value[0] <= base.t_end->value[0] + 1e-12);
  }
}

TEST_CASE("gradients of composite_color w.r.t. density pass grad_check") {
  Rng rng = make_stream(205);
  Tensor sigma = Tensor::zeros({2, 6});
  for (auto& v : sigma.data) v = uniform(rng, 0.1, 3);
  Tensor delta = Tensor::zeros({2, 6});
  for (auto& v : delta.data) v = uniform(rng, 0.05, 0.3);
  Tensor colors = Tensor::zeros({2, 6, 3});
  for (auto& v : colors.data) v = uniform(rng, 0, 1);
  auto res = ad::grad_check(
      [&](const Var& s) {
        auto cw = transmittance_weights(s, ad::constant(delta));
        return ad::sum_all(composite_color(cw, ad::constant(colors), {0.2, 0.2, 0.2}));
      },
      sigma);
  CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("plain-tensor composite agrees with the graph version") {
  Rng rng = make_stream(206);
  Tensor sigma = Tensor::zeros({1, 5});
  for (auto& v : sigma.data) v = uniform(rng, 0, 2);
  Tensor delta = Tensor::full({1, 5}, 0.3);
  Tensor colors = Tensor::zeros({1, 5, 3});
  for (auto& v : colors.data) v = uniform(rng, 0, 1);
  Tensor t({1, 5}, {0.1, 0.4, 0.7, 1.0, 1.3});
  auto plain = composite(sigma, delta, colors, t, {0, 0, 0});
  auto cw = transmittance_weights(ad::constant(sigma), ad::constant(delta));
  Var color = composite_color(cw, ad::constant(colors), {0, 0, 0});
  for (int k = 0; k < 3; ++k) CHECK(plain.color[k] == doctest::Approx(color->value[k]).epsilon(1e-14));
  CHECK(plain.depth[0] == doctest::Approx(composite_depth(cw, t)->value[0]).epsilon(1e-14));
}
