#include "fgrf/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace fgrf {

PointUncertainty point_uncertainty(RadianceField& field, const Vec3& x, const Vec3& d, int S,
                                   Rng& rng, bool clamped) {
  if (S < 2) throw std::invalid_argument("point_uncertainty: need S >= 2");
  Tensor xs({1, 3}, {x[0], x[1], x[2]});
  Tensor ds({1, 3}, {d[0], d[1], d[2]});
  MeanOutput mean = field.eval_mean(xs, ds);
  const double sigma_mu = mean.sigma_mu->value[0];
  const double c_mu[3] = {mean.c_mu->value[0], mean.c_mu->value[1], mean.c_mu->value[2]};

  // batch the S draws: tile the conditioning feature across rows
  const int64_t F = mean.h_sigma->value.shape[1];
  Tensor hs = Tensor::zeros({S, F});
  Tensor hc = Tensor::zeros({S, F});
  for (int64_t i = 0; i < S; ++i)
    for (int64_t j = 0; j < F; ++j) {
      hs[i * F + j] = mean.h_sigma->value[j];
      hc[i * F + j] = mean.h_color->value[j];
    }
  Tensor u_sigma = Tensor::zeros({S, 1});
  Tensor u_color = Tensor::zeros({S, 3});
  for (auto& v : u_sigma.data) v = gaussian(rng);
  for (auto& v : u_color.data) v = gaussian(rng);

  Tensor eps_s = field.density_flow().forward(ad::constant(u_sigma), ad::constant(hs)).first->value;
  Tensor eps_c = field.color_flow().forward(ad::constant(u_color), ad::constant(hc)).first->value;

  auto variance = [S](auto value_fn) {
    double m = 0;
    for (int i = 0; i < S; ++i) m += value_fn(i);
    m /= S;
    double acc = 0;
    for (int i = 0; i < S; ++i) {
      const double dv = value_fn(i) - m;
      acc += dv * dv;
    }
    return acc / (S - 1);
  };

  PointUncertainty out;
  out.density_var = variance([&](int i) {
    const double v = sigma_mu + eps_s[i];
    return clamped ? std::max(0.0, v) : v;
  });
  for (int c = 0; c < 3; ++c)
    out.color_var[static_cast<size_t>(c)] = variance([&](int i) {
      const double v = c_mu[c] + eps_c[i * 3 + c];
      return clamped ? std::min(std::max(v, 0.0), 1.0) : v;
    });
  return out;
}

UncertaintyMap render_uncertainty(RadianceField& field, const Camera& cam,
                                  const RenderParams& params, int M, uint64_t seed) {
  if (M < 2) throw std::invalid_argument("render_uncertainty: need M >= 2");
  const int W = cam.intr.width, H = cam.intr.height;
  UncertaintyMap map;
  map.samples = M;
  map.mean_color = Image(W, H);
  for (auto& g : map.color_var) g = FloatGrid(W, H);
  map.color_var_mean = FloatGrid(W, H);
  map.mean_depth = FloatGrid(W, H);
  map.depth_var = FloatGrid(W, H);

  const size_t px = map.mean_color.pixels();
  std::vector<double> sum_c(px * 3, 0.0), sumsq_c(px * 3, 0.0), sum_d(px, 0.0), sumsq_d(px, 0.0);
  for (int m = 0; m < M; ++m) {
    FloatGrid depth;
    // one quadrature grid shared by all M draws: the per-pixel spread then
    // measures field stochasticity, not stratified-jitter noise
    Image img = render_stochastic(field, cam, params, derive_seed(seed, static_cast<uint64_t>(m)),
                                  &depth, seed);
    for (size_t i = 0; i < px * 3; ++i) {
      sum_c[i] += img.rgb[i];
      sumsq_c[i] += img.rgb[i] * img.rgb[i];
    }
    for (size_t i = 0; i < px; ++i) {
      sum_d[i] += depth.v[i];
      sumsq_d[i] += depth.v[i] * depth.v[i];
    }
  }
  auto unbiased = [M](double s, double ss) {
    const double var = (ss - s * s / M) / (M - 1);
    return std::max(var, 0.0);
  };
  for (size_t i = 0; i < px; ++i) {
    double acc = 0;
    for (int c = 0; c < 3; ++c) {
      map.mean_color.rgb[i * 3 + c] = sum_c[i * 3 + c] / M;
      const double var = unbiased(sum_c[i * 3 + c], sumsq_c[i * 3 + c]);
      map.color_var[static_cast<size_t>(c)].v[i] = var;
      acc += var;
    }
    map.color_var_mean.v[i] = acc / 3.0;
    map.mean_depth.v[i] = sum_d[i] / M;
    map.depth_var.v[i] = unbiased(sum_d[i], sumsq_d[i]);
  }
  return map;
}

namespace {

std::vector<size_t> order_desc(const std::vector<double>& values) {
  std::vector<size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](size_t a, size_t b) { return values[a] > values[b]; });
  return idx;
}

// remaining error after removing the top `removed` pixels of `order`
double remaining_error(const std::vector<double>& error, const std::vector<size_t>& order,
                       size_t removed, ErrorMetric metric) {
  const size_t n = error.size();
  double acc = 0;
  for (size_t i = removed; i < n; ++i) {
    const double e = error[order[i]];
    acc += metric == ErrorMetric::Rmse ? e * e : e;
  }
  const double m = acc / static_cast<double>(n - removed);
  return metric == ErrorMetric::Rmse ? std::sqrt(m) : m;
}

}  // namespace

SparsificationCurve ause(const std::vector<double>& error, const std::vector<double>& uncertainty,
                         ErrorMetric metric) {
  if (error.size() != uncertainty.size())
    throw std::invalid_argument("ause: error and uncertainty maps differ in size");
  if (error.size() < 100) throw std::invalid_argument("ause: need at least 100 pixels");
  const size_t n = error.size();
  auto by_unc = order_desc(uncertainty);
  auto by_err = order_desc(error);

  SparsificationCurve out;
  for (int k = 0; k < 100; ++k) {
    const size_t removed = n * static_cast<size_t>(k) / 100;
    out.fractions.push_back(k / 100.0);
    out.curve.push_back(remaining_error(error, by_unc, removed, metric));
    out.oracle.push_back(remaining_error(error, by_err, removed, metric));
    out.ause += (out.curve.back() - out.oracle.back()) * 0.01;
  }
  return out;
}

void write_curve_csv(const SparsificationCurve& c, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "fraction,curve,oracle\n";
  char buf[96];
  for (size_t i = 0; i < c.fractions.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f\n", c.fractions[i], c.curve[i], c.oracle[i]);
    f << buf;
  }
}

double psnr(const Image& img, const Image& reference) {
  if (img.width != reference.width || img.height != reference.height)
    throw std::invalid_argument("psnr: image sizes differ");
  double mse = 0;
  for (size_t i = 0; i < img.rgb.size(); ++i) {
    const double d = img.rgb[i] - reference.rgb[i];
    mse += d * d;
  }
  mse /= static_cast<double>(img.rgb.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& img, const Image& reference) {
  if (img.width != reference.width || img.height != reference.height)
    throw std::invalid_argument("ssim: image sizes differ");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  const int W = img.width, H = img.height;
  if (W < kWin || H < kWin) throw std::invalid_argument("ssim: image smaller than 11x11 window");

  auto luma = [](const Image& im, int x, int y) {
    return 0.299 * im.at(x, y, 0) + 0.587 * im.at(x, y, 1) + 0.114 * im.at(x, y, 2);
  };
  double kernel[kWin];
  double ksum = 0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - (kWin - 1) / 2.0;
    kernel[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    ksum += kernel[i];
  }
  for (auto& k : kernel) k /= ksum;

  double total = 0;
  int64_t count = 0;
  for (int y = 0; y + kWin <= H; ++y)
    for (int x = 0; x + kWin <= W; ++x) {
      double mu_a = 0, mu_b = 0, sa = 0, sb = 0, sab = 0;
      for (int j = 0; j < kWin; ++j)
        for (int i = 0; i < kWin; ++i) {
          const double w = kernel[i] * kernel[j];
          const double a = luma(img, x + i, y + j);
          const double b = luma(reference, x + i, y + j);
          mu_a += w * a;
          mu_b += w * b;
          sa += w * a * a;
          sb += w * b * b;
          sab += w * a * b;
        }
      const double var_a = sa - mu_a * mu_a;
      const double var_b = sb - mu_b * mu_b;
      const double cov = sab - mu_a * mu_b;
      const double s = ((2 * mu_a * mu_b + kC1) * (2 * cov + kC2)) /
                       ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
      total += s;
      ++count;
    }
  return total / static_cast<double>(count);
}

std::vector<double> pixel_abs_error(const Image& img, const Image& reference) {
  if (img.width != reference.width || img.height != reference.height)
    throw std::invalid_argument("pixel_abs_error: image sizes differ");
  std::vector<double> out(img.pixels());
  for (size_t i = 0; i < out.size(); ++i) {
    double acc = 0;
    for (int c = 0; c < 3; ++c) acc += std::abs(img.rgb[i * 3 + c] - reference.rgb[i * 3 + c]);
    out[i] = acc / 3.0;
  }
  return out;
}

}  // namespace fgrf
