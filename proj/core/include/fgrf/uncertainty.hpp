#pragma once

#include "fgrf/renderer.hpp"

namespace fgrf {

struct PointUncertainty {
  double density_var = 0;
  std::array<double, 3> color_var = {0, 0, 0};
};

/// Unbiased sample variance of the field at one point over S draws.
/// clamped=false measures the pre-clamp combined values (test hook).
PointUncertainty point_uncertainty(RadianceField& field, const Vec3& x, const Vec3& d, int S,
                                   Rng& rng, bool clamped = true);

struct UncertaintyMap {
  Image mean_color;
  std::array<FloatGrid, 3> color_var;  // unbiased, per channel
  FloatGrid color_var_mean;            // mean over channels
  FloatGrid mean_depth;
  FloatGrid depth_var;
  int samples = 0;
};

/// M independent stochastic renders; per-pixel unbiased variance.
UncertaintyMap render_uncertainty(RadianceField& field, const Camera& cam,
                                  const RenderParams& params, int M, uint64_t seed);

// --- evaluation metrics -----------------------------------------------------

enum class ErrorMetric { Rmse, Mae };

struct SparsificationCurve {
  std::vector<double> fractions;  // 0.00 .. 0.99, step 0.01
  std::vector<double> curve;      // trim by predicted uncertainty
  std::vector<double> oracle;     // trim by true error
  double ause = 0;
};

/// Sort pixels by uncertainty (descending, ties by index), repeatedly remove
/// the top 1%, and report the remaining error; the oracle trims by the true
/// error instead. AUSE is the rectangle-rule area between the two curves.
SparsificationCurve ause(const std::vector<double>& error, const std::vector<double>& uncertainty,
                         ErrorMetric metric);

/// CSV schema: header "fraction,curve,oracle", 100 rows, 6-decimal fixed point.
void write_curve_csv(const SparsificationCurve& c, const std::string& path);

/// 10*log10(1/MSE) for images in [0,1]; +inf when identical.
double psnr(const Image& img, const Image& reference);

/// Mean local SSIM on luma (0.299/0.587/0.114), 11x11 Gaussian window
/// sigma=1.5, C1=0.01^2, C2=0.03^2.
double ssim(const Image& img, const Image& reference);

/// Per-pixel absolute color error averaged over channels.
std::vector<double> pixel_abs_error(const Image& img, const Image& reference);

}  // namespace fgrf
