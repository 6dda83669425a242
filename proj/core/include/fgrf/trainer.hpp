#pragma once

#include <memory>
#include <string>

#include "fgrf/adversarial.hpp"
#include "fgrf/checkpoint.hpp"
#include "fgrf/losses.hpp"
#include "fgrf/renderer.hpp"
#include "fgrf/scenes.hpp"
#include "fgrf/uncertainty.hpp"

namespace fgrf {

/// Full training configuration. Serialized as key=value text ('#' comments);
/// the snapshot travels inside every checkpoint so downstream commands can
/// rebuild the model without the original file.
struct TrainConfig {
  std::string dataset;
  std::string out_dir = "out";

  int64_t total_steps = 2000;
  int batch = 1;        // patches per step
  int patch_side = 8;   // K, pixels per patch edge
  int samples_per_ray = 16;

  // flow sample count schedule, linear and non-decreasing across the run
  int m_start = 8;
  int m_end = 16;

  LossWeights weights;
  double s_start = 1.0;  // patch scale at step 0
  double s_end = 0.25;
  double scale_decay_frac = 0.5;  // anneal over this fraction of total_steps

  double lr_g = 1e-3;
  double lr_d = 2e-4;
  double sigma_depth = 0.1;
  double near = 0.1;
  double far = 2.5;

  uint64_t seed = 1;
  int64_t checkpoint_every = 0;  // 0 = final checkpoint only

  // ablation switches
  bool freeze_mean = false;   // keep the mean branch at init, skip its updates
  bool depth_l2 = false;      // plain L2 depth loss instead of cross entropy
  bool adv_l2 = false;        // swap the GAN objective for a patch L2 term

  FieldConfig field;
  DiscriminatorConfig disc;

  void validate() const;
  std::string to_text() const;

  /// Current flow sample count; m_start at step 0, m_end at the last step.
  int m_at(int64_t step) const;
  double scale_at(int64_t step) const;
};

TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::string& path);

struct TrainResult {
  int64_t steps = 0;
  double first_det = 0;  // L_det at step 0
  double final_det = 0;  // L_det at the last step
  std::string final_checkpoint;
  std::string metrics_csv;
};

/// The full min-max loop: per step, sample B patches at the current scale,
/// render the deterministic patch for the reconstruction (and depth) losses,
/// draw M stochastic renders per patch, update the discriminator on
/// real-vs-fake, then the generator on the combined objective. Metrics CSV
/// row per step; emergency checkpoint + abort naming the step on any
/// non-finite loss.
TrainResult train(const TrainConfig& cfg);

/// Model rebuilt from a checkpoint's config snapshot and parameter blobs.
struct LoadedModel {
  TrainConfig cfg;
  std::unique_ptr<RadianceField> field;
  Checkpoint ckpt;

  RenderParams render_params() const;
};

LoadedModel load_model(const std::string& checkpoint_path);

// --- command implementations behind the CLI ---------------------------------

/// Mean render, or M stochastic renders with --stochastic. Files are written
/// under out_dir as render_mean.png / render_XXX.png plus depth grids.
void render_command(const std::string& checkpoint, int pose, bool stochastic, int samples,
                    const std::string& out_dir);

/// Uncertainty maps for one pose: mean image, min-max normalized variance
/// heat images, and the raw float32 grids.
void uncertainty_command(const std::string& checkpoint, int pose, int samples,
                         const std::string& out_dir);

/// Per-view + mean PSNR/SSIM (and AUSE when samples >= 2) against the
/// dataset's ground truth, written as CSV.
void eval_command(const std::string& checkpoint, const std::string& dataset,
                  const std::string& split_file, int samples, const std::string& out_csv);

/// Oracle-render a dataset from a scene description file.
void make_scene_command(const std::string& scene_path, int views, int width, int height,
                        const std::string& out_dir, ViewDistribution dist, uint64_t seed);

}  // namespace fgrf
