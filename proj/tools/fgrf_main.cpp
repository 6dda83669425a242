#include <CLI11.hpp>

#include <iostream>

#include "fgrf/trainer.hpp"

int main(int argc, char** argv) {
  CLI::App app{"adversarially trained probabilistic radiance field toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  auto* train = app.add_subcommand("train", "Run the adversarial training loop");
  train->add_option("--config", config_path, "key=value training config")->required();

  std::string ckpt, out_dir = "out";
  int pose = 0, samples = 8;
  bool stochastic = false;
  auto* render = app.add_subcommand("render", "Render a dataset pose from a checkpoint");
  render->add_option("--checkpoint", ckpt)->required();
  render->add_option("--pose", pose)->required();
  render->add_flag("--stochastic", stochastic, "emit M independent stochastic renders");
  render->add_option("--samples", samples, "M for --stochastic");
  render->add_option("--out", out_dir)->required();

  auto* unc = app.add_subcommand("uncertainty", "Per-pixel variance maps for a pose");
  unc->add_option("--checkpoint", ckpt)->required();
  unc->add_option("--pose", pose)->required();
  unc->add_option("--samples", samples)->required();
  unc->add_option("--out", out_dir)->required();

  std::string dataset, split, report;
  auto* eval = app.add_subcommand("eval", "PSNR/SSIM/AUSE report against ground truth");
  eval->add_option("--checkpoint", ckpt)->required();
  eval->add_option("--dataset", dataset)->required();
  eval->add_option("--split", split, "file of view indices; default: all views");
  eval->add_option("--samples", samples)->required();
  eval->add_option("--out", report)->required();

  std::string scene_path, size = "64x64", dist = "hemisphere";
  int views = 24;
  uint64_t seed = 1;
  auto* mk = app.add_subcommand("make-scene", "Oracle-render a synthetic dataset");
  mk->add_option("--spec", scene_path, "scene description file")->required();
  mk->add_option("--views", views)->required();
  mk->add_option("--size", size, "WxH");
  mk->add_option("--out", out_dir)->required();
  mk->add_option("--dist", dist)->check(CLI::IsMember({"sphere", "hemisphere"}));
  mk->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      fgrf::TrainResult r = fgrf::train(fgrf::load_train_config(config_path));
      std::cout << "trained " << r.steps << " steps; L_det " << r.first_det << " -> "
                << r.final_det << "\ncheckpoint: " << r.final_checkpoint
                << "\nmetrics: " << r.metrics_csv << "\n";
    } else if (*render) {
      fgrf::render_command(ckpt, pose, stochastic, samples, out_dir);
    } else if (*unc) {
      fgrf::uncertainty_command(ckpt, pose, samples, out_dir);
    } else if (*eval) {
      fgrf::eval_command(ckpt, dataset, split, samples, report);
    } else if (*mk) {
      int w = 0, h = 0;
      if (std::sscanf(size.c_str(), "%dx%d", &w, &h) != 2 || w < 1 || h < 1) {
        std::cerr << "bad --size, expected WxH\n";
        return 1;
      }
      fgrf::make_scene_command(scene_path, views, w, h, out_dir,
                               dist == "sphere" ? fgrf::ViewDistribution::Sphere
                                                : fgrf::ViewDistribution::Hemisphere,
                               seed);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
