#include "fgrf/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fgrf {

namespace fs = std::filesystem;
using ad::Var;

// --- config -----------------------------------------------------------------

void TrainConfig::validate() const {
  if (dataset.empty()) throw std::invalid_argument("config: dataset path is required");
  if (total_steps < 1 || batch < 1 || patch_side < 1 || samples_per_ray < 1)
    throw std::invalid_argument("config: counts must be >= 1");
  if (m_start < 1 || m_end < m_start)
    throw std::invalid_argument("config: need 1 <= m_start <= m_end");
  weights.validate();
  if (s_start <= 0 || s_end <= 0 || s_end > s_start)
    throw std::invalid_argument("config: need 0 < s_end <= s_start");
  if (scale_decay_frac <= 0 || scale_decay_frac > 1)
    throw std::invalid_argument("config: scale_decay_frac must be in (0,1]");
  if (lr_g <= 0 || lr_d <= 0) throw std::invalid_argument("config: learning rates must be > 0");
  if (sigma_depth <= 0) throw std::invalid_argument("config: sigma_depth must be > 0");
  if (near <= 0 || far <= near) throw std::invalid_argument("config: need 0 < near < far");
  field.hash.validate();
}

int TrainConfig::m_at(int64_t step) const {
  if (total_steps <= 1) return m_end;
  const int64_t span = total_steps - 1;
  step = std::min(std::max<int64_t>(step, 0), span);
  return m_start + static_cast<int>(static_cast<int64_t>(m_end - m_start) * step / span);
}

double TrainConfig::scale_at(int64_t step) const {
  const auto decay = std::max<int64_t>(1, static_cast<int64_t>(
                                              std::llround(scale_decay_frac * total_steps)));
  return anneal_scale(step, s_start, s_end, decay);
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string TrainConfig::to_text() const {
  std::ostringstream o;
  o << "dataset=" << dataset << "\n"
    << "out_dir=" << out_dir << "\n"
    << "total_steps=" << total_steps << "\n"
    << "batch=" << batch << "\n"
    << "patch_side=" << patch_side << "\n"
    << "samples_per_ray=" << samples_per_ray << "\n"
    << "m_start=" << m_start << "\n"
    << "m_end=" << m_end << "\n"
    << "lambda_det=" << fmt(weights.det) << "\n"
    << "lambda_adv=" << fmt(weights.adv) << "\n"
    << "lambda_depth=" << fmt(weights.depth) << "\n"
    << "s_start=" << fmt(s_start) << "\n"
    << "s_end=" << fmt(s_end) << "\n"
    << "scale_decay_frac=" << fmt(scale_decay_frac) << "\n"
    << "lr_g=" << fmt(lr_g) << "\n"
    << "lr_d=" << fmt(lr_d) << "\n"
    << "sigma_depth=" << fmt(sigma_depth) << "\n"
    << "near=" << fmt(near) << "\n"
    << "far=" << fmt(far) << "\n"
    << "seed=" << seed << "\n"
    << "checkpoint_every=" << checkpoint_every << "\n"
    << "freeze_mean=" << (freeze_mean ? 1 : 0) << "\n"
    << "depth_l2=" << (depth_l2 ? 1 : 0) << "\n"
    << "adv_l2=" << (adv_l2 ? 1 : 0) << "\n"
    << "hash_levels=" << field.hash.levels << "\n"
    << "hash_base_resolution=" << field.hash.base_resolution << "\n"
    << "hash_growth=" << fmt(field.hash.growth) << "\n"
    << "hash_table_size=" << field.hash.table_size << "\n"
    << "hash_feature_dim=" << field.hash.feature_dim << "\n"
    << "sh_degree=" << field.sh_degree << "\n"
    << "hidden=" << field.hidden << "\n"
    << "feat_dim=" << field.feat_dim << "\n"
    << "flow_depth=" << field.flow_depth << "\n"
    << "cond_hidden=" << field.cond_hidden << "\n"
    << "cond_res=" << field.cond_res << "\n"
    << "disc_widths=";
  for (size_t i = 0; i < disc.widths.size(); ++i) o << (i ? "," : "") << disc.widths[i];
  o << "\n"
    << "disc_leaky_slope=" << fmt(disc.leaky_slope) << "\n"
    << "disc_spectral_iters=" << disc.spectral_iters << "\n";
  return o.str();
}

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    auto i = [&] { return std::stoll(val); };
    auto d = [&] { return std::stod(val); };
    auto b = [&] { return i() != 0; };
    if (key == "dataset") cfg.dataset = val;
    else if (key == "out_dir") cfg.out_dir = val;
    else if (key == "total_steps") cfg.total_steps = i();
    else if (key == "batch") cfg.batch = static_cast<int>(i());
    else if (key == "patch_side") cfg.patch_side = static_cast<int>(i());
    else if (key == "samples_per_ray") cfg.samples_per_ray = static_cast<int>(i());
    else if (key == "m_start") cfg.m_start = static_cast<int>(i());
    else if (key == "m_end") cfg.m_end = static_cast<int>(i());
    else if (key == "lambda_det") cfg.weights.det = d();
    else if (key == "lambda_adv") cfg.weights.adv = d();
    else if (key == "lambda_depth") cfg.weights.depth = d();
    else if (key == "s_start") cfg.s_start = d();
    else if (key == "s_end") cfg.s_end = d();
    else if (key == "scale_decay_frac") cfg.scale_decay_frac = d();
    else if (key == "lr_g") cfg.lr_g = d();
    else if (key == "lr_d") cfg.lr_d = d();
    else if (key == "sigma_depth") cfg.sigma_depth = d();
    else if (key == "near") cfg.near = d();
    else if (key == "far") cfg.far = d();
    else if (key == "seed") cfg.seed = static_cast<uint64_t>(i());
    else if (key == "checkpoint_every") cfg.checkpoint_every = i();
    else if (key == "freeze_mean") cfg.freeze_mean = b();
    else if (key == "depth_l2") cfg.depth_l2 = b();
    else if (key == "adv_l2") cfg.adv_l2 = b();
    else if (key == "hash_levels") cfg.field.hash.levels = static_cast<int>(i());
    else if (key == "hash_base_resolution") cfg.field.hash.base_resolution = static_cast<int>(i());
    else if (key == "hash_growth") cfg.field.hash.growth = d();
    else if (key == "hash_table_size") cfg.field.hash.table_size = i();
    else if (key == "hash_feature_dim") cfg.field.hash.feature_dim = static_cast<int>(i());
    else if (key == "sh_degree") cfg.field.sh_degree = static_cast<int>(i());
    else if (key == "hidden") cfg.field.hidden = static_cast<int>(i());
    else if (key == "feat_dim") cfg.field.feat_dim = static_cast<int>(i());
    else if (key == "flow_depth") cfg.field.flow_depth = static_cast<int>(i());
    else if (key == "cond_hidden") cfg.field.cond_hidden = static_cast<int>(i());
    else if (key == "cond_res") cfg.field.cond_res = static_cast<int>(i());
    else if (key == "disc_widths") {
      cfg.disc.widths.clear();
      std::istringstream ws(val);
      std::string tok;
      while (std::getline(ws, tok, ',')) cfg.disc.widths.push_back(std::stoi(tok));
    } else if (key == "disc_leaky_slope") cfg.disc.leaky_slope = d();
    else if (key == "disc_spectral_iters") cfg.disc.spectral_iters = static_cast<int>(i());
    else
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" +
                                  key + "'");
  }
  cfg.disc.patch_side = cfg.patch_side;
  return cfg;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_train_config(ss.str());
}

// --- training ---------------------------------------------------------------

namespace {

/// [K*K,3] row-major patch pixels -> [1,3,K,K]
Var to_patch_nchw(const Var& colors, int K) {
  std::vector<Var> chans;
  for (int c = 0; c < 3; ++c)
    chans.push_back(ad::reshape(ad::slice(colors, 1, c, 1), {1, 1, K, K}));
  return ad::concat(chans, 1);
}

Tensor to_patch_tensor(const Tensor& colors, int K) {
  Tensor out = Tensor::zeros({1, 3, K, K});
  for (int64_t p = 0; p < static_cast<int64_t>(K) * K; ++p)
    for (int64_t c = 0; c < 3; ++c) out[c * K * K + p] = colors[p * 3 + c];
  return out;
}

Tensor batch_patches(const std::vector<Tensor>& patches) {
  const int64_t B = static_cast<int64_t>(patches.size());
  const int64_t per = patches[0].numel();
  Tensor out = Tensor::zeros({B, patches[0].shape[1], patches[0].shape[2], patches[0].shape[3]});
  for (int64_t b = 0; b < B; ++b)
    std::copy(patches[static_cast<size_t>(b)].data.begin(),
              patches[static_cast<size_t>(b)].data.end(), out.data.begin() + b * per);
  return out;
}

struct Model {
  RadianceField field;
  Discriminator disc;

  Model(const TrainConfig& cfg, Rng& rng) : field(cfg.field, rng), disc(cfg.disc, rng) {}
};

Checkpoint snapshot(Model& model, const TrainConfig& cfg, uint64_t step) {
  Checkpoint ckpt;
  ckpt.step = step;
  ckpt.seed = cfg.seed;
  ckpt.config = cfg.to_text();
  std::vector<ad::Parameter*> params;
  model.field.collect(params);
  model.disc.collect(params);
  store_parameters(ckpt, params);
  return ckpt;
}

}  // namespace

TrainResult train(const TrainConfig& cfg) {
  cfg.validate();
  Dataset ds = load_dataset(cfg.dataset);
  if (ds.size() == 0) throw std::runtime_error("train: dataset is empty");
  const int W = ds.intrinsics.width, H = ds.intrinsics.height;
  const int K = cfg.patch_side;
  const bool use_depth = ds.has_depth() && cfg.weights.depth > 0;
  const bool use_adv = cfg.weights.adv > 0;
  const std::array<double, 3> background = {0, 0, 0};

  fs::create_directories(cfg.out_dir);
  const std::string metrics_path = (fs::path(cfg.out_dir) / "metrics.csv").string();
  std::ofstream metrics(metrics_path);
  if (!metrics) throw std::runtime_error("cannot open for writing: " + metrics_path);
  metrics << "step,L_det,L_D,L_G,L_depth,s,M\n";

  Rng init_rng = make_stream(cfg.seed, 1000);
  Model model(cfg, init_rng);

  std::vector<ad::Parameter*> g_params;
  if (!cfg.freeze_mean) model.field.mean().collect(g_params);
  model.field.cond_sigma_grid().collect(g_params);
  model.field.cond_color_grid().collect(g_params);
  model.field.density_flow().collect(g_params);
  model.field.color_flow().collect(g_params);
  std::vector<ad::Parameter*> d_params;
  model.disc.collect(d_params);

  ad::Adam opt_g(g_params, {.lr = cfg.lr_g});
  ad::Adam opt_d(d_params, {.lr = cfg.lr_d});

  TrainResult result;
  result.steps = cfg.total_steps;

  auto emergency = [&](int64_t step, const std::string& why) -> std::runtime_error {
    const std::string path = (fs::path(cfg.out_dir) / "emergency.fgrf").string();
    save_checkpoint(snapshot(model, cfg, static_cast<uint64_t>(step)), path);
    return std::runtime_error("training aborted at step " + std::to_string(step) + ": " + why +
                              " (emergency checkpoint: " + path + ")");
  };

  for (int64_t step = 0; step < cfg.total_steps; ++step) {
    const double s = cfg.scale_at(step);
    const int M = cfg.m_at(step);

    double l_det = 0, l_d = 0, l_g = 0, l_depth = 0;
    try {
      Var det_loss, depth_loss;
      std::vector<Var> fake_vars;         // B*M patches [1,3,K,K]
      std::vector<Tensor> real_patches;   // B patches

      for (int b = 0; b < cfg.batch; ++b) {
        Rng patch_rng = make_stream(cfg.seed, static_cast<uint64_t>(step), static_cast<uint64_t>(b), 0);
        const size_t view = static_cast<size_t>(
            std::uniform_int_distribution<int64_t>(0, static_cast<int64_t>(ds.size()) - 1)(patch_rng));
        PatchSpec ps = sample_patch(W, H, K, s, patch_rng);
        const Camera& cam = ds.cameras[view];
        auto rays = generate_rays(cam, ps.pixels);
        RaySampleGrid grid =
            stratified_grid(K * K, cfg.near, cfg.far, cfg.samples_per_ray, patch_rng);

        Tensor gt = Tensor::zeros({static_cast<int64_t>(K) * K, 3});
        Tensor gt_depth = Tensor::zeros({static_cast<int64_t>(K) * K});
        for (int64_t p = 0; p < static_cast<int64_t>(K) * K; ++p) {
          const int px = static_cast<int>(ps.pixels[static_cast<size_t>(p)].first);
          const int py = static_cast<int>(ps.pixels[static_cast<size_t>(p)].second);
          for (int c = 0; c < 3; ++c) gt[p * 3 + c] = ds.images[view].at(px, py, c);
          if (use_depth) gt_depth[p] = ds.depths[view].at(px, py);
        }

        auto [xs, dirs] = ray_points(rays, grid);
        MeanOutput mean = model.field.eval_mean(xs, dirs);
        RayRenderOutput det_out = render_rays_mean(mean, grid, background);

        Var det_b = det_rendering_loss(det_out.color, gt, true);
        det_loss = det_loss ? ad::add(det_loss, det_b) : det_b;

        if (use_depth) {
          Var depth_b =
              cfg.depth_l2
                  ? depth_l2_loss(det_out.depth, gt_depth)
                  : depth_ce_loss(det_out.weights, grid.t, gt_depth, cfg.near, cfg.far,
                                  cfg.sigma_depth)
                        .loss;
          depth_loss = depth_loss ? ad::add(depth_loss, depth_b) : depth_b;
        }

        if (use_adv) {
          real_patches.push_back(to_patch_tensor(gt, K));
          for (int m = 0; m < M; ++m) {
            Rng draw_rng = make_stream(cfg.seed, static_cast<uint64_t>(step),
                                       static_cast<uint64_t>(b), static_cast<uint64_t>(m) + 1);
            FieldSampleBatch sample = model.field.sample(mean, draw_rng);
            RayRenderOutput out = render_rays_sample(sample, grid, background);
            fake_vars.push_back(to_patch_nchw(out.color, K));
          }
        }
      }

      const double inv_b = 1.0 / cfg.batch;
      det_loss = ad::mul_scalar(det_loss, inv_b);
      depth_loss = depth_loss ? ad::mul_scalar(depth_loss, inv_b)
                              : ad::constant(Tensor::scalar(0.0));

      // discriminator phase: detached fakes, single real evaluation per patch
      // (softplus means make that equivalent to literal M-fold replication)
      Var adv_loss = ad::constant(Tensor::scalar(0.0));
      if (use_adv && !cfg.adv_l2) {
        model.disc.update_spectral();
        std::vector<Tensor> fake_values;
        fake_values.reserve(fake_vars.size());
        for (const auto& v : fake_vars) fake_values.push_back(v->value);
        Var real_logits = model.disc.forward(ad::constant(batch_patches(real_patches)), s);
        Var fake_logits = model.disc.forward(ad::constant(batch_patches(fake_values)), s);
        auto [d_obj, g_unused] = gan_losses(real_logits, fake_logits);
        (void)g_unused;
        l_d = d_obj->value[0];
        if (!std::isfinite(l_d)) throw std::runtime_error("non-finite discriminator loss");
        ad::backward(d_obj);
        opt_d.step();
        opt_d.zero_grad();
        model.disc.update_spectral();

        Var live = fake_vars.size() == 1 ? fake_vars[0] : ad::concat(fake_vars, 0);
        Var live_logits = model.disc.forward(live, s);
        adv_loss = ad::mean_all(ad::softplus(ad::neg(live_logits)));
        l_g = adv_loss->value[0];
      } else if (use_adv && cfg.adv_l2) {
        // ablation: per-draw patch L2 against the real patch
        Var acc;
        for (size_t i = 0; i < fake_vars.size(); ++i) {
          const Tensor& real = real_patches[i / static_cast<size_t>(M)];
          Var diff = ad::sub(fake_vars[i], ad::constant(real));
          Var term = ad::mean_all(ad::mul(diff, diff));
          acc = acc ? ad::add(acc, term) : term;
        }
        adv_loss = ad::mul_scalar(acc, 1.0 / static_cast<double>(fake_vars.size()));
        l_g = adv_loss->value[0];
      }

      Var total = total_generator_loss(det_loss, adv_loss, depth_loss, cfg.weights);
      ad::backward(total);
      for (auto* p : d_params) p->zero_grad();  // generator pass leaks into D
      opt_g.step();
      opt_g.zero_grad();

      l_det = det_loss->value[0];
      l_depth = depth_loss->value[0];
      if (!ad::all_finite(Tensor::scalar(l_det + l_d + l_g + l_depth)))
        throw std::runtime_error("non-finite loss");
    } catch (const std::exception& e) {
      throw emergency(step, e.what());
    }

    if (step == 0) result.first_det = l_det;
    result.final_det = l_det;

    char row[256];
    std::snprintf(row, sizeof row, "%lld,%.10g,%.10g,%.10g,%.10g,%.10g,%d\n",
                  static_cast<long long>(step), l_det, l_d, l_g, l_depth, s, M);
    metrics << row;

    if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0 &&
        step + 1 < cfg.total_steps) {
      char name[48];
      std::snprintf(name, sizeof name, "ckpt_%06lld.fgrf", static_cast<long long>(step + 1));
      save_checkpoint(snapshot(model, cfg, static_cast<uint64_t>(step + 1)),
                      (fs::path(cfg.out_dir) / name).string());
    }
  }

  result.final_checkpoint = (fs::path(cfg.out_dir) / "final.fgrf").string();
  save_checkpoint(snapshot(model, cfg, static_cast<uint64_t>(cfg.total_steps)),
                  result.final_checkpoint);
  result.metrics_csv = metrics_path;
  return result;
}

// --- checkpoint-driven commands ---------------------------------------------

RenderParams LoadedModel::render_params() const {
  RenderParams rp;
  rp.near = cfg.near;
  rp.far = cfg.far;
  rp.samples_per_ray = cfg.samples_per_ray;
  return rp;
}

LoadedModel load_model(const std::string& checkpoint_path) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  TrainConfig cfg = parse_train_config(ckpt.config);
  Rng rng = make_stream(cfg.seed, 1000);
  auto field = std::make_unique<RadianceField>(cfg.field, rng);
  std::vector<ad::Parameter*> params;
  field->collect(params);
  restore_parameters(ckpt, params);
  return {std::move(cfg), std::move(field), std::move(ckpt)};
}

namespace {

const Camera& pose_camera(const Dataset& ds, int pose) {
  if (pose < 0 || static_cast<size_t>(pose) >= ds.size())
    throw std::runtime_error("pose index " + std::to_string(pose) + " out of range (dataset has " +
                             std::to_string(ds.size()) + " views)");
  return ds.cameras[static_cast<size_t>(pose)];
}

}  // namespace

void render_command(const std::string& checkpoint, int pose, bool stochastic, int samples,
                    const std::string& out_dir) {
  LoadedModel model = load_model(checkpoint);
  Dataset ds = load_dataset(model.cfg.dataset);
  const Camera& cam = pose_camera(ds, pose);
  const RenderParams rp = model.render_params();
  fs::create_directories(out_dir);
  if (!stochastic) {
    FloatGrid depth;
    Image img = render_mean(*model.field, cam, rp, derive_seed(model.ckpt.seed, 9000), &depth);
    write_png(img, (fs::path(out_dir) / "render_mean.png").string());
    write_grid(depth, (fs::path(out_dir) / "depth_mean.f32").string());
    return;
  }
  if (samples < 1) throw std::runtime_error("stochastic render: need samples >= 1");
  for (int m = 0; m < samples; ++m) {
    FloatGrid depth;
    Image img = render_stochastic(*model.field, cam, rp,
                                  derive_seed(model.ckpt.seed, 9100, static_cast<uint64_t>(m)),
                                  &depth);
    char name[48];
    std::snprintf(name, sizeof name, "render_%03d.png", m);
    write_png(img, (fs::path(out_dir) / name).string());
    std::snprintf(name, sizeof name, "depth_%03d.f32", m);
    write_grid(depth, (fs::path(out_dir) / name).string());
  }
}

void uncertainty_command(const std::string& checkpoint, int pose, int samples,
                         const std::string& out_dir) {
  LoadedModel model = load_model(checkpoint);
  Dataset ds = load_dataset(model.cfg.dataset);
  const Camera& cam = pose_camera(ds, pose);
  UncertaintyMap map = render_uncertainty(*model.field, cam, model.render_params(), samples,
                                          derive_seed(model.ckpt.seed, 9200));
  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  write_png(map.mean_color, (out / "mean.png").string());
  write_grid(map.color_var_mean, (out / "color_var.f32").string());
  write_png(visualize_grid(map.color_var_mean), (out / "color_var.png").string());
  write_grid(map.mean_depth, (out / "mean_depth.f32").string());
  write_grid(map.depth_var, (out / "depth_var.f32").string());
  write_png(visualize_grid(map.depth_var), (out / "depth_var.png").string());
}

void eval_command(const std::string& checkpoint, const std::string& dataset,
                  const std::string& split_file, int samples, const std::string& out_csv) {
  LoadedModel model = load_model(checkpoint);
  Dataset ds = load_dataset(dataset);
  std::vector<int> views;
  if (split_file.empty()) {
    for (size_t i = 0; i < ds.size(); ++i) views.push_back(static_cast<int>(i));
  } else {
    std::ifstream f(split_file);
    if (!f) throw std::runtime_error("cannot open split file: " + split_file);
    std::string line;
    while (std::getline(f, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      std::istringstream ls(line);
      int v;
      while (ls >> v) views.push_back(v);
    }
    if (views.empty()) throw std::runtime_error("split file selects no views: " + split_file);
  }

  const bool with_ause = samples >= 2;
  const RenderParams rp = model.render_params();
  std::ofstream csv(out_csv);
  if (!csv) throw std::runtime_error("cannot open for writing: " + out_csv);
  csv << (with_ause ? "view,psnr,ssim,ause_rmse,ause_mae\n" : "view,psnr,ssim\n");

  double sum_psnr = 0, sum_ssim = 0, sum_ar = 0, sum_am = 0;
  char row[192];
  for (int v : views) {
    const Camera& cam = pose_camera(ds, v);
    const Image& gt = ds.images[static_cast<size_t>(v)];
    Image pred = render_mean(*model.field, cam, rp,
                             derive_seed(model.ckpt.seed, 9300, static_cast<uint64_t>(v)));
    const double p = psnr(pred, gt);
    const double s = ssim(pred, gt);
    sum_psnr += p;
    sum_ssim += s;
    if (with_ause) {
      UncertaintyMap map =
          render_uncertainty(*model.field, cam, rp, samples,
                             derive_seed(model.ckpt.seed, 9400, static_cast<uint64_t>(v)));
      auto err = pixel_abs_error(map.mean_color, gt);
      std::vector<double> unc(map.color_var_mean.v.begin(), map.color_var_mean.v.end());
      const double ar = ause(err, unc, ErrorMetric::Rmse).ause;
      const double am = ause(err, unc, ErrorMetric::Mae).ause;
      sum_ar += ar;
      sum_am += am;
      std::snprintf(row, sizeof row, "%d,%.6f,%.6f,%.6f,%.6f\n", v, p, s, ar, am);
    } else {
      std::snprintf(row, sizeof row, "%d,%.6f,%.6f\n", v, p, s);
    }
    csv << row;
  }
  const double n = static_cast<double>(views.size());
  if (with_ause)
    std::snprintf(row, sizeof row, "mean,%.6f,%.6f,%.6f,%.6f\n", sum_psnr / n, sum_ssim / n,
                  sum_ar / n, sum_am / n);
  else
    std::snprintf(row, sizeof row, "mean,%.6f,%.6f\n", sum_psnr / n, sum_ssim / n);
  csv << row;
}

void make_scene_command(const std::string& scene_path, int views, int width, int height,
                        const std::string& out_dir, ViewDistribution dist, uint64_t seed) {
  SyntheticScene scene = load_scene(scene_path);
  Dataset ds = generate_dataset(scene, views, width, height, dist, seed);
  save_dataset(ds, out_dir);
}

}  // namespace fgrf
