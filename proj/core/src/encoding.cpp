#include "fgrf/encoding.hpp"

#include <cmath>

namespace fgrf {

void HashGridConfig::validate() const {
  if (levels < 1) throw std::invalid_argument("hash grid: levels must be >= 1");
  if (table_size < 1 || (table_size & (table_size - 1)) != 0)
    throw std::invalid_argument("hash grid: table_size must be a power of two");
  if (feature_dim < 1) throw std::invalid_argument("hash grid: feature_dim must be >= 1");
  for (int l = 1; l < levels; ++l)
    if (resolution(l) <= resolution(l - 1))
      throw std::invalid_argument("hash grid: resolutions must be strictly increasing (growth " +
                                  std::to_string(growth) + " too small)");
}

int HashGridConfig::resolution(int level) const {
  return static_cast<int>(std::floor(base_resolution * std::pow(growth, level)));
}

int64_t hash_vertex(int64_t ix, int64_t iy, int64_t iz, int64_t table_size) {
  // xor of coordinate-wise multiplies by fixed large primes
  const uint64_t h = static_cast<uint64_t>(ix) * 1ULL ^ static_cast<uint64_t>(iy) * 2654435761ULL ^
                     static_cast<uint64_t>(iz) * 805459861ULL;
  return static_cast<int64_t>(h & static_cast<uint64_t>(table_size - 1));
}

HashGrid::HashGrid(const HashGridConfig& cfg, const std::string& name, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  tables_.reserve(cfg_.levels);
  for (int l = 0; l < cfg_.levels; ++l) {
    Tensor t = Tensor::zeros({cfg_.table_size, cfg_.feature_dim});
    for (auto& v : t.data) v = uniform(rng, -1e-4, 1e-4);
    tables_.emplace_back(name + ".level" + std::to_string(l), std::move(t));
  }
}

ad::Var HashGrid::encode(const ad::Var& x) {
  const Tensor& X = x->value;
  if (X.rank() != 2 || X.shape[1] != 3)
    throw std::invalid_argument("hash_encode: positions must be [P,3], got " + X.shape_str());
  const int64_t P = X.shape[0];

  for (double v : X.data)
    if (v < 0.0 || v > 1.0) {
      ++clamp_count_;
      break;
    }
  // clamp to [0,1] as relu(x) - relu(x-1); identity inside the cube
  ad::Var xc = ad::sub(ad::relu(x), ad::relu(ad::add_scalar(x, -1.0)));

  std::vector<ad::Var> level_feats;
  for (int l = 0; l < cfg_.levels; ++l) {
    const int res = cfg_.resolution(l);
    ad::Var ps = ad::mul_scalar(xc, static_cast<double>(res));

    // integer cell index per point/axis (constant w.r.t. the graph)
    Tensor base = Tensor::zeros({P, 3});
    for (int64_t i = 0; i < P * 3; ++i) {
      double c = std::floor(ps->value[i]);
      base[i] = std::min(c, static_cast<double>(res - 1));
    }
    ad::Var frac = ad::sub(ps, ad::constant(base));
    ad::Var fx = ad::slice(frac, 1, 0, 1);
    ad::Var fy = ad::slice(frac, 1, 1, 1);
    ad::Var fz = ad::slice(frac, 1, 2, 1);
    ad::Var gx = ad::sub(ad::constant(Tensor::scalar(1.0)), fx);
    ad::Var gy = ad::sub(ad::constant(Tensor::scalar(1.0)), fy);
    ad::Var gz = ad::sub(ad::constant(Tensor::scalar(1.0)), fz);

    ad::Var acc;
    for (int corner = 0; corner < 8; ++corner) {
      const int cx = corner & 1, cy = (corner >> 1) & 1, cz = (corner >> 2) & 1;
      std::vector<int64_t> idx(static_cast<size_t>(P));
      for (int64_t i = 0; i < P; ++i) {
        const int64_t ix = static_cast<int64_t>(base[i * 3 + 0]) + cx;
        const int64_t iy = static_cast<int64_t>(base[i * 3 + 1]) + cy;
        const int64_t iz = static_cast<int64_t>(base[i * 3 + 2]) + cz;
        idx[static_cast<size_t>(i)] = hash_vertex(ix, iy, iz, cfg_.table_size);
      }
      ad::Var w = ad::mul(ad::mul(cx ? fx : gx, cy ? fy : gy), cz ? fz : gz);  // [P,1]
      ad::Var rows = ad::gather_rows(ad::param(tables_[static_cast<size_t>(l)]), std::move(idx));
      ad::Var contrib = ad::mul(w, rows);  // broadcast [P,1]*[P,F]
      acc = acc ? ad::add(acc, contrib) : contrib;
    }
    level_feats.push_back(acc);
  }
  return ad::concat(level_feats, 1);
}

void HashGrid::collect(std::vector<ad::Parameter*>& out) {
  for (auto& t : tables_) out.push_back(&t);
}

DenseGrid::DenseGrid(int resolution, int channels, const std::string& name, Rng& rng,
                     double init_scale)
    : res_(resolution) {
  if (resolution < 1) throw std::invalid_argument("dense grid: resolution must be >= 1");
  if (channels < 1) throw std::invalid_argument("dense grid: channels must be >= 1");
  const int64_t verts = static_cast<int64_t>(resolution + 1);
  Tensor t = Tensor::zeros({verts * verts * verts, channels});
  for (auto& v : t.data) v = uniform(rng, -init_scale, init_scale);
  table_ = ad::Parameter(name, std::move(t));
}

ad::Var DenseGrid::encode(const ad::Var& x) {
  const Tensor& X = x->value;
  if (X.rank() != 2 || X.shape[1] != 3)
    throw std::invalid_argument("dense_encode: positions must be [P,3], got " + X.shape_str());
  const int64_t P = X.shape[0];
  const int64_t verts = res_ + 1;

  ad::Var xc = ad::sub(ad::relu(x), ad::relu(ad::add_scalar(x, -1.0)));
  ad::Var ps = ad::mul_scalar(xc, static_cast<double>(res_));

  Tensor base = Tensor::zeros({P, 3});
  for (int64_t i = 0; i < P * 3; ++i) {
    double c = std::floor(ps->value[i]);
    base[i] = std::min(c, static_cast<double>(res_ - 1));
  }
  ad::Var frac = ad::sub(ps, ad::constant(base));
  ad::Var fx = ad::slice(frac, 1, 0, 1);
  ad::Var fy = ad::slice(frac, 1, 1, 1);
  ad::Var fz = ad::slice(frac, 1, 2, 1);
  ad::Var gx = ad::sub(ad::constant(Tensor::scalar(1.0)), fx);
  ad::Var gy = ad::sub(ad::constant(Tensor::scalar(1.0)), fy);
  ad::Var gz = ad::sub(ad::constant(Tensor::scalar(1.0)), fz);

  ad::Var acc;
  for (int corner = 0; corner < 8; ++corner) {
    const int cx = corner & 1, cy = (corner >> 1) & 1, cz = (corner >> 2) & 1;
    std::vector<int64_t> idx(static_cast<size_t>(P));
    for (int64_t i = 0; i < P; ++i) {
      const int64_t ix = static_cast<int64_t>(base[i * 3 + 0]) + cx;
      const int64_t iy = static_cast<int64_t>(base[i * 3 + 1]) + cy;
      const int64_t iz = static_cast<int64_t>(base[i * 3 + 2]) + cz;
      idx[static_cast<size_t>(i)] = (ix * verts + iy) * verts + iz;
    }
    ad::Var w = ad::mul(ad::mul(cx ? fx : gx, cy ? fy : gy), cz ? fz : gz);
    ad::Var rows = ad::gather_rows(ad::param(table_), std::move(idx));
    ad::Var contrib = ad::mul(w, rows);
    acc = acc ? ad::add(acc, contrib) : contrib;
  }
  return acc;
}

Tensor sh_encode(const double d[3], int degree) {
  const double x = d[0], y = d[1], z = d[2];
  const double n = std::sqrt(x * x + y * y + z * z);
  if (std::abs(n - 1.0) > 1e-6)
    throw std::invalid_argument("sh_encode: direction must be unit length, |d| = " +
                                std::to_string(n));
  if (degree < 0 || degree > 3)
    throw std::invalid_argument("sh_encode: supported degrees are 0..3");
  Tensor out = Tensor::zeros({static_cast<int64_t>((degree + 1) * (degree + 1))});
  int64_t i = 0;
  out[i++] = 0.28209479177387814;
  if (degree >= 1) {
    out[i++] = 0.4886025119029199 * y;
    out[i++] = 0.4886025119029199 * z;
    out[i++] = 0.4886025119029199 * x;
  }
  if (degree >= 2) {
    out[i++] = 1.0925484305920792 * x * y;
    out[i++] = 1.0925484305920792 * y * z;
    out[i++] = 0.31539156525252005 * (3.0 * z * z - 1.0);
    out[i++] = 1.0925484305920792 * x * z;
    out[i++] = 0.5462742152960396 * (x * x - y * y);
  }
  if (degree >= 3) {
    out[i++] = 0.5900435899266435 * y * (3.0 * x * x - y * y);
    out[i++] = 2.890611442640554 * x * y * z;
    out[i++] = 0.4570457994644658 * y * (5.0 * z * z - 1.0);
    out[i++] = 0.3731763325901154 * z * (5.0 * z * z - 3.0);
    out[i++] = 0.4570457994644658 * x * (5.0 * z * z - 1.0);
    out[i++] = 1.445305721320277 * z * (x * x - y * y);
    out[i++] = 0.5900435899266435 * x * (x * x - 3.0 * y * y);
  }
  return out;
}

Tensor sh_encode_batch(const Tensor& dirs, int degree) {
  if (dirs.rank() != 2 || dirs.shape[1] != 3)
    throw std::invalid_argument("sh_encode: directions must be [P,3], got " + dirs.shape_str());
  const int64_t P = dirs.shape[0];
  const int64_t C = static_cast<int64_t>((degree + 1) * (degree + 1));
  Tensor out = Tensor::zeros({P, C});
  for (int64_t p = 0; p < P; ++p) {
    Tensor row = sh_encode(&dirs.data[static_cast<size_t>(p * 3)], degree);
    std::copy(row.data.begin(), row.data.end(), out.data.begin() + static_cast<int64_t>(p * C));
  }
  return out;
}

}  // namespace fgrf
