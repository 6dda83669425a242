#pragma once

#include <string>
#include <vector>

#include "fgrf/autodiff.hpp"
#include "fgrf/rng.hpp"

namespace fgrf {

struct HashGridConfig {
  int levels = 8;
  int base_resolution = 4;
  double growth = 1.5;
  int64_t table_size = 1 << 14;  // power of two
  int feature_dim = 2;

  void validate() const;
  /// cells per axis at a level; strictly increasing across levels
  int resolution(int level) const;
  int out_dim() const { return levels * feature_dim; }
};

/// Multiresolution hash grid over the unit cube. Positions outside [0,1]^3
/// are clamped and counted.
class HashGrid {
 public:
  HashGrid(const HashGridConfig& cfg, const std::string& name, Rng& rng);

  /// x [P,3] -> [P, levels*feature_dim]; trilinear over hashed cell corners,
  /// differentiable w.r.t. table entries and x.
  ad::Var encode(const ad::Var& x);
  ad::Var encode(const Tensor& x) { return encode(ad::constant(x)); }

  const HashGridConfig& config() const { return cfg_; }
  int64_t clamp_warnings() const { return clamp_count_; }
  void collect(std::vector<ad::Parameter*>& out);
  std::vector<ad::Parameter>& tables() { return tables_; }

 private:
  HashGridConfig cfg_;
  std::vector<ad::Parameter> tables_;  // per level, [table_size, feature_dim]
  int64_t clamp_count_ = 0;
};

/// Single-level dense trilinear feature grid over the unit cube. Unlike the
/// hash grid there are no collisions: a cell the training rays never touch
/// receives no gradient and keeps its init forever. The init is zero-mean
/// noise — large enough that downstream conditioners see a usable gradient
/// signal over the stochastic-draw noise from step 0, and sign-random so an
/// untouched cell cannot encode a systematic residual contraction. This is
/// what makes the residual uncertainty revert to the prior in unsupervised
/// space.
class DenseGrid {
 public:
  DenseGrid(int resolution, int channels, const std::string& name, Rng& rng,
            double init_scale = 0.1);

  /// x [P,3] -> [P,channels]; trilinear, differentiable w.r.t. the table.
  ad::Var encode(const ad::Var& x);
  ad::Var encode(const Tensor& x) { return encode(ad::constant(x)); }

  int resolution() const { return res_; }
  void collect(std::vector<ad::Parameter*>& out) { out.push_back(&table_); }
  ad::Parameter& table() { return table_; }

 private:
  int res_;
  ad::Parameter table_;  // [(res+1)^3, channels]
};

/// Hash of an integer lattice vertex, masked to table_size-1.
int64_t hash_vertex(int64_t ix, int64_t iy, int64_t iz, int64_t table_size);

/// Real spherical harmonics of a unit direction, degrees 0..degree.
/// Throws if |d| deviates from 1 by more than 1e-6.
Tensor sh_encode(const double d[3], int degree);

/// dirs [P,3] -> [P,(degree+1)^2]
Tensor sh_encode_batch(const Tensor& dirs, int degree);

}  // namespace fgrf
