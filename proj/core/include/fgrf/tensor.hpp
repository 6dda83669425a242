#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fgrf {

/// Dense row-major tensor of doubles. Plain value type; autodiff lives in
/// autodiff.hpp on top of this.
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int64_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<int64_t>(data.size()) != numel_of(shape))
      throw std::invalid_argument("Tensor: data length " + std::to_string(data.size()) +
                                  " does not match shape " + shape_str(shape));
  }

  static int64_t numel_of(const std::vector<int64_t>& s) {
    int64_t n = 1;
    for (int64_t e : s) {
      if (e <= 0) throw std::invalid_argument("Tensor: non-positive extent in shape " + shape_str(s));
      n *= e;
    }
    return n;
  }

  static Tensor zeros(std::vector<int64_t> s) {
    int64_t n = numel_of(s);
    return Tensor(std::move(s), std::vector<double>(static_cast<size_t>(n), 0.0));
  }
  static Tensor full(std::vector<int64_t> s, double v) {
    int64_t n = numel_of(s);
    return Tensor(std::move(s), std::vector<double>(static_cast<size_t>(n), v));
  }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }

  double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  static std::string shape_str(const std::vector<int64_t>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(s[i]);
    }
    return out + "]";
  }
  std::string shape_str() const { return shape_str(shape); }
};

}  // namespace fgrf
