#pragma once

#include <string>
#include <vector>

namespace fgrf {

/// RGB image, doubles in [0,1], row-major h*w*3.
struct Image {
  int width = 0, height = 0;
  std::vector<double> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, 0.0) {}

  double& at(int x, int y, int c) { return rgb[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  double at(int x, int y, int c) const { return rgb[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  size_t pixels() const { return static_cast<size_t>(width) * height; }
};

/// Scalar per-pixel grid (depth maps, variance maps).
struct FloatGrid {
  int width = 0, height = 0;
  std::vector<double> v;

  FloatGrid() = default;
  FloatGrid(int w, int h) : width(w), height(h), v(static_cast<size_t>(w) * h, 0.0) {}
  double& at(int x, int y) { return v[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return v[static_cast<size_t>(y) * width + x]; }
};

/// 8-bit RGB PNG.
void write_png(const Image& img, const std::string& path);
Image read_png(const std::string& path);

/// Raw little-endian float32 grid with a 16-byte header (magic, width, height).
void write_grid(const FloatGrid& g, const std::string& path);
FloatGrid read_grid(const std::string& path);

/// Min-max normalized grayscale visualization of a grid.
Image visualize_grid(const FloatGrid& g);

}  // namespace fgrf
