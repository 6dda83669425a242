#include "fgrf/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

namespace fgrf {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

uint8_t to_byte(double v) {
  const double c = std::min(std::max(v, 0.0), 1.0);
  return static_cast<uint8_t>(std::lround(c * 255.0));
}

constexpr char kGridMagic[8] = {'F', 'G', 'R', 'F', 'G', 'R', 'D', '1'};

void put_u32(FILE* f, uint32_t v) {
  uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                  static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  std::fwrite(b, 1, 4, f);
}

uint32_t get_u32(FILE* f, const std::string& path) {
  uint8_t b[4];
  if (std::fread(b, 1, 4, f) != 4) throw std::runtime_error("truncated grid file: " + path);
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

}  // namespace

void write_png(const Image& img, const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng write failure: " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<uint8_t> row(static_cast<size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) row[static_cast<size_t>(x) * 3 + c] = to_byte(img.at(x, y, c));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw std::runtime_error("cannot open: " + path);
  uint8_t header[8];
  if (std::fread(header, 1, 8, f.get()) != 8 || png_sig_cmp(header, 0, 8))
    throw std::runtime_error("not a PNG file: " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng read failure: " + path);
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  Image img(static_cast<int>(png_get_image_width(png, info)),
            static_cast<int>(png_get_image_height(png, info)));
  std::vector<uint8_t> row(png_get_rowbytes(png, info));
  for (int y = 0; y < img.height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = row[static_cast<size_t>(x) * 3 + c] / 255.0;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_grid(const FloatGrid& g, const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  std::fwrite(kGridMagic, 1, 8, f.get());
  put_u32(f.get(), static_cast<uint32_t>(g.width));
  put_u32(f.get(), static_cast<uint32_t>(g.height));
  for (double d : g.v) {
    float x = static_cast<float>(d);
    uint32_t bits;
    std::memcpy(&bits, &x, 4);
    put_u32(f.get(), bits);
  }
}

FloatGrid read_grid(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw std::runtime_error("cannot open: " + path);
  char magic[8];
  if (std::fread(magic, 1, 8, f.get()) != 8 || std::memcmp(magic, kGridMagic, 8) != 0)
    throw std::runtime_error("bad grid magic in " + path);
  FloatGrid g(static_cast<int>(get_u32(f.get(), path)), static_cast<int>(get_u32(f.get(), path)));
  for (auto& d : g.v) {
    uint32_t bits = get_u32(f.get(), path);
    float x;
    std::memcpy(&x, &bits, 4);
    d = x;
  }
  return g;
}

Image visualize_grid(const FloatGrid& g) {
  double lo = 0, hi = 0;
  if (!g.v.empty()) {
    lo = hi = g.v[0];
    for (double d : g.v) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  const double span = hi > lo ? hi - lo : 1.0;
  Image img(g.width, g.height);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) {
      const double v = (g.at(x, y) - lo) / span;
      img.at(x, y, 0) = img.at(x, y, 1) = img.at(x, y, 2) = v;
    }
  return img;
}

}  // namespace fgrf
