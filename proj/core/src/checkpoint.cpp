#include "fgrf/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fgrf {

namespace {

constexpr char kMagic[4] = {'F', 'G', 'R', 'F'};

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f32(std::ostream& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

void need(std::istream& in, char* buf, size_t n, const std::string& what) {
  in.read(buf, static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n)
    throw std::runtime_error("truncated checkpoint: while reading " + what);
}

uint32_t get_u32(std::istream& in, const std::string& what) {
  char b[4];
  need(in, b, 4, what);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

uint64_t get_u64(std::istream& in, const std::string& what) {
  char b[8];
  need(in, b, 8, what);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

float get_f32(std::istream& in, const std::string& what) {
  const uint32_t bits = get_u32(in, what);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u64(out, ckpt.step);
  put_u64(out, ckpt.seed);
  put_u32(out, static_cast<uint32_t>(ckpt.config.size()));
  out.write(ckpt.config.data(), static_cast<std::streamsize>(ckpt.config.size()));
  put_u32(out, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, tensor] : ckpt.tensors) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<uint32_t>(tensor.shape.size()));
    for (int64_t d : tensor.shape) put_u32(out, static_cast<uint32_t>(d));
    for (double v : tensor.data) put_f32(out, static_cast<float>(v));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  need(in, magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a checkpoint file (bad magic): " + path);
  const uint32_t version = get_u32(in, "version");
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.step = get_u64(in, "step");
  ckpt.seed = get_u64(in, "seed");
  const uint32_t cfg_len = get_u32(in, "config length");
  ckpt.config.resize(cfg_len);
  if (cfg_len) need(in, ckpt.config.data(), cfg_len, "config");
  const uint32_t count = get_u32(in, "tensor count");
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = get_u32(in, "tensor name length");
    std::string name(name_len, '\0');
    if (name_len) need(in, name.data(), name_len, "tensor name");
    const uint32_t rank = get_u32(in, "rank of '" + name + "'");
    std::vector<int64_t> shape(rank);
    int64_t n = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      shape[d] = get_u32(in, "dims of '" + name + "'");
      n *= shape[d];
    }
    Tensor t = Tensor::zeros(shape);
    for (int64_t k = 0; k < n; ++k) t.data[static_cast<size_t>(k)] = get_f32(in, "payload of '" + name + "'");
    if (!ckpt.tensors.emplace(std::move(name), std::move(t)).second)
      throw std::runtime_error("duplicate tensor in checkpoint");
  }
  return ckpt;
}

void store_parameters(Checkpoint& ckpt, const std::vector<ad::Parameter*>& params) {
  for (const ad::Parameter* p : params) {
    if (ckpt.tensors.count(p->name))
      throw std::runtime_error("duplicate parameter name '" + p->name + "'");
    // round-trip through float32 so the in-memory model matches what a
    // reloaded checkpoint would produce
    Tensor t = p->value;
    for (auto& v : t.data) v = static_cast<double>(static_cast<float>(v));
    ckpt.tensors.emplace(p->name, std::move(t));
  }
}

void restore_parameters(const Checkpoint& ckpt, const std::vector<ad::Parameter*>& params) {
  for (ad::Parameter* p : params) {
    auto it = ckpt.tensors.find(p->name);
    if (it == ckpt.tensors.end())
      throw std::runtime_error("checkpoint is missing tensor '" + p->name + "'");
    if (it->second.shape != p->value.shape)
      throw std::runtime_error("shape mismatch for tensor '" + p->name + "': checkpoint has " +
                               it->second.shape_str() + ", model expects " + p->value.shape_str());
    p->value = it->second;
  }
}

}  // namespace fgrf
