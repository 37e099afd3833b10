#include "kernelcount/nn/serialize.hpp"

#include <fstream>
#include <iterator>
#include <limits>
#include <stdexcept>

#include "kernelcount/util/binary_io.hpp"

namespace kc::io {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace kc::io

namespace kc::nn {

namespace {
constexpr std::string_view kMagic = "KCW1";
}

std::vector<std::uint8_t> encode_weights(const Network<float>& net) {
  const auto tensors = net.named_tensors();
  io::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kWeightFormatVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) throw std::length_error("tensor name too long");
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name);
    w.u8(static_cast<std::uint8_t>(t->rank()));
    for (std::size_t d : t->shape()) w.u32(static_cast<std::uint32_t>(d));
    w.f32s(t->values());
  }
  return w.take();
}

void decode_weights(std::span<const std::uint8_t> bytes, Network<float>& net) {
  io::ByteReader r(bytes);
  if (r.bytes(kMagic.size(), "magic") != kMagic) throw std::runtime_error("not a weight file (bad magic)");
  const std::uint32_t version = r.u32("version");
  if (version != kWeightFormatVersion) {
    throw std::runtime_error("unsupported weight format version " + std::to_string(version));
  }
  auto targets = net.named_tensors();
  const std::uint32_t count = r.u32("entry count");
  if (count != targets.size()) {
    throw std::runtime_error("weight file has " + std::to_string(count) + " tensors, network expects " +
                             std::to_string(targets.size()));
  }
  std::vector<Tensor<float>> staged;
  staged.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t len = r.u16("name length");
    const std::string name = r.bytes(len, "tensor name");
    if (name != targets[i].first) {
      throw std::runtime_error("tensor #" + std::to_string(i) + " is '" + name + "', expected '" + targets[i].first + "'");
    }
    const std::uint8_t rank = r.u8("rank");
    Shape shape(rank);
    for (auto& d : shape) d = r.u32("dimension");
    if (shape != targets[i].second->shape()) {
      throw std::runtime_error("tensor '" + name + "' has shape " + shape_string(shape) + ", expected " +
                               shape_string(targets[i].second->shape()));
    }
    Tensor<float> t(shape);
    r.f32s(t.values(), name);
    staged.push_back(std::move(t));
  }
  if (r.remaining() != 0) throw std::runtime_error("trailing bytes after weight data");
  for (std::size_t i = 0; i < staged.size(); ++i) *targets[i].second = std::move(staged[i]);
  net.clear_cache();
}

void save_weights(const Network<float>& net, const std::filesystem::path& path) {
  io::write_file(path, encode_weights(net));
}

void load_weights(const std::filesystem::path& path, Network<float>& net) {
  const auto bytes = io::read_file(path);
  try {
    decode_weights(bytes, net);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace kc::nn
