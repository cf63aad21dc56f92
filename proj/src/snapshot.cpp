#include "gatefx/nn/snapshot.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace gatefx::nn {
namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw std::runtime_error("snapshot: truncated record");
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_snapshot(const Params& p) {
  validate(p);
  std::vector<std::uint8_t> out;
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.layers.size()));
  for (const auto& l : p.layers) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.in_dim()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.out_dim()));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(l.activation));
  }
  for (const auto& l : p.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) put_le<double>(out, l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) put_le<double>(out, l.bias(r));
  }
  return out;
}

Params decode_snapshot(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  const auto count = in.get<std::uint32_t>();
  if (count == 0 || count > 1024) throw std::runtime_error("snapshot: implausible layer count");
  Params p;
  p.layers.resize(count);
  for (auto& l : p.layers) {
    const auto in_dim = in.get<std::uint32_t>();
    const auto out_dim = in.get<std::uint32_t>();
    const auto act = in.get<std::uint8_t>();
    if (act > static_cast<std::uint8_t>(Activation::kIdentity))
      throw std::runtime_error("snapshot: unknown activation tag");
    l.weight.resize(out_dim, in_dim);
    l.bias.resize(out_dim);
    l.activation = static_cast<Activation>(act);
  }
  for (auto& l : p.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = in.get<double>();
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = in.get<double>();
  }
  if (!in.exhausted()) throw std::runtime_error("snapshot: trailing bytes");
  validate(p);
  return p;
}

void save_snapshot(const Params& p, const std::filesystem::path& path) {
  const auto bytes = encode_snapshot(p);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("snapshot: cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("snapshot: write failed for " + path.string());
}

Params load_snapshot(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("snapshot: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

}  // namespace gatefx::nn
