#include "posegen/checkpoint.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace posegen {

namespace {

constexpr char kMagic[6] = {'P', 'G', 'C', 'K', '1', '\0'};

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Cursor {
 public:
  explicit Cursor(const std::string& s) : s_(s) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, s_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string r = s_.substr(pos_, n);
    pos_ += n;
    return r;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  void need(std::size_t n) {
    if (s_.size() - pos_ < n) {
      throw DataError("checkpoint truncated at offset " + std::to_string(pos_));
    }
  }
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const std::vector<NamedTensor>& params) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.tensor.shape.size()));
    for (std::size_t d : p.tensor.shape) put<std::uint64_t>(out, d);
    for (float v : p.tensor.data) put<float>(out, v);
  }
  return out;
}

std::vector<NamedTensor> decode_checkpoint(const std::string& bytes) {
  Cursor c(bytes);
  if (c.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw DataError("checkpoint: bad magic");
  }
  const auto count = c.get<std::uint32_t>();
  std::vector<NamedTensor> params;
  params.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor p;
    p.name = c.bytes(c.get<std::uint32_t>());
    const auto rank = c.get<std::uint32_t>();
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(c.get<std::uint64_t>());
    p.tensor = Tensor<float>(shape);
    for (auto& v : p.tensor.data) {
      v = c.get<float>();
      if (!std::isfinite(v)) throw DataError("checkpoint: non-finite value in " + p.name);
    }
    params.push_back(std::move(p));
  }
  if (!c.done()) throw DataError("checkpoint: trailing bytes");
  return params;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open", path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write", path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed", path.string());
}

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<NamedTensor>& params) {
  write_file(path, encode_checkpoint(params));
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace posegen
