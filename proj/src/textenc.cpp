#include "posegen/textenc.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace posegen {

static_assert(std::endian::native == std::endian::little,
              "PCEB/PGCK I/O assumes a little-endian host");

namespace {

constexpr char kPcebMagic[6] = {'P', 'C', 'E', 'B', '1', '\0'};

bool is_token_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c >= 0x80;
}

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t offset() const { return pos_; }

 private:
  void need(std::size_t n) {
    if (data_.size() - pos_ < n) {
      throw PcebError(PcebError::Kind::kTruncated,
                      "unexpected EOF at offset " + std::to_string(pos_));
    }
  }

  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace

void EmbeddingTable::insert(std::string id, TextEmbedding e) {
  if (e.values.size() != dim_) {
    throw PcebError(PcebError::Kind::kDimensionMismatch,
                    "dimension mismatch: expected " + std::to_string(dim_) +
                        ", got " + std::to_string(e.values.size()));
  }
  if (entries_.contains(id)) {
    throw PcebError(PcebError::Kind::kDuplicateId, "duplicate id: " + id);
  }
  order_.push_back(id);
  entries_.emplace(std::move(id), std::move(e));
}

const TextEmbedding* EmbeddingTable::find(std::string_view id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> tokenize(std::string_view caption) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : caption) {
    if (is_token_byte(c)) {
      cur.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                           : static_cast<char>(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

TextEmbedding embed_hashed(std::string_view caption) {
  const auto tokens = tokenize(caption);
  if (tokens.empty()) throw ValidationError("empty caption");
  std::vector<double> acc(kTextDim, 0.0);
  for (const auto& t : tokens) {
    const std::uint64_t h = fnv1a64(t);
    acc[h % kTextDim] += (h >> 63) ? -1.0 : 1.0;
  }
  double norm2 = 0.0;
  for (double v : acc) norm2 += v * v;
  if (norm2 == 0.0) {
    // Every token cancelled against another with the opposite sign.
    throw ValidationError("caption hashes to the zero vector");
  }
  const double inv = 1.0 / std::sqrt(norm2);
  TextEmbedding e;
  e.values.resize(kTextDim);
  for (std::size_t i = 0; i < kTextDim; ++i) {
    e.values[i] = static_cast<float>(acc[i] * inv);
  }
  return e;
}

EmbeddingTable load_embedding_table(const std::filesystem::path& path,
                                    std::uint32_t expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding table", path.string());
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}));

  const std::string magic = r.bytes(sizeof(kPcebMagic));
  if (std::memcmp(magic.data(), kPcebMagic, sizeof(kPcebMagic)) != 0) {
    throw PcebError(PcebError::Kind::kBadMagic, "bad magic in " + path.string());
  }
  const auto dim = r.get<std::uint32_t>();
  if (dim != expected_dim) {
    throw PcebError(PcebError::Kind::kDimensionMismatch,
                    "dimension mismatch: expected " +
                        std::to_string(expected_dim) + ", file has " +
                        std::to_string(dim));
  }
  const auto count = r.get<std::uint64_t>();
  EmbeddingTable table(dim, EmbeddingProvenance::kImported);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto id_len = r.get<std::uint32_t>();
    std::string id = r.bytes(id_len);
    TextEmbedding e;
    e.values.resize(dim);
    for (auto& v : e.values) {
      v = r.get<float>();
      if (!std::isfinite(v)) {
        throw DataError("non-finite embedding value for id " + id);
      }
    }
    table.insert(std::move(id), std::move(e));
  }
  return table;
}

void store_embedding_table(const EmbeddingTable& table,
                           const std::filesystem::path& path) {
  std::string out(kPcebMagic, sizeof(kPcebMagic));
  put<std::uint32_t>(out, table.dim());
  put<std::uint64_t>(out, table.size());
  for (const auto& id : table.ids()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out += id;
    for (float v : table.find(id)->values) put<float>(out, v);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write embedding table", path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed", path.string());
}

ResolvedEmbedding resolve_embedding(const PoseSample& sample,
                                    const EmbeddingTable* table,
                                    const ResolveOptions& opts) {
  if (table) {
    if (table->dim() != kTextDim) {
      throw PcebError(PcebError::Kind::kDimensionMismatch,
                      "dimension mismatch: expected 768, table has " +
                          std::to_string(table->dim()));
    }
    if (const TextEmbedding* e = table->find(sample.id)) {
      return {*e, EmbeddingProvenance::kImported};
    }
    if (!opts.allow_hashed_fallback) {
      throw DataError("embedding not found: " + sample.id);
    }
  }
  return {embed_hashed(sample.caption), EmbeddingProvenance::kHashed};
}

}  // namespace posegen
