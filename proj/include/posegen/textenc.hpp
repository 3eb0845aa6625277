#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "posegen/error.hpp"
#include "posegen/skeleton.hpp"

namespace posegen {

inline constexpr std::size_t kTextDim = 768;

// Caption embedding e_C. Always kTextDim finite floats.
struct TextEmbedding {
  std::vector<float> values;

  friend bool operator==(const TextEmbedding&, const TextEmbedding&) = default;
};

enum class EmbeddingProvenance { kHashed, kImported };

class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::uint32_t dim = kTextDim,
                          EmbeddingProvenance provenance =
                              EmbeddingProvenance::kImported)
      : dim_(dim), provenance_(provenance) {}

  std::uint32_t dim() const { return dim_; }
  EmbeddingProvenance provenance() const { return provenance_; }
  std::size_t size() const { return order_.size(); }

  // Throws DataError on a duplicate id or wrong dimension.
  void insert(std::string id, TextEmbedding e);
  const TextEmbedding* find(std::string_view id) const;
  // Ids in insertion order, which is also the on-disk order.
  const std::vector<std::string>& ids() const { return order_; }

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.dim_ == b.dim_ && a.order_ == b.order_ && a.entries_ == b.entries_;
  }

 private:
  std::uint32_t dim_;
  EmbeddingProvenance provenance_;
  std::vector<std::string> order_;
  std::map<std::string, TextEmbedding, std::less<>> entries_;
};

class PcebError : public DataError {
 public:
  enum class Kind { kBadMagic, kDimensionMismatch, kTruncated, kDuplicateId };
  PcebError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind error_kind() const { return kind_; }
  const char* kind() const noexcept override { return "pceb_error"; }

 private:
  Kind kind_;
};

std::uint64_t fnv1a64(std::string_view bytes);

// Lowercased tokens split on ASCII non-alphanumerics. Bytes >= 0x80 are kept
// inside tokens so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view caption);

// Signed hashed bag of tokens, l2-normalized. Throws ValidationError("empty
// caption") when no token survives tokenization.
TextEmbedding embed_hashed(std::string_view caption);

EmbeddingTable load_embedding_table(const std::filesystem::path& path,
                                    std::uint32_t expected_dim = kTextDim);
void store_embedding_table(const EmbeddingTable& table,
                           const std::filesystem::path& path);

struct ResolveOptions {
  bool allow_hashed_fallback = true;
};

struct ResolvedEmbedding {
  TextEmbedding embedding;
  EmbeddingProvenance source;
};

ResolvedEmbedding resolve_embedding(const PoseSample& sample,
                                    const EmbeddingTable* table,
                                    const ResolveOptions& opts = {});

}  // namespace posegen
