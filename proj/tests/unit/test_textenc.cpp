#include <cmath>
#include <cstring>
#include <fstream>

#include "doctest.h"
#include "posegen/checkpoint.hpp"
#include "posegen/textenc.hpp"
#include "support.hpp"

using namespace posegen;

namespace {

// Independent FNV-1a and bag-of-tokens twin.
std::uint64_t fnv_oracle(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<double> embed_oracle(const std::string& caption) {
  std::vector<double> acc(768, 0.0);
  std::string tok;
  auto flush = [&] {
    if (tok.empty()) return;
    const auto h = fnv_oracle(tok);
    acc[h % 768] += (h & (1ULL << 63)) ? -1.0 : 1.0;
    tok.clear();
  };
  for (unsigned char c : caption) {
    if (std::isalnum(c) || c >= 0x80) {
      tok.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  double n = 0;
  for (double v : acc) n += v * v;
  for (double& v : acc) v /= std::sqrt(n);
  return acc;
}

double cosine(const TextEmbedding& a, const TextEmbedding& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  return s;
}

TextEmbedding ramp(float base) {
  TextEmbedding e;
  for (std::size_t i = 0; i < kTextDim; ++i) e.values.push_back(base + 0.001f * i);
  return e;
}

template <class T>
void put(std::string& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

}  // namespace

TEST_SUITE("textenc") {

TEST_CASE("fnv1a64 published vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("tokenize") {
  CHECK(tokenize("Left-arm RAISED, 2x!") ==
        std::vector<std::string>{"left", "arm", "raised", "2x"});
  CHECK(tokenize("  ...  ").empty());
  CHECK(tokenize("caf\xc3\xa9 ok") == std::vector<std::string>{"caf\xc3\xa9", "ok"});
}

TEST_CASE("embed_hashed matches an independent implementation") {
  for (const char* c : {"left arm raised", "right arm raised",
                        "a person sitting with the left arm extended sideways",
                        "The Figure, WALKING; head turned left"}) {
    const auto e = embed_hashed(c);
    const auto o = embed_oracle(c);
    REQUIRE(e.values.size() == 768);
    for (std::size_t i = 0; i < 768; ++i) CHECK(e.values[i] == doctest::Approx(o[i]).epsilon(1e-6));
  }
}

TEST_CASE("embed_hashed examples") {
  const auto a = embed_hashed("left arm raised");
  const auto b = embed_hashed("left arm raised");
  CHECK(a == b);
  double n = 0;
  for (float v : a.values) n += double(v) * v;
  CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-6);
  CHECK(cosine(a, embed_hashed("right arm raised")) < 1.0 - 1e-6);
  CHECK_THROWS_WITH_AS(embed_hashed(""), "empty caption", ValidationError);
  CHECK_THROWS_AS(embed_hashed(" \t "), ValidationError);
}

TEST_CASE("embed_hashed has unit norm over many captions") {
  const char* words[] = {"a", "person", "left", "right", "arm", "raised", "down",
                         "walking", "sitting", "torso", "head", "turned"};
  for (int i = 1; i < 400; ++i) {
    std::string c;
    for (int k = 0; k < 12; ++k) {
      if ((i >> (k % 9)) & 1) c += std::string(words[(i + k) % 12]) + " ";
    }
    if (tokenize(c).empty()) continue;
    const auto e = embed_hashed(c);
    double n = 0;
    for (float v : e.values) n += double(v) * v;
    CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-6);
  }
}

TEST_CASE("PCEB round trip") {
  testing::TempDir dir;
  EmbeddingTable t;
  t.insert("a", ramp(0.1f));
  t.insert("b\xc3\xa9", ramp(-0.2f));
  store_embedding_table(t, dir / "t.pceb");
  const auto back = load_embedding_table(dir / "t.pceb");
  CHECK(back == t);
  CHECK(back.ids() == std::vector<std::string>{"a", "b\xc3\xa9"});

  const auto bytes = read_file(dir / "t.pceb");
  CHECK(bytes.size() == 6 + 4 + 8 + 2 * (4 + 768 * 4) + 1 + 3);
  CHECK(std::memcmp(bytes.data(), "PCEB1\0", 6) == 0);

  EmbeddingTable empty;
  store_embedding_table(empty, dir / "e.pceb");
  CHECK(load_embedding_table(dir / "e.pceb").size() == 0);
  CHECK(read_file(dir / "e.pceb").size() == 18);
}

TEST_CASE("PCEB errors are distinct") {
  testing::TempDir dir;
  auto kind_of = [&](const std::string& bytes, std::uint32_t dim = 768) {
    write_file(dir / "x.pceb", bytes);
    try {
      load_embedding_table(dir / "x.pceb", dim);
    } catch (const PcebError& e) {
      return e.error_kind();
    }
    FAIL("no error");
    return PcebError::Kind::kBadMagic;
  };

  std::string header(std::string_view("PCEB1\0", 6));
  std::string bad = "PCEB2";
  bad.push_back('\0');
  put<std::uint32_t>(bad, 768);
  put<std::uint64_t>(bad, 0);
  CHECK(kind_of(bad) == PcebError::Kind::kBadMagic);

  std::string dim512 = header;
  put<std::uint32_t>(dim512, 512);
  put<std::uint64_t>(dim512, 0);
  CHECK(kind_of(dim512) == PcebError::Kind::kDimensionMismatch);
  write_file(dir / "d.pceb", dim512);
  CHECK_THROWS_WITH_AS(load_embedding_table(dir / "d.pceb"),
                       doctest::Contains("dimension mismatch"), PcebError);

  std::string trunc = header;
  put<std::uint32_t>(trunc, 768);
  put<std::uint64_t>(trunc, 1);
  put<std::uint32_t>(trunc, 1);
  trunc += "a";
  trunc.append(100, '\0');
  CHECK(kind_of(trunc) == PcebError::Kind::kTruncated);

  std::string dup = header;
  put<std::uint32_t>(dup, 2);
  put<std::uint64_t>(dup, 2);
  for (int i = 0; i < 2; ++i) {
    put<std::uint32_t>(dup, 1);
    dup += "z";
    put<float>(dup, 0.6f);
    put<float>(dup, 0.8f);
  }
  CHECK(kind_of(dup, 2) == PcebError::Kind::kDuplicateId);

  CHECK_THROWS_AS(load_embedding_table(dir / "missing.pceb"), IoError);
}

TEST_CASE("table insert checks") {
  EmbeddingTable t;
  t.insert("x", ramp(0));
  CHECK_THROWS_AS(t.insert("x", ramp(0)), DataError);
  TextEmbedding short_e;
  short_e.values.assign(12, 0.f);
  CHECK_THROWS_AS(t.insert("y", short_e), DataError);
}

TEST_CASE("resolve_embedding") {
  PoseSample s;
  s.id = "hit";
  s.caption = "left arm raised";
  EmbeddingTable t;
  t.insert("hit", ramp(0.5f));

  auto r = resolve_embedding(s, &t);
  CHECK(r.source == EmbeddingProvenance::kImported);
  CHECK(r.embedding == ramp(0.5f));

  r = resolve_embedding(s, nullptr);
  CHECK(r.source == EmbeddingProvenance::kHashed);
  CHECK(r.embedding == embed_hashed(s.caption));

  s.id = "miss";
  r = resolve_embedding(s, &t);
  CHECK(r.source == EmbeddingProvenance::kHashed);
  CHECK(r.embedding.values.size() == 768);
  CHECK_THROWS_WITH_AS(resolve_embedding(s, &t, {.allow_hashed_fallback = false}),
                       doctest::Contains("embedding not found"), DataError);
}

}  // TEST_SUITE
