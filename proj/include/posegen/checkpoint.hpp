#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "posegen/tensor.hpp"

namespace posegen {

// PGCK1 parameter file, little-endian:
//   "PGCK1\0", u32 count, then per parameter
//   u32 name length, UTF-8 name, u32 rank, rank x u64 dims, f32 values.
struct NamedTensor {
  std::string name;
  Tensor<float> tensor;
};

std::string encode_checkpoint(const std::vector<NamedTensor>& params);
std::vector<NamedTensor> decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<NamedTensor>& params);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

// Whole-file helpers shared by the binary and text writers.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace posegen
