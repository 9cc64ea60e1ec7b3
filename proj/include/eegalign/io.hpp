#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "eegalign/core.hpp"

namespace eegalign::io {

// Container layout: "LTNS", version 1, dtype, ndim, reserved 0, ndim x u64 dims
// (little endian), row-major little-endian payload.
enum class DType : std::uint8_t { Float32 = 1, Float64 = 2 };

inline constexpr std::size_t kHeaderFixedBytes = 8;

struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<double> values;
  DType dtype = DType::Float64;

  std::size_t size() const;
};

Tensor make_tensor(const RowMatrix& m, DType dtype = DType::Float64);
RowMatrix to_matrix(const Tensor& t);  // rank 1 -> row vector, rank >= 2 -> [d0 x prod(rest)]

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");

void write_tensor(const std::filesystem::path& path, const Tensor& t);
inline void write_tensor(const std::filesystem::path& path, const RowMatrix& m,
                         DType dtype = DType::Float64) {
  write_tensor(path, make_tensor(m, dtype));
}
Tensor read_tensor(const std::filesystem::path& path);

struct TensorHeader {
  std::vector<std::uint64_t> dims;
  DType dtype = DType::Float64;
  std::size_t payload_offset = 0;
};
TensorHeader read_tensor_header(const std::filesystem::path& path);
// Reads the index-th slice along axis 0 without loading the rest of the payload.
std::vector<double> read_tensor_row(const std::filesystem::path& path, std::size_t index);

struct AlignmentTable {
  std::vector<WordAlignment> rows;
  std::vector<std::string> warnings;
};

AlignmentTable parse_alignments(const std::string& text, const std::string& origin = "<memory>");
AlignmentTable read_alignments(const std::filesystem::path& path);
void write_alignments(const std::filesystem::path& path, std::span<const WordAlignment> rows);

std::vector<std::string> read_lines(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace eegalign::io
