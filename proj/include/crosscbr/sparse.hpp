#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace crosscbr {

/// Compressed sparse rows. Column ids within a row are ascending, which fixes
/// the accumulation order of every product.
struct SparseRows {
  std::size_t cols = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> indices;
  std::vector<double> weights;

  std::size_t rows() const { return offsets.size() - 1; }
  std::size_t nnz() const { return indices.size(); }
};

struct Triplet {
  std::uint32_t row;
  std::uint32_t col;
  double weight;
};

/// Builds CSR from triplets; duplicates are not merged.
SparseRows to_rows(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);

}  // namespace crosscbr
