#include "crosscbr/sparse.hpp"

#include <algorithm>
#include <stdexcept>

namespace crosscbr {

SparseRows to_rows(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseRows out;
  out.cols = cols;
  out.offsets.assign(rows + 1, 0);
  out.indices.reserve(triplets.size());
  out.weights.reserve(triplets.size());
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols) throw std::out_of_range("triplet outside matrix bounds");
    ++out.offsets[t.row + 1];
    out.indices.push_back(t.col);
    out.weights.push_back(t.weight);
  }
  for (std::size_t r = 0; r < rows; ++r) out.offsets[r + 1] += out.offsets[r];
  return out;
}

}  // namespace crosscbr
