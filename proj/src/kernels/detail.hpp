#pragma once

#include "crosscbr/kernels.hpp"

namespace crosscbr::kernels {

void check_spmm_shapes(const SparseRows& a, const Matrix& in, const Matrix& out);
void check_factors(const ScoreFactors& f);

inline void spmm_row(const SparseRows& a, const Matrix& in, Matrix& out, std::size_t r) {
  auto dst = out.row(r);
  for (std::size_t e = a.offsets[r]; e < a.offsets[r + 1]; ++e) {
    const double w = a.weights[e];
    const auto src = in.row(a.indices[e]);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w * src[c];
  }
}

inline std::vector<Id> top_k_row(const ScoreFactors& f, Id user, std::span<const Id> masked,
                                 std::size_t k) {
  const std::size_t n = f.bundles_a->rows();
  std::vector<double> scores(n);
  for (std::size_t b = 0; b < n; ++b) scores[b] = score(f, user, b);
  return rank_row(scores, masked, k);
}

}  // namespace crosscbr::kernels
