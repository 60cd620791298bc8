#include <omp.h>

#include <cstdint>

#include "detail.hpp"

namespace crosscbr::kernels::omp {

void spmm_add(const SparseRows& a, const Matrix& in, Matrix& out) {
  check_spmm_shapes(a, in, out);
  const auto rows = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t r = 0; r < rows; ++r) spmm_row(a, in, out, static_cast<std::size_t>(r));
}

std::vector<std::vector<Id>> top_k(const ScoreFactors& f, std::span<const Id> users,
                                   std::span<const std::vector<Id>> masked, std::size_t k) {
  check_factors(f);
  std::vector<std::vector<Id>> out(users.size());
  const auto n = static_cast<std::int64_t>(users.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t j = 0; j < n; ++j) {
    out[j] = top_k_row(f, users[j], masked[j], k);
  }
  return out;
}

}  // namespace crosscbr::kernels::omp
