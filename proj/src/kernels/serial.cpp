#include "detail.hpp"

namespace crosscbr::kernels::serial {

void spmm_add(const SparseRows& a, const Matrix& in, Matrix& out) {
  check_spmm_shapes(a, in, out);
  for (std::size_t r = 0; r < a.rows(); ++r) spmm_row(a, in, out, r);
}

std::vector<std::vector<Id>> top_k(const ScoreFactors& f, std::span<const Id> users,
                                   std::span<const std::vector<Id>> masked, std::size_t k) {
  check_factors(f);
  std::vector<std::vector<Id>> out(users.size());
  for (std::size_t j = 0; j < users.size(); ++j) out[j] = top_k_row(f, users[j], masked[j], k);
  return out;
}

}  // namespace crosscbr::kernels::serial
