#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "crosscbr/dataset.hpp"
#include "crosscbr/matrix.hpp"
#include "crosscbr/sparse.hpp"

// Hot loops of the engine. Each kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::omp`; both produce
// bit-identical results because work is split by output row and every row is
// reduced in the same order. The unqualified entry points dispatch to OpenMP.
namespace crosscbr::kernels {

/// One or two (user, bundle) factor pairs whose inner products are summed.
struct ScoreFactors {
  const Matrix* users_a = nullptr;
  const Matrix* bundles_a = nullptr;
  const Matrix* users_b = nullptr;  // optional second view
  const Matrix* bundles_b = nullptr;
};

namespace serial {
/// out += A * in
void spmm_add(const SparseRows& a, const Matrix& in, Matrix& out);
/// Top-k bundles per user by descending score, ties by ascending id.
/// Bundles listed in masked[j] are never returned for users[j].
std::vector<std::vector<Id>> top_k(const ScoreFactors& f, std::span<const Id> users,
                                   std::span<const std::vector<Id>> masked, std::size_t k);
}  // namespace serial

namespace omp {
void spmm_add(const SparseRows& a, const Matrix& in, Matrix& out);
std::vector<std::vector<Id>> top_k(const ScoreFactors& f, std::span<const Id> users,
                                   std::span<const std::vector<Id>> masked, std::size_t k);
}  // namespace omp

inline void spmm_add(const SparseRows& a, const Matrix& in, Matrix& out) {
  omp::spmm_add(a, in, out);
}

inline std::vector<std::vector<Id>> top_k(const ScoreFactors& f, std::span<const Id> users,
                                          std::span<const std::vector<Id>> masked,
                                          std::size_t k) {
  return omp::top_k(f, users, masked, k);
}

/// Score of one (user, bundle) pair under the given factors.
double score(const ScoreFactors& f, std::size_t user, std::size_t bundle);

/// Ranks one user's scores in place; shared by both variants.
std::vector<Id> rank_row(std::vector<double>& scores, std::span<const Id> masked, std::size_t k);

}  // namespace crosscbr::kernels
