#include <algorithm>
#include <limits>

#include "detail.hpp"

namespace crosscbr::kernels {

double score(const ScoreFactors& f, std::size_t user, std::size_t bundle) {
  double s = dot(f.users_a->row(user), f.bundles_a->row(bundle));
  if (f.users_b != nullptr) s += dot(f.users_b->row(user), f.bundles_b->row(bundle));
  return s;
}

std::vector<Id> rank_row(std::vector<double>& scores, std::span<const Id> masked, std::size_t k) {
  constexpr double kMasked = -std::numeric_limits<double>::infinity();
  for (Id b : masked) scores[b] = kMasked;
  std::vector<Id> order;
  order.reserve(scores.size());
  for (std::size_t b = 0; b < scores.size(); ++b) {
    if (scores[b] != kMasked) order.push_back(static_cast<Id>(b));
  }
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&scores](Id a, Id b) {
                      return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
                    });
  order.resize(take);
  return order;
}

void check_spmm_shapes(const SparseRows& a, const Matrix& in, const Matrix& out) {
  if (a.rows() != out.rows() || a.cols != in.rows() || in.cols() != out.cols()) {
    throw std::invalid_argument("spmm: shape mismatch (" + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols) + ") * " + in.shape_string() + " -> " +
                                out.shape_string());
  }
}

void check_factors(const ScoreFactors& f) {
  if (f.users_a == nullptr || f.bundles_a == nullptr ||
      (f.users_b == nullptr) != (f.bundles_b == nullptr)) {
    throw std::invalid_argument("top_k: incomplete score factors");
  }
}

}  // namespace crosscbr::kernels
