#include "crosscbr/optimizer.hpp"

#include <cmath>
#include <string>

#include "crosscbr/errors.hpp"

namespace crosscbr {

namespace {

bool row_is_zero(std::span<const double> row) {
  for (double v : row) {
    if (v != 0.0) return false;
  }
  return true;
}

void check_finite(const Matrix& g, const char* table) {
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (double v : g.row(r)) {
      if (!std::isfinite(v)) {
        throw NumericalError(std::string("non-finite gradient in ") + table + " table, row " +
                             std::to_string(r));
      }
    }
  }
}

void update_table(Matrix& param, Matrix& m, Matrix& v, const Matrix& grad, const AdamConfig& c,
                  double bias1, double bias2) {
  for (std::size_t r = 0; r < grad.rows(); ++r) {
    const auto g = grad.row(r);
    if (row_is_zero(g)) continue;
    auto p = param.row(r);
    auto mr = m.row(r);
    auto vr = v.row(r);
    for (std::size_t k = 0; k < g.size(); ++k) {
      mr[k] = c.beta1 * mr[k] + (1.0 - c.beta1) * g[k];
      vr[k] = c.beta2 * vr[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double m_hat = mr[k] / bias1;
      const double v_hat = vr[k] / bias2;
      p[k] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

}  // namespace

AdamState init_adam(const EmbeddingState& params) {
  const auto zeros = [](const Matrix& m) { return Matrix(m.rows(), m.cols()); };
  EmbeddingState z{zeros(params.users), zeros(params.bundles), zeros(params.items)};
  return AdamState{z, z, 0};
}

void adam_step(EmbeddingState& params, AdamState& adam, const TableGradients& grads,
               const AdamConfig& config) {
  params.users.require_same_shape(grads.users, "adam_step(users)");
  params.bundles.require_same_shape(grads.bundles, "adam_step(bundles)");
  params.items.require_same_shape(grads.items, "adam_step(items)");
  check_finite(grads.users, "user");
  check_finite(grads.bundles, "bundle");
  check_finite(grads.items, "item");

  ++adam.step;
  const double t = static_cast<double>(adam.step);
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);
  update_table(params.users, adam.first.users, adam.second.users, grads.users, config, bias1, bias2);
  update_table(params.bundles, adam.first.bundles, adam.second.bundles, grads.bundles, config,
               bias1, bias2);
  update_table(params.items, adam.first.items, adam.second.items, grads.items, config, bias1,
               bias2);
}

}  // namespace crosscbr
