#pragma once

#include <cstdint>

#include "crosscbr/encoder.hpp"

namespace crosscbr {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moments mirroring the embedding tables, plus the global
/// step counter used for bias correction.
struct AdamState {
  EmbeddingState first;
  EmbeddingState second;
  std::uint64_t step = 0;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

AdamState init_adam(const EmbeddingState& params);

/// Lazy (sparse) Adam: only rows with at least one non-zero gradient entry
/// are touched. Untouched rows keep their parameters and moments bit for bit.
/// The step counter advances once per call. Throws NumericalError on a
/// non-finite gradient before modifying anything.
void adam_step(EmbeddingState& params, AdamState& adam, const TableGradients& grads,
               const AdamConfig& config);

}  // namespace crosscbr
