#pragma once

#include <cstdint>

#include "vst/gradcheck.hpp"
#include "vst/model.hpp"

namespace vst {

struct TrainConfig {
  double learning_rate = 0.0001;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 32;
  int epochs = 1;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // epochs; 0 = only at the end

  void validate() const;
};

struct AdamState {
  NamedTensors m, v;  // first/second moments, shapes mirror the parameters
  long t = 0;

  static AdamState for_params(const ModelParameters& params);
};

// Bias-corrected Adam: m←β₁m+(1−β₁)g; v←β₂v+(1−β₂)g²; θ←θ−lr·m̂/(√v̂+ε).
// Parameters without an entry in grads (frozen embedding) are untouched.
void adam_step(ModelParameters& params, const NamedTensors& grads, AdamState& state, const TrainConfig& cfg);

}  // namespace vst
