#pragma once

#include <functional>
#include <vector>

#include "vst/adam.hpp"
#include "vst/dataset.hpp"
#include "vst/gradcheck.hpp"
#include "vst/model.hpp"

namespace vst {

// Instances stacked for one forward/backward pass. All members share the
// same window length.
struct Batch {
  Tensor features;             // [b×T_w×feature_dim]
  std::vector<int> prev_ids;   // b×slots
  std::vector<int> curr_ids;   // b×slots
  std::vector<double> mask;    // b×(slots−1), row-major
  int size = 0;
  double mask_total = 0.0;
};

Batch assemble_batch(const std::vector<TrainingInstance>& instances, const std::vector<std::size_t>& picks);

// Full forward pass: dual encoders → concatenated decoder init → teacher
// forcing → masked cross-entropy. When grads_out is set, also runs backward
// and fills it. Dropout is active only in training mode.
double batch_loss(const ModelParameters& params, const Batch& batch, bool training, Rng& dropout_rng,
                  NamedTensors* grads_out);

// One pass over the data: deterministic shuffle, buckets by window length so
// every batch has uniform sequence length, Adam update per batch. Returns
// the mask-weighted mean loss of the epoch.
double train_epoch(ModelParameters& params, const std::vector<TrainingInstance>& data, const TrainConfig& cfg,
                   AdamState& adam, Rng& shuffle_rng, Rng& dropout_rng);

// Finite-difference check of the full model on one batch (dropout off).
GradCheckReport model_gradcheck(const ModelParameters& params, const Batch& batch, double epsilon,
                                long max_coords_per_tensor, std::uint64_t sample_seed);

}  // namespace vst
