#pragma once

#include <string>

#include "vst/adam.hpp"
#include "vst/model.hpp"
#include "vst/vocab.hpp"

namespace vst {

// Checkpoint file, binary little-endian:
//   magic "VSCK" | u32 version=1 | u32 tensor count
//   per tensor: u16 name length | name | u8 rank | rank × u32 dims | f32 data
//   u32 JSON length | UTF-8 JSON (model config, train config, Adam step,
//   vocabulary tokens, embedding-trainable flag)
// Tensor data is stored at 32-bit precision; the in-memory 64-bit values are
// rounded on save.
struct Checkpoint {
  ModelParameters params;
  AdamState adam;
  Vocabulary vocab;
  TrainConfig train_cfg;
};

void save_checkpoint(const ModelParameters& params, const AdamState& adam, const Vocabulary& vocab,
                     const TrainConfig& train_cfg, const std::string& path);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace vst
