#pragma once

#include <string>
#include <vector>

#include "vst/rng.hpp"
#include "vst/tape.hpp"
#include "vst/tensor.hpp"

namespace vst {

// One GRU cell:
//   z = σ(x·Wz + h·Uz + bz)
//   r = σ(x·Wr + h·Ur + br)
//   h̃ = tanh(x·Wh + (r⊙h)·Uh + bh)
//   h' = z⊙h + (1−z)⊙h̃
struct GruCellParams {
  Tensor Wz, Wr, Wh;  // [input_dim × hidden_dim]
  Tensor Uz, Ur, Uh;  // [hidden_dim × hidden_dim]
  Tensor bz, br, bh;  // [hidden_dim]
  int input_dim = 0;
  int hidden_dim = 0;

  // Glorot-uniform matrices (±√(6/(fan_in+fan_out))), zero biases.
  static GruCellParams init(int input_dim, int hidden_dim, Rng& rng);
  static GruCellParams zeros(int input_dim, int hidden_dim);
  void check() const;  // shape consistency with declared dims

  // Stable tensor naming under a prefix, e.g. "dec.0.Wz".
  std::vector<std::pair<std::string, Tensor*>> named(const std::string& prefix);
  std::vector<std::pair<std::string, const Tensor*>> named(const std::string& prefix) const;
};

// Tape bindings of the nine tensors for one forward pass.
struct GruCellVars {
  Var Wz, Wr, Wh, Uz, Ur, Uh, bz, br, bh;
};

GruCellVars bind_gru(Tape& tape, const GruCellParams& p);

// x: [b×input_dim], h_prev: [b×hidden_dim] → [b×hidden_dim]
Var gru_step(Tape& tape, const GruCellVars& p, Var x, Var h_prev);

struct GruRun {
  std::vector<Var> outputs;  // hidden state after each step
  Var final_state;
};

// Folds gru_step left-to-right; throws on an empty sequence.
GruRun gru_run(Tape& tape, const GruCellVars& p, const std::vector<Var>& inputs, Var h0);

struct StackedRun {
  std::vector<Var> top_outputs;  // full output sequence of the last layer
  std::vector<Var> finals;       // final state of every layer
};

// Layer 0 consumes the inputs; layer i consumes layer i−1's full output
// sequence. Chained dimensions are validated against the bound values.
StackedRun stacked_gru_run(Tape& tape, const std::vector<GruCellVars>& layers, const std::vector<Var>& inputs,
                           const std::vector<Var>& h0_per_layer);

// Token-embedding matrix. Rows are RNG-initialized in ±0.05 unless loaded
// from a pretrained file; gradients flow only when trainable.
struct EmbeddingTable {
  Tensor weights;  // [vocab_size × embed_dim]
  bool trainable = true;

  static EmbeddingTable init(int vocab_size, int embed_dim, Rng& rng);
  int vocab_size() const { return weights.dim(0); }
  int embed_dim() const { return weights.dim(1); }
};

// Binds honoring `trainable`; embed through tape.embed(...).
Var bind_embedding(Tape& tape, const EmbeddingTable& table);

}  // namespace vst
