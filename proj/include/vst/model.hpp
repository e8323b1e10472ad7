#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vst/gradcheck.hpp"
#include "vst/gru.hpp"
#include "vst/rng.hpp"
#include "vst/tape.hpp"
#include "vst/tensor.hpp"

namespace vst {

struct ModelConfig {
  int feature_dim = 4096;
  int embed_dim = 300;
  int img_hidden = 1024;
  int sent_hidden = 512;
  int dec_hidden = 1536;
  int img_layers = 2;  // fixed by the architecture
  int dec_layers = 2;
  int vocab_size = 0;
  int max_sentence_len = 20;
  int window = 3;
  double dropout_in = 0.3;
  double dropout_pre_softmax = 0.5;

  int slots() const { return max_sentence_len + 2; }  // START + words + END/padding
  // Rejects misconfigured dims at construction time; in particular
  // dec_hidden must equal img_hidden + sent_hidden (state concatenation).
  void validate() const;

  // Small dims for fast runs: features 16, hidden 8/4/12, embed 8.
  static ModelConfig toy(int vocab_size);
};

// Every trainable tensor of the model, under stable names.
struct ModelParameters {
  ModelConfig cfg;
  EmbeddingTable embedding;                // [vocab × embed]
  std::vector<GruCellParams> img_encoder;  // feature→img_hidden, img_hidden→img_hidden
  GruCellParams sent_encoder;              // embed→sent_hidden (single layer)
  std::vector<GruCellParams> decoder;      // embed→dec_hidden, dec_hidden→dec_hidden
  Tensor w_out;                            // [dec_hidden × vocab]
  Tensor b_out;                            // [vocab]

  static ModelParameters init(const ModelConfig& cfg, Rng& rng);

  // Stable (name, tensor) listing; the order is the serialization order.
  std::vector<std::pair<std::string, Tensor*>> named_tensors();
  std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
  Tensor* find(const std::string& name);
};

// Per-pass tape bindings. Training binds parameters with gradients;
// inference binds aliased constants.
struct BoundModel {
  std::vector<GruCellVars> img_encoder;
  GruCellVars sent_encoder;
  std::vector<GruCellVars> decoder;
  Var embedding, w_out, b_out;
  bool embedding_tracked = false;
};

BoundModel bind_model(Tape& tape, const ModelParameters& params, bool for_training);

// Gradients of every tracked parameter after tape.backward().
NamedTensors extract_grads(const Tape& tape, const BoundModel& bound, const ModelParameters& params);

// window_features: [b×T_w×feature_dim], 1 ≤ T_w ≤ cfg.window.
// Returns the final state of each image-encoder layer, [b×img_hidden] each.
std::vector<Var> encode_images(Tape& tape, const BoundModel& bound, const ModelConfig& cfg, Var window_features,
                               bool training, Rng& rng);

// prev_ids: b rows × slots() token ids, flattened row-major.
Var encode_prev_sentence(Tape& tape, const BoundModel& bound, const ModelConfig& cfg, const std::vector<int>& prev_ids,
                         int batch, bool training, Rng& rng);

// Decoder layer i starts from concat(img_states[i], sent_state); the
// sentence state is shared across layers.
std::vector<Var> init_decoder_state(Tape& tape, const ModelConfig& cfg, const std::vector<Var>& img_states,
                                    Var sent_state);

// curr_ids: b rows × slots() ids, each row starting with START. Consumes
// slots 0..slots−2 and returns one logits Var [b×vocab] per prediction step
// (slots−1 of them).
std::vector<Var> decode_teacher_forced(Tape& tape, const BoundModel& bound, const ModelConfig& cfg,
                                       const std::vector<Var>& init_states, const std::vector<int>& curr_ids,
                                       int batch, bool training, Rng& rng);

// Masked categorical cross-entropy over the prediction steps.
// targets: curr_ids shifted by one; mask: b×(slots−1) flattened, step-major
// order is (step, row). Returns scalar Var.
Var sequence_loss(Tape& tape, const std::vector<Var>& step_logits, const std::vector<int>& curr_ids, int batch,
                  const std::vector<double>& loss_mask);

// Single greedy-decoding step in inference mode.
struct DecodeStep {
  std::vector<Tensor> states;  // one per decoder layer
  Tensor probs;                // [b×vocab], rows sum to 1
};
DecodeStep decode_step(const ModelParameters& params, const std::vector<Tensor>& states,
                       const std::vector<int>& token_ids);

// [T×b×V] step logits collected to a [b×T×V] tensor (testing convenience).
Tensor collect_logits(const Tape& tape, const std::vector<Var>& step_logits);

}  // namespace vst
