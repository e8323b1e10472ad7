#include "vst/model.hpp"

#include <cmath>
#include <cstring>

#include "vst/errors.hpp"

namespace vst {

void ModelConfig::validate() const {
  if (dec_hidden != img_hidden + sent_hidden) {
    throw ConfigError("decoder hidden width " + std::to_string(dec_hidden) + " must equal img_hidden + sent_hidden = " +
                      std::to_string(img_hidden + sent_hidden));
  }
  if (img_layers != 2 || dec_layers != 2) {
    throw ConfigError("architecture is fixed at 2 image-encoder and 2 decoder layers");
  }
  if (window < 1) throw ConfigError("window must be >= 1");
  if (max_sentence_len < 1) throw ConfigError("max_sentence_len must be >= 1");
  if (vocab_size <= 4) throw ConfigError("vocabulary must contain at least one word beyond the control tokens");
  if (feature_dim < 1 || embed_dim < 1 || img_hidden < 1 || sent_hidden < 1) {
    throw ConfigError("all model dims must be positive");
  }
  if (dropout_in < 0.0 || dropout_in >= 1.0 || dropout_pre_softmax < 0.0 || dropout_pre_softmax >= 1.0) {
    throw ConfigError("dropout rates must lie in [0, 1)");
  }
}

ModelConfig ModelConfig::toy(int vocab_size) {
  ModelConfig c;
  c.feature_dim = 16;
  c.embed_dim = 8;
  c.img_hidden = 8;
  c.sent_hidden = 4;
  c.dec_hidden = 12;
  c.vocab_size = vocab_size;
  return c;
}

ModelParameters ModelParameters::init(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ModelParameters p;
  p.cfg = cfg;
  p.embedding = EmbeddingTable::init(cfg.vocab_size, cfg.embed_dim, rng);
  p.img_encoder.push_back(GruCellParams::init(cfg.feature_dim, cfg.img_hidden, rng));
  p.img_encoder.push_back(GruCellParams::init(cfg.img_hidden, cfg.img_hidden, rng));
  p.sent_encoder = GruCellParams::init(cfg.embed_dim, cfg.sent_hidden, rng);
  p.decoder.push_back(GruCellParams::init(cfg.embed_dim, cfg.dec_hidden, rng));
  p.decoder.push_back(GruCellParams::init(cfg.dec_hidden, cfg.dec_hidden, rng));
  const double bound = std::sqrt(6.0 / (cfg.dec_hidden + cfg.vocab_size));
  p.w_out = Tensor({cfg.dec_hidden, cfg.vocab_size});
  for (std::size_t i = 0; i < p.w_out.numel(); ++i) p.w_out[i] = rng.uniform(-bound, bound);
  p.b_out = Tensor({cfg.vocab_size});
  return p;
}

std::vector<std::pair<std::string, Tensor*>> ModelParameters::named_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  out.emplace_back("embedding", &embedding.weights);
  for (std::size_t i = 0; i < img_encoder.size(); ++i) {
    for (auto& [name, t] : img_encoder[i].named("img_enc." + std::to_string(i))) out.emplace_back(name, t);
  }
  for (auto& [name, t] : sent_encoder.named("sent_enc")) out.emplace_back(name, t);
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    for (auto& [name, t] : decoder[i].named("dec." + std::to_string(i))) out.emplace_back(name, t);
  }
  out.emplace_back("w_out", &w_out);
  out.emplace_back("b_out", &b_out);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> ModelParameters::named_tensors() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<ModelParameters*>(this)->named_tensors()) out.emplace_back(name, t);
  return out;
}

Tensor* ModelParameters::find(const std::string& name) {
  for (auto& [n, t] : named_tensors()) {
    if (n == name) return t;
  }
  return nullptr;
}

namespace {
GruCellVars bind_gru_const(Tape& tape, const GruCellParams& p) {
  GruCellVars v;
  v.Wz = tape.leaf_ref(p.Wz);
  v.Wr = tape.leaf_ref(p.Wr);
  v.Wh = tape.leaf_ref(p.Wh);
  v.Uz = tape.leaf_ref(p.Uz);
  v.Ur = tape.leaf_ref(p.Ur);
  v.Uh = tape.leaf_ref(p.Uh);
  v.bz = tape.leaf_ref(p.bz);
  v.br = tape.leaf_ref(p.br);
  v.bh = tape.leaf_ref(p.bh);
  return v;
}
}  // namespace

BoundModel bind_model(Tape& tape, const ModelParameters& params, bool for_training) {
  BoundModel b;
  if (for_training) {
    b.embedding_tracked = params.embedding.trainable;
    b.embedding = bind_embedding(tape, params.embedding);
    for (const auto& cell : params.img_encoder) b.img_encoder.push_back(bind_gru(tape, cell));
    b.sent_encoder = bind_gru(tape, params.sent_encoder);
    for (const auto& cell : params.decoder) b.decoder.push_back(bind_gru(tape, cell));
    b.w_out = tape.param(params.w_out);
    b.b_out = tape.param(params.b_out);
  } else {
    b.embedding = tape.leaf_ref(params.embedding.weights);
    for (const auto& cell : params.img_encoder) b.img_encoder.push_back(bind_gru_const(tape, cell));
    b.sent_encoder = bind_gru_const(tape, params.sent_encoder);
    for (const auto& cell : params.decoder) b.decoder.push_back(bind_gru_const(tape, cell));
    b.w_out = tape.leaf_ref(params.w_out);
    b.b_out = tape.leaf_ref(params.b_out);
  }
  return b;
}

NamedTensors extract_grads(const Tape& tape, const BoundModel& bound, const ModelParameters& params) {
  NamedTensors grads;
  auto take_cell = [&](const GruCellVars& v, const std::string& prefix) {
    grads.emplace(prefix + ".Wz", tape.grad(v.Wz));
    grads.emplace(prefix + ".Wr", tape.grad(v.Wr));
    grads.emplace(prefix + ".Wh", tape.grad(v.Wh));
    grads.emplace(prefix + ".Uz", tape.grad(v.Uz));
    grads.emplace(prefix + ".Ur", tape.grad(v.Ur));
    grads.emplace(prefix + ".Uh", tape.grad(v.Uh));
    grads.emplace(prefix + ".bz", tape.grad(v.bz));
    grads.emplace(prefix + ".br", tape.grad(v.br));
    grads.emplace(prefix + ".bh", tape.grad(v.bh));
  };
  if (bound.embedding_tracked) grads.emplace("embedding", tape.grad(bound.embedding));
  for (std::size_t i = 0; i < bound.img_encoder.size(); ++i) {
    take_cell(bound.img_encoder[i], "img_enc." + std::to_string(i));
  }
  take_cell(bound.sent_encoder, "sent_enc");
  for (std::size_t i = 0; i < bound.decoder.size(); ++i) {
    take_cell(bound.decoder[i], "dec." + std::to_string(i));
  }
  grads.emplace("w_out", tape.grad(bound.w_out));
  grads.emplace("b_out", tape.grad(bound.b_out));
  (void)params;
  return grads;
}

std::vector<Var> encode_images(Tape& tape, const BoundModel& bound, const ModelConfig& cfg, Var window_features,
                               bool training, Rng& rng) {
  const Tensor& feats = tape.val(window_features);
  if (feats.rank() != 3 || feats.dim(2) != cfg.feature_dim) {
    throw DimError("encode_images: expected [b×T×" + std::to_string(cfg.feature_dim) + "], got " + feats.shape_str());
  }
  const int b = feats.dim(0), T = feats.dim(1);
  if (T < 1) throw DataError("encode_images: empty image window");
  if (T > cfg.window) {
    throw DataError("encode_images: window of " + std::to_string(T) + " images exceeds configured " +
                    std::to_string(cfg.window));
  }
  Var x = tape.dropout(window_features, cfg.dropout_in, rng, training);
  std::vector<Var> steps;
  steps.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) steps.push_back(tape.slice_time(x, t));
  std::vector<Var> h0(bound.img_encoder.size(), tape.leaf(Tensor({b, cfg.img_hidden})));
  StackedRun run = stacked_gru_run(tape, bound.img_encoder, steps, h0);
  return run.finals;
}

Var encode_prev_sentence(Tape& tape, const BoundModel& bound, const ModelConfig& cfg, const std::vector<int>& prev_ids,
                         int batch, bool training, Rng& rng) {
  const int slots = cfg.slots();
  if (static_cast<int>(prev_ids.size()) != batch * slots) {
    throw DimError("encode_prev_sentence: expected " + std::to_string(batch * slots) + " ids, got " +
                   std::to_string(prev_ids.size()));
  }
  Var e = tape.embed(bound.embedding, prev_ids, batch, slots);
  Var x = tape.dropout(e, cfg.dropout_in, rng, training);
  std::vector<Var> steps;
  steps.reserve(static_cast<std::size_t>(slots));
  for (int t = 0; t < slots; ++t) steps.push_back(tape.slice_time(x, t));
  Var h0 = tape.leaf(Tensor({batch, cfg.sent_hidden}));
  return gru_run(tape, bound.sent_encoder, steps, h0).final_state;
}

std::vector<Var> init_decoder_state(Tape& tape, const ModelConfig& cfg, const std::vector<Var>& img_states,
                                    Var sent_state) {
  if (static_cast<int>(img_states.size()) != cfg.dec_layers) {
    throw ConfigError("init_decoder_state: need one image state per decoder layer");
  }
  std::vector<Var> states;
  states.reserve(img_states.size());
  for (Var s : img_states) {
    Var cat = tape.concat_cols(s, sent_state);
    if (tape.val(cat).dim(1) != cfg.dec_hidden) {
      throw ConfigError("init_decoder_state: concatenated width " + std::to_string(tape.val(cat).dim(1)) +
                        " != dec_hidden " + std::to_string(cfg.dec_hidden));
    }
    states.push_back(cat);
  }
  return states;
}

std::vector<Var> decode_teacher_forced(Tape& tape, const BoundModel& bound, const ModelConfig& cfg,
                                       const std::vector<Var>& init_states, const std::vector<int>& curr_ids,
                                       int batch, bool training, Rng& rng) {
  const int slots = cfg.slots();
  if (static_cast<int>(curr_ids.size()) != batch * slots) {
    throw DimError("decode_teacher_forced: expected " + std::to_string(batch * slots) + " ids");
  }
  for (int r = 0; r < batch; ++r) {
    if (curr_ids[static_cast<std::size_t>(r) * slots] != 1) {
      throw DataError("decode_teacher_forced: row " + std::to_string(r) + " does not begin with START");
    }
  }
  Var e = tape.embed(bound.embedding, curr_ids, batch, slots);
  Var x = tape.dropout(e, cfg.dropout_in, rng, training);
  std::vector<Var> steps;
  steps.reserve(static_cast<std::size_t>(slots - 1));
  for (int t = 0; t < slots - 1; ++t) steps.push_back(tape.slice_time(x, t));
  StackedRun run = stacked_gru_run(tape, bound.decoder, steps, init_states);

  std::vector<Var> logits;
  logits.reserve(run.top_outputs.size());
  for (Var h : run.top_outputs) {
    Var hd = tape.dropout(h, cfg.dropout_pre_softmax, rng, training);
    logits.push_back(tape.add(tape.matmul(hd, bound.w_out), bound.b_out));
  }
  return logits;
}

Var sequence_loss(Tape& tape, const std::vector<Var>& step_logits, const std::vector<int>& curr_ids, int batch,
                  const std::vector<double>& loss_mask) {
  const int steps = static_cast<int>(step_logits.size());
  const int slots = steps + 1;
  if (static_cast<int>(loss_mask.size()) != batch * steps) {
    throw DimError("sequence_loss: mask size " + std::to_string(loss_mask.size()) + " != batch*steps");
  }
  double total_mask = 0.0;
  for (double m : loss_mask) total_mask += m;
  if (total_mask == 0.0) throw DataError("sequence_loss: degenerate batch, all-zero mask");

  Var acc{};
  for (int t = 0; t < steps; ++t) {
    std::vector<int> targets(static_cast<std::size_t>(batch));
    std::vector<double> mask(static_cast<std::size_t>(batch));
    for (int r = 0; r < batch; ++r) {
      targets[static_cast<std::size_t>(r)] = curr_ids[static_cast<std::size_t>(r) * slots + t + 1];
      mask[static_cast<std::size_t>(r)] = loss_mask[static_cast<std::size_t>(r) * steps + t];
    }
    Var probs = tape.softmax_rows(step_logits[static_cast<std::size_t>(t)]);
    Var part = tape.ce_masked_sum(probs, targets, mask);
    acc = t == 0 ? part : tape.add(acc, part);
  }
  return tape.scale(acc, 1.0 / total_mask);
}

DecodeStep decode_step(const ModelParameters& params, const std::vector<Tensor>& states,
                       const std::vector<int>& token_ids) {
  const ModelConfig& cfg = params.cfg;
  const int b = static_cast<int>(token_ids.size());
  if (static_cast<int>(states.size()) != cfg.dec_layers) {
    throw ConfigError("decode_step: need one state per decoder layer");
  }
  for (const Tensor& s : states) {
    if (s.rank() != 2 || s.dim(0) != b || s.dim(1) != cfg.dec_hidden) {
      throw DimError("decode_step: state shape " + s.shape_str() + " does not match batch/dec_hidden");
    }
  }
  Tape tape;
  BoundModel bound = bind_model(tape, params, /*for_training=*/false);

  Var e = tape.embed(bound.embedding, token_ids, b, 1);
  Var x = tape.slice_time(e, 0);
  DecodeStep out;
  Var h = x;
  for (int layer = 0; layer < cfg.dec_layers; ++layer) {
    Var h_prev = tape.leaf_ref(states[static_cast<std::size_t>(layer)]);
    h = gru_step(tape, bound.decoder[static_cast<std::size_t>(layer)], h, h_prev);
    out.states.push_back(tape.val(h));
  }
  Var logits = tape.add(tape.matmul(h, bound.w_out), bound.b_out);
  Var probs = tape.softmax_rows(logits);
  out.probs = tape.val(probs);
  return out;
}

Tensor collect_logits(const Tape& tape, const std::vector<Var>& step_logits) {
  const Tensor& first = tape.val(step_logits.front());
  const int b = first.dim(0), V = first.dim(1);
  const int T = static_cast<int>(step_logits.size());
  Tensor out({b, T, V});
  for (int t = 0; t < T; ++t) {
    const Tensor& lt = tape.val(step_logits[static_cast<std::size_t>(t)]);
    for (int r = 0; r < b; ++r) {
      std::memcpy(out.data() + (static_cast<std::size_t>(r) * T + t) * V,
                  lt.data() + static_cast<std::size_t>(r) * V, sizeof(double) * static_cast<std::size_t>(V));
    }
  }
  return out;
}

}  // namespace vst
