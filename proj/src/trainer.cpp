#include "vst/trainer.hpp"

#include <algorithm>
#include <cstring>

#include "vst/errors.hpp"

namespace vst {

Batch assemble_batch(const std::vector<TrainingInstance>& instances, const std::vector<std::size_t>& picks) {
  if (picks.empty()) throw ConfigError("assemble_batch: empty batch");
  const TrainingInstance& first = instances[picks[0]];
  const int tw = first.window_len();
  const int fdim = first.window_features.dim(1);
  const int slots = static_cast<int>(first.curr_ids.size());
  Batch b;
  b.size = static_cast<int>(picks.size());
  b.features = Tensor({b.size, tw, fdim});
  for (std::size_t r = 0; r < picks.size(); ++r) {
    const TrainingInstance& inst = instances[picks[r]];
    if (inst.window_len() != tw) throw ConfigError("assemble_batch: mixed window lengths in one batch");
    std::memcpy(b.features.data() + r * static_cast<std::size_t>(tw) * fdim, inst.window_features.data(),
                sizeof(double) * static_cast<std::size_t>(tw) * fdim);
    b.prev_ids.insert(b.prev_ids.end(), inst.prev_ids.begin(), inst.prev_ids.end());
    b.curr_ids.insert(b.curr_ids.end(), inst.curr_ids.begin(), inst.curr_ids.end());
    b.mask.insert(b.mask.end(), inst.loss_mask.begin(), inst.loss_mask.end());
  }
  (void)slots;
  for (double m : b.mask) b.mask_total += m;
  return b;
}

double batch_loss(const ModelParameters& params, const Batch& batch, bool training, Rng& dropout_rng,
                  NamedTensors* grads_out) {
  Tape tape;
  const bool track = grads_out != nullptr;
  BoundModel bound = bind_model(tape, params, track);

  Var feats = tape.leaf_ref(batch.features);
  std::vector<Var> img_states = encode_images(tape, bound, params.cfg, feats, training, dropout_rng);
  Var sent_state = encode_prev_sentence(tape, bound, params.cfg, batch.prev_ids, batch.size, training, dropout_rng);
  std::vector<Var> init = init_decoder_state(tape, params.cfg, img_states, sent_state);
  std::vector<Var> logits =
      decode_teacher_forced(tape, bound, params.cfg, init, batch.curr_ids, batch.size, training, dropout_rng);
  Var loss = sequence_loss(tape, logits, batch.curr_ids, batch.size, batch.mask);

  const double value = tape.val(loss)[0];
  if (grads_out) {
    tape.backward(loss);
    *grads_out = extract_grads(tape, bound, params);
  }
  return value;
}

double train_epoch(ModelParameters& params, const std::vector<TrainingInstance>& data, const TrainConfig& cfg,
                   AdamState& adam, Rng& shuffle_rng, Rng& dropout_rng) {
  if (data.empty()) throw ConfigError("train_epoch: empty dataset");
  cfg.validate();

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.next_below(i))]);
  }
  // Bucket by window length so each batch is rectangular; shuffle order is
  // preserved within a bucket.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data[a].window_len() < data[b].window_len(); });

  double loss_sum = 0.0;
  double mask_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::vector<std::size_t> picks;
    const int tw = data[order[i]].window_len();
    while (j < order.size() && data[order[j]].window_len() == tw &&
           picks.size() < static_cast<std::size_t>(cfg.batch_size)) {
      picks.push_back(order[j]);
      ++j;
    }
    Batch batch = assemble_batch(data, picks);
    NamedTensors grads;
    const double loss = batch_loss(params, batch, /*training=*/true, dropout_rng, &grads);
    adam_step(params, grads, adam, cfg);
    loss_sum += loss * batch.mask_total;
    mask_sum += batch.mask_total;
    i = j;
  }
  return loss_sum / mask_sum;
}

GradCheckReport model_gradcheck(const ModelParameters& params, const Batch& batch, double epsilon,
                                long max_coords_per_tensor, std::uint64_t sample_seed) {
  NamedTensors named;
  for (const auto& [name, tensor] : params.named_tensors()) named.emplace(name, *tensor);

  ModelParameters scratch = params;
  scratch.embedding.trainable = true;  // check every tensor, frozen or not
  auto apply = [&scratch](const NamedTensors& nt) {
    for (auto& [name, tensor] : scratch.named_tensors()) *tensor = nt.at(name);
  };
  Rng no_dropout(0);
  auto loss_fn = [&](const NamedTensors& nt) {
    apply(nt);
    return batch_loss(scratch, batch, /*training=*/false, no_dropout, nullptr);
  };
  auto grad_fn = [&](const NamedTensors& nt) {
    apply(nt);
    NamedTensors grads;
    batch_loss(scratch, batch, /*training=*/false, no_dropout, &grads);
    return grads;
  };
  return gradcheck(loss_fn, grad_fn, named, epsilon, max_coords_per_tensor, Rng(sample_seed));
}

}  // namespace vst
