#include "vst/gru.hpp"

#include <cmath>

#include "vst/errors.hpp"

namespace vst {

namespace {
Tensor glorot(int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor t({fan_in, fan_out});
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}
}  // namespace

GruCellParams GruCellParams::init(int input_dim, int hidden_dim, Rng& rng) {
  GruCellParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.Wz = glorot(input_dim, hidden_dim, rng);
  p.Wr = glorot(input_dim, hidden_dim, rng);
  p.Wh = glorot(input_dim, hidden_dim, rng);
  p.Uz = glorot(hidden_dim, hidden_dim, rng);
  p.Ur = glorot(hidden_dim, hidden_dim, rng);
  p.Uh = glorot(hidden_dim, hidden_dim, rng);
  p.bz = Tensor({hidden_dim});
  p.br = Tensor({hidden_dim});
  p.bh = Tensor({hidden_dim});
  return p;
}

GruCellParams GruCellParams::zeros(int input_dim, int hidden_dim) {
  GruCellParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.Wz = Tensor({input_dim, hidden_dim});
  p.Wr = Tensor({input_dim, hidden_dim});
  p.Wh = Tensor({input_dim, hidden_dim});
  p.Uz = Tensor({hidden_dim, hidden_dim});
  p.Ur = Tensor({hidden_dim, hidden_dim});
  p.Uh = Tensor({hidden_dim, hidden_dim});
  p.bz = Tensor({hidden_dim});
  p.br = Tensor({hidden_dim});
  p.bh = Tensor({hidden_dim});
  return p;
}

void GruCellParams::check() const {
  auto expect = [](const Tensor& t, std::vector<int> shape, const char* name) {
    if (t.shape() != shape) {
      throw ConfigError(std::string("GRU cell tensor ") + name + " has shape " + t.shape_str() + ", expected " +
                        shape_to_string(shape));
    }
  };
  expect(Wz, {input_dim, hidden_dim}, "Wz");
  expect(Wr, {input_dim, hidden_dim}, "Wr");
  expect(Wh, {input_dim, hidden_dim}, "Wh");
  expect(Uz, {hidden_dim, hidden_dim}, "Uz");
  expect(Ur, {hidden_dim, hidden_dim}, "Ur");
  expect(Uh, {hidden_dim, hidden_dim}, "Uh");
  expect(bz, {hidden_dim}, "bz");
  expect(br, {hidden_dim}, "br");
  expect(bh, {hidden_dim}, "bh");
}

std::vector<std::pair<std::string, Tensor*>> GruCellParams::named(const std::string& prefix) {
  return {{prefix + ".Wz", &Wz}, {prefix + ".Wr", &Wr}, {prefix + ".Wh", &Wh},
          {prefix + ".Uz", &Uz}, {prefix + ".Ur", &Ur}, {prefix + ".Uh", &Uh},
          {prefix + ".bz", &bz}, {prefix + ".br", &br}, {prefix + ".bh", &bh}};
}

std::vector<std::pair<std::string, const Tensor*>> GruCellParams::named(const std::string& prefix) const {
  return {{prefix + ".Wz", &Wz}, {prefix + ".Wr", &Wr}, {prefix + ".Wh", &Wh},
          {prefix + ".Uz", &Uz}, {prefix + ".Ur", &Ur}, {prefix + ".Uh", &Uh},
          {prefix + ".bz", &bz}, {prefix + ".br", &br}, {prefix + ".bh", &bh}};
}

GruCellVars bind_gru(Tape& tape, const GruCellParams& p) {
  GruCellVars v;
  v.Wz = tape.param(p.Wz);
  v.Wr = tape.param(p.Wr);
  v.Wh = tape.param(p.Wh);
  v.Uz = tape.param(p.Uz);
  v.Ur = tape.param(p.Ur);
  v.Uh = tape.param(p.Uh);
  v.bz = tape.param(p.bz);
  v.br = tape.param(p.br);
  v.bh = tape.param(p.bh);
  return v;
}

Var gru_step(Tape& t, const GruCellVars& p, Var x, Var h_prev) {
  Var z = t.sigmoid(t.add(t.add(t.matmul(x, p.Wz), t.matmul(h_prev, p.Uz)), p.bz));
  Var r = t.sigmoid(t.add(t.add(t.matmul(x, p.Wr), t.matmul(h_prev, p.Ur)), p.br));
  Var hb = t.tanh(t.add(t.add(t.matmul(x, p.Wh), t.matmul(t.mul(r, h_prev), p.Uh)), p.bh));
  return t.add(t.mul(z, h_prev), t.mul(t.one_minus(z), hb));
}

GruRun gru_run(Tape& t, const GruCellVars& p, const std::vector<Var>& inputs, Var h0) {
  if (inputs.empty()) throw DataError("gru_run: empty input sequence");
  GruRun run;
  Var h = h0;
  run.outputs.reserve(inputs.size());
  for (Var x : inputs) {
    h = gru_step(t, p, x, h);
    run.outputs.push_back(h);
  }
  run.final_state = h;
  return run;
}

StackedRun stacked_gru_run(Tape& t, const std::vector<GruCellVars>& layers, const std::vector<Var>& inputs,
                           const std::vector<Var>& h0_per_layer) {
  if (layers.empty()) throw ConfigError("stacked_gru_run: no layers");
  if (layers.size() != h0_per_layer.size()) {
    throw ConfigError("stacked_gru_run: " + std::to_string(layers.size()) + " layers but " +
                      std::to_string(h0_per_layer.size()) + " initial states");
  }
  if (inputs.empty()) throw DataError("stacked_gru_run: empty input sequence");
  // Chained dims: layer i's input width must equal layer i−1's hidden width.
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const int in_dim = t.val(layers[i].Wz).dim(0);
    const int expected = i == 0 ? t.val(inputs[0]).dim(1) : t.val(layers[i - 1].Uz).dim(0);
    if (in_dim != expected) {
      throw ConfigError("stacked_gru_run: layer " + std::to_string(i) + " expects input width " +
                        std::to_string(in_dim) + " but receives " + std::to_string(expected));
    }
  }

  StackedRun out;
  std::vector<Var> seq = inputs;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    GruRun run = gru_run(t, layers[i], seq, h0_per_layer[i]);
    out.finals.push_back(run.final_state);
    seq = std::move(run.outputs);
  }
  out.top_outputs = std::move(seq);
  return out;
}

EmbeddingTable EmbeddingTable::init(int vocab_size, int embed_dim, Rng& rng) {
  EmbeddingTable e;
  e.weights = Tensor({vocab_size, embed_dim});
  for (std::size_t i = 0; i < e.weights.numel(); ++i) e.weights[i] = rng.uniform(-0.05, 0.05);
  return e;
}

Var bind_embedding(Tape& tape, const EmbeddingTable& table) {
  return table.trainable ? tape.param(table.weights) : tape.leaf_ref(table.weights);
}

}  // namespace vst
