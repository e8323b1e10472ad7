#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "vst/errors.hpp"
#include "vst/gradcheck.hpp"
#include "vst/gru.hpp"
#include "vst/rng.hpp"
#include "vst/tape.hpp"

using namespace vst;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar-by-scalar reference of one GRU step for batch size 1.
std::vector<double> gru_step_oracle(const GruCellParams& p, const std::vector<double>& x,
                                    const std::vector<double>& h) {
  const int in = p.input_dim, hid = p.hidden_dim;
  std::vector<double> out(static_cast<std::size_t>(hid));
  for (int j = 0; j < hid; ++j) {
    double az = p.bz[static_cast<std::size_t>(j)];
    double ar = p.br[static_cast<std::size_t>(j)];
    for (int i = 0; i < in; ++i) {
      az += x[static_cast<std::size_t>(i)] * p.Wz.at(i, j);
      ar += x[static_cast<std::size_t>(i)] * p.Wr.at(i, j);
    }
    for (int i = 0; i < hid; ++i) {
      az += h[static_cast<std::size_t>(i)] * p.Uz.at(i, j);
      ar += h[static_cast<std::size_t>(i)] * p.Ur.at(i, j);
    }
    const double z = sigm(az);
    const double r = sigm(ar);
    double ah = p.bh[static_cast<std::size_t>(j)];
    for (int i = 0; i < in; ++i) ah += x[static_cast<std::size_t>(i)] * p.Wh.at(i, j);
    for (int i = 0; i < hid; ++i) {
      // careful: the reset gate of component i gates h[i]
      double ri = p.br[static_cast<std::size_t>(i)];
      for (int q = 0; q < in; ++q) ri += x[static_cast<std::size_t>(q)] * p.Wr.at(q, i);
      for (int q = 0; q < hid; ++q) ri += h[static_cast<std::size_t>(q)] * p.Ur.at(q, i);
      ah += sigm(ri) * h[static_cast<std::size_t>(i)] * p.Uh.at(i, j);
    }
    const double hb = std::tanh(ah);
    out[static_cast<std::size_t>(j)] = z * h[static_cast<std::size_t>(j)] + (1.0 - z) * hb;
    (void)r;
  }
  return out;
}

GruCellVars cell_params(Tape& t, NamedTensors& p, const std::string& prefix, std::map<std::string, Var>& vars) {
  GruCellVars v;
  auto bindp = [&](const char* suffix, Var& slot) {
    const std::string name = prefix + "." + suffix;
    slot = t.param(p.at(name));
    vars[name] = slot;
  };
  bindp("Wz", v.Wz);
  bindp("Wr", v.Wr);
  bindp("Wh", v.Wh);
  bindp("Uz", v.Uz);
  bindp("Ur", v.Ur);
  bindp("Uh", v.Uh);
  bindp("bz", v.bz);
  bindp("br", v.br);
  bindp("bh", v.bh);
  return v;
}

}  // namespace

TEST_CASE("gru_step with zero parameters halves the previous state") {
  GruCellParams p = GruCellParams::zeros(3, 4);
  Tape t;
  Var x = t.leaf(Tensor({1, 3}));
  Tensor h0({1, 4}, {0.8, -0.4, 0.2, 1.0});
  Var h = t.leaf(h0);
  GruCellVars v = bind_gru(t, p);
  Var out = gru_step(t, v, x, h);
  for (int j = 0; j < 4; ++j) {
    CHECK(t.val(out).at(0, j) == doctest::Approx(0.5 * h0.at(0, j)).epsilon(1e-15));
  }
}

TEST_CASE("gru_step at the origin stays at the origin") {
  GruCellParams p = GruCellParams::zeros(2, 3);
  Tape t;
  Var x = t.leaf(Tensor({1, 2}));
  Var h = t.leaf(Tensor({1, 3}));
  Var out = gru_step(t, bind_gru(t, p), x, h);
  for (std::size_t i = 0; i < 3; ++i) CHECK(t.val(out)[i] == 0.0);
}

TEST_CASE("gru_step matches the scalar reference oracle") {
  Rng rng(101);
  GruCellParams p = GruCellParams::init(3, 3, rng);
  std::vector<double> x = {0.3, -0.7, 0.5};
  std::vector<double> h = {0.1, 0.9, -0.2};
  const std::vector<double> expect = gru_step_oracle(p, x, h);

  Tape t;
  Var xv = t.leaf(Tensor({1, 3}, std::vector<double>(x)));
  Var hv = t.leaf(Tensor({1, 3}, std::vector<double>(h)));
  Var out = gru_step(t, bind_gru(t, p), xv, hv);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(std::fabs(t.val(out)[j] - expect[j]) < 1e-12);
  }
}

TEST_CASE("gru_run equals the fold of gru_step bit-exactly") {
  Rng rng(7);
  GruCellParams p = GruCellParams::init(2, 3, rng);
  std::vector<Tensor> xs;
  for (int i = 0; i < 4; ++i) xs.push_back(random_tensor({2, 2}, rng));
  Tensor h0 = random_tensor({2, 3}, rng);

  Tape t1;
  GruCellVars v1 = bind_gru(t1, p);
  std::vector<Var> in1;
  for (const Tensor& x : xs) in1.push_back(t1.leaf(x));
  GruRun run = gru_run(t1, v1, in1, t1.leaf(h0));

  Tape t2;
  GruCellVars v2 = bind_gru(t2, p);
  Var h = t2.leaf(h0);
  for (const Tensor& x : xs) h = gru_step(t2, v2, t2.leaf(x), h);

  REQUIRE(run.outputs.size() == 4);
  for (std::size_t i = 0; i < t1.val(run.final_state).numel(); ++i) {
    CHECK(t1.val(run.final_state)[i] == t2.val(h)[i]);
  }
}

TEST_CASE("gru_run T=1 equals a single step; zero params give v/8 after 3 steps") {
  Rng rng(13);
  GruCellParams p = GruCellParams::init(2, 2, rng);
  Tensor x = random_tensor({1, 2}, rng);
  Tensor h0 = random_tensor({1, 2}, rng);
  Tape t;
  GruCellVars v = bind_gru(t, p);
  GruRun run = gru_run(t, v, {t.leaf(x)}, t.leaf(h0));
  Var step = gru_step(t, v, t.leaf(x), t.leaf(h0));
  for (std::size_t i = 0; i < 2; ++i) CHECK(t.val(run.final_state)[i] == t.val(step)[i]);

  GruCellParams zero = GruCellParams::zeros(2, 4);
  Tape tz;
  GruCellVars vz = bind_gru(tz, zero);
  Tensor v0({1, 4}, {0.8, -0.8, 0.4, 1.0});
  Var in = tz.leaf(Tensor({1, 2}));
  GruRun rz = gru_run(tz, vz, {in, in, in}, tz.leaf(v0));
  for (int j = 0; j < 4; ++j) {
    CHECK(tz.val(rz.final_state).at(0, j) == doctest::Approx(v0.at(0, j) / 8.0).epsilon(1e-15));
  }
}

TEST_CASE("gru_run rejects an empty sequence") {
  Rng rng(1);
  GruCellParams p = GruCellParams::init(2, 2, rng);
  Tape t;
  GruCellVars v = bind_gru(t, p);
  Var h0 = t.leaf(Tensor({1, 2}));
  CHECK_THROWS_AS(gru_run(t, v, {}, h0), DataError);
}

TEST_CASE("stacked run: single layer identical to gru_run") {
  Rng rng(19);
  GruCellParams p = GruCellParams::init(3, 2, rng);
  std::vector<Tensor> xs = {random_tensor({1, 3}, rng), random_tensor({1, 3}, rng)};
  Tensor h0 = random_tensor({1, 2}, rng);

  Tape t;
  GruCellVars v = bind_gru(t, p);
  std::vector<Var> in;
  for (const Tensor& x : xs) in.push_back(t.leaf(x));
  Var h0v = t.leaf(h0);
  StackedRun s = stacked_gru_run(t, {v}, in, {h0v});
  GruRun r = gru_run(t, v, in, h0v);
  REQUIRE(s.finals.size() == 1);
  for (std::size_t i = 0; i < 2; ++i) CHECK(t.val(s.finals[0])[i] == t.val(r.final_state)[i]);
}

TEST_CASE("stacked run: two zero layers halve both initial states at T=1") {
  GruCellParams l0 = GruCellParams::zeros(3, 4);
  GruCellParams l1 = GruCellParams::zeros(4, 2);
  Tape t;
  Tensor u({1, 4}, {0.4, 0.8, -0.6, 0.2});
  Tensor v({1, 2}, {1.0, -1.0});
  StackedRun s = stacked_gru_run(t, {bind_gru(t, l0), bind_gru(t, l1)}, {t.leaf(Tensor({1, 3}))},
                                 {t.leaf(u), t.leaf(v)});
  for (int j = 0; j < 4; ++j) CHECK(t.val(s.finals[0]).at(0, j) == doctest::Approx(u.at(0, j) / 2).epsilon(1e-15));
  for (int j = 0; j < 2; ++j) CHECK(t.val(s.finals[1]).at(0, j) == doctest::Approx(v.at(0, j) / 2).epsilon(1e-15));
}

TEST_CASE("stacked run equals manual two-pass composition bit-exactly") {
  Rng rng(29);
  GruCellParams l0 = GruCellParams::init(2, 3, rng);
  GruCellParams l1 = GruCellParams::init(3, 2, rng);
  std::vector<Tensor> xs = {random_tensor({2, 2}, rng), random_tensor({2, 2}, rng), random_tensor({2, 2}, rng)};
  Tensor h0a = random_tensor({2, 3}, rng);
  Tensor h0b = random_tensor({2, 2}, rng);

  Tape t;
  GruCellVars v0 = bind_gru(t, l0);
  GruCellVars v1 = bind_gru(t, l1);
  std::vector<Var> in;
  for (const Tensor& x : xs) in.push_back(t.leaf(x));
  Var h0av = t.leaf(h0a);
  Var h0bv = t.leaf(h0b);
  StackedRun s = stacked_gru_run(t, {v0, v1}, in, {h0av, h0bv});

  GruRun first = gru_run(t, v0, in, h0av);
  GruRun second = gru_run(t, v1, first.outputs, h0bv);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(t.val(s.finals[1])[i] == t.val(second.final_state)[i]);
  }
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(t.val(s.finals[0])[i] == t.val(first.final_state)[i]);
  }
}

TEST_CASE("stacked run rejects chained-dimension mismatch") {
  Rng rng(3);
  GruCellParams l0 = GruCellParams::init(2, 3, rng);
  GruCellParams bad = GruCellParams::init(4, 2, rng);  // expects width 4, gets 3
  Tape t;
  std::vector<Var> in = {t.leaf(Tensor({1, 2}))};
  CHECK_THROWS_AS(
      stacked_gru_run(t, {bind_gru(t, l0), bind_gru(t, bad)}, in, {t.leaf(Tensor({1, 3})), t.leaf(Tensor({1, 2}))}),
      ConfigError);
}

TEST_CASE("hidden states stay in [-1,1] when h0 does") {
  Rng rng(37);
  for (int trial = 0; trial < 5; ++trial) {
    GruCellParams p = GruCellParams::init(3, 5, rng);
    Tape t;
    GruCellVars v = bind_gru(t, p);
    std::vector<Var> in;
    for (int i = 0; i < 8; ++i) in.push_back(t.leaf(random_tensor({2, 3}, rng, -10.0, 10.0)));
    GruRun run = gru_run(t, v, in, t.leaf(random_tensor({2, 5}, rng, -1.0, 1.0)));
    for (Var h : run.outputs) {
      for (std::size_t i = 0; i < t.val(h).numel(); ++i) {
        CHECK(t.val(h)[i] >= -1.0);
        CHECK(t.val(h)[i] <= 1.0);
      }
    }
  }
}

TEST_CASE("two-layer stacked GRU passes gradcheck within 1e-5") {
  Rng rng(53);
  GruCellParams l0 = GruCellParams::init(4, 3, rng);
  GruCellParams l1 = GruCellParams::init(3, 2, rng);
  NamedTensors params;
  for (auto& [name, ptr] : l0.named("l0")) params.emplace(name, *ptr);
  for (auto& [name, ptr] : l1.named("l1")) params.emplace(name, *ptr);
  std::vector<Tensor> xs = {random_tensor({2, 4}, rng), random_tensor({2, 4}, rng), random_tensor({2, 4}, rng)};

  auto run = [&xs](Tape& t, const NamedTensors& p, std::map<std::string, Var>& vars) {
    NamedTensors& mp = const_cast<NamedTensors&>(p);
    GruCellVars v0 = cell_params(t, mp, "l0", vars);
    GruCellVars v1 = cell_params(t, mp, "l1", vars);
    std::vector<Var> in;
    for (const Tensor& x : xs) in.push_back(t.leaf(x));
    StackedRun s = stacked_gru_run(t, {v0, v1}, in, {t.leaf(Tensor({2, 3})), t.leaf(Tensor({2, 2}))});
    // scalar head: quadratic-free sum keeps the loss sensitive to every state
    return t.sum(t.tanh(t.concat_cols(s.finals[0], s.finals[1])));
  };
  auto loss = [&](const NamedTensors& p) {
    Tape t;
    std::map<std::string, Var> vars;
    return t.val(run(t, p, vars))[0];
  };
  auto grads = [&](const NamedTensors& p) {
    Tape t;
    std::map<std::string, Var> vars;
    Var l = run(t, p, vars);
    t.backward(l);
    NamedTensors g;
    for (auto& [name, var] : vars) g.emplace(name, t.grad(var));
    return g;
  };
  GradCheckReport rep = gradcheck(loss, grads, params, 1e-5, 2000, Rng(4));
  CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("embedding lookup and gradient accumulation") {
  Rng rng(61);
  EmbeddingTable table = EmbeddingTable::init(6, 3, rng);

  SUBCASE("id 0 returns row 0 verbatim") {
    Tape t;
    Var tv = bind_embedding(t, table);
    Var e = t.embed(tv, {0}, 1, 1);
    for (int j = 0; j < 3; ++j) CHECK(t.val(e)[static_cast<std::size_t>(j)] == table.weights.at(0, j));
  }

  SUBCASE("repeated id accumulates gradient twice") {
    Tape t;
    Var tv = bind_embedding(t, table);
    Var e = t.embed(tv, {2, 2}, 1, 2);
    Var s = t.sum(e);
    t.backward(s);
    for (int j = 0; j < 3; ++j) {
      CHECK(t.grad(tv).at(2, j) == 2.0);
      CHECK(t.grad(tv).at(1, j) == 0.0);
    }
  }

  SUBCASE("out-of-range id names the position") {
    Tape t;
    Var tv = bind_embedding(t, table);
    CHECK_THROWS_WITH_AS(t.embed(tv, {1, 9}, 1, 2), doctest::Contains("position 1"), IndexError);
  }

  SUBCASE("frozen table is not gradient-tracked") {
    EmbeddingTable frozen = table;
    frozen.trainable = false;
    Tape t;
    Var tv = bind_embedding(t, frozen);
    Var e = t.embed(tv, {1}, 1, 1);
    Var s = t.sum(e);
    t.backward(s);
    CHECK(t.grad(tv).numel() == 0);  // no gradient allocated
  }
}
