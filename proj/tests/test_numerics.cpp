#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vst/errors.hpp"
#include "vst/gradcheck.hpp"
#include "vst/kernels.hpp"
#include "vst/rng.hpp"
#include "vst/tape.hpp"
#include "vst/tensor.hpp"

using namespace vst;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Independent reference: plain per-element triple loop.
Tensor matmul_oracle(const Tensor& a, const Tensor& b) {
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c({m, n});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += a.at(i, p) * b.at(p, j);
      c.at(i, j) = s;
    }
  }
  return c;
}

}  // namespace

TEST_CASE("matmul identity and selector") {
  Tape t;
  Var id = t.leaf(Tensor::from_rows({{1, 0}, {0, 1}}));
  Var a = t.leaf(Tensor::from_rows({{1, 2}, {3, 4}}));
  Var prod = t.matmul(id, a);
  CHECK(t.val(prod).at(0, 0) == 1.0);
  CHECK(t.val(prod).at(0, 1) == 2.0);
  CHECK(t.val(prod).at(1, 0) == 3.0);
  CHECK(t.val(prod).at(1, 1) == 4.0);

  Var sel = t.leaf(Tensor::from_rows({{1, 0}, {0, 0}}));
  Var b = t.leaf(Tensor::from_rows({{5, 6}, {7, 8}}));
  Var picked = t.matmul(sel, b);
  CHECK(t.val(picked).at(0, 0) == 5.0);
  CHECK(t.val(picked).at(0, 1) == 6.0);
  CHECK(t.val(picked).at(1, 0) == 0.0);
  CHECK(t.val(picked).at(1, 1) == 0.0);

  // identity both sides, exact for integer-valued A
  Var left = t.matmul(id, a);
  Var right = t.matmul(a, id);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(t.val(left)[i] == t.val(a)[i]);
    CHECK(t.val(right)[i] == t.val(a)[i]);
  }
}

TEST_CASE("matmul random vs triple-loop oracle") {
  Rng rng(42);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 2}, rng);
  Tensor expect = matmul_oracle(a, b);
  Tape t;
  Var c = t.matmul(t.leaf(a), t.leaf(b));
  for (std::size_t i = 0; i < expect.numel(); ++i) {
    CHECK(std::fabs(t.val(c)[i] - expect[i]) < 1e-12);
  }
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tape t;
  Var a = t.leaf(Tensor({2, 3}));
  Var b = t.leaf(Tensor({2, 2}));
  CHECK_THROWS_WITH_AS(t.matmul(a, b), doctest::Contains("[2x3]"), DimError);
}

TEST_CASE("matmul backward matches dA=dC·Bt dB=At·dC") {
  Rng rng(7);
  Tensor A = random_tensor({3, 4}, rng);
  Tensor B = random_tensor({4, 2}, rng);
  Tape t;
  Var av = t.param(A);
  Var bv = t.param(B);
  Var c = t.matmul(av, bv);
  Var s = t.sum(c);
  t.backward(s);
  // dC is all-ones; dA[i][j] = sum_j B[j][*], dB[i][j] = sum_i A[*][i]
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) {
      double expect = 0.0;
      for (int p = 0; p < 2; ++p) expect += B.at(j, p);
      CHECK(t.grad(av).at(i, j) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 2; ++j) {
      double expect = 0.0;
      for (int p = 0; p < 3; ++p) expect += A.at(p, i);
      CHECK(t.grad(bv).at(i, j) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("sigmoid and tanh basics") {
  Tape t;
  Var x = t.leaf(Tensor::row({0.0}));
  CHECK(t.val(t.sigmoid(x))[0] == 0.5);
  CHECK(t.val(t.tanh(x))[0] == 0.0);
}

TEST_CASE("sigmoid gradient at 0 is 0.25 and matches finite differences") {
  NamedTensors params;
  params.emplace("x", Tensor::row({0.0}));
  auto loss = [](const NamedTensors& p) {
    Tape t;
    Var x = t.param(p.at("x"));
    return t.val(t.sum(t.sigmoid(x)))[0];
  };
  auto grads = [](const NamedTensors& p) {
    Tape t;
    Var x = t.param(p.at("x"));
    Var s = t.sum(t.sigmoid(x));
    t.backward(s);
    NamedTensors g;
    g.emplace("x", t.grad(x));
    return g;
  };
  NamedTensors g = grads(params);
  CHECK(g.at("x")[0] == doctest::Approx(0.25).epsilon(1e-12));
  GradCheckReport rep = gradcheck(loss, grads, params, 1e-6, 16, Rng(1));
  CHECK(rep.max_rel_err < 1e-8);
}

TEST_CASE("softmax symmetry, stability, oracle") {
  Tape t;
  Var u = t.softmax_rows(t.leaf(Tensor::row({1, 1, 1})));
  for (int j = 0; j < 3; ++j) CHECK(t.val(u).at(0, j) == doctest::Approx(1.0 / 3).epsilon(1e-12));

  Var big = t.softmax_rows(t.leaf(Tensor::row({1000, 0})));
  CHECK(t.val(big).at(0, 0) == doctest::Approx(1.0));
  CHECK(t.val(big).at(0, 1) == doctest::Approx(0.0));
  CHECK(t.val(big).all_finite());

  Rng rng(3);
  Tensor row = random_tensor({1, 7}, rng, -3.0, 3.0);
  Var s = t.softmax_rows(t.leaf(row));
  // naive oracle in extended precision, no max subtraction
  long double denom = 0.0L;
  for (int j = 0; j < 7; ++j) denom += expl(static_cast<long double>(row[static_cast<std::size_t>(j)]));
  for (int j = 0; j < 7; ++j) {
    const long double expect = expl(static_cast<long double>(row[static_cast<std::size_t>(j)])) / denom;
    CHECK(std::fabs(t.val(s).at(0, j) - static_cast<double>(expect)) < 1e-12);
  }
}

TEST_CASE("softmax rows sum to 1 within 1e-9 for random inputs") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = random_tensor({4, 9}, rng, -50.0, 50.0);
    Tape t;
    Var s = t.softmax_rows(t.leaf(x));
    for (int i = 0; i < 4; ++i) {
      double sum = 0.0;
      for (int j = 0; j < 9; ++j) {
        const double p = t.val(s).at(i, j);
        CHECK(p >= 0.0);
        sum += p;
      }
      CHECK(std::fabs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("cross entropy examples") {
  Tape t;
  SUBCASE("target prob 1 gives loss 0") {
    Var p = t.leaf(Tensor::row({1.0, 0.0, 0.0}));
    Var l = t.cross_entropy(p, {0}, {1.0});
    CHECK(t.val(l)[0] == doctest::Approx(0.0));
  }
  SUBCASE("uniform probs V=4 gives ln 4") {
    Var p = t.leaf(Tensor::row({0.25, 0.25, 0.25, 0.25}));
    Var l = t.cross_entropy(p, {2}, {1.0});
    CHECK(t.val(l)[0] == doctest::Approx(std::log(4.0)).epsilon(1e-9));
    CHECK(t.val(l)[0] == doctest::Approx(1.386294).epsilon(1e-6));
  }
  SUBCASE("masked row does not contribute") {
    Var two = t.leaf(Tensor::from_rows({{0.7, 0.3}, {0.1, 0.9}}));
    Var l2 = t.cross_entropy(two, {0, 1}, {1.0, 0.0});
    Var one = t.leaf(Tensor::from_rows({{0.7, 0.3}}));
    Var l1 = t.cross_entropy(one, {0}, {1.0});
    CHECK(t.val(l2)[0] == doctest::Approx(t.val(l1)[0]).epsilon(1e-15));
  }
  SUBCASE("all-zero mask is a degenerate batch") {
    Var p = t.leaf(Tensor::row({0.5, 0.5}));
    CHECK_THROWS_AS(t.cross_entropy(p, {0}, {0.0}), DataError);
  }
}

TEST_CASE("concat forward and backward split") {
  Tape t;
  Var a = t.leaf(Tensor::row({1, 2}));
  Var b = t.leaf(Tensor::row({3}));
  Var c = t.concat_cols(a, b);
  CHECK(t.val(c).cols() == 3);
  CHECK(t.val(c)[0] == 1.0);
  CHECK(t.val(c)[1] == 2.0);
  CHECK(t.val(c)[2] == 3.0);

  // 1024 ⊕ 512 → 1536
  Var wide = t.concat_cols(t.leaf(Tensor({2, 1024})), t.leaf(Tensor({2, 512})));
  CHECK(t.val(wide).cols() == 1536);

  // backward of ones over [b×3] from p=2 split
  Tensor at({3, 2});
  Tensor bt({3, 1});
  Tape t2;
  Var av = t2.param(at);
  Var bv = t2.param(bt);
  Var cat = t2.concat_cols(av, bv);
  Var s = t2.sum(cat);
  t2.backward(s);
  for (std::size_t i = 0; i < 6; ++i) CHECK(t2.grad(av)[i] == 1.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(t2.grad(bv)[i] == 1.0);

  CHECK_THROWS_AS(t.concat_cols(t.leaf(Tensor({2, 3})), t.leaf(Tensor({3, 3}))), DimError);
}

TEST_CASE("broadcast add over leading batch axis") {
  Tape t;
  Tensor x_t = Tensor::from_rows({{1, 2}, {3, 4}, {5, 6}});
  Var x = t.param(x_t);
  Tensor bias_t({2}, {10, 20});
  Var bias = t.param(bias_t);
  Var y = t.add(x, bias);
  CHECK(t.val(y).at(0, 0) == 11.0);
  CHECK(t.val(y).at(2, 1) == 26.0);
  Var s = t.sum(y);
  t.backward(s);
  CHECK(t.grad(bias)[0] == 3.0);  // column sums of ones
  CHECK(t.grad(bias)[1] == 3.0);

  CHECK_THROWS_AS(t.add(x, t.leaf(Tensor({3}))), DimError);
}

TEST_CASE("dropout contracts") {
  Rng rng(5);
  SUBCASE("rate 0 is identity") {
    Tape t;
    Tensor x = random_tensor({4, 4}, rng);
    Var xv = t.leaf(x);
    Var y = t.dropout(xv, 0.0, rng, true);
    CHECK(y.i == xv.i);  // same node, bit-exact
  }
  SUBCASE("inference mode is identity even at rate 0.5") {
    Tape t;
    Tensor x = random_tensor({4, 4}, rng);
    Var xv = t.leaf(x);
    Var y = t.dropout(xv, 0.5, rng, false);
    CHECK(y.i == xv.i);
  }
  SUBCASE("rate >= 1 rejected") {
    Tape t;
    Var xv = t.leaf(Tensor({2, 2}));
    CHECK_THROWS_AS(t.dropout(xv, 1.0, rng, true), ConfigError);
  }
  SUBCASE("statistics at rate 0.5 over 1e5 elements") {
    Tape t;
    Tensor x = Tensor::full({100000}, 1.0);
    Var y = t.dropout(t.leaf(x), 0.5, rng, true);
    long survivors = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < t.val(y).numel(); ++i) {
      if (t.val(y)[i] != 0.0) {
        ++survivors;
        CHECK(t.val(y)[i] == doctest::Approx(2.0));
      }
      sum += t.val(y)[i];
    }
    const double survivor_frac = static_cast<double>(survivors) / 100000.0;
    CHECK(survivor_frac == doctest::Approx(0.5).epsilon(0.02));
    CHECK(std::fabs(survivor_frac - 0.5) < 0.01);
    const double mean = sum / 100000.0;
    CHECK(std::fabs(mean - 1.0) < 0.02);
  }
  SUBCASE("backward routes through the mask") {
    Tape t;
    Tensor x = random_tensor({1, 64}, rng);
    Var xv = t.param(x);
    Var y = t.dropout(xv, 0.5, rng, true);
    Var s = t.sum(y);
    t.backward(s);
    for (std::size_t i = 0; i < 64; ++i) {
      if (t.val(y)[i] == 0.0) {
        CHECK(t.grad(xv)[i] == 0.0);
      } else {
        CHECK(t.grad(xv)[i] == 2.0);
      }
    }
  }
}

TEST_CASE("gradcheck on a linear function is exact") {
  Rng rng(17);
  NamedTensors params;
  params.emplace("w", random_tensor({1, 6}, rng));
  Tensor x = random_tensor({6, 1}, rng);
  auto loss = [&x](const NamedTensors& p) {
    Tape t;
    return t.val(t.sum(t.matmul(t.param(p.at("w")), t.leaf(x))))[0];
  };
  auto grads = [&x](const NamedTensors& p) {
    Tape t;
    Var w = t.param(p.at("w"));
    Var s = t.sum(t.matmul(w, t.leaf(x)));
    t.backward(s);
    NamedTensors g;
    g.emplace("w", t.grad(w));
    return g;
  };
  GradCheckReport rep = gradcheck(loss, grads, params, 1e-5, 100, Rng(2));
  CHECK(rep.max_rel_err < 1e-10);
  CHECK(rep.coords_checked == 6);
}

TEST_CASE("every differentiable op passes finite differences at small dims") {
  Rng rng(23);
  Tensor A = random_tensor({3, 5}, rng);
  Tensor B = random_tensor({5, 4}, rng);
  Tensor C = random_tensor({3, 4}, rng);
  Tensor D = random_tensor({3, 4}, rng);
  Tensor bias({4}, {0.3, -0.2, 0.5, 0.1});
  NamedTensors params;
  params.emplace("A", A);
  params.emplace("B", B);
  params.emplace("C", C);
  params.emplace("D", D);
  params.emplace("bias", bias);

  // One composite touching matmul, add (both forms), mul, sigmoid, tanh,
  // affine, concat, softmax and cross entropy.
  auto build = [](Tape& t, const NamedTensors& p) {
    Var a = t.param(p.at("A"));
    Var b = t.param(p.at("B"));
    Var c = t.param(p.at("C"));
    Var d = t.param(p.at("D"));
    Var bias_v = t.param(p.at("bias"));
    Var mm = t.matmul(a, b);                      // [3×4]
    Var withbias = t.add(mm, bias_v);             // broadcast
    Var gated = t.mul(t.sigmoid(withbias), t.tanh(c));
    Var scaled = t.affine(gated, 1.7, -0.1);
    Var both = t.concat_cols(scaled, t.add(d, c));  // [3×8]
    Var probs = t.softmax_rows(both);
    return t.cross_entropy(probs, {1, 6, 3}, {1.0, 1.0, 1.0});
  };
  auto loss = [&](const NamedTensors& p) {
    Tape t;
    return t.val(build(t, p))[0];
  };
  auto grads = [&](const NamedTensors& p) {
    Tape t;
    Var l = build(t, p);
    t.backward(l);
    NamedTensors g;
    // build binds params in a fixed order: A,B,C,D,bias → vars 0..4
    g.emplace("A", t.grad(Var{0}));
    g.emplace("B", t.grad(Var{1}));
    g.emplace("C", t.grad(Var{2}));
    g.emplace("D", t.grad(Var{3}));
    g.emplace("bias", t.grad(Var{4}));
    return g;
  };
  GradCheckReport rep = gradcheck(loss, grads, params, 1e-6, 1000, Rng(9));
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  Rng rng(31);
  // sizes beyond the parallel grain so the OpenMP path actually runs
  const int m = 64, k = 96, n = 80;
  Tensor a = random_tensor({m, k}, rng);
  Tensor b = random_tensor({k, n}, rng);

  Tensor c_serial({m, n});
  Tensor c_par({m, n});
  kernels::matmul_serial(a.data(), b.data(), c_serial.data(), m, k, n);
  const bool was = kernels::parallel_enabled();
  kernels::set_parallel(true);
  kernels::matmul(a.data(), b.data(), c_par.data(), m, k, n);
  for (std::size_t i = 0; i < c_serial.numel(); ++i) CHECK(c_serial[i] == c_par[i]);

  Tensor g = random_tensor({m, n}, rng);
  Tensor da_s({m, k}), da_p({m, k});
  kernels::matmul_nt_add_serial(g.data(), b.data(), da_s.data(), m, k, n);
  kernels::matmul_nt_add(g.data(), b.data(), da_p.data(), m, k, n);
  for (std::size_t i = 0; i < da_s.numel(); ++i) CHECK(da_s[i] == da_p[i]);

  Tensor db_s({k, n}), db_p({k, n});
  kernels::matmul_tn_add_serial(a.data(), g.data(), db_s.data(), m, k, n);
  kernels::matmul_tn_add(a.data(), g.data(), db_p.data(), m, k, n);
  for (std::size_t i = 0; i < db_s.numel(); ++i) CHECK(db_s[i] == db_p[i]);

  Tensor rows = random_tensor({128, 257}, rng, -30.0, 30.0);
  Tensor sm_s({128, 257}), sm_p({128, 257});
  kernels::softmax_rows_serial(rows.data(), sm_s.data(), 128, 257);
  kernels::softmax_rows(rows.data(), sm_p.data(), 128, 257);
  for (std::size_t i = 0; i < sm_s.numel(); ++i) CHECK(sm_s[i] == sm_p[i]);

  Tensor x = random_tensor({40000}, rng, -4.0, 4.0);
  Tensor y_s({40000}), y_p({40000});
  kernels::sigmoid_serial(x.data(), y_s.data(), x.numel());
  kernels::sigmoid(x.data(), y_p.data(), x.numel());
  for (std::size_t i = 0; i < 40000; ++i) CHECK(y_s[i] == y_p[i]);
  kernels::tanh_serial(x.data(), y_s.data(), x.numel());
  kernels::tanh(x.data(), y_p.data(), x.numel());
  for (std::size_t i = 0; i < 40000; ++i) CHECK(y_s[i] == y_p[i]);
  kernels::set_parallel(was);
}

TEST_CASE("tensor validity check") {
  Tensor t({2}, {1.0, std::nan("")});
  CHECK_FALSE(t.all_finite());
  CHECK_THROWS_AS(t.check_finite("test tensor"), NumericError);
  Tensor ok({2}, {1.0, 2.0});
  CHECK_NOTHROW(ok.check_finite("ok"));
}

TEST_CASE("rng is deterministic and splitmix streams are stable") {
  Rng a(123);
  Rng b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(123);
  Rng d = c.fork("dropout");
  Rng e = c.fork("dropout");
  CHECK(d.next_u64() == e.next_u64());
  Rng f = c.fork("init");
  CHECK(d.next_u64() != f.next_u64());
}
