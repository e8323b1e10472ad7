#include "vst/tape.hpp"

#include <cmath>
#include <cstring>

#include "vst/errors.hpp"
#include "vst/kernels.hpp"

namespace vst {

namespace {
// Broadcast classification for add/mul: same shape, or [n]/[1×n] against [b×n].
enum class Bcast { Same, RowVector, Invalid };

Bcast classify(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Bcast::Same;
  if (a.rank() == 2) {
    if (b.rank() == 1 && b.dim(0) == a.dim(1)) return Bcast::RowVector;
    if (b.rank() == 2 && b.dim(0) == 1 && b.dim(1) == a.dim(1)) return Bcast::RowVector;
  }
  return Bcast::Invalid;
}
}  // namespace

Var Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&)> back) {
  Node n;
  n.value = std::make_shared<const Tensor>(std::move(value));
  n.requires_grad = requires_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::leaf_ref(const Tensor& storage) {
  Node n;
  n.value = std::shared_ptr<const Tensor>(std::shared_ptr<const Tensor>(), &storage);
  n.requires_grad = false;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(const Tensor& storage) {
  Node n;
  // Aliasing shared_ptr: no copy, no ownership. Caller keeps storage alive.
  n.value = std::shared_ptr<const Tensor>(std::shared_ptr<const Tensor>(), &storage);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Tape::val(Var v) const { return *nodes_[static_cast<std::size_t>(v.i)].value; }
const Tensor& Tape::grad(Var v) const { return nodes_[static_cast<std::size_t>(v.i)].grad; }

Var Tape::matmul(Var a, Var b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0)) {
    throw DimError("matmul: incompatible shapes " + A.shape_str() + " and " + B.shape_str());
  }
  const int m = A.dim(0), k = A.dim(1), n = B.dim(1);
  Tensor C({m, n});
  kernels::matmul(A.data(), B.data(), C.data(), m, k, n);
  const bool rg = needs(a) || needs(b);
  std::function<void(Tape&)> back;
  if (rg) {
    Var self{static_cast<int>(nodes_.size())};
    back = [a, b, self, m, k, n](Tape& t) {
      const Tensor& g = t.grad(self);
      if (t.needs(a)) kernels::matmul_nt_add(g.data(), t.val(b).data(), t.grad_mut(a).data(), m, k, n);
      if (t.needs(b)) kernels::matmul_tn_add(t.val(a).data(), g.data(), t.grad_mut(b).data(), m, k, n);
    };
  }
  return push(std::move(C), rg, std::move(back));
}

Var Tape::add(Var a, Var b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  const Bcast bc = classify(A, B);
  if (bc == Bcast::Invalid) {
    throw DimError("add: incompatible shapes " + A.shape_str() + " and " + B.shape_str());
  }
  Tensor Y(A.shape());
  if (bc == Bcast::Same) {
    kernels::add(A.data(), B.data(), Y.data(), A.numel());
  } else {
    kernels::add_bias(A.data(), B.data(), Y.data(), A.dim(0), A.dim(1));
  }
  const bool rg = needs(a) || needs(b);
  std::function<void(Tape&)> back;
  if (rg) {
    Var self{static_cast<int>(nodes_.size())};
    back = [a, b, self, bc](Tape& t) {
      const Tensor& g = t.grad(self);
      if (t.needs(a)) kernels::acc(g.data(), t.grad_mut(a).data(), g.numel());
      if (t.needs(b)) {
        if (bc == Bcast::Same) {
          kernels::acc(g.data(), t.grad_mut(b).data(), g.numel());
        } else {
          kernels::acc_cols(g.data(), t.grad_mut(b).data(), g.dim(0), g.dim(1));
        }
      }
    };
  }
  return push(std::move(Y), rg, std::move(back));
}

Var Tape::mul(Var a, Var b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  const Bcast bc = classify(A, B);
  if (bc == Bcast::Invalid) {
    throw DimError("mul: incompatible shapes " + A.shape_str() + " and " + B.shape_str());
  }
  Tensor Y(A.shape());
  if (bc == Bcast::Same) {
    kernels::mul(A.data(), B.data(), Y.data(), A.numel());
  } else {
    const int r = A.dim(0), c = A.dim(1);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) Y.at(i, j) = A.at(i, j) * B[static_cast<std::size_t>(j)];
    }
  }
  const bool rg = needs(a) || needs(b);
  std::function<void(Tape&)> back;
  if (rg) {
    Var self{static_cast<int>(nodes_.size())};
    back = [a, b, self, bc](Tape& t) {
      const Tensor& g = t.grad(self);
      const Tensor& A2 = t.val(a);
      const Tensor& B2 = t.val(b);
      if (bc == Bcast::Same) {
        if (t.needs(a)) kernels::acc_mul(g.data(), B2.data(), t.grad_mut(a).data(), g.numel());
        if (t.needs(b)) kernels::acc_mul(g.data(), A2.data(), t.grad_mut(b).data(), g.numel());
      } else {
        const int r = A2.dim(0), c = A2.dim(1);
        if (t.needs(a)) {
          Tensor& ga = t.grad_mut(a);
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) ga.at(i, j) += g.at(i, j) * B2[static_cast<std::size_t>(j)];
        }
        if (t.needs(b)) {
          Tensor& gb = t.grad_mut(b);
          for (int j = 0; j < c; ++j) {
            double s = 0.0;
            for (int i = 0; i < r; ++i) s += g.at(i, j) * A2.at(i, j);
            gb[static_cast<std::size_t>(j)] += s;
          }
        }
      }
    };
  }
  return push(std::move(Y), rg, std::move(back));
}

Var Tape::sigmoid(Var x) {
  const Tensor& X = val(x);
  Tensor Y(X.shape());
  kernels::sigmoid(X.data(), Y.data(), X.numel());
  const bool rg = needs(x);
  std::function<void(Tape&)> back;
  if (rg) {
    Var self{static_cast<int>(nodes_.size())};
    back = [x, self](Tape& t) {
      const Tensor& y = t.val(self);
      kernels::acc_sigmoid_bwd(y.data(), t.grad(self).data(), t.grad_mut(x).data(), y.numel());
    };
  }
  return push(std::move(Y), rg, std::move(back));
}

Var Tape::tanh(Var x) {
  const Tensor& X = val(x);
  Tensor Y(X.shape());
  kernels::tanh(X.data(), Y.data(), X.numel());
  const bool rg = needs(x);
  std::function<void(Tape&)> back;
  if (rg) {
    Var self{static_cast<int>(nodes_.size())};
    back = [x, self](Tape& t) {
      const Tensor& y = t.val(self);
      kernels::acc_tanh_bwd(y.data(), t.grad(self).data(), t.grad_mut(x).data(), y.numel());
    };
  }
  return push(std::move(Y), rg, std::move(back));
}

Var Tape::affine(Var x, double alpha, double beta) {
  const Tensor& X = val(x);
  Tensor Y(X.shape());
  kernels::affine(X.data(), Y.data(), X.numel(), alpha, beta);
  const bool rg = needs(x);
  std::function<void(Tape&)> back;
  if (rg) {
    Var self{static_cast<int>(nodes_.size())};
    back = [x, self, alpha](Tape& t) {
      const Tensor& g = t.grad(self);
      kernels::acc_scaled(g.data(), t.grad_mut(x).data(), g.numel(), alpha);
    };
  }
  return push(std::move(Y), rg, std::move(back));
}

Var Tape::concat_cols(Var a, Var b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (A.rank() != 2 || B.rank() != 2 || A.dim(0) != B.dim(0)) {
    throw DimError("concat: batch mismatch " + A.shape_str() + " vs " + B.shape_str());
  }
  const int r = A.dim(0), p = A.dim(1), q = B.dim(1);
  Tensor Y({r, p + q});
  for (int i = 0; i < r; ++i) {
    std::memcpy(Y.data() + static_cast<std::size_t>(i) * (p + q), A.data() + static_cast<std::size_t>(i) * p,
                sizeof(double) * static_cast<std::size_t>(p));
    std::memcpy(Y.data() + static_cast<std::size_t>(i) * (p + q) + p, B.data() + static_cast<std::size_t>(i) * q,
                sizeof(double) * static_cast<std::size_t>(q));
  }
  const bool rg = needs(a) || needs(b);
  std::function<void(Tape&)> back;
  if (rg) {
    Var self{static_cast<int>(nodes_.size())};
    back = [a, b, self, r, p, q](Tape& t) {
      const Tensor& g = t.grad(self);
      if (t.needs(a)) {
        Tensor& ga = t.grad_mut(a);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < p; ++j) ga.at(i, j) += g.at(i, j);
      }
      if (t.needs(b)) {
        Tensor& gb = t.grad_mut(b);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < q; ++j) gb.at(i, j) += g.at(i, p + j);
      }
    };
  }
  return push(std::move(Y), rg, std::move(back));
}

Var Tape::softmax_rows(Var x) {
  const Tensor& X = val(x);
  if (X.rank() != 2) throw DimError("softmax: expected rank-2 input, got " + X.shape_str());
  Tensor Y(X.shape());
  kernels::softmax_rows(X.data(), Y.data(), X.dim(0), X.dim(1));
  const bool rg = needs(x);
  std::function<void(Tape&)> back;
  if (rg) {
    Var self{static_cast<int>(nodes_.size())};
    back = [x, self](Tape& t) {
      const Tensor& y = t.val(self);
      kernels::softmax_rows_bwd(y.data(), t.grad(self).data(), t.grad_mut(x).data(), y.dim(0), y.dim(1));
    };
  }
  return push(std::move(Y), rg, std::move(back));
}

Var Tape::dropout(Var x, double rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;  // identity, bit-exact
  const Tensor& X = val(x);
  const std::size_t n = X.numel();
  const double keep_scale = 1.0 / (1.0 - rate);
  // Mask drawn serially so the RNG stream is independent of thread count.
  auto mask = std::make_shared<std::vector<double>>(n);
  Tensor Y(X.shape());
  for (std::size_t i = 0; i < n; ++i) {
    (*mask)[i] = rng.next_double() < rate ? 0.0 : keep_scale;
    Y[i] = X[i] * (*mask)[i];
  }
  const bool rg = needs(x);
  std::function<void(Tape&)> back;
  if (rg) {
    Var self{static_cast<int>(nodes_.size())};
    back = [x, self, mask](Tape& t) {
      kernels::acc_mul(t.grad(self).data(), mask->data(), t.grad_mut(x).data(), mask->size());
    };
  }
  return push(std::move(Y), rg, std::move(back));
}

Var Tape::embed(Var table, const std::vector<int>& ids, int b, int t) {
  const Tensor& T = val(table);
  if (T.rank() != 2) throw DimError("embed: table must be rank-2, got " + T.shape_str());
  if (static_cast<int>(ids.size()) != b * t) {
    throw DimError("embed: expected " + std::to_string(b * t) + " ids, got " + std::to_string(ids.size()));
  }
  const int V = T.dim(0), E = T.dim(1);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= V) {
      throw IndexError("embed: token id " + std::to_string(ids[i]) + " out of range [0," + std::to_string(V) +
                       ") at position " + std::to_string(i));
    }
  }
  Tensor Y({b, t, E});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::memcpy(Y.data() + i * static_cast<std::size_t>(E),
                T.data() + static_cast<std::size_t>(ids[i]) * E, sizeof(double) * static_cast<std::size_t>(E));
  }
  const bool rg = needs(table);
  std::function<void(Tape&)> back;
  if (rg) {
    Var self{static_cast<int>(nodes_.size())};
    auto ids_copy = std::make_shared<std::vector<int>>(ids);
    back = [table, self, ids_copy, E](Tape& tp) {
      // Scatter-add kept serial: repeated ids collide.
      const Tensor& g = tp.grad(self);
      Tensor& gt = tp.grad_mut(table);
      for (std::size_t i = 0; i < ids_copy->size(); ++i) {
        const double* src = g.data() + i * static_cast<std::size_t>(E);
        double* dst = gt.data() + static_cast<std::size_t>((*ids_copy)[i]) * E;
        for (int e = 0; e < E; ++e) dst[e] += src[e];
      }
    };
  }
  return push(std::move(Y), rg, std::move(back));
}

Var Tape::slice_time(Var x, int t) {
  const Tensor& X = val(x);
  if (X.rank() != 3) throw DimError("slice_time: expected rank-3 input, got " + X.shape_str());
  const int b = X.dim(0), T = X.dim(1), d = X.dim(2);
  if (t < 0 || t >= T) throw IndexError("slice_time: step " + std::to_string(t) + " out of range");
  Tensor Y({b, d});
  for (int i = 0; i < b; ++i) {
    std::memcpy(Y.data() + static_cast<std::size_t>(i) * d,
                X.data() + (static_cast<std::size_t>(i) * T + t) * d, sizeof(double) * static_cast<std::size_t>(d));
  }
  const bool rg = needs(x);
  std::function<void(Tape&)> back;
  if (rg) {
    Var self{static_cast<int>(nodes_.size())};
    back = [x, self, t, b, T, d](Tape& tp) {
      const Tensor& g = tp.grad(self);
      Tensor& gx = tp.grad_mut(x);
      for (int i = 0; i < b; ++i) {
        const double* src = g.data() + static_cast<std::size_t>(i) * d;
        double* dst = gx.data() + (static_cast<std::size_t>(i) * T + t) * d;
        for (int e = 0; e < d; ++e) dst[e] += src[e];
      }
    };
  }
  return push(std::move(Y), rg, std::move(back));
}

Var Tape::sum(Var x) {
  const Tensor& X = val(x);
  double s = 0.0;
  for (std::size_t i = 0; i < X.numel(); ++i) s += X[i];
  const bool rg = needs(x);
  std::function<void(Tape&)> back;
  if (rg) {
    Var self{static_cast<int>(nodes_.size())};
    back = [x, self](Tape& t) {
      const double g = t.grad(self)[0];
      Tensor& gx = t.grad_mut(x);
      for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g;
    };
  }
  return push(Tensor({1}, {s}), rg, std::move(back));
}

Var Tape::ce_masked_sum(Var probs, const std::vector<int>& targets, const std::vector<double>& mask) {
  const Tensor& P = val(probs);
  if (P.rank() != 2) throw DimError("cross_entropy: probs must be rank-2, got " + P.shape_str());
  const int b = P.dim(0), V = P.dim(1);
  if (static_cast<int>(targets.size()) != b || static_cast<int>(mask.size()) != b) {
    throw DimError("cross_entropy: need one target and mask entry per row");
  }
  double s = 0.0;
  for (int r = 0; r < b; ++r) {
    if (targets[r] < 0 || targets[r] >= V) {
      throw IndexError("cross_entropy: target " + std::to_string(targets[r]) + " out of range at row " +
                       std::to_string(r));
    }
    if (mask[r] == 0.0) continue;
    const double p = P.at(r, targets[r]);
    s -= mask[r] * std::log(p > kProbFloor ? p : kProbFloor);
  }
  const bool rg = needs(probs);
  std::function<void(Tape&)> back;
  if (rg) {
    Var self{static_cast<int>(nodes_.size())};
    auto tg = std::make_shared<std::vector<int>>(targets);
    auto mk = std::make_shared<std::vector<double>>(mask);
    back = [probs, self, tg, mk](Tape& t) {
      const double g = t.grad(self)[0];
      const Tensor& P2 = t.val(probs);
      Tensor& gp = t.grad_mut(probs);
      for (int r = 0; r < P2.dim(0); ++r) {
        if ((*mk)[static_cast<std::size_t>(r)] == 0.0) continue;
        const double p = P2.at(r, (*tg)[static_cast<std::size_t>(r)]);
        if (p > kProbFloor) {
          gp.at(r, (*tg)[static_cast<std::size_t>(r)]) -= g * (*mk)[static_cast<std::size_t>(r)] / p;
        }
      }
    };
  }
  return push(Tensor({1}, {s}), rg, std::move(back));
}

Var Tape::cross_entropy(Var probs, const std::vector<int>& targets, const std::vector<double>& mask) {
  double total = 0.0;
  for (double m : mask) total += m;
  if (total == 0.0) throw DataError("cross_entropy: degenerate batch, all-zero mask");
  return scale(ce_masked_sum(probs, targets, mask), 1.0 / total);
}

void Tape::backward(Var loss) {
  const Tensor& L = val(loss);
  if (L.numel() != 1) throw DimError("backward: loss must be scalar, got " + L.shape_str());
  for (Node& n : nodes_) {
    if (n.requires_grad) n.grad = Tensor(n.value->shape());
  }
  Node& seed = nodes_[static_cast<std::size_t>(loss.i)];
  if (seed.grad.numel() == 0) seed.grad = Tensor(seed.value->shape());
  seed.grad[0] = 1.0;
  for (int i = loss.i; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.requires_grad && n.back) n.back(*this);
  }
}

}  // namespace vst
