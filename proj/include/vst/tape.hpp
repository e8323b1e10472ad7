#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "vst/rng.hpp"
#include "vst/tensor.hpp"

namespace vst {

// Handle to a node on a Tape.
struct Var {
  int i = -1;
  bool valid() const { return i >= 0; }
};

// Reverse-mode gradient tape. Forward calls append nodes in order; backward
// walks them in reverse, accumulating gradients into every node that
// requires them. Single-writer: one tape per forward pass.
//
// Parameter leaves alias caller-owned tensors (no copy); the storage must
// outlive the tape.
class Tape {
 public:
  Var leaf(Tensor value);                   // constant input, no gradient
  Var leaf_ref(const Tensor& storage);      // constant input, aliased (no copy)
  Var leaf_ref(Tensor&&) = delete;          // aliased storage must outlive the tape
  Var param(const Tensor& storage);         // gradient-tracked leaf, aliased
  Var param(Tensor&&) = delete;

  const Tensor& val(Var v) const;
  // Zero-filled until backward() runs; only nodes that require gradients
  // have one.
  const Tensor& grad(Var v) const;

  // c[m×n] = a[m×k]·b[k×n]; backward dA += dC·Bᵀ, dB += Aᵀ·dC.
  Var matmul(Var a, Var b);
  // Elementwise; shapes must match, or b may be [n] / [1×n] broadcast over
  // the leading batch axis of a [b×n].
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var sigmoid(Var x);
  Var tanh(Var x);
  // alpha·x + beta elementwise; one_minus(x) = affine(x, −1, 1).
  Var affine(Var x, double alpha, double beta);
  Var one_minus(Var x) { return affine(x, -1.0, 1.0); }
  Var scale(Var x, double s) { return affine(x, s, 0.0); }
  // [b×p] ⊕ [b×q] → [b×(p+q)]; backward splits at column p.
  Var concat_cols(Var a, Var b);
  Var softmax_rows(Var x);
  // Inverted dropout: zero with probability `rate`, survivors scaled by
  // 1/(1−rate). Identity (same Var, bit-exact) when not training or rate 0.
  Var dropout(Var x, double rate, Rng& rng, bool training);
  // ids[b×t] rows of table[V×E] → [b×t×E]; gradient scatter-adds into rows.
  Var embed(Var table, const std::vector<int>& ids, int b, int t);
  // [b×T×d] → [b×d] at step t.
  Var slice_time(Var x, int t);
  Var sum(Var x);  // scalar [1]
  // −Σ mask·log(max(probs[r, targets[r]], 1e-12)) / Σ mask over rows r.
  Var cross_entropy(Var probs, const std::vector<int>& targets, const std::vector<double>& mask);
  // Unnormalized numerator of cross_entropy; lets a caller pool several
  // batches of rows under one mask total.
  Var ce_masked_sum(Var probs, const std::vector<int>& targets, const std::vector<double>& mask);

  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  static constexpr double kProbFloor = 1e-12;

 private:
  struct Node {
    std::shared_ptr<const Tensor> value;
    Tensor grad;
    bool requires_grad = false;
    std::function<void(Tape&)> back;  // null for leaves
  };

  Var push(Tensor value, bool requires_grad, std::function<void(Tape&)> back);
  Tensor& grad_mut(Var v) { return nodes_[static_cast<std::size_t>(v.i)].grad; }
  bool needs(Var v) const { return nodes_[static_cast<std::size_t>(v.i)].requires_grad; }

  std::vector<Node> nodes_;
};

}  // namespace vst
