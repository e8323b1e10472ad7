#pragma once

#include <functional>
#include <map>
#include <string>

#include "vst/rng.hpp"
#include "vst/tensor.hpp"

namespace vst {

// Ordered named tensor collection; the unit gradcheck and Adam operate on.
using NamedTensors = std::map<std::string, Tensor>;

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_coord;  // "name[i]"
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  long coords_checked = 0;
};

// Compares analytic gradients against central finite differences.
//   loss(params)           — deterministic scalar forward pass
//   analytic(params)       — gradients of loss w.r.t. every entry of params
// Checks up to max_coords_per_tensor coordinates of each tensor (all of them
// when the tensor is small enough), sampled deterministically from rng.
// Relative error per coordinate: |a − n| / max(|a|, |n|, 1e-8).
GradCheckReport gradcheck(const std::function<double(const NamedTensors&)>& loss,
                          const std::function<NamedTensors(const NamedTensors&)>& analytic,
                          const NamedTensors& params, double epsilon, long max_coords_per_tensor, Rng rng);

}  // namespace vst
