#include "vst/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vst/errors.hpp"

namespace vst {

GradCheckReport gradcheck(const std::function<double(const NamedTensors&)>& loss,
                          const std::function<NamedTensors(const NamedTensors&)>& analytic,
                          const NamedTensors& params, double epsilon, long max_coords_per_tensor, Rng rng) {
  const double base = loss(params);
  if (!std::isfinite(base)) throw NumericError("gradcheck: non-finite loss at base point");

  NamedTensors grads = analytic(params);
  NamedTensors work = params;

  GradCheckReport rep;
  for (const auto& [name, tensor] : params) {
    auto git = grads.find(name);
    if (git == grads.end() || !git->second.same_shape(tensor)) {
      throw DimError("gradcheck: missing or misshapen gradient for " + name);
    }
    const long n = static_cast<long>(tensor.numel());
    std::vector<long> coords;
    if (n <= max_coords_per_tensor) {
      coords.resize(static_cast<std::size_t>(n));
      for (long i = 0; i < n; ++i) coords[static_cast<std::size_t>(i)] = i;
    } else {
      for (long i = 0; i < max_coords_per_tensor; ++i) {
        coords.push_back(static_cast<long>(rng.next_below(static_cast<std::uint64_t>(n))));
      }
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }

    Tensor& wt = work.at(name);
    for (long c : coords) {
      const std::size_t i = static_cast<std::size_t>(c);
      const double saved = wt[i];
      wt[i] = saved + epsilon;
      const double lp = loss(work);
      wt[i] = saved - epsilon;
      const double lm = loss(work);
      wt[i] = saved;
      if (!std::isfinite(lp) || !std::isfinite(lm)) {
        throw NumericError("gradcheck: non-finite loss while perturbing " + name);
      }
      const double numeric = (lp - lm) / (2.0 * epsilon);
      const double a = git->second[i];
      const double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      ++rep.coords_checked;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_coord = name + "[" + std::to_string(c) + "]";
        rep.analytic_at_worst = a;
        rep.numeric_at_worst = numeric;
      }
    }
  }
  return rep;
}

}  // namespace vst
