#include "vst/adam.hpp"

#include <cmath>

#include "vst/errors.hpp"

namespace vst {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
}

AdamState AdamState::for_params(const ModelParameters& params) {
  AdamState s;
  for (const auto& [name, tensor] : params.named_tensors()) {
    s.m.emplace(name, Tensor(tensor->shape()));
    s.v.emplace(name, Tensor(tensor->shape()));
  }
  return s;
}

void adam_step(ModelParameters& params, const NamedTensors& grads, AdamState& state, const TrainConfig& cfg) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t));
  for (auto& [name, tensor] : params.named_tensors()) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    if (!g.same_shape(*tensor)) throw DimError("adam: gradient shape mismatch for " + name);
    if (!g.all_finite()) throw NumericError("adam: non-finite gradient for parameter " + name);
    Tensor& m = state.m.at(name);
    Tensor& v = state.v.at(name);
    double* th = tensor->data();
    const double* gd = g.data();
    const std::size_t n = tensor->numel();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * gd[i];
      v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * gd[i] * gd[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      th[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

}  // namespace vst
