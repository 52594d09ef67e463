#include "topomesh/optimizer.hpp"

#include <cmath>

#include "topomesh/error.hpp"

namespace topomesh {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamParams& hyper, const std::string& attribute) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw Error("adam: size mismatch for attribute " + attribute);
  ++state.step;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    if (!std::isfinite(g)) throw Error("non-finite gradient in attribute " + attribute);
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= hyper.lr * mhat / (std::sqrt(vhat) + hyper.epsilon);
  }
}

}  // namespace topomesh
