#pragma once

#include <span>
#include <string>
#include <vector>

namespace topomesh {

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment state for one flat parameter array.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
  void resize(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    step = 0;
  }
};

// Standard bias-corrected Adam update in place. Throws Error naming
// `attribute` on a non-finite gradient.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamParams& hyper, const std::string& attribute);

}  // namespace topomesh
