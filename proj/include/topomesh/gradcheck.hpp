#pragma once

#include <string>
#include <vector>

namespace topomesh {

// One finite-difference comparison: analytic vs. central differences on a
// seeded random instance.
struct GradCheckRow {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 1e-3;
  bool pass = false;
};

// Runs the whole suite (every loss plus the render adjoint). Returns the
// per-check rows; all instances derive deterministically from `seed`.
std::vector<GradCheckRow> run_gradient_suite(unsigned seed);

bool all_pass(const std::vector<GradCheckRow>& rows);

// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor), floor = 1e-3 * largest
// magnitude, so negligible components cannot fail on finite-difference noise.
double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric);

}  // namespace topomesh
