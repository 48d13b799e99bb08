#pragma once

#include <cstdint>
#include <vector>

#include "bandlab/loops.hpp"
#include "bandlab/model.hpp"
#include "bandlab/spectral.hpp"

namespace bandlab {

struct FlowRecord {
  double t = 0.0;
  Complex z_t;
  std::vector<Complex> loops;        // one value per requested observable
  double max_centered_trace = 0.0;   // max_a |<(G - m) E_a>|
};

struct FlowTrajectory {
  double E = 0.0;
  std::uint64_t seed = 0;
  std::vector<FlowRecord> records;
};

// Euler-Maruyama along the matrix Brownian motion: H_{t+dt} = H_t + dH with
// H_0 = 0; at every grid point the resolvent at z_t(E) and the requested
// loop observables are evaluated.  t_grid must be increasing inside [0, 0.95].
FlowTrajectory simulate_flow(const VarianceProfile& profile, double E,
                             const std::vector<double>& t_grid, std::uint64_t seed,
                             const std::vector<LoopSignature>& observables);

struct HierarchyResidual {
  Complex mean;            // mean of (L_{t+dt} - L_t)/dt - quadratic - lightweight
  double stderr_re = 0.0;
  double stderr_im = 0.0;
  double bias_allowance = 0.0;  // pinned first-order Euler bias budget
  int n_samples = 0;
  bool pass = false;       // |mean| <= 3 stderr + allowance, componentwise
};

// Mean-zero martingale check of the loop hierarchy at one configuration.
// The O(dt) bias budget is dt * |d/dt of the primitive quadratic term|,
// estimated by finite differences, times a safety factor of 3.
HierarchyResidual hierarchy_residual(const VarianceProfile& profile, double E, double t,
                                     double dt, const LoopSignature& sig, int n_samples,
                                     std::uint64_t seed);

struct QvarCheck {
  double empirical_var_rate = 0.0;  // Var[dL]/dt
  double predicted = 0.0;           // MC mean of the quadratic variation loop
  double stderr_emp = 0.0;
  double stderr_pred = 0.0;
  int n_samples = 0;
  bool pass = false;  // |emp - pred| <= 3 (stderr_emp + stderr_pred) + O(dt)
};

// Var[L_{t+dt} - L_t]/dt against the evaluated quadratic variation tensor
QvarCheck qvar_check(const VarianceProfile& profile, double E, double t, double dt,
                     const LoopSignature& sig, int n_samples, std::uint64_t seed);

}  // namespace bandlab
