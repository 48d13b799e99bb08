#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "bandlab/model.hpp"
#include "bandlab/tensor.hpp"

namespace bandlab {

// d-dimensional complex FFT on the block torus (FFTW backend).  Transforms
// are applied to contiguous L^d fibers; forward is unnormalized, backward
// divides by L^d.
class BlockFft {
 public:
  explicit BlockFft(Torus lat);
  ~BlockFft();
  BlockFft(const BlockFft&) = delete;
  BlockFft& operator=(const BlockFft&) = delete;

  const Torus& lattice() const { return lat_; }
  void forward(Complex* data) const;
  void backward(Complex* data) const;  // normalized inverse

 private:
  Torus lat_;
  void* fwd_ = nullptr;
  void* bwd_ = nullptr;
};

// Propagator Theta_xi = (1 - xi S^(B))^{-1}, a circulant on Z_L^d held as its
// first row (computed by FFT diagonalization) plus the zero-mode-removed
// variant.  Rejects xi with min_k |1 - xi s_hat(k)| < 1e-12.
class PropagatorFamily {
 public:
  PropagatorFamily(const BlockProfile& profile, Complex xi);

  const Torus& lattice() const { return prof_.lat; }
  const BlockProfile& profile() const { return prof_; }
  Complex xi() const { return xi_; }

  Complex entry(std::int64_t a, std::int64_t b) const {
    return row_[static_cast<std::size_t>(prof_.lat.diff(b, a))];
  }
  // Theta with zero mode removed: entry minus the all-pairs average
  Complex ring_entry(std::int64_t a, std::int64_t b) const { return entry(a, b) - mean_; }

  Complex row_sum() const;
  Matrix dense() const;
  Matrix dense_ring() const;

  // w = Theta_xi v on block fields
  void apply(const Complex* v, Complex* w) const;

 private:
  BlockProfile prof_;
  Complex xi_;
  std::vector<Complex> row_;  // Theta(0, a)
  Complex mean_;              // L^{-2d} sum_{a,b} Theta(a,b)
};

// control parameters
double b_param(double t, double K, int d, int L);          // B_{t,K}
double ell_param(double t, int L);                         // l_t
double tail(double t, double r, int d, int L);             // T_t(r)
double tail_trunc(double t, double r, double ell, double D, int d, int L, int W);

// sum_i (axis-i application of m_i m_{i+1} S^(B) Theta_{t m_i m_{i+1}}); the
// linearized action of the hierarchy's quadratic term around the primitive
// 2-loop.  sigma uses the cyclic convention sigma_{n+1} = sigma_1.
BlockTensor theta_operator(const BlockProfile& profile, double t,
                           const std::vector<int>& sigma, const Complex m_plus,
                           const BlockTensor& A);

// Evolution kernel: per-axis multiplication by
// (1 - s m_i m_{i+1} S^(B)) / (1 - t m_i m_{i+1} S^(B)).
BlockTensor evolution_kernel_apply(const BlockProfile& profile, double s, double t,
                                   const std::vector<int>& sigma, const Complex m_plus,
                                   const BlockTensor& A);

// single-axis leg as a dense matrix, and its exact decomposition remainder
// leg - I - (t-s) c S^(B) Theta_{tc} with c = m_i m_{i+1}
Matrix evolution_leg_dense(const BlockProfile& profile, double s, double t, Complex c);
double evolution_leg_decomposition_residual(const BlockProfile& profile, double s, double t,
                                            Complex c);

struct DecayFit {
  std::vector<int> shell_radius;
  std::vector<double> shell_max_abs;   // max |Theta(0,a)| over the shell
  std::vector<double> bound_value;     // C B_{t,|a|} exp(-c|a|/l_t) at the fit
  double c_rate = 0.0;                 // fitted decay rate (>0 expected)
  double c_prefactor = 0.0;            // fitted envelope constant
  bool fit_ok = false;
};

// tabulates shell maxima of |Theta_xi(0,a)| and fits the exponential-decay
// envelope C B_{t,|a|} exp(-c |a| / l_t)
DecayFit decay_profile(const PropagatorFamily& family, double t);

struct DifferenceReport {
  double first_order_const = 0.0;   // max |D1| (|a|+1)^{d-1} / |r|
  double second_order_const = 0.0;  // max |D2| (|a|+1)^d / |r|^2
  double ring_const = 0.0;          // max |ring(0,a)| (|a|+1)^{d-2}
};

// measured constants for the first/second difference and zero-mode bounds,
// over |r| <= |a|/2
DifferenceReport difference_checks(const PropagatorFamily& family);

}  // namespace bandlab
