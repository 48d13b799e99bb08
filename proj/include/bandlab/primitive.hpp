#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "bandlab/model.hpp"
#include "bandlab/propagator.hpp"
#include "bandlab/tensor.hpp"

namespace bandlab {

inline Complex charge_value(int sigma, Complex m_plus) {
  return sigma > 0 ? m_plus : std::conj(m_plus);
}

// explicit primitive loops; w_inv_d = W^{-d}
Complex k1(int sigma, Complex m_plus);
Complex k2(const BlockProfile& profile, double t, int s1, int s2, std::int64_t a1,
           std::int64_t a2, Complex m_plus, double w_inv_d);
Complex k3(const BlockProfile& profile, double t, int s1, int s2, int s3, std::int64_t a1,
           std::int64_t a2, std::int64_t a3, Complex m_plus, double w_inv_d);

BlockTensor k2_tensor(const BlockProfile& profile, double t, const std::vector<int>& sigma,
                      Complex m_plus, double w_inv_d);
BlockTensor k3_tensor(const BlockProfile& profile, double t, const std::vector<int>& sigma,
                      Complex m_plus, double w_inv_d);

// Canonical tree partition of the oriented n-gon: a non-crossing tree with
// the polygon vertices as leaves and internal vertices of degree >= 3.  Each
// edge carries the 1-based pair of regions it separates.
struct TreeEdge {
  int u = 0, v = 0;        // vertex ids; leaves are 0..n-1, internal >= n
  int region_k = 0;        // 1-based
  int region_l = 0;
  bool external = false;
};

struct CanonicalTree {
  int n_leaves = 0;
  int n_internal = 0;
  std::vector<TreeEdge> edges;
};

// all canonical tree partitions, by interval dynamic programming over
// boundary arcs; counts follow the super-Catalan sequence 1, 3, 11, 45
std::vector<CanonicalTree> enumerate_tsp(int n);

// value of one tree: (prod_i m_i) sum_b prod_e f(e) with external edges
// Theta_{t m_k m_{k+1}}(a_k, .) and internal edges (Theta_{t m_k m_l} - I)
Complex tree_value(const CanonicalTree& tree, const BlockProfile& profile, double t,
                   const std::vector<int>& sigma, const std::vector<std::int64_t>& blocks,
                   Complex m_plus);

// K^(n) via the tree representation (n >= 4; n in {1,2,3} use the explicit
// forms)
Complex k_loop_tree(const BlockProfile& profile, double t, const std::vector<int>& sigma,
                    const std::vector<std::int64_t>& blocks, Complex m_plus, double w_inv_d);

// Joint primitive hierarchy solved by fixed-step RK4 from t = 0; holds all
// signatures for n = 2..n_max.
struct KLoopFamily {
  Torus lat;
  int n_max = 2;
  double t = 0.0;
  Complex m_plus;
  double w_inv_d = 1.0;
  bool unstable = false;              // step-halving disagreement > 1e-4
  double step_halving_error = 0.0;    // max abs disagreement over all tensors
  // K[n][mask]: mask bit i set means sigma_{i+1} = -
  std::vector<std::vector<BlockTensor>> K;

  static int mask_of(const std::vector<int>& sigma);
  const BlockTensor& loop(const std::vector<int>& sigma) const;
};

// dt <= 0 picks a step from the blow-up scale of the end time; when
// halving_check is set the integration is repeated at dt/2 and the
// disagreement recorded
KLoopFamily k_loop_ode(const BlockProfile& profile, int n_max, double t_end, Complex m_plus,
                       double w_inv_d, double dt = 0.0, bool halving_check = true);

// Ward identity residual for primitive loops at the last vertex (relative);
// explicit route for n in {2,3}
double k_ward_residual_explicit(const BlockProfile& profile, double t, int n,
                                const std::vector<int>& sigma, Complex m_plus, double eta_t);
// same against an ODE family (all prefixes of the stored tensors)
double k_ward_residual_family(const KLoopFamily& family, const std::vector<int>& sigma,
                              double eta_t);

struct KBoundPoint {
  double t = 0.0;
  double max_abs = 0.0;
  double ratio = 0.0;  // max|K^(n)| / (W^{-d} B_{t,0})^{n-1}
};

// max_{sigma,a}|K^(n)| against (W^{-d} B_{t,0})^{n-1} over a t-grid; n >= 4
// uses sampled tuples plus all coincident ones
std::vector<KBoundPoint> k_bound_report(const BlockProfile& profile, int n,
                                        const std::vector<double>& t_grid, Complex m_plus,
                                        double w_inv_d, int n_samples = 200);

// tensor operators ------------------------------------------------------

// P^(i): average over axis i (broadcast back), i 0-based
BlockTensor partial_avg(const BlockTensor& A, int axis);
// Q^(i) = I - P^(i)
BlockTensor zero_mode_remove(const BlockTensor& A, int axis);
// P: sum over all axes but the first
std::vector<Complex> partial_sum(const BlockTensor& A);
// mollifier chi^(n)_t built from a rescaled compactly supported bump;
// sums to 1 over (a_2..a_n) for every a_1 exactly
BlockTensor mollifier_chi(const Torus& lat, int rank, double t);
// Q_t o A = A - (P o A)_{a_1} chi_t
BlockTensor sum_zero_apply(const BlockTensor& A, const BlockTensor& chi);

}  // namespace bandlab
