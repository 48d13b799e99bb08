#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "bandlab/model.hpp"
#include "bandlab/spectral.hpp"
#include "bandlab/tensor.hpp"

namespace bandlab {

// Charge string sigma in {+1,-1}^n with block indices; cyclic conventions
// (sigma_{n+1} = sigma_1) apply throughout.
struct LoopSignature {
  std::vector<int> sigma;
  std::vector<std::int64_t> blocks;
  int n() const { return static_cast<int>(sigma.size()); }
};

// cut-and-glue index calculus; k, l are 1-based as in the displayed tuples
LoopSignature cut_glue_g(const LoopSignature& s, int k, std::int64_t a);
LoopSignature cut_glue_left(const LoopSignature& s, int k, int l, std::int64_t a);
LoopSignature cut_glue_right(const LoopSignature& s, int k, int l, std::int64_t b);

// Evaluates G-loops Tr prod_i G(sigma_i) E_{a_i} against a single resolvent,
// using block-restricted chain products (column slabs) rather than dense
// n-fold multiplies.
class LoopEvaluator {
 public:
  LoopEvaluator(const TorusGeometry& geo, const Matrix& G);

  const TorusGeometry& geometry() const { return *geo_; }
  std::int64_t block_count() const { return geo_->n_blocks(); }

  // G(sigma)_{xy}: +1 reads G, -1 reads the adjoint
  Complex g(int sigma, std::int64_t x, std::int64_t y) const {
    return sigma > 0 ? (*G_)(x, y) : std::conj((*G_)(y, x));
  }

  Complex eval(const LoopSignature& sig) const;

  // loop value as a function of the block at `slot` (0-based), all others fixed
  std::vector<Complex> slot_scan(const LoopSignature& sig, int slot) const;

  // <G(sigma) E_a> for every block a
  std::vector<Complex> block_traces(int sigma) const;

  // full rank-2 tensor in one pass over G
  BlockTensor full2(int s1, int s2) const;
  // full rank-3 tensor via block-partitioned products (small N only)
  BlockTensor full3(int s1, int s2, int s3) const;

 private:
  Matrix block_g(int sigma, std::int64_t a, std::int64_t b) const;

  const TorusGeometry* geo_;
  const Matrix* G_;
  std::vector<std::vector<std::int64_t>> cells_;
  std::vector<std::int64_t> block_of_;
  double w_pow_;  // W^{-d}
};

// max relative residual of the loop Ward identity at the last vertex,
// sum_{a_n} L^(n) = (2i W^d eta)^{-1} (L^(n-1)_{sigma^+} - L^(n-1)_{sigma^-}),
// for the prefix (a_1..a_{n-1}) carried by `sig` (its last block is ignored).
// Requires sigma_1 = -sigma_n.
double loop_ward_residual(const LoopEvaluator& ev, const LoopSignature& sig, double eta);

struct WardInequalityReport {
  double lhs_abs = 0.0;
  double rhs = 0.0;       // sqrt(L^{2k} L^{2n-2k}) of the symmetric split loops
  double slack = 0.0;     // rhs - lhs_abs (>= -1e-12 when the chain holds)
  bool holds = false;
};

// exact Cauchy-Schwarz chain |L^(n)| <= (L^(2k) L^(2n-2k))^{1/2} at split k
// (1-based, 1 <= k <= n-1) with the symmetric signatures of the chain
WardInequalityReport ward_inequality_check(const LoopEvaluator& ev, const LoopSignature& sig,
                                           int k);

// light-weight term W^d sum_k sum_{a,b} <(G-m)(sigma_k) E_a> S^(B)_{ab}
// (G_k^{(b)} o L^(n))
Complex lightweight_term(const LoopEvaluator& ev, const BlockProfile& profile,
                         const LoopSignature& sig, Complex m_plus);

// quadratic term W^d sum_{k<l} sum_{a,b} (G_L o L) S^(B)_{ab} (G_R o L)
Complex quadratic_term(const LoopEvaluator& ev, const BlockProfile& profile,
                       const LoopSignature& sig);

// quadratic variation loop (E (x) E)^{M,(n;k)}_{sigma,a,a'}; k is 1-based
Complex qvar_loop(const LoopEvaluator& ev, const BlockProfile& profile,
                  const LoopSignature& sig, const std::vector<std::int64_t>& blocks_prime,
                  int k);
// sum over k of the diagonal (a' = a) entries
Complex qvar_diag(const LoopEvaluator& ev, const BlockProfile& profile,
                  const LoopSignature& sig);

}  // namespace bandlab
