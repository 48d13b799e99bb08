#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "bandlab/linalg.hpp"

namespace bandlab {

using Complex = std::complex<double>;

// Stieltjes transform of the semicircle law: the root of m^2 + z m + 1 = 0
// with Im m > 0.  For real E (boundary values E + i0+) requires |E| < 2.
Complex m_sc(Complex z);
Complex m_sc_real(double E);

// m_t(z): the C+ solution of t m^2 + z m + 1 = 0 (m_0 = -1/z).
Complex m_t(Complex z, double t);

// Characteristic flow z_t(E) = E + (1-t) m(E) and its derived scales.
struct SpectralFlowState {
  double E = 0.0;
  double t = 0.0;
  Complex m;      // m(E) on the unit circle in the bulk
  Complex z_t;    // E + (1-t) m(E)
  double eta_t = 0.0;  // (1-t) Im m(E)
  double ell_t = 0.0;  // min((1-t)^{-1/2}, L); L <= 0 means uncapped
};

SpectralFlowState flow_state(double E, double t, int L = 0);

// Given a bulk target z (|Re z| <= 2 - kappa, Im z > 0), the flow coordinates
// (t0, E) with sqrt(t0) m(E) = m(z) and z_{t0}(E) = sqrt(t0) z.
struct FlowTarget {
  double t0 = 0.0;
  double E = 0.0;
};
FlowTarget target_to_flow(Complex z, double kappa);

// Resolvent pair G(+) = (H-z)^{-1}, G(-) = G(+)^*, computed once per (H, z).
class ResolventBundle {
 public:
  ResolventBundle(const Eigen::MatrixXcd& H, Complex z)
      : z_(z), G_(resolvent_inverse(H, z)) {}

  Complex z() const { return z_; }
  double eta() const { return z_.imag(); }
  const Eigen::MatrixXcd& G() const { return G_; }

  // G(sigma); sigma = +1 gives G, sigma = -1 gives the adjoint
  Eigen::MatrixXcd g(int sigma) const {
    return sigma > 0 ? G_ : Eigen::MatrixXcd(G_.adjoint());
  }

 private:
  Complex z_;
  Eigen::MatrixXcd G_;
};

// max_y | sum_x |G_xy|^2 - Im G_yy / eta | relative to the checked magnitudes,
// together with the off-diagonal form of the identity on sampled column pairs.
double ward_residual(const ResolventBundle& bundle);

// N * ||psi_k||_inf^2 for all bulk eigenvectors |lambda_k| <= 2 - kappa
std::vector<double> bulk_sup_norms(const EigenSystem& es, double kappa);

}  // namespace bandlab
