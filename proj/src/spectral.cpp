#include "bandlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bandlab {

Complex m_sc(Complex z) {
  if (z.imag() <= 0.0) {
    if (z.imag() == 0.0) return m_sc_real(z.real());
    throw std::invalid_argument("m_sc: need Im z > 0 (or a real bulk E)");
  }
  // branch cut along [-2,2]: sqrt(z-2)sqrt(z+2) is continuous on C+
  const Complex s = std::sqrt(z - 2.0) * std::sqrt(z + 2.0);
  Complex m = (-z + s) / 2.0;
  if (m.imag() <= 0.0) m = (-z - s) / 2.0;
  return m;
}

Complex m_sc_real(double E) {
  if (!(std::abs(E) < 2.0))
    throw std::invalid_argument("m_sc_real: boundary value requires |E| < 2");
  return {-E / 2.0, std::sqrt(4.0 - E * E) / 2.0};
}

Complex m_t(Complex z, double t) {
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("m_t: t must be in [0,1]");
  if (t == 0.0) return -1.0 / z;
  const Complex disc = std::sqrt(z * z - 4.0 * t);
  Complex m = (-z + disc) / (2.0 * t);
  Complex alt = (-z - disc) / (2.0 * t);
  if (alt.imag() > m.imag()) m = alt;
  if (!(m.imag() > 0.0)) throw std::runtime_error("m_t: no C+ root (branch selection failed)");
  return m;
}

SpectralFlowState flow_state(double E, double t, int L) {
  SpectralFlowState s;
  s.E = E;
  s.t = t;
  s.m = m_sc_real(E);
  s.z_t = E + (1.0 - t) * s.m;
  s.eta_t = (1.0 - t) * s.m.imag();
  const double raw = t < 1.0 ? 1.0 / std::sqrt(1.0 - t) : std::numeric_limits<double>::infinity();
  s.ell_t = L > 0 ? std::min(raw, static_cast<double>(L)) : raw;
  return s;
}

FlowTarget target_to_flow(Complex z, double kappa) {
  if (!(std::abs(z.real()) <= 2.0 - kappa))
    throw std::invalid_argument("target_to_flow: |Re z| must be <= 2 - kappa");
  const Complex m = m_sc(z);
  const double t0 = std::norm(m);
  const double E = -2.0 * m.real() / std::abs(m);
  return {t0, E};
}

double ward_residual(const ResolventBundle& bundle) {
  const Eigen::MatrixXcd& G = bundle.G();
  const double eta = bundle.eta();
  const std::int64_t n = G.rows();
  double worst = 0.0;
  double scale = 0.0;
  for (std::int64_t y = 0; y < n; ++y) {
    const double lhs = G.col(y).squaredNorm();
    const double rhs = G(y, y).imag() / eta;
    worst = std::max(worst, std::abs(lhs - rhs));
    scale = std::max(scale, std::max(std::abs(lhs), std::abs(rhs)));
  }
  // off-diagonal form sum_x conj(G_{xy'}) G_{xy} = (G_{y'y} - conj(G_{yy'})) / (2i eta)
  const std::int64_t pairs = std::min<std::int64_t>(n, 8);
  for (std::int64_t k = 0; k < pairs; ++k) {
    const std::int64_t y = (k * 131) % n;
    const std::int64_t yp = (k * 197 + 1) % n;
    const Complex lhs = G.col(yp).dot(G.col(y));  // conj(G_{x y'}) G_{x y}
    const Complex rhs = (G(yp, y) - std::conj(G(y, yp))) / (Complex(0.0, 2.0) * eta);
    worst = std::max(worst, std::abs(lhs - rhs));
    scale = std::max(scale, std::max(std::abs(lhs), std::abs(rhs)));
  }
  return scale > 0.0 ? worst / scale : worst;
}

std::vector<double> bulk_sup_norms(const EigenSystem& es, double kappa) {
  const std::int64_t n = es.values.size();
  std::vector<double> out;
  for (std::int64_t k = 0; k < n; ++k) {
    if (std::abs(es.values[k]) > 2.0 - kappa) continue;
    const double sup = es.vectors.col(k).cwiseAbs().maxCoeff();
    out.push_back(static_cast<double>(n) * sup * sup);
  }
  return out;
}

}  // namespace bandlab
