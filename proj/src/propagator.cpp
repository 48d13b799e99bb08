#include "bandlab/propagator.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace bandlab {

namespace {
constexpr double kSingularFloor = 1e-12;
}

BlockFft::BlockFft(Torus lat) : lat_(lat) {
  const int d = lat_.dim();
  std::vector<int> dims(d, lat_.side());
  std::vector<fftw_complex> tmp(static_cast<std::size_t>(lat_.n_points()));
  fwd_ = fftw_plan_dft(d, dims.data(), tmp.data(), tmp.data(), FFTW_FORWARD,
                       FFTW_ESTIMATE | FFTW_UNALIGNED);
  bwd_ = fftw_plan_dft(d, dims.data(), tmp.data(), tmp.data(), FFTW_BACKWARD,
                       FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!fwd_ || !bwd_) throw std::runtime_error("BlockFft: fftw plan creation failed");
}

BlockFft::~BlockFft() {
  if (fwd_) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  if (bwd_) fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

void BlockFft::forward(Complex* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(fwd_), p, p);
}

void BlockFft::backward(Complex* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(bwd_), p, p);
  const double scale = 1.0 / static_cast<double>(lat_.n_points());
  for (std::int64_t i = 0; i < lat_.n_points(); ++i) data[i] *= scale;
}

PropagatorFamily::PropagatorFamily(const BlockProfile& profile, Complex xi)
    : prof_(profile), xi_(xi) {
  const std::int64_t n = prof_.lat.n_points();
  row_.resize(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) {
    const Complex den = 1.0 - xi_ * prof_.symbol(k);
    if (std::abs(den) < kSingularFloor)
      throw std::runtime_error("PropagatorFamily: 1 - xi*s_hat(k) nearly singular");
    row_[static_cast<std::size_t>(k)] = 1.0 / den;
  }
  BlockFft fft(prof_.lat);
  fft.backward(row_.data());
  mean_ = 1.0 / (1.0 - xi_) / static_cast<double>(n);
}

Complex PropagatorFamily::row_sum() const {
  Complex s = 0.0;
  for (const auto& v : row_) s += v;
  return s;
}

Matrix PropagatorFamily::dense() const {
  const std::int64_t n = prof_.lat.n_points();
  Matrix M(n, n);
  for (std::int64_t a = 0; a < n; ++a)
    for (std::int64_t b = 0; b < n; ++b) M(a, b) = entry(a, b);
  return M;
}

Matrix PropagatorFamily::dense_ring() const {
  const std::int64_t n = prof_.lat.n_points();
  Matrix M(n, n);
  for (std::int64_t a = 0; a < n; ++a)
    for (std::int64_t b = 0; b < n; ++b) M(a, b) = ring_entry(a, b);
  return M;
}

void PropagatorFamily::apply(const Complex* v, Complex* w) const {
  const std::int64_t n = prof_.lat.n_points();
  std::vector<Complex> buf(v, v + n);
  BlockFft fft(prof_.lat);
  fft.forward(buf.data());
  for (std::int64_t k = 0; k < n; ++k)
    buf[static_cast<std::size_t>(k)] /= (1.0 - xi_ * prof_.symbol(k));
  fft.backward(buf.data());
  std::copy(buf.begin(), buf.end(), w);
}

double b_param(double t, double K, int d, int L) {
  const double ld = std::pow(static_cast<double>(L), d);
  return std::pow(K + 1.0, -(d - 2.0)) + 1.0 / (ld * std::abs(1.0 - t));
}

double ell_param(double t, int L) {
  if (t >= 1.0) return static_cast<double>(L);
  return std::min(1.0 / std::sqrt(1.0 - t), static_cast<double>(L));
}

double tail(double t, double r, int d, int L) {
  const double ld = std::pow(static_cast<double>(L), d);
  const double poly = 1.0 / (std::pow(r, d - 2.0) + 1.0) + 1.0 / (ld * std::abs(1.0 - t));
  return poly * std::exp(-std::sqrt(r / ell_param(t, L)));
}

double tail_trunc(double t, double r, double ell, double D, int d, int L, int W) {
  const double capped = tail(t, std::min(r, ell), d, L);
  return std::max(capped, std::pow(static_cast<double>(W), -D));
}

namespace {

Complex charge_m(int sigma, Complex m_plus) { return sigma > 0 ? m_plus : std::conj(m_plus); }

// multiply axis `axis` of A by the circulant with Fourier symbol `sym`
void axis_symbol_apply(const BlockFft& fft, const std::vector<Complex>& sym, BlockTensor& A,
                       int axis) {
  const std::int64_t m = A.axis_size();
  const std::int64_t stride = A.axis_stride(axis);
  const std::int64_t total = A.size();
  std::vector<Complex> buf(static_cast<std::size_t>(m));
  for (std::int64_t outer = 0; outer < total; outer += m * stride) {
    for (std::int64_t inner = 0; inner < stride; ++inner) {
      const std::int64_t base = outer + inner;
      for (std::int64_t q = 0; q < m; ++q) buf[static_cast<std::size_t>(q)] = A[base + q * stride];
      fft.forward(buf.data());
      for (std::int64_t k = 0; k < m; ++k) buf[static_cast<std::size_t>(k)] *= sym[static_cast<std::size_t>(k)];
      fft.backward(buf.data());
      for (std::int64_t q = 0; q < m; ++q) A[base + q * stride] = buf[static_cast<std::size_t>(q)];
    }
  }
}

std::vector<Complex> make_symbol(const BlockProfile& prof,
                                 const std::function<Complex(double)>& f) {
  const std::int64_t n = prof.lat.n_points();
  std::vector<Complex> sym(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) sym[static_cast<std::size_t>(k)] = f(prof.symbol(k));
  return sym;
}

}  // namespace

BlockTensor theta_operator(const BlockProfile& profile, double t,
                           const std::vector<int>& sigma, const Complex m_plus,
                           const BlockTensor& A) {
  const int n = A.rank();
  if (static_cast<int>(sigma.size()) != n)
    throw std::invalid_argument("theta_operator: signature rank mismatch");
  BlockFft fft(profile.lat);
  BlockTensor out(profile.lat, n);
  for (int i = 0; i < n; ++i) {
    const Complex c = charge_m(sigma[i], m_plus) * charge_m(sigma[(i + 1) % n], m_plus);
    auto sym = make_symbol(profile, [&](double s) -> Complex {
      const Complex den = 1.0 - t * c * s;
      if (std::abs(den) < kSingularFloor)
        throw std::runtime_error("theta_operator: near-singular denominator");
      return c * s / den;
    });
    BlockTensor tmp = A;
    axis_symbol_apply(fft, sym, tmp, i);
    out += tmp;
  }
  return out;
}

BlockTensor evolution_kernel_apply(const BlockProfile& profile, double s, double t,
                                   const std::vector<int>& sigma, const Complex m_plus,
                                   const BlockTensor& A) {
  const int n = A.rank();
  if (static_cast<int>(sigma.size()) != n)
    throw std::invalid_argument("evolution_kernel_apply: signature rank mismatch");
  if (!(0.0 <= s && s <= t && t < 1.0))
    throw std::invalid_argument("evolution_kernel_apply: need 0 <= s <= t < 1");
  BlockFft fft(profile.lat);
  BlockTensor out = A;
  for (int i = 0; i < n; ++i) {
    const Complex c = charge_m(sigma[i], m_plus) * charge_m(sigma[(i + 1) % n], m_plus);
    auto sym = make_symbol(profile, [&](double sh) -> Complex {
      const Complex den = 1.0 - t * c * sh;
      if (std::abs(den) < kSingularFloor)
        throw std::runtime_error("evolution_kernel_apply: near-singular denominator");
      return (1.0 - s * c * sh) / den;
    });
    axis_symbol_apply(fft, sym, out, i);
  }
  return out;
}

Matrix evolution_leg_dense(const BlockProfile& profile, double s, double t, Complex c) {
  const std::int64_t n = profile.lat.n_points();
  std::vector<Complex> row(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) {
    const Complex den = 1.0 - t * c * profile.symbol(k);
    if (std::abs(den) < kSingularFloor)
      throw std::runtime_error("evolution_leg_dense: near-singular denominator");
    row[static_cast<std::size_t>(k)] = (1.0 - s * c * profile.symbol(k)) / den;
  }
  BlockFft fft(profile.lat);
  fft.backward(row.data());
  Matrix M(n, n);
  for (std::int64_t a = 0; a < n; ++a)
    for (std::int64_t b = 0; b < n; ++b)
      M(a, b) = row[static_cast<std::size_t>(profile.lat.diff(b, a))];
  return M;
}

double evolution_leg_decomposition_residual(const BlockProfile& profile, double s, double t,
                                            Complex c) {
  const std::int64_t n = profile.lat.n_points();
  const Matrix leg = evolution_leg_dense(profile, s, t, c);
  const PropagatorFamily theta(profile, t * c);
  const RealMatrix S = profile.dense();
  const Matrix rhs = Matrix::Identity(n, n) +
                     (t - s) * c * (S.cast<Complex>() * theta.dense());
  return (leg - rhs).cwiseAbs().maxCoeff();
}

DecayFit decay_profile(const PropagatorFamily& family, double t) {
  const Torus& lat = family.lattice();
  const int d = lat.dim();
  const int L = lat.side();
  const double ell = ell_param(t, L);
  const std::int64_t n = lat.n_points();
  const int max_shell = d * (L / 2);
  std::vector<double> shell_max(static_cast<std::size_t>(max_shell) + 1, 0.0);
  for (std::int64_t a = 0; a < n; ++a) {
    const int r = lat.norm1(a);
    shell_max[static_cast<std::size_t>(r)] =
        std::max(shell_max[static_cast<std::size_t>(r)], std::abs(family.entry(0, a)));
  }
  DecayFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int np = 0;
  for (int r = 0; r <= max_shell; ++r) {
    if (shell_max[static_cast<std::size_t>(r)] <= 0.0) continue;
    fit.shell_radius.push_back(r);
    fit.shell_max_abs.push_back(shell_max[static_cast<std::size_t>(r)]);
    const double x = r / ell;
    const double y = std::log(shell_max[static_cast<std::size_t>(r)] / b_param(t, r, d, L));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++np;
  }
  if (np >= 2 && sxx * np - sx * sx > 0.0) {
    const double slope = (np * sxy - sx * sy) / (np * sxx - sx * sx);
    fit.c_rate = -slope;
    // lift the envelope so it covers every shell
    double C = 0.0;
    for (std::size_t i = 0; i < fit.shell_radius.size(); ++i) {
      const double x = fit.shell_radius[i] / ell;
      C = std::max(C, fit.shell_max_abs[i] /
                          (b_param(t, fit.shell_radius[i], d, L) * std::exp(-fit.c_rate * x)));
    }
    fit.c_prefactor = C;
    fit.fit_ok = std::isfinite(fit.c_rate) && std::isfinite(C);
  }
  for (std::size_t i = 0; i < fit.shell_radius.size(); ++i)
    fit.bound_value.push_back(fit.c_prefactor *
                              b_param(t, fit.shell_radius[i], d, L) *
                              std::exp(-fit.c_rate * fit.shell_radius[i] / ell));
  return fit;
}

DifferenceReport difference_checks(const PropagatorFamily& family) {
  const Torus& lat = family.lattice();
  const int d = lat.dim();
  const std::int64_t n = lat.n_points();
  DifferenceReport rep;
  for (std::int64_t a = 0; a < n; ++a) {
    const int na = lat.norm1(a);
    rep.ring_const = std::max(
        rep.ring_const, std::abs(family.ring_entry(0, a)) * std::pow(na + 1.0, d - 2.0));
    if (na < 2) continue;
    for (std::int64_t r = 1; r < n; ++r) {
      const int nr = lat.norm1(r);
      if (nr == 0 || 2 * nr > na) continue;
      const Complex tp = family.entry(0, lat.add(a, r));
      const Complex tm = family.entry(0, lat.diff(a, r));
      const Complex t0 = family.entry(0, a);
      rep.first_order_const =
          std::max(rep.first_order_const,
                   std::abs(tp - t0) * std::pow(na + 1.0, d - 1.0) / nr);
      rep.second_order_const =
          std::max(rep.second_order_const,
                   std::abs(tp + tm - 2.0 * t0) * std::pow(na + 1.0, d) / (nr * nr));
    }
  }
  return rep;
}

}  // namespace bandlab
