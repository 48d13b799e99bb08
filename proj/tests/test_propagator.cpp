#include "bandlab/propagator.hpp"

#include "doctest.h"

#include <cmath>

#include "bandlab/primitive.hpp"
#include "bandlab/spectral.hpp"

using namespace bandlab;

namespace {

BlockProfile make_profile(int d, int L, double lambda = 1.0) {
  TorusGeometry geo(d, 1, L);
  return VarianceProfile(geo, lambda).block();
}

}  // namespace

TEST_SUITE_BEGIN("propagator");

TEST_CASE("xi = 0 gives the identity") {
  const BlockProfile prof = make_profile(3, 4);
  PropagatorFamily theta(prof, Complex(0.0));
  for (std::int64_t a = 0; a < prof.lat.n_points(); a += 5)
    for (std::int64_t b = 0; b < prof.lat.n_points(); b += 3)
      CHECK(std::abs(theta.entry(a, b) - (a == b ? 1.0 : 0.0)) < 1e-14);
}

TEST_CASE("dense circulant inverse matches the FFT path for L <= 8") {
  for (int L : {2, 3, 4, 8}) {
    const BlockProfile prof = make_profile(3, L, 0.9);
    for (const Complex xi : {Complex(0.5, 0.0), Complex(0.3, 0.4), Complex(-0.7, 0.1)}) {
      PropagatorFamily theta(prof, xi);
      const Matrix D = theta.dense();
      const Matrix res = (Matrix::Identity(D.rows(), D.cols()).cast<Complex>() -
                          xi * prof.dense().cast<Complex>()) *
                             D -
                         Matrix::Identity(D.rows(), D.cols());
      CHECK(res.cwiseAbs().maxCoeff() < 1e-12);
      CHECK((D - D.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("row sums equal 1/(1-t) at real xi") {
  const BlockProfile prof = make_profile(3, 4);
  PropagatorFamily theta(prof, Complex(0.5));
  CHECK(std::abs(theta.row_sum() - 2.0) < 1e-12);
  PropagatorFamily theta9(prof, Complex(0.9));
  CHECK(std::abs(theta9.row_sum() - 10.0) < 1e-11);
}

TEST_CASE("translation invariance and commutativity") {
  const BlockProfile prof = make_profile(3, 4);
  PropagatorFamily t1(prof, Complex(0.5));
  PropagatorFamily t2(prof, Complex(0.2, 0.6));
  const Torus& lat = prof.lat;
  for (std::int64_t a = 0; a < lat.n_points(); a += 7)
    for (std::int64_t r = 0; r < lat.n_points(); r += 11)
      CHECK(std::abs(t1.entry(lat.add(a, r), lat.add(0, r)) - t1.entry(a, 0)) < 1e-13);
  const Matrix A = t1.dense(), B = t2.dense(), S = prof.dense().cast<Complex>();
  CHECK((A * B - B * A).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((A * S - S * A).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero-mode removal sums to zero") {
  const BlockProfile prof = make_profile(3, 4);
  PropagatorFamily theta(prof, Complex(0.8));
  Complex total = 0.0;
  const std::int64_t n = prof.lat.n_points();
  for (std::int64_t a = 0; a < n; ++a)
    for (std::int64_t b = 0; b < n; ++b) total += theta.ring_entry(a, b);
  const double scale = static_cast<double>(n) * static_cast<double>(n) *
                       theta.dense().cwiseAbs().maxCoeff();
  CHECK(std::abs(total) < 1e-10 * scale);
}

TEST_CASE("domination by the real-xi propagator") {
  // |Theta_{t m^2}(0,a)| <= Theta_t(0,a) entrywise, |m| = 1
  const BlockProfile prof = make_profile(3, 6);
  const Complex m = m_sc_real(0.7);
  const double t = 0.9;
  PropagatorFamily short_prop(prof, t * m * m);
  PropagatorFamily long_prop(prof, Complex(t));
  for (std::int64_t a = 0; a < prof.lat.n_points(); ++a)
    CHECK(std::abs(short_prop.entry(0, a)) <= long_prop.entry(0, a).real() + 1e-13);
}

TEST_CASE("near-singular xi is rejected") {
  const BlockProfile prof = make_profile(3, 2);
  CHECK_THROWS(PropagatorFamily(prof, Complex(1.0)));
}

TEST_CASE("control parameters") {
  CHECK(b_param(0.0, 0.0, 3, 2) == doctest::Approx(1.125).epsilon(1e-15));
  CHECK(ell_param(0.99, 100) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(ell_param(0.5, 2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  // tail is decreasing in r
  double prev = tail(0.9, 0.0, 3, 16);
  for (double r = 0.5; r < 24.0; r += 0.5) {
    const double cur = tail(0.9, r, 3, 16);
    CHECK(cur <= prev + 1e-15);
    prev = cur;
  }
  // truncated tail floors at W^{-D}
  CHECK(tail_trunc(0.9, 1000.0, 8.0, 12.0, 3, 16, 3) >= std::pow(3.0, -12.0));
  CHECK(tail_trunc(0.9, 2.0, 8.0, 12.0, 3, 16, 3) ==
        doctest::Approx(tail(0.9, 2.0, 3, 16)).epsilon(1e-12));
}

TEST_CASE("tail composition inequality with a measured constant") {
  const int d = 3, L = 8;
  Torus lat(d, L);
  for (double u : {0.5, 0.9})
    for (double t : {0.9, 0.95}) {
      if (u > t) continue;
      double worst = 0.0;
      for (std::int64_t a = 0; a < lat.n_points(); a += 3)
        for (std::int64_t b = 0; b < lat.n_points(); b += 5) {
          double lhs = 0.0;
          for (std::int64_t c = 0; c < lat.n_points(); ++c)
            lhs += tail(u, lat.dist(a, c), d, L) * tail(t, lat.dist(c, b), d, L);
          worst = std::max(worst, lhs * (1.0 - u) / tail(t, lat.dist(a, b), d, L));
        }
      CHECK(std::isfinite(worst));
      CHECK(worst < 100.0);  // measured C_d stays modest at these sizes
    }
}

TEST_CASE("exponential decay fit of the long propagator") {
  const BlockProfile prof = make_profile(3, 16);
  const double t = 0.96;  // ell_t = 5
  PropagatorFamily theta(prof, Complex(t));
  const DecayFit fit = decay_profile(theta, t);
  CHECK(fit.fit_ok);
  CHECK(fit.c_rate > 0.1);
  CHECK(fit.c_prefactor < 50.0);
  // envelope covers every shell
  for (std::size_t i = 0; i < fit.shell_radius.size(); ++i)
    CHECK(fit.shell_max_abs[i] <= fit.bound_value[i] * (1.0 + 1e-9));
}

TEST_CASE("short propagator decays on a unit scale") {
  const BlockProfile prof = make_profile(3, 16);
  const Complex m = m_sc_real(0.0);  // m = i, m^2 = -1
  PropagatorFamily short_prop(prof, 0.9 * m * m);
  double worst = 0.0;
  for (std::int64_t a = 0; a < prof.lat.n_points(); ++a) {
    const int r = prof.lat.norm1(a);
    if (r >= 4) worst = std::max(worst, std::abs(short_prop.entry(0, a)) * std::exp(static_cast<double>(r)));
  }
  CHECK(std::isfinite(worst));
  CHECK(worst < 10.0);  // C_kappa measured at E = 0
}

TEST_CASE("difference bounds keep finite constants, stable in L") {
  const double t = 0.9;
  DifferenceReport rep16, rep24;
  {
    PropagatorFamily theta(make_profile(3, 16), Complex(t));
    rep16 = difference_checks(theta);
  }
  {
    PropagatorFamily theta(make_profile(3, 24), Complex(t));
    rep24 = difference_checks(theta);
  }
  for (const auto* r : {&rep16, &rep24}) {
    CHECK(std::isfinite(r->first_order_const));
    CHECK(std::isfinite(r->second_order_const));
    CHECK(std::isfinite(r->ring_const));
  }
  CHECK(rep24.first_order_const < 3.0 * rep16.first_order_const + 1.0);
  CHECK(rep24.second_order_const < 3.0 * rep16.second_order_const + 1.0);
  CHECK(rep24.ring_const < 3.0 * rep16.ring_const + 1.0);
}

TEST_CASE("first difference vanishes at r = 0 by construction") {
  const BlockProfile prof = make_profile(3, 8);
  PropagatorFamily theta(prof, Complex(0.9));
  for (std::int64_t a = 0; a < prof.lat.n_points(); a += 3)
    CHECK(std::abs(theta.entry(0, prof.lat.add(a, 0)) - theta.entry(0, a)) == 0.0);
}

TEST_CASE("theta operator on the zero tensor") {
  const BlockProfile prof = make_profile(3, 3);
  BlockTensor A(prof.lat, 2);
  const Complex m = m_sc_real(0.2);
  const BlockTensor out = theta_operator(prof, 0.5, {+1, -1}, m, A);
  CHECK(out.max_abs() == 0.0);
}

TEST_CASE("theta operator is the linearization of the primitive flow") {
  // on K^(2): Theta o K = 2 dK/dt (two identical axis terms), and the
  // quadratic term itself equals dK/dt -- checked against a finite
  // difference of the explicit propagator form
  const BlockProfile prof = make_profile(3, 3);
  const Complex m = m_sc_real(0.3);
  const double t = 0.5, h = 1e-5;
  const std::vector<int> sigma{+1, -1};
  const BlockTensor k_now = k2_tensor(prof, t, sigma, m, 1.0);
  const BlockTensor theta_k = theta_operator(prof, t, sigma, m, k_now);
  BlockTensor dk = k2_tensor(prof, t + h, sigma, m, 1.0);
  dk -= k2_tensor(prof, t - h, sigma, m, 1.0);
  dk *= 1.0 / (2.0 * h);
  double worst = 0.0;
  for (std::int64_t i = 0; i < dk.size(); ++i)
    worst = std::max(worst, std::abs(theta_k[i] - 2.0 * dk[i]));
  CHECK(worst < 1e-6 * dk.max_abs());
}

TEST_CASE("non-alternating signature rows decay fast") {
  // sigma = (+,+) builds its rows from Theta_{t m^2}, which keeps a unit
  // decay scale even as t -> 1, unlike the alternating Theta_t rows
  const BlockProfile prof = make_profile(3, 8);
  const Complex m = m_sc_real(0.0);
  const std::int64_t nb = prof.lat.n_points();
  auto shell_max = [&](const BlockTensor& out, int shell) {
    double v = 0.0;
    for (std::int64_t a = 0; a < nb; ++a)
      if (prof.lat.norm1(a) == shell) v = std::max(v, std::abs(out[a * nb]));
    return v;
  };
  BlockTensor A(prof.lat, 2);
  A[0] = 1.0;  // delta at the origin pair
  const BlockTensor same = theta_operator(prof, 0.99, {+1, +1}, m, A);
  const BlockTensor alt = theta_operator(prof, 0.99, {+1, -1}, m, A);
  CHECK(shell_max(same, 8) < 0.15 * shell_max(same, 4));
  CHECK(shell_max(alt, 8) > 0.3 * shell_max(alt, 4));
}

TEST_CASE("evolution kernel: identity at s = t and exact semigroup") {
  const BlockProfile prof = make_profile(3, 3);
  const Complex m = m_sc_real(0.4);
  const std::vector<int> sigma{+1, -1, +1};
  BlockTensor A(prof.lat, 3);
  for (std::int64_t i = 0; i < A.size(); ++i)
    A[i] = Complex(std::sin(0.1 * static_cast<double>(i)), std::cos(0.2 * static_cast<double>(i)));
  const BlockTensor same = evolution_kernel_apply(prof, 0.7, 0.7, sigma, m, A);
  double worst = 0.0;
  for (std::int64_t i = 0; i < A.size(); ++i) worst = std::max(worst, std::abs(same[i] - A[i]));
  CHECK(worst < 1e-12);

  const BlockTensor ab = evolution_kernel_apply(prof, 0.5, 0.7, sigma, m, A);
  const BlockTensor abc = evolution_kernel_apply(prof, 0.7, 0.9, sigma, m, ab);
  const BlockTensor direct = evolution_kernel_apply(prof, 0.5, 0.9, sigma, m, A);
  worst = 0.0;
  for (std::int64_t i = 0; i < A.size(); ++i) worst = std::max(worst, std::abs(abc[i] - direct[i]));
  CHECK(worst < 1e-12 * std::max(1.0, direct.max_abs()));
}

TEST_CASE("evolution leg decomposition is exact") {
  const BlockProfile prof = make_profile(3, 4);
  const Complex m = m_sc_real(0.3);
  for (const Complex c : {m * m, std::conj(m) * std::conj(m), Complex(1.0)})
    CHECK(evolution_leg_decomposition_residual(prof, 0.5, 0.9, c) < 1e-12);
}

TEST_CASE("kernel norm ratios: alternating vs non-alternating") {
  // fast-decaying input: the kernel amplifies alternating signatures by at
  // most ~ ell_t^2 / ell_s^2 and non-alternating ones by O(1)
  const BlockProfile prof = make_profile(3, 12);
  const Complex m = m_sc_real(0.0);
  const double s = 0.9, t = 0.99;
  const double ratio_scale = (ell_param(t, 12) * ell_param(t, 12)) /
                             (ell_param(s, 12) * ell_param(s, 12));
  BlockTensor A = mollifier_chi(prof.lat, 2, s);
  const double norm_a = A.max_abs();
  const BlockTensor alt = evolution_kernel_apply(prof, s, t, {+1, -1}, m, A);
  const BlockTensor non = evolution_kernel_apply(prof, s, t, {+1, +1}, m, A);
  CHECK(alt.max_abs() / norm_a <= 10.0 * ratio_scale);
  CHECK(non.max_abs() / norm_a <= 10.0);
}

TEST_SUITE_END();
