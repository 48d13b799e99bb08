#include "bandlab/flowlab.hpp"

#include <cmath>
#include <stdexcept>

#include "bandlab/primitive.hpp"

namespace bandlab {

FlowTrajectory simulate_flow(const VarianceProfile& profile, double E,
                             const std::vector<double>& t_grid, std::uint64_t seed,
                             const std::vector<LoopSignature>& observables) {
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < 0.0 || t_grid[i] > 0.95)
      throw std::invalid_argument("simulate_flow: t_grid must lie in [0, 0.95]");
    if (i > 0 && t_grid[i] <= t_grid[i - 1])
      throw std::invalid_argument("simulate_flow: t_grid must be strictly increasing");
  }
  const TorusGeometry& geo = profile.geometry();
  const std::int64_t n = geo.n_sites();
  RngStream rng(seed);
  FlowTrajectory traj;
  traj.E = E;
  traj.seed = seed;
  Matrix H = Matrix::Zero(n, n);
  double t_cur = 0.0;
  const Complex m = m_sc_real(E);
  for (double t : t_grid) {
    if (t > t_cur) H += brownian_increment(profile, t - t_cur, rng);
    t_cur = t;
    const SpectralFlowState fs = flow_state(E, t, geo.block_side());
    FlowRecord rec;
    rec.t = t;
    rec.z_t = fs.z_t;
    if (t == 0.0) {
      // H_0 = 0: G = m(E) I exactly, no solve needed
      for (const auto& sig : observables) {
        Complex mprod = 1.0;
        bool coincident = true;
        for (std::size_t i = 0; i < sig.sigma.size(); ++i) {
          mprod *= charge_value(sig.sigma[i], m);
          if (sig.blocks[i] != sig.blocks[0]) coincident = false;
        }
        const double wpow =
            std::pow(static_cast<double>(geo.cells_per_block()), -(sig.n() - 1.0));
        rec.loops.push_back(coincident ? mprod * wpow : Complex(0.0));
      }
      rec.max_centered_trace = 0.0;
    } else {
      ResolventBundle bundle(H, fs.z_t);
      LoopEvaluator ev(geo, bundle.G());
      for (const auto& sig : observables) rec.loops.push_back(ev.eval(sig));
      const auto traces = ev.block_traces(+1);
      double worst = 0.0;
      for (const auto& v : traces) worst = std::max(worst, std::abs(v - m));
      rec.max_centered_trace = worst;
    }
    traj.records.push_back(std::move(rec));
  }
  return traj;
}

namespace {

// d/dt of the primitive quadratic term, used as the pinned Euler bias scale
double quad_k_derivative_scale(const VarianceProfile& profile, double E, double t,
                               const LoopSignature& sig) {
  const Complex m = m_sc_real(E);
  const double winv = 1.0 / static_cast<double>(profile.geometry().cells_per_block());
  const double h = 1e-3;
  auto quad_at = [&](double u) {
    // quadratic term evaluated on primitive loops == dK/dt at the tuple
    const int n = sig.n();
    if (n == 2) {
      const Complex a = k2(profile.block(), u + h, sig.sigma[0], sig.sigma[1], sig.blocks[0],
                           sig.blocks[1], m, winv);
      const Complex b = k2(profile.block(), u - h, sig.sigma[0], sig.sigma[1], sig.blocks[0],
                           sig.blocks[1], m, winv);
      return (a - b) / (2.0 * h);
    }
    const Complex a = k_loop_tree(profile.block(), u + h, sig.sigma, sig.blocks, m, winv);
    const Complex b = k_loop_tree(profile.block(), u - h, sig.sigma, sig.blocks, m, winv);
    return (a - b) / (2.0 * h);
  };
  // second derivative of K ~ first derivative of the drift
  const Complex d1 = quad_at(t + h);
  const Complex d0 = quad_at(t - h);
  return std::abs((d1 - d0) / (2.0 * h));
}

}  // namespace

HierarchyResidual hierarchy_residual(const VarianceProfile& profile, double E, double t,
                                     double dt, const LoopSignature& sig, int n_samples,
                                     std::uint64_t seed) {
  if (dt <= 0.0 || t + dt >= 1.0) throw std::invalid_argument("hierarchy_residual: bad dt");
  const TorusGeometry& geo = profile.geometry();
  const Complex m = m_sc_real(E);
  const SpectralFlowState fs0 = flow_state(E, t, geo.block_side());
  const SpectralFlowState fs1 = flow_state(E, t + dt, geo.block_side());
  const double sqt = std::sqrt(t);

  std::vector<Complex> residuals;
  residuals.reserve(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    RngStream rng(seed, static_cast<std::uint64_t>(s));
    Matrix H = sample_h_stream(profile, rng);
    H *= sqt;  // H_t =d sqrt(t) H_1
    ResolventBundle b0(H, fs0.z_t);
    LoopEvaluator ev0(geo, b0.G());
    const Complex l0 = ev0.eval(sig);
    const Complex quad = quadratic_term(ev0, profile.block(), sig);
    const Complex light = lightweight_term(ev0, profile.block(), sig, m);
    H += brownian_increment(profile, dt, rng);
    ResolventBundle b1(H, fs1.z_t);
    LoopEvaluator ev1(geo, b1.G());
    const Complex l1 = ev1.eval(sig);
    residuals.push_back((l1 - l0) / dt - quad - light);
  }

  HierarchyResidual out;
  out.n_samples = n_samples;
  Complex mean = 0.0;
  for (const auto& r : residuals) mean += r;
  mean /= static_cast<double>(n_samples);
  out.mean = mean;
  double vr = 0.0, vi = 0.0;
  for (const auto& r : residuals) {
    vr += (r.real() - mean.real()) * (r.real() - mean.real());
    vi += (r.imag() - mean.imag()) * (r.imag() - mean.imag());
  }
  const double denom = std::max(1, n_samples - 1) * static_cast<double>(n_samples);
  out.stderr_re = std::sqrt(vr / denom);
  out.stderr_im = std::sqrt(vi / denom);
  out.bias_allowance = 3.0 * dt * quad_k_derivative_scale(profile, E, t, sig);
  out.pass = std::abs(mean.real()) <= 3.0 * out.stderr_re + out.bias_allowance &&
             std::abs(mean.imag()) <= 3.0 * out.stderr_im + out.bias_allowance;
  return out;
}

QvarCheck qvar_check(const VarianceProfile& profile, double E, double t, double dt,
                     const LoopSignature& sig, int n_samples, std::uint64_t seed) {
  const TorusGeometry& geo = profile.geometry();
  const SpectralFlowState fs0 = flow_state(E, t, geo.block_side());
  const SpectralFlowState fs1 = flow_state(E, t + dt, geo.block_side());
  const double sqt = std::sqrt(t);

  std::vector<Complex> deltas;
  std::vector<double> qvars;
  for (int s = 0; s < n_samples; ++s) {
    RngStream rng(seed, static_cast<std::uint64_t>(s));
    Matrix H = sample_h_stream(profile, rng);
    H *= sqt;
    ResolventBundle b0(H, fs0.z_t);
    LoopEvaluator ev0(geo, b0.G());
    const Complex l0 = ev0.eval(sig);
    qvars.push_back(qvar_diag(ev0, profile.block(), sig).real());
    H += brownian_increment(profile, dt, rng);
    ResolventBundle b1(H, fs1.z_t);
    LoopEvaluator ev1(geo, b1.G());
    deltas.push_back(ev1.eval(sig) - l0);
  }

  QvarCheck out;
  out.n_samples = n_samples;
  Complex mean = 0.0;
  for (const auto& d : deltas) mean += d;
  mean /= static_cast<double>(n_samples);
  std::vector<double> sq;
  sq.reserve(deltas.size());
  for (const auto& d : deltas) sq.push_back(std::norm(d - mean) / dt);
  double m1 = 0.0;
  for (double v : sq) m1 += v;
  m1 /= static_cast<double>(n_samples);
  double v1 = 0.0;
  for (double v : sq) v1 += (v - m1) * (v - m1);
  out.empirical_var_rate = m1;
  out.stderr_emp = std::sqrt(v1 / std::max(1, n_samples - 1) / n_samples);
  double m2 = 0.0;
  for (double v : qvars) m2 += v;
  m2 /= static_cast<double>(n_samples);
  double v2 = 0.0;
  for (double v : qvars) v2 += (v - m2) * (v - m2);
  out.predicted = m2;
  out.stderr_pred = std::sqrt(v2 / std::max(1, n_samples - 1) / n_samples);
  // drift^2 dt and d/dt of the variance rate both enter at O(dt)
  const double allowance = dt * std::max(1.0, m2) + 3.0 * dt * m2 / std::max(1e-6, 1.0 - t);
  out.pass = std::abs(out.empirical_var_rate - out.predicted) <=
             3.0 * (out.stderr_emp + out.stderr_pred) + allowance;
  return out;
}

}  // namespace bandlab
