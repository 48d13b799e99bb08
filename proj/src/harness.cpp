#include "bandlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bandlab/primitive.hpp"
#include "bandlab/propagator.hpp"

namespace bandlab {

namespace {

double require_number(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

int require_int(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<int>();
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("$", "config must be a JSON object");
  ExperimentConfig c;
  c.raw = j;
  for (const auto& [key, val] : j.items()) {
    if (key == "experiment") {
      if (!val.is_string()) throw ConfigError("experiment", "expected a string");
      c.experiment = val.get<std::string>();
    } else if (key == "geometry") {
      if (!val.is_object()) throw ConfigError("geometry", "expected an object {d,w,l}");
      for (const auto& [gk, gv] : val.items()) {
        if (gk == "d") c.d = require_int(gv, "geometry.d");
        else if (gk == "w") c.w = require_int(gv, "geometry.w");
        else if (gk == "l") c.l = require_int(gv, "geometry.l");
        else throw ConfigError("geometry." + gk, "unknown field");
      }
    } else if (key == "lambda") {
      c.lambda = require_number(val, "lambda");
    } else if (key == "z") {
      if (!val.is_object()) throw ConfigError("z", "expected {re, im}");
      c.z = Complex(require_number(val.value("re", nlohmann::json()), "z.re"),
                    require_number(val.value("im", nlohmann::json()), "z.im"));
      c.has_z = true;
    } else if (key == "flow") {
      if (!val.is_object()) throw ConfigError("flow", "expected {e, t}");
      c.flow_e = require_number(val.value("e", nlohmann::json()), "flow.e");
      c.flow_t = require_number(val.value("t", nlohmann::json()), "flow.t");
      c.has_flow = true;
    } else if (key == "kappa") {
      c.kappa = require_number(val, "kappa");
    } else if (key == "samples") {
      c.samples = require_int(val, "samples");
    } else if (key == "base_seed") {
      if (!val.is_number_unsigned() && !val.is_number_integer())
        throw ConfigError("base_seed", "expected an unsigned integer");
      c.base_seed = val.get<std::uint64_t>();
    } else if (key == "slack") {
      c.slack = require_number(val, "slack");
    } else if (key == "tolerances") {
      if (!val.is_object()) throw ConfigError("tolerances", "expected an object");
      for (const auto& [tk, tv] : val.items()) {
        if (tk == "k_sigma") c.k_sigma = require_number(tv, "tolerances.k_sigma");
        else if (tk == "slack") c.slack = require_number(tv, "tolerances.slack");
        else throw ConfigError("tolerances." + tk, "unknown field");
      }
    } else if (key == "out_dir") {
      if (!val.is_string()) throw ConfigError("out_dir", "expected a string");
      c.out_dir = val.get<std::string>();
    } else {
      throw ConfigError(key, "unknown field");
    }
  }
  if (c.d < 1) throw ConfigError("geometry.d", "d must be >= 1");
  if (c.w < 1) throw ConfigError("geometry.w", "w must be >= 1");
  if (c.l < 2) throw ConfigError("geometry.l", "l must be >= 2");
  if (!(c.lambda > 0.0)) throw ConfigError("lambda", "lambda must be > 0");
  if (c.samples < 1) throw ConfigError("samples", "samples must be >= 1");
  if (c.has_z && !(c.z.imag() > 0.0)) throw ConfigError("z.im", "need Im z > 0");
  if (c.has_flow && !(c.flow_t >= 0.0 && c.flow_t < 1.0))
    throw ConfigError("flow.t", "need 0 <= t < 1");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("$", "cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double idx = p / 100.0 * (static_cast<double>(v.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

MeanStderr mean_stderr(const std::vector<double>& v) {
  MeanStderr out;
  out.n = static_cast<int>(v.size());
  if (v.empty()) return out;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - m) * (x - m);
  var /= std::max<std::size_t>(1, v.size() - 1);
  out.mean = m;
  out.std_error = std::sqrt(var / static_cast<double>(v.size()));
  return out;
}

// B_{eta,K} of the local-law normalization
static double calB(double eta, double K, int d, int W, double N) {
  return 1.0 / (static_cast<double>(W) * W * std::pow(K + W, d - 2.0)) + 1.0 / (N * eta);
}

LocalLawResult run_local_law(const VarianceProfile& profile, Complex z, int samples,
                             std::uint64_t seed, double slack) {
  const TorusGeometry& geo = profile.geometry();
  const std::int64_t N = geo.n_sites();
  const int d = geo.dim();
  const int W = geo.bandwidth();
  const double eta = z.imag();
  const Complex m = m_sc(z);
  LocalLawResult out;

  // per site-distance normalization, precomputed over offsets
  std::vector<double> b_by_dist(static_cast<std::size_t>(d * (geo.sites().side())) + 2, 0.0);
  for (std::size_t k = 0; k < b_by_dist.size(); ++k)
    b_by_dist[k] = calB(eta, static_cast<double>(k), d, W, static_cast<double>(N));
  std::vector<int> dist_of(static_cast<std::size_t>(N));
  for (std::int64_t r = 0; r < N; ++r) dist_of[static_cast<std::size_t>(r)] = geo.sites().norm1(r);

  for (int s = 0; s < samples; ++s) {
    const BandMatrix bm = sample_h(profile, seed, static_cast<std::uint64_t>(s));
    const Matrix G = resolvent_inverse(bm.H, z);
    double worst_entry = 0.0;
    for (std::int64_t y = 0; y < N; ++y)
      for (std::int64_t x = 0; x < N; ++x) {
        Complex dev = G(x, y);
        if (x == y) dev -= m;
        const double r2 = std::norm(dev);
        const int dist = dist_of[static_cast<std::size_t>(geo.sites().diff(x, y))];
        worst_entry = std::max(worst_entry, r2 / b_by_dist[static_cast<std::size_t>(dist)]);
      }
    out.entry_ratios.push_back(worst_entry);
    LoopEvaluator ev(geo, G);
    const auto traces = ev.block_traces(+1);
    double worst_avg = 0.0;
    for (const auto& v : traces) worst_avg = std::max(worst_avg, std::abs(v - m));
    out.avg_ratios.push_back(worst_avg / b_by_dist[0]);
  }
  out.entry_p99 = percentile(out.entry_ratios, 99.0);
  out.avg_p99 = percentile(out.avg_ratios, 99.0);
  out.pass = out.entry_p99 <= slack && out.avg_p99 <= slack;
  return out;
}

DiffusionResult run_diffusion(const VarianceProfile& profile, Complex z, int samples,
                              std::uint64_t seed, double slack, int max_shell) {
  const TorusGeometry& geo = profile.geometry();
  const std::int64_t nb = geo.n_blocks();
  const int d = geo.dim();
  const int W = geo.bandwidth();
  const double eta = z.imag();
  const Complex m = m_sc(z);
  const double wd = static_cast<double>(geo.cells_per_block());

  // deterministic quantum-diffusion targets W^{-d} (x^2 / (1 - x^2 S^B))_{ab}
  PropagatorFamily theta_abs(profile.block(), std::norm(m));
  PropagatorFamily theta_sq(profile.block(), m * m);

  // shells of the block lattice
  std::vector<int> shell_of(static_cast<std::size_t>(nb));
  std::vector<double> shell_count(static_cast<std::size_t>(max_shell) + 1, 0.0);
  for (std::int64_t r = 0; r < nb; ++r) {
    shell_of[static_cast<std::size_t>(r)] = geo.blocks().norm1(r);
    if (shell_of[static_cast<std::size_t>(r)] <= max_shell)
      shell_count[static_cast<std::size_t>(shell_of[static_cast<std::size_t>(r)])] += 1.0;
  }

  std::vector<std::vector<double>> samples_abs2(static_cast<std::size_t>(max_shell) + 1);
  std::vector<std::vector<double>> samples_sq(static_cast<std::size_t>(max_shell) + 1);
  for (int s = 0; s < samples; ++s) {
    const BandMatrix bm = sample_h(profile, seed, static_cast<std::uint64_t>(s));
    const Matrix G = resolvent_inverse(bm.H, z);
    LoopEvaluator ev(geo, G);
    const BlockTensor l_abs = ev.full2(-1, +1);
    const BlockTensor l_sq = ev.full2(+1, +1);
    std::vector<Complex> acc_abs(static_cast<std::size_t>(max_shell) + 1, Complex(0.0));
    std::vector<Complex> acc_sq(static_cast<std::size_t>(max_shell) + 1, Complex(0.0));
    for (std::int64_t a = 0; a < nb; ++a)
      for (std::int64_t b = 0; b < nb; ++b) {
        const int sh = shell_of[static_cast<std::size_t>(geo.blocks().diff(b, a))];
        if (sh > max_shell) continue;
        acc_abs[static_cast<std::size_t>(sh)] += l_abs[a * nb + b];
        acc_sq[static_cast<std::size_t>(sh)] += l_sq[a * nb + b];
      }
    for (int sh = 0; sh <= max_shell; ++sh) {
      const double cnt = shell_count[static_cast<std::size_t>(sh)] * static_cast<double>(nb);
      samples_abs2[static_cast<std::size_t>(sh)].push_back(acc_abs[static_cast<std::size_t>(sh)].real() / cnt);
      samples_sq[static_cast<std::size_t>(sh)].push_back(acc_sq[static_cast<std::size_t>(sh)].real() / cnt);
    }
  }

  DiffusionResult out;
  const double calB0 = calB(eta, 0.0, d, W, static_cast<double>(geo.n_sites()));
  for (int sh = 0; sh <= max_shell; ++sh) {
    double target_abs = 0.0, target_sq = 0.0;
    for (std::int64_t r = 0; r < nb; ++r) {
      if (shell_of[static_cast<std::size_t>(r)] != sh) continue;
      target_abs += (std::norm(m) * theta_abs.entry(0, r)).real() / wd;
      target_sq += (m * m * theta_sq.entry(0, r)).real() / wd;
    }
    target_abs /= shell_count[static_cast<std::size_t>(sh)];
    target_sq /= shell_count[static_cast<std::size_t>(sh)];
    const double allowance =
        slack * std::pow(calB0, 0.2) *
        calB(eta, static_cast<double>(W * sh), d, W, static_cast<double>(geo.n_sites()));
    auto make_shell = [&](const std::vector<double>& vals, double target) {
      DiffusionShell s2;
      s2.dist = sh;
      const MeanStderr ms = mean_stderr(vals);
      s2.mean = ms.mean;
      s2.std_error = ms.std_error;
      s2.target = target;
      s2.theorem_allowance = allowance;
      s2.pass_3sigma = std::abs(ms.mean - target) <= 3.0 * ms.std_error;
      s2.pass = std::abs(ms.mean - target) <= 3.0 * ms.std_error + allowance;
      return s2;
    };
    out.shells_abs2.push_back(make_shell(samples_abs2[static_cast<std::size_t>(sh)], target_abs));
    out.shells_sq.push_back(make_shell(samples_sq[static_cast<std::size_t>(sh)], target_sq));
  }
  // row-sum identity of the target: sum_b target = W^{-d} |m|^2 / (1-|m|^2)
  double rowsum = 0.0;
  for (std::int64_t r = 0; r < nb; ++r) rowsum += (std::norm(m) * theta_abs.entry(0, r)).real() / wd;
  out.target_rowsum_residual =
      std::abs(rowsum - std::norm(m) / (1.0 - std::norm(m)) / wd);
  out.pass = true;
  for (const auto& s2 : out.shells_abs2) out.pass = out.pass && s2.pass;
  for (const auto& s2 : out.shells_sq) out.pass = out.pass && s2.pass;
  return out;
}

DelocResult run_deloc(const VarianceProfile& profile, int samples, std::uint64_t seed,
                      double kappa, double c_factor, int gue_samples) {
  const TorusGeometry& geo = profile.geometry();
  const std::int64_t N = geo.n_sites();
  DelocResult out;
  for (int s = 0; s < samples; ++s) {
    const BandMatrix bm = sample_h(profile, seed, static_cast<std::uint64_t>(s));
    const EigenSystem es = hermitian_eigensystem(bm.H);
    const auto sups = bulk_sup_norms(es, kappa);
    out.band_max.push_back(*std::max_element(sups.begin(), sups.end()));
  }
  std::vector<double> gue_max;
  for (int s = 0; s < gue_samples; ++s) {
    const Matrix H = sample_gue(N, seed ^ 0x9e3779b9, static_cast<std::uint64_t>(s));
    const EigenSystem es = hermitian_eigensystem(H);
    const auto sups = bulk_sup_norms(es, kappa);
    gue_max.push_back(*std::max_element(sups.begin(), sups.end()));
  }
  std::vector<double> sorted = out.band_max;
  out.band_median = percentile(sorted, 50.0);
  out.gue_median = percentile(gue_max, 50.0);
  out.bound = c_factor * std::log(static_cast<double>(N)) * std::log(static_cast<double>(N));
  out.ratio_to_gue = out.band_median / out.gue_median;
  out.pass = out.band_median <= out.bound;
  return out;
}

LkResult run_lk(const VarianceProfile& profile, double E, double t, int n, int samples,
                std::uint64_t seed, double slack) {
  if (n < 1 || n > 3) throw std::invalid_argument("run_lk: n must be in {1,2,3}");
  const TorusGeometry& geo = profile.geometry();
  const std::int64_t nb = geo.n_blocks();
  const Complex m = m_sc_real(E);
  const SpectralFlowState fs = flow_state(E, t, geo.block_side());
  const double winv = 1.0 / static_cast<double>(geo.cells_per_block());
  const double scale = std::pow(winv * b_param(t, 0.0, geo.dim(), geo.block_side()),
                                static_cast<double>(n));
  const double sqt = std::sqrt(t);

  LkResult out;
  out.n = n;
  std::vector<double> distant_re;
  RngStream tuple_rng(seed ^ 0x5ca1ab1e, 7);
  for (int s = 0; s < samples; ++s) {
    RngStream rng(seed, static_cast<std::uint64_t>(s));
    Matrix H = sample_h_stream(profile, rng);
    H *= sqt;
    const ResolventBundle bundle(H, fs.z_t);
    LoopEvaluator ev(geo, bundle.G());
    if (n == 1) {
      const auto traces = ev.block_traces(+1);
      double worst = 0.0;
      for (const auto& v : traces) worst = std::max(worst, std::abs(v - m));
      out.ratios.push_back(worst / scale);
      continue;
    }
    const int tuples = 24;
    for (int q = 0; q < tuples; ++q) {
      LoopSignature sig;
      for (int i = 0; i < n; ++i) {
        sig.sigma.push_back(i % 2 == 0 ? -1 : +1);
        sig.blocks.push_back(static_cast<std::int64_t>(tuple_rng.next_u64() % static_cast<std::uint64_t>(nb)));
      }
      const Complex l = ev.eval(sig);
      Complex kk;
      if (n == 2)
        kk = k2(profile.block(), t, sig.sigma[0], sig.sigma[1], sig.blocks[0], sig.blocks[1], m,
                winv);
      else
        kk = k3(profile.block(), t, sig.sigma[0], sig.sigma[1], sig.sigma[2], sig.blocks[0],
                sig.blocks[1], sig.blocks[2], m, winv);
      out.ratios.push_back(std::abs(l - kk) / scale);
      if (n == 2 && geo.blocks().dist(sig.blocks[0], sig.blocks[1]) >= geo.block_side() / 2)
        distant_re.push_back((l - kk).real());
    }
  }
  out.ratio_p99 = percentile(out.ratios, 99.0);
  if (!distant_re.empty()) {
    const MeanStderr ms = mean_stderr(distant_re);
    out.mean_distant_re = ms.mean;
    out.stderr_distant_re = ms.std_error;
  }
  out.pass = out.ratio_p99 <= slack;
  return out;
}

FlowDirectResult flow_direct_check(const VarianceProfile& profile, Complex z, double kappa,
                                   int samples, std::uint64_t seed, double k_sigma) {
  const TorusGeometry& geo = profile.geometry();
  const std::int64_t N = geo.n_sites();
  const FlowTarget ft = target_to_flow(z, kappa);
  const SpectralFlowState fs = flow_state(ft.E, ft.t0, geo.block_side());
  const double sq = std::sqrt(ft.t0);

  std::vector<double> direct, flow;
  for (int s = 0; s < samples; ++s) {
    const BandMatrix bm = sample_h(profile, seed, static_cast<std::uint64_t>(s));
    const Matrix G = resolvent_inverse(bm.H, z);
    direct.push_back(G.trace().imag() / static_cast<double>(N));
  }
  for (int s = 0; s < samples; ++s) {
    const BandMatrix bm = sample_h(profile, seed ^ 0xfeedface, static_cast<std::uint64_t>(s));
    const Matrix G = resolvent_inverse(Matrix(sq * bm.H), fs.z_t);
    flow.push_back((sq * G.trace()).imag() / static_cast<double>(N));
  }
  FlowDirectResult out;
  out.direct = mean_stderr(direct);
  out.flow = mean_stderr(flow);
  const double combined =
      std::sqrt(out.direct.std_error * out.direct.std_error + out.flow.std_error * out.flow.std_error);
  out.pass = std::abs(out.direct.mean - out.flow.mean) <= k_sigma * combined;
  return out;
}

// ---- output helpers ------------------------------------------------------

struct CsvWriter::Impl {
  std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns)
    : impl_(new Impl) {
  impl_->out.open(path);
  if (!impl_->out) throw std::runtime_error("CsvWriter: cannot open " + path);
  for (std::size_t i = 0; i < columns.size(); ++i)
    impl_->out << (i ? "," : "") << columns[i];
  impl_->out << "\n";
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::row(const std::vector<double>& values) {
  char buf[64];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    impl_->out << (i ? "," : "") << buf;
  }
  impl_->out << "\n";
}

void CsvWriter::raw_row(const std::string& line) { impl_->out << line << "\n"; }

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw std::runtime_error("ensure_dir: " + path + ": " + ec.message());
}

}  // namespace bandlab
