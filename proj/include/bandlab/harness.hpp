#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "bandlab/flowlab.hpp"
#include "bandlab/loops.hpp"
#include "bandlab/model.hpp"
#include "bandlab/spectral.hpp"

namespace bandlab {

struct ConfigError : std::runtime_error {
  std::string path;
  ConfigError(std::string p, const std::string& msg)
      : std::runtime_error(p + ": " + msg), path(std::move(p)) {}
};

struct ExperimentConfig {
  std::string experiment = "";
  int d = 3, w = 3, l = 3;
  double lambda = 1.0;
  bool has_z = false;
  Complex z{0.2, 0.05};
  bool has_flow = false;
  double flow_e = 0.2, flow_t = 0.5;
  double kappa = 0.1;
  int samples = 100;
  std::uint64_t base_seed = 1;
  double slack = 10.0;
  double k_sigma = 3.0;
  std::string out_dir = "out";
  nlohmann::json raw;

  TorusGeometry geometry() const { return TorusGeometry(d, w, l); }
  VarianceProfile profile() const { return VarianceProfile(geometry(), lambda); }
};

// schema-validated parse; throws ConfigError naming the offending path
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

struct EstimatorResult {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double target = 0.0;
  double allowance = 0.0;  // absolute tolerance added to k_sigma * std_error
  double k_sigma = 3.0;
  int n_samples = 0;
  bool pass = false;
  double wall_time_s = 0.0;
};

double percentile(std::vector<double> v, double p);

struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;
  int n = 0;
};
MeanStderr mean_stderr(const std::vector<double>& v);

// ---- experiment suite ---------------------------------------------------

struct LocalLawResult {
  std::vector<double> entry_ratios;  // per sample: max |G-m|^2 / B_{eta,|x-y|}
  std::vector<double> avg_ratios;    // per sample: max_a |<GE_a> - m| / B_{eta,0}
  double entry_p99 = 0.0;
  double avg_p99 = 0.0;
  bool pass = false;
};
LocalLawResult run_local_law(const VarianceProfile& profile, Complex z, int samples,
                             std::uint64_t seed, double slack);

struct DiffusionShell {
  int dist = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double target = 0.0;
  double theorem_allowance = 0.0;  // slack * (B_{eta,0})^{1/5} B_{eta,W s}
  bool pass_3sigma = false;
  bool pass = false;  // |mean-target| <= 3 stderr + theorem_allowance
};
struct DiffusionResult {
  std::vector<DiffusionShell> shells_abs2;  // (-,+) loop vs |m|^2 target
  std::vector<DiffusionShell> shells_sq;    // (+,+) loop vs m^2 target (real part)
  double target_rowsum_residual = 0.0;      // identity check on the target
  bool pass = false;
};
DiffusionResult run_diffusion(const VarianceProfile& profile, Complex z, int samples,
                              std::uint64_t seed, double slack, int max_shell);

struct DelocResult {
  std::vector<double> band_max;  // per sample: max over bulk of N ||psi||_inf^2
  double band_median = 0.0;
  double gue_median = 0.0;
  double bound = 0.0;  // c_factor (ln N)^2
  double ratio_to_gue = 0.0;
  bool pass = false;
};
DelocResult run_deloc(const VarianceProfile& profile, int samples, std::uint64_t seed,
                      double kappa, double c_factor, int gue_samples);

struct LkResult {
  int n = 0;
  std::vector<double> ratios;     // |L^(n) - K^(n)| / (W^{-d} B_{t,0})^n per sampled tuple
  double ratio_p99 = 0.0;
  double mean_distant_re = 0.0;   // mean of re(L-K) over distant tuples
  double stderr_distant_re = 0.0;
  bool pass = false;
};
LkResult run_lk(const VarianceProfile& profile, double E, double t, int n, int samples,
                std::uint64_t seed, double slack);

struct FlowDirectResult {
  MeanStderr direct;  // Im <G(z)> / N over direct samples
  MeanStderr flow;    // Im <sqrt(t0) G_{t0,E}> / N over flow samples
  bool pass = false;  // agreement within k_sigma of the combined stderr
};
FlowDirectResult flow_direct_check(const VarianceProfile& profile, Complex z, double kappa,
                                   int samples, std::uint64_t seed, double k_sigma = 3.0);

// ---- output helpers ------------------------------------------------------

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);
  ~CsvWriter();
  void row(const std::vector<double>& values);
  void raw_row(const std::string& line);

 private:
  struct Impl;
  Impl* impl_;
};

void write_json(const std::string& path, const nlohmann::json& j);
void ensure_dir(const std::string& path);

}  // namespace bandlab
