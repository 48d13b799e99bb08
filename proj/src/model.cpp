#include "bandlab/model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

namespace bandlab {

double BlockProfile::entry(std::int64_t a, std::int64_t b) const {
  const std::int64_t off = lat.diff(a, b);
  double v = off == 0 ? c0 : 0.0;
  const int L = lat.side();
  std::vector<int> c = lat.coord(off);
  int nz = -1;
  for (int k = 0; k < lat.dim(); ++k) {
    if (c[k] != 0) {
      if (nz >= 0) return v;  // two nonzero axes: beyond the stencil
      nz = k;
    }
  }
  if (nz < 0) return v;
  const int r = c[nz];
  if (r == 1 || r == L - 1) v += (L == 2) ? 2.0 * c1 : c1;
  return v;
}

double BlockProfile::symbol(std::int64_t k) const {
  const int L = lat.side();
  std::vector<int> c = lat.coord(k);
  double s = c0;
  for (int i = 0; i < lat.dim(); ++i)
    s += 2.0 * c1 * std::cos(2.0 * std::numbers::pi * c[i] / L);
  return s;
}

RealMatrix BlockProfile::dense() const {
  const std::int64_t n = lat.n_points();
  RealMatrix M(n, n);
  for (std::int64_t a = 0; a < n; ++a)
    for (std::int64_t b = 0; b < n; ++b) M(a, b) = entry(a, b);
  return M;
}

void BlockProfile::apply(const Complex* v, Complex* w) const {
  const std::int64_t n = lat.n_points();
  const int d = lat.dim();
  const int L = lat.side();
  std::vector<std::int64_t> strides(d, 1);
  for (int k = d - 2; k >= 0; --k) strides[k] = strides[k + 1] * L;
  for (std::int64_t a = 0; a < n; ++a) {
    Complex acc = c0 * v[a];
    std::int64_t rest = a;
    for (int k = 0; k < d; ++k) {
      const int ck = static_cast<int>(rest / strides[k]);
      rest %= strides[k];
      const std::int64_t base = a - static_cast<std::int64_t>(ck) * strides[k];
      const int cp = (ck + 1) % L;
      const int cm = (ck + L - 1) % L;
      acc += c1 * (v[base + cp * strides[k]] + v[base + cm * strides[k]]);
    }
    w[a] = acc;
  }
}

VarianceProfile::VarianceProfile(TorusGeometry geo, double lambda)
    : geo_(std::move(geo)), lambda_(lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("VarianceProfile: lambda must be > 0");
  const int d = geo_.dim();
  const double norm = 1.0 + 2.0 * d * lambda * lambda;
  blk_ = BlockProfile{geo_.blocks(), 1.0 / norm, lambda * lambda / norm};
}

double VarianceProfile::S(std::int64_t x, std::int64_t y) const {
  return blk_.entry(geo_.block_of(x), geo_.block_of(y)) /
         static_cast<double>(geo_.cells_per_block());
}

Matrix sample_h_stream(const VarianceProfile& profile, RngStream& rng) {
  const TorusGeometry& geo = profile.geometry();
  const std::int64_t n = geo.n_sites();
  Matrix H = Matrix::Zero(n, n);
  std::vector<std::int64_t> block(n);
  for (std::int64_t x = 0; x < n; ++x) block[x] = geo.block_of(x);
  const double winv = 1.0 / static_cast<double>(geo.cells_per_block());
  for (std::int64_t x = 0; x < n; ++x) {
    H(x, x) = std::sqrt(profile.sB(block[x], block[x]) * winv) * rng.next_gaussian();
    for (std::int64_t y = x + 1; y < n; ++y) {
      const double s = profile.sB(block[x], block[y]);
      if (s == 0.0) continue;
      const double sd = std::sqrt(s * winv / 2.0);
      const Complex v(sd * rng.next_gaussian(), sd * rng.next_gaussian());
      H(x, y) = v;
      H(y, x) = std::conj(v);
    }
  }
  return H;
}

BandMatrix sample_h(const VarianceProfile& profile, std::uint64_t seed,
                    std::uint64_t sample_index) {
  RngStream rng(seed, sample_index);
  return BandMatrix{profile.geometry(), sample_h_stream(profile, rng), seed, sample_index};
}

Matrix brownian_increment(const VarianceProfile& profile, double dt, RngStream& rng) {
  if (dt < 0.0) throw std::invalid_argument("brownian_increment: dt must be >= 0");
  const TorusGeometry& geo = profile.geometry();
  const std::int64_t n = geo.n_sites();
  Matrix dH = Matrix::Zero(n, n);
  if (dt == 0.0) return dH;
  std::vector<std::int64_t> block(n);
  for (std::int64_t x = 0; x < n; ++x) block[x] = geo.block_of(x);
  const double winv = 1.0 / static_cast<double>(geo.cells_per_block());
  for (std::int64_t x = 0; x < n; ++x) {
    dH(x, x) = std::sqrt(profile.sB(block[x], block[x]) * winv * dt) * rng.next_gaussian();
    for (std::int64_t y = x + 1; y < n; ++y) {
      const double s = profile.sB(block[x], block[y]);
      if (s == 0.0) continue;
      const double sd = std::sqrt(s * winv * dt / 2.0);
      const Complex v(sd * rng.next_gaussian(), sd * rng.next_gaussian());
      dH(x, y) = v;
      dH(y, x) = std::conj(v);
    }
  }
  return dH;
}

Matrix sample_gue(std::int64_t n, std::uint64_t seed, std::uint64_t sample_index) {
  RngStream rng(seed, sample_index);
  Matrix H = Matrix::Zero(n, n);
  const double sd_diag = std::sqrt(1.0 / static_cast<double>(n));
  const double sd_off = std::sqrt(0.5 / static_cast<double>(n));
  for (std::int64_t x = 0; x < n; ++x) {
    H(x, x) = sd_diag * rng.next_gaussian();
    for (std::int64_t y = x + 1; y < n; ++y) {
      const Complex v(sd_off * rng.next_gaussian(), sd_off * rng.next_gaussian());
      H(x, y) = v;
      H(y, x) = std::conj(v);
    }
  }
  return H;
}

void dump_band_matrix(const BandMatrix& m, double lambda, const std::string& path_prefix) {
  {
    std::ofstream bin(path_prefix + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("dump_band_matrix: cannot open " + path_prefix + ".bin");
    const std::int64_t n = m.H.rows();
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < n; ++j) {
        const double re = m.H(i, j).real(), im = m.H(i, j).imag();
        bin.write(reinterpret_cast<const char*>(&re), sizeof(double));
        bin.write(reinterpret_cast<const char*>(&im), sizeof(double));
      }
  }
  nlohmann::json header;
  header["format"] = "complex128-interleaved-row-major-le";
  header["d"] = m.geo.dim();
  header["w"] = m.geo.bandwidth();
  header["l"] = m.geo.block_side();
  header["n"] = m.H.rows();
  header["lambda"] = lambda;
  header["seed"] = m.seed;
  header["sample_index"] = m.sample_index;
  std::ofstream js(path_prefix + ".json");
  js << header.dump(2) << "\n";
}

}  // namespace bandlab
