#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "bandlab/lattice.hpp"
#include "bandlab/rng.hpp"

namespace bandlab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;

// Block-level variance matrix S^(B): nearest-neighbour stencil on Z_L^d,
// wrapped onto the torus so that every row sums to 1 for every L >= 2 (on a
// side-2 axis the +1/-1 offsets coincide and their weights add).
struct BlockProfile {
  Torus lat;
  double c0 = 1.0;  // diagonal weight 1/(1+2d lambda^2)
  double c1 = 0.0;  // neighbour weight lambda^2/(1+2d lambda^2)

  // S^(B)_{ab}
  double entry(std::int64_t a, std::int64_t b) const;
  // Fourier symbol at block wave vector k (flat index); real, symbol(0) = 1
  double symbol(std::int64_t k) const;
  RealMatrix dense() const;
  // w = S^(B) v
  void apply(const Complex* v, Complex* w) const;
};

// Full variance profile S = S^(B) (x) S_W with S_W = W^{-d} everywhere.
class VarianceProfile {
 public:
  VarianceProfile(TorusGeometry geo, double lambda);

  const TorusGeometry& geometry() const { return geo_; }
  double lambda() const { return lambda_; }
  const BlockProfile& block() const { return blk_; }

  double sB(std::int64_t a, std::int64_t b) const { return blk_.entry(a, b); }
  RealMatrix sB_dense() const { return blk_.dense(); }

  // S_{xy} = S^(B)_{[x][y]} W^{-d}
  double S(std::int64_t x, std::int64_t y) const;

 private:
  TorusGeometry geo_;
  double lambda_;
  BlockProfile blk_;
};

// Dense Hermitian band sample together with its provenance.
struct BandMatrix {
  TorusGeometry geo;
  Matrix H;
  std::uint64_t seed = 0;
  std::uint64_t sample_index = 0;
};

// H_xx ~ N(0, S_xx) real, H_xy ~ CN(0, S_xy) for x != y within the band,
// H_yx = conj(H_xy); entries with S_xy = 0 are exactly zero.
BandMatrix sample_h(const VarianceProfile& profile, std::uint64_t seed,
                    std::uint64_t sample_index = 0);
// same law, drawing from a caller-owned stream
Matrix sample_h_stream(const VarianceProfile& profile, RngStream& rng);

// Hermitian Brownian increment: E dH = 0, E|dH_xy|^2 = S_xy dt.
Matrix brownian_increment(const VarianceProfile& profile, double dt, RngStream& rng);

// GUE of matching size (E|H_xy|^2 = 1/N), the mean-field baseline.
Matrix sample_gue(std::int64_t n, std::uint64_t seed, std::uint64_t sample_index = 0);

// Binary dump: little-endian interleaved complex doubles, row-major, plus a
// JSON sidecar naming the geometry, lambda and seed.
void dump_band_matrix(const BandMatrix& m, double lambda, const std::string& path_prefix);

}  // namespace bandlab
