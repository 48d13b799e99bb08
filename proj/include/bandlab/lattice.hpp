#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace bandlab {

// Periodic representative of a single offset: the unique value congruent to
// v mod side inside [-side/2+1, side/2] (even side) or
// [-(side-1)/2, (side-1)/2] (odd side).
inline int periodic_rep1(int v, int side) {
  if (side < 1) throw std::invalid_argument("periodic_rep1: side must be >= 1");
  int r = v % side;
  if (r < 0) r += side;
  const int hi = side / 2;
  return r > hi ? r - side : r;
}

inline std::vector<int> periodic_rep(std::vector<int> delta, int side) {
  for (int& v : delta) v = periodic_rep1(v, side);
  return delta;
}

// d-dimensional discrete torus of a given side length.  Points are handled
// as flat indices in [0, side^d); coordinates are 0-based per axis, row-major
// with axis 0 slowest.  Conversion to the symmetric coordinate range used in
// formulas happens at the API boundary (canonical_coord / from_coord).
class Torus {
 public:
  Torus() = default;
  Torus(int d, int side) : d_(d), side_(side) {
    if (d < 1) throw std::invalid_argument("Torus: d must be >= 1");
    if (side < 1) throw std::invalid_argument("Torus: side must be >= 1");
    strides_.assign(d_, 1);
    for (int k = d_ - 2; k >= 0; --k) strides_[k] = strides_[k + 1] * side_;
    n_ = strides_[0] * side_;
  }

  int dim() const { return d_; }
  int side() const { return side_; }
  std::int64_t n_points() const { return n_; }

  // canonical symmetric range [lo, lo+side-1]
  int coord_lo() const { return side_ / 2 - side_ + 1; }
  int coord_hi() const { return side_ / 2; }

  std::int64_t flat(const std::vector<int>& c0) const {
    std::int64_t idx = 0;
    for (int k = 0; k < d_; ++k) idx += static_cast<std::int64_t>(c0[k]) * strides_[k];
    return idx;
  }
  std::vector<int> coord(std::int64_t idx) const {
    std::vector<int> c(d_);
    for (int k = 0; k < d_; ++k) {
      c[k] = static_cast<int>(idx / strides_[k]);
      idx %= strides_[k];
    }
    return c;
  }

  std::vector<int> canonical_coord(std::int64_t idx) const {
    std::vector<int> c = coord(idx);
    for (int& v : c) v = periodic_rep1(v, side_);
    return c;
  }
  // accepts any integer coordinates, reduces mod side
  std::int64_t from_coord(const std::vector<int>& c) const {
    if (static_cast<int>(c.size()) != d_)
      throw std::invalid_argument("Torus::from_coord: wrong dimension");
    std::int64_t idx = 0;
    for (int k = 0; k < d_; ++k) {
      int r = c[k] % side_;
      if (r < 0) r += side_;
      idx += static_cast<std::int64_t>(r) * strides_[k];
    }
    return idx;
  }

  // flat index of the (periodic) difference of two points
  std::int64_t diff(std::int64_t i, std::int64_t j) const {
    std::int64_t idx = 0;
    for (int k = 0; k < d_; ++k) {
      int ci = static_cast<int>(i / strides_[k]);
      int cj = static_cast<int>(j / strides_[k]);
      i %= strides_[k];
      j %= strides_[k];
      int r = (ci - cj) % side_;
      if (r < 0) r += side_;
      idx += static_cast<std::int64_t>(r) * strides_[k];
    }
    return idx;
  }

  std::int64_t add(std::int64_t i, std::int64_t j) const {
    std::int64_t idx = 0;
    for (int k = 0; k < d_; ++k) {
      int ci = static_cast<int>(i / strides_[k]);
      int cj = static_cast<int>(j / strides_[k]);
      i %= strides_[k];
      j %= strides_[k];
      idx += static_cast<std::int64_t>((ci + cj) % side_) * strides_[k];
    }
    return idx;
  }

  // L1 norm of the periodic representative of a flat offset
  int norm1(std::int64_t offset) const {
    int s = 0;
    for (int k = 0; k < d_; ++k) {
      int c = static_cast<int>(offset / strides_[k]);
      offset %= strides_[k];
      int r = periodic_rep1(c, side_);
      s += r < 0 ? -r : r;
    }
    return s;
  }

  // periodic L1 distance
  int dist(std::int64_t i, std::int64_t j) const { return norm1(diff(i, j)); }

 private:
  int d_ = 1;
  int side_ = 1;
  std::int64_t n_ = 1;
  std::vector<std::int64_t> strides_;
};

// Site torus Z_{WL}^d partitioned into W^d-cell blocks indexed by Z_L^d.
class TorusGeometry {
 public:
  TorusGeometry() = default;
  TorusGeometry(int d, int W, int L)
      : d_(d), W_(W), L_(L), sites_(d, W * L), blocks_(d, L) {
    if (W < 1) throw std::invalid_argument("TorusGeometry: W must be >= 1");
    if (L < 2) throw std::invalid_argument("TorusGeometry: L must be >= 2");
  }

  int dim() const { return d_; }
  int bandwidth() const { return W_; }
  int block_side() const { return L_; }
  std::int64_t n_sites() const { return sites_.n_points(); }
  std::int64_t n_blocks() const { return blocks_.n_points(); }
  std::int64_t cells_per_block() const { return n_sites() / n_blocks(); }

  const Torus& sites() const { return sites_; }
  const Torus& blocks() const { return blocks_; }

  // Block containing a site.  The canonical block a covers canonical sites
  // [(a-1)W+1, aW] per axis; in storage positions that is a floor division
  // after shifting by the cover origin (lo_b - 1)W + 1.
  std::int64_t block_of(std::int64_t site) const {
    const int side = sites_.side();
    const int L = blocks_.side();
    const int lo_b = blocks_.coord_lo();
    const int x_lo = (lo_b - 1) * W_ + 1;
    std::int64_t b = 0;
    std::int64_t s_stride = sites_.n_points();
    std::int64_t b_stride = blocks_.n_points();
    for (int k = 0; k < d_; ++k) {
      s_stride /= side;
      b_stride /= L;
      const int p = static_cast<int>(site / s_stride);
      site %= s_stride;
      int p0 = (p - x_lo) % side;
      if (p0 < 0) p0 += side;
      int a = (p0 / W_ + lo_b) % L;
      if (a < 0) a += L;
      b += static_cast<std::int64_t>(a) * b_stride;
    }
    return b;
  }

  // sites of block a (deterministic order); exactly W^d of them
  std::vector<std::int64_t> cells_of(std::int64_t block) const {
    std::vector<int> bc = blocks_.canonical_coord(block);
    std::vector<std::int64_t> out;
    out.reserve(static_cast<std::size_t>(cells_per_block()));
    std::vector<int> c(d_, 0);
    while (true) {
      std::vector<int> sc(d_);
      for (int k = 0; k < d_; ++k) sc[k] = (bc[k] - 1) * W_ + 1 + c[k];
      out.push_back(sites_.from_coord(sc));
      int k = d_ - 1;
      while (k >= 0 && ++c[k] == W_) c[k--] = 0;
      if (k < 0) break;
    }
    return out;
  }

  int dist_sites(std::int64_t x, std::int64_t y) const { return sites_.dist(x, y); }
  int dist_blocks(std::int64_t a, std::int64_t b) const { return blocks_.dist(a, b); }

 private:
  int d_ = 3;
  int W_ = 1;
  int L_ = 2;
  Torus sites_{3, 2};
  Torus blocks_{3, 2};
};

}  // namespace bandlab
