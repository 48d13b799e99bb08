#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bandlab/lattice.hpp"

namespace bandlab {

// Dense complex tensor over (Z_L^d)^rank, flat row-major in the loop axes:
// index = sum_i a_i * (L^d)^(rank-1-i) with a_i block flat indices.
class BlockTensor {
 public:
  BlockTensor() = default;
  BlockTensor(Torus block_lattice, int rank)
      : lat_(block_lattice), rank_(rank) {
    if (rank < 1) throw std::invalid_argument("BlockTensor: rank must be >= 1");
    std::int64_t sz = 1;
    for (int i = 0; i < rank; ++i) sz *= lat_.n_points();
    data_.assign(static_cast<std::size_t>(sz), std::complex<double>(0.0, 0.0));
  }

  const Torus& lattice() const { return lat_; }
  int rank() const { return rank_; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  std::int64_t axis_size() const { return lat_.n_points(); }
  std::int64_t axis_stride(int axis) const {
    std::int64_t s = 1;
    for (int i = rank_ - 1; i > axis; --i) s *= axis_size();
    return s;
  }

  std::int64_t flat(const std::vector<std::int64_t>& a) const {
    std::int64_t idx = 0;
    for (int i = 0; i < rank_; ++i) idx = idx * axis_size() + a[i];
    return idx;
  }
  std::vector<std::int64_t> multi(std::int64_t idx) const {
    std::vector<std::int64_t> a(rank_);
    for (int i = rank_ - 1; i >= 0; --i) {
      a[i] = idx % axis_size();
      idx /= axis_size();
    }
    return a;
  }

  std::complex<double>& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  const std::complex<double>& operator[](std::int64_t i) const {
    return data_[static_cast<std::size_t>(i)];
  }
  std::complex<double>& at(const std::vector<std::int64_t>& a) { return (*this)[flat(a)]; }
  const std::complex<double>& at(const std::vector<std::int64_t>& a) const {
    return (*this)[flat(a)];
  }

  std::complex<double>* data() { return data_.data(); }
  const std::complex<double>* data() const { return data_.data(); }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  BlockTensor& operator+=(const BlockTensor& o) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  BlockTensor& operator-=(const BlockTensor& o) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  BlockTensor& operator*=(std::complex<double> c) {
    for (auto& v : data_) v *= c;
    return *this;
  }

 private:
  Torus lat_{1, 1};
  int rank_ = 1;
  std::vector<std::complex<double>> data_;
};

}  // namespace bandlab
