#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace bandlab {

// G = (H - z)^{-1} by dense LU (LAPACK zgetrf/zgetri).  Throws on a singular
// factorization, which only occurs when z collides with the spectrum.
Eigen::MatrixXcd resolvent_inverse(const Eigen::MatrixXcd& H, std::complex<double> z);

struct EigenSystem {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXcd vectors;  // columns, orthonormal
};

// full Hermitian eigendecomposition (LAPACK zheevd)
EigenSystem hermitian_eigensystem(const Eigen::MatrixXcd& H);

}  // namespace bandlab
