#include "bandlab/linalg.hpp"

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <stdexcept>

namespace bandlab {

Eigen::MatrixXcd resolvent_inverse(const Eigen::MatrixXcd& H, std::complex<double> z) {
  const lapack_int n = static_cast<lapack_int>(H.rows());
  Eigen::MatrixXcd A = H;
  A.diagonal().array() -= z;
  std::vector<lapack_int> ipiv(n);
  lapack_int info = LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n, A.data(), n, ipiv.data());
  if (info != 0) throw std::runtime_error("resolvent_inverse: zgetrf failed (singular shift)");
  info = LAPACKE_zgetri(LAPACK_COL_MAJOR, n, A.data(), n, ipiv.data());
  if (info != 0) throw std::runtime_error("resolvent_inverse: zgetri failed");
  return A;
}

EigenSystem hermitian_eigensystem(const Eigen::MatrixXcd& H) {
  const lapack_int n = static_cast<lapack_int>(H.rows());
  EigenSystem out;
  out.vectors = H;
  out.values.resize(n);
  lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.vectors.data(), n,
                                   out.values.data());
  if (info != 0) throw std::runtime_error("hermitian_eigensystem: zheevd failed");
  return out;
}

}  // namespace bandlab
