#include "adafat/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace adafat::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

MatrixXd row_gram(const MatrixXd& A) {
  const MatrixXd At = A.transpose();  // rows of A become contiguous columns
  const Index n = At.cols();
  MatrixXd G(n, n);
#pragma omp parallel for schedule(dynamic, 4)
  for (Index i = 0; i < n; ++i) {
    for (Index k = i; k < n; ++k) {
      const double v = At.col(i).dot(At.col(k));
      G(i, k) = v;
      G(k, i) = v;
    }
  }
  return G;
}

VectorXd column_sum_squares(const MatrixXd& A) {
  VectorXd out(A.cols());
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < A.cols(); ++j) out(j) = A.col(j).squaredNorm();
  return out;
}

MatrixXd scaled_cross_product(const MatrixXd& L, const MatrixXd& A, double scale) {
  MatrixXd out(L.cols(), A.cols());
  const double inv = 1.0 / scale;
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < A.cols(); ++j) {
    for (Index k = 0; k < L.cols(); ++k) out(k, j) = L.col(k).dot(A.col(j)) * inv;
  }
  return out;
}

VectorXd residual_column_sum_squares(const MatrixXd& A, const MatrixXd& L, const MatrixXd& G) {
  VectorXd out(A.cols());
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < A.cols(); ++j) {
    const VectorXd r = A.col(j) - L * G.col(j);
    out(j) = r.squaredNorm();
  }
  return out;
}

namespace serial {

MatrixXd row_gram(const MatrixXd& A) {
  MatrixXd G = MatrixXd::Zero(A.rows(), A.rows());
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index k = 0; k < A.rows(); ++k) {
      double s = 0.0;
      for (Index j = 0; j < A.cols(); ++j) s += A(i, j) * A(k, j);
      G(i, k) = s;
    }
  }
  return G;
}

VectorXd column_sum_squares(const MatrixXd& A) {
  VectorXd out = VectorXd::Zero(A.cols());
  for (Index j = 0; j < A.cols(); ++j) {
    for (Index i = 0; i < A.rows(); ++i) out(j) += A(i, j) * A(i, j);
  }
  return out;
}

MatrixXd scaled_cross_product(const MatrixXd& L, const MatrixXd& A, double scale) {
  MatrixXd out = MatrixXd::Zero(L.cols(), A.cols());
  for (Index j = 0; j < A.cols(); ++j) {
    for (Index k = 0; k < L.cols(); ++k) {
      double s = 0.0;
      for (Index i = 0; i < A.rows(); ++i) s += L(i, k) * A(i, j);
      out(k, j) = s / scale;
    }
  }
  return out;
}

VectorXd residual_column_sum_squares(const MatrixXd& A, const MatrixXd& L, const MatrixXd& G) {
  VectorXd out = VectorXd::Zero(A.cols());
  for (Index j = 0; j < A.cols(); ++j) {
    for (Index i = 0; i < A.rows(); ++i) {
      double fit = 0.0;
      for (Index k = 0; k < L.cols(); ++k) fit += L(i, k) * G(k, j);
      const double r = A(i, j) - fit;
      out(j) += r * r;
    }
  }
  return out;
}

}  // namespace serial

}  // namespace adafat::kernels
