#pragma once

// Column- and row-parallel dense kernels used by the factor estimation and
// testing pipelines. Every output entry is computed by exactly one thread with
// a fixed summation order, so results do not depend on the thread count.
//
// The `serial` namespace holds plain scalar-loop reference versions kept for
// tests and benchmarks.

#include <Eigen/Dense>

namespace adafat::kernels {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// A * A' for an n x m matrix A (the n x n Gram of the rows).
MatrixXd row_gram(const MatrixXd& A);

/// Squared Euclidean norm of every column.
VectorXd column_sum_squares(const MatrixXd& A);

/// L' * A / scale, evaluated column by column of A (L is n x k, A is n x m).
MatrixXd scaled_cross_product(const MatrixXd& L, const MatrixXd& A, double scale);

/// Per-column squared norm of A - L * G (L is n x k, G is k x m).
VectorXd residual_column_sum_squares(const MatrixXd& A, const MatrixXd& L, const MatrixXd& G);

/// Number of OpenMP threads that a parallel region would use (1 without OpenMP).
int max_threads();

namespace serial {

MatrixXd row_gram(const MatrixXd& A);
VectorXd column_sum_squares(const MatrixXd& A);
MatrixXd scaled_cross_product(const MatrixXd& L, const MatrixXd& A, double scale);
VectorXd residual_column_sum_squares(const MatrixXd& A, const MatrixXd& L, const MatrixXd& G);

}  // namespace serial

}  // namespace adafat::kernels
