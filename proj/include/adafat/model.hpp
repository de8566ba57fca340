#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace adafat {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Sorted, duplicate-free list of zero-based test indices.
using IndexSet = std::vector<Index>;

/// Observed panel. Y is n x m (rows are observations, columns are tests).
/// X holds the explanatory variables without an intercept column; the
/// intercept is always implicit.
class Dataset {
 public:
  const MatrixXd& Y() const { return Y_; }
  const MatrixXd& X() const { return X_; }
  bool has_x() const { return X_.cols() > 0; }

  Index n() const { return Y_.rows(); }
  Index m() const { return Y_.cols(); }
  Index p() const { return X_.cols(); }

  /// (1_n, X).
  MatrixXd augmented_x() const;

 private:
  friend Dataset validate_dataset(MatrixXd Y, std::optional<MatrixXd> X);
  Dataset(MatrixXd Y, MatrixXd X) : Y_(std::move(Y)), X_(std::move(X)) {}

  MatrixXd Y_;
  MatrixXd X_;
};

/// Checks finiteness, row count and rank of (1_n, X). Throws adafat::Error
/// (NonFinite, TooFewRows, RankDeficient, DimensionMismatch).
Dataset validate_dataset(MatrixXd Y, std::optional<MatrixXd> X = std::nullopt);

/// Ratio of smallest to largest singular value of W (0 for an all-zero W).
double singular_value_ratio(const MatrixXd& W);

inline constexpr double kRankTolerance = 1e-10;

/// Ground-truth parameters of Y = 1 alpha' + X B + Z Gamma + E.
struct FactorModel {
  VectorXd alpha;      // m
  MatrixXd B;          // p x m
  MatrixXd Gamma;      // q x m
  MatrixXd Sigma_eps;  // m x m

  Index q() const { return Gamma.rows(); }
  Index m() const { return alpha.size(); }
  VectorXd sigma_eps_diag() const { return Sigma_eps.diagonal(); }

  /// Throws BadSpec when dimensions disagree, q < 1, Sigma_eps is not
  /// symmetric or has a non-positive diagonal entry.
  void validate() const;
};

struct HypothesisSplit {
  IndexSet null_set;
  IndexSet alt_set;

  std::size_t m0() const { return null_set.size(); }
  std::size_t m1() const { return alt_set.size(); }
  std::size_t m() const { return null_set.size() + alt_set.size(); }

  /// Nulls are the entries with alpha_j == 0.
  static HypothesisSplit from_alpha(const VectorXd& alpha);
  /// Builds the partition of {0..m-1} given the alternative set.
  static HypothesisSplit from_alternatives(IndexSet alt, Index m);

  bool is_alternative(Index j) const;
};

IndexSet full_index_set(Index m);
IndexSet set_difference(const IndexSet& a, const IndexSet& b);

}  // namespace adafat
