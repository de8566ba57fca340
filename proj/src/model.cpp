#include "adafat/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adafat/error.hpp"

namespace adafat {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularProjection: return "SingularProjection";
    case ErrorCode::DegenerateProjection: return "DegenerateProjection";
    case ErrorCode::EigenFailure: return "EigenFailure";
    case ErrorCode::SubsetTooSmall: return "SubsetTooSmall";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::SingularD: return "SingularD";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::MissingOracle: return "MissingOracle";
    case ErrorCode::MissingTruth: return "MissingTruth";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFinite:
    case ErrorCode::RankDeficient:
    case ErrorCode::TooFewRows:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::MissingOracle:
    case ErrorCode::MissingTruth:
    case ErrorCode::BadSpec:
    case ErrorCode::Io:
      return true;
    default:
      return false;
  }
}

double singular_value_ratio(const MatrixXd& W) {
  if (W.cols() == 0) return 1.0;
  Eigen::JacobiSVD<MatrixXd> svd(W);
  const VectorXd& s = svd.singularValues();
  if (s(0) <= 0.0) return 0.0;
  return s(s.size() - 1) / s(0);
}

MatrixXd Dataset::augmented_x() const {
  MatrixXd out(n(), p() + 1);
  out.col(0).setOnes();
  if (has_x()) out.rightCols(p()) = X_;
  return out;
}

Dataset validate_dataset(MatrixXd Y, std::optional<MatrixXd> X) {
  MatrixXd x = X ? std::move(*X) : MatrixXd(Y.rows(), 0);
  if (Y.rows() == 0 || Y.cols() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "Y must be non-empty");
  }
  if (x.rows() != Y.rows()) {
    throw Error(ErrorCode::DimensionMismatch,
                "X has " + std::to_string(x.rows()) + " rows, Y has " +
                    std::to_string(Y.rows()));
  }
  if (!Y.allFinite()) throw Error(ErrorCode::NonFinite, "Y contains NaN or Inf");
  if (!x.allFinite()) throw Error(ErrorCode::NonFinite, "X contains NaN or Inf");

  const Index n = Y.rows();
  const Index p = x.cols();
  if (n < p + 2) {
    throw Error(ErrorCode::TooFewRows, "need n >= p + 2, got n=" + std::to_string(n) +
                                           ", p=" + std::to_string(p));
  }

  Dataset data(std::move(Y), std::move(x));
  if (data.has_x() && singular_value_ratio(data.augmented_x()) < kRankTolerance) {
    throw Error(ErrorCode::RankDeficient, "(1_n, X) is not of full column rank");
  }
  return data;
}

void FactorModel::validate() const {
  const Index mm = alpha.size();
  if (Gamma.rows() < 1) throw Error(ErrorCode::BadSpec, "q must be at least 1");
  if (Gamma.cols() != mm || Sigma_eps.rows() != mm || Sigma_eps.cols() != mm ||
      (B.size() > 0 && B.cols() != mm)) {
    throw Error(ErrorCode::BadSpec, "factor model dimensions disagree");
  }
  const double scale = std::max(1.0, Sigma_eps.cwiseAbs().maxCoeff());
  if ((Sigma_eps - Sigma_eps.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::BadSpec, "Sigma_eps is not symmetric");
  }
  if ((Sigma_eps.diagonal().array() <= 0.0).any()) {
    throw Error(ErrorCode::BadSpec, "Sigma_eps has a non-positive diagonal entry");
  }
}

HypothesisSplit HypothesisSplit::from_alpha(const VectorXd& alpha) {
  HypothesisSplit split;
  for (Index j = 0; j < alpha.size(); ++j) {
    (alpha(j) == 0.0 ? split.null_set : split.alt_set).push_back(j);
  }
  return split;
}

HypothesisSplit HypothesisSplit::from_alternatives(IndexSet alt, Index m) {
  std::sort(alt.begin(), alt.end());
  alt.erase(std::unique(alt.begin(), alt.end()), alt.end());
  HypothesisSplit split;
  split.null_set = set_difference(full_index_set(m), alt);
  split.alt_set = std::move(alt);
  return split;
}

bool HypothesisSplit::is_alternative(Index j) const {
  return std::binary_search(alt_set.begin(), alt_set.end(), j);
}

IndexSet full_index_set(Index m) {
  IndexSet all(static_cast<std::size_t>(m));
  for (Index j = 0; j < m; ++j) all[static_cast<std::size_t>(j)] = j;
  return all;
}

IndexSet set_difference(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace adafat
