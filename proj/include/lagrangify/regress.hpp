#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dictionary.hpp"
#include "error.hpp"

namespace lagrangify {

struct RegressionProblem {
  Eigen::MatrixXd A;  // EL library without the kinetic column
  Eigen::VectorXd y;  // EL column of v_i^2
  std::vector<std::string> labels;
  std::vector<std::size_t> source_columns;  // column of A -> column of the EL matrix
};

struct StlsqConfig {
  double lambda = 1.0;
  int max_iterations = 20;
  double ridge = 1e-10;
  bool normalize = false;  // threshold on unit-RMS columns, unscale afterwards

  void validate() const {
    if (!(lambda > 0)) throw Error(ErrorCode::InvalidArgument, "lambda must be positive");
    if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be positive");
    if (ridge < 0) throw Error(ErrorCode::InvalidArgument, "ridge must be nonnegative");
  }
};

struct SparseSolution {
  Eigen::VectorXd theta;
  std::vector<std::size_t> support;  // sorted column indices of A
  int iterations = 0;
  double residual_rms = 0.0;
};

inline RegressionProblem build_problem(const ELMatrix& el, std::size_t kinetic_col, const std::vector<std::string>& labels) {
  const auto K = static_cast<std::size_t>(el.values.cols());
  if (kinetic_col >= K) throw Error(ErrorCode::BadColumn, "kinetic column " + std::to_string(kinetic_col));
  RegressionProblem p;
  p.y = el.values.col(static_cast<Eigen::Index>(kinetic_col));
  p.A.resize(el.values.rows(), static_cast<Eigen::Index>(K - 1));
  for (std::size_t k = 0, c = 0; k < K; ++k) {
    if (k == kinetic_col) continue;
    p.A.col(static_cast<Eigen::Index>(c++)) = el.values.col(static_cast<Eigen::Index>(k));
    p.labels.push_back(k < labels.size() ? labels[k] : std::to_string(k));
    p.source_columns.push_back(k);
  }
  return p;
}

struct LeastSquaresResult {
  Eigen::VectorXd theta;
  Eigen::Index rank = 0;
  bool rank_deficient = false;
};

// argmin |A x - y|^2 + ridge |x|^2 by column-pivoted QR of the stacked system.
inline LeastSquaresResult least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, double ridge) {
  if (A.rows() < A.cols() && ridge == 0.0)
    throw Error(ErrorCode::InvalidArgument, "fewer rows than active columns");
  LeastSquaresResult r;
  if (A.cols() == 0) return r;
  if (ridge > 0) {
    Eigen::MatrixXd S(A.rows() + A.cols(), A.cols());
    S << A, std::sqrt(ridge) * Eigen::MatrixXd::Identity(A.cols(), A.cols());
    Eigen::VectorXd t(A.rows() + A.cols());
    t << y, Eigen::VectorXd::Zero(A.cols());
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(S);
    r.theta = qr.solve(t);
    r.rank = qr.rank();
  } else {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    r.theta = cod.solve(y);
    r.rank = cod.rank();
    r.rank_deficient = r.rank < A.cols();
  }
  return r;
}

namespace detail {
inline Eigen::MatrixXd take_columns(const Eigen::MatrixXd& A, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd B(A.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) B.col(static_cast<Eigen::Index>(k)) = A.col(static_cast<Eigen::Index>(cols[k]));
  return B;
}

inline std::string support_text(const RegressionProblem& p, const std::vector<std::size_t>& s) {
  std::string out = "{";
  for (std::size_t k = 0; k < s.size(); ++k) out += (k ? ", " : "") + (s[k] < p.labels.size() ? p.labels[s[k]] : std::to_string(s[k]));
  return out + "}";
}
}  // namespace detail

// Hard-threshold sequential least squares. Columns that are identically zero start inactive.
inline SparseSolution stlsq(const RegressionProblem& p, const StlsqConfig& cfg) {
  cfg.validate();
  if (p.A.rows() != p.y.size()) throw Error(ErrorCode::BadColumn, "row count mismatch");
  const auto K = static_cast<std::size_t>(p.A.cols());

  Eigen::VectorXd scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(K));
  if (cfg.normalize && p.A.rows() > 0)
    for (std::size_t k = 0; k < K; ++k) {
      const double s = p.A.col(static_cast<Eigen::Index>(k)).norm() / std::sqrt(static_cast<double>(p.A.rows()));
      if (s > 0) scale(static_cast<Eigen::Index>(k)) = s;
    }

  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < K; ++k)
    if (p.A.col(static_cast<Eigen::Index>(k)).squaredNorm() > 0) active.push_back(k);
  if (active.empty()) throw Error(ErrorCode::EmptySupport, "every library column is zero");

  SparseSolution sol;
  Eigen::VectorXd coef;  // on the current active set, scaled units
  bool converged = false;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    sol.iterations = it;
    Eigen::MatrixXd B = detail::take_columns(p.A, active);
    for (std::size_t k = 0; k < active.size(); ++k) B.col(static_cast<Eigen::Index>(k)) /= scale(static_cast<Eigen::Index>(active[k]));
    coef = least_squares(B, p.y, cfg.ridge).theta;
    std::vector<std::size_t> kept;
    Eigen::VectorXd kept_coef(static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k)
      if (std::abs(coef(static_cast<Eigen::Index>(k))) >= cfg.lambda) {
        kept_coef(static_cast<Eigen::Index>(kept.size())) = coef(static_cast<Eigen::Index>(k));
        kept.push_back(active[k]);
      }
    if (kept.empty())
      throw Error(ErrorCode::EmptySupport, "thresholding at lambda=" + format_number(cfg.lambda) + " removed every column");
    if (kept.size() == active.size()) {
      converged = true;
      break;
    }
    active = std::move(kept);
  }
  if (!converged)
    throw Error(ErrorCode::NoConvergence, "support still changing after " + std::to_string(cfg.max_iterations) +
                                              " iterations; last support " + detail::support_text(p, active));

  sol.support = active;
  sol.theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
  for (std::size_t k = 0; k < active.size(); ++k)
    sol.theta(static_cast<Eigen::Index>(active[k])) = coef(static_cast<Eigen::Index>(k)) / scale(static_cast<Eigen::Index>(active[k]));
  const Eigen::VectorXd r = p.y - p.A * sol.theta;
  sol.residual_rms = r.size() ? r.norm() / std::sqrt(static_cast<double>(r.size())) : 0.0;
  return sol;
}

inline nlohmann::json to_json(const SparseSolution& s, const RegressionProblem& p) {
  nlohmann::json support = nlohmann::json::array(), theta = nlohmann::json::array();
  for (auto k : s.support) {
    support.push_back(k < p.labels.size() ? p.labels[k] : std::to_string(k));
    theta.push_back(s.theta(static_cast<Eigen::Index>(k)));
  }
  return {{"support", support}, {"theta", theta}, {"residual_rms", s.residual_rms}, {"iterations", s.iterations}};
}

}  // namespace lagrangify
