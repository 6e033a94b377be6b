#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include <lagrangify/lagrangify.hpp>

using namespace lagrangify;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index n, Eigen::Index k) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd A(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) A(i, j) = g(rng);
  return A;
}

RegressionProblem problem(Eigen::MatrixXd A, Eigen::VectorXd y) {
  RegressionProblem p;
  p.A = std::move(A);
  p.y = std::move(y);
  for (Eigen::Index k = 0; k < p.A.cols(); ++k) p.labels.push_back("c" + std::to_string(k));
  return p;
}

// Normal equations solved by Gauss-Jordan elimination with partial pivoting in long double.
std::vector<long double> normal_equations(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, const std::vector<std::size_t>& cols) {
  const std::size_t k = cols.size();
  std::vector<std::vector<long double>> G(k, std::vector<long double>(k + 1, 0.0L));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b)
      for (Eigen::Index r = 0; r < A.rows(); ++r)
        G[a][b] += static_cast<long double>(A(r, static_cast<Eigen::Index>(cols[a]))) * A(r, static_cast<Eigen::Index>(cols[b]));
    for (Eigen::Index r = 0; r < A.rows(); ++r) G[a][k] += static_cast<long double>(A(r, static_cast<Eigen::Index>(cols[a]))) * y(r);
  }
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < k; ++r)
      if (std::fabs(G[r][c]) > std::fabs(G[piv][c])) piv = r;
    std::swap(G[c], G[piv]);
    for (std::size_t r = 0; r < k; ++r) {
      if (r == c) continue;
      const long double f = G[r][c] / G[c][c];
      for (std::size_t j = c; j <= k; ++j) G[r][j] -= f * G[c][j];
    }
  }
  std::vector<long double> x(k);
  for (std::size_t c = 0; c < k; ++c) x[c] = G[c][k] / G[c][c];
  return x;
}

double residual_for(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, const std::vector<std::size_t>& cols) {
  const auto x = normal_equations(A, y, cols);
  Eigen::VectorXd r = y;
  for (std::size_t k = 0; k < cols.size(); ++k) r -= static_cast<double>(x[k]) * A.col(static_cast<Eigen::Index>(cols[k]));
  return r.norm();
}

}  // namespace

TEST(LeastSquares, IdentityReturnsTarget) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
  const Eigen::VectorXd y = Eigen::Vector4d(1, -2, 3, 0.5);
  EXPECT_LT((least_squares(I, y, 0.0).theta - y).norm(), 1e-14);
}

TEST(LeastSquares, DuplicateColumnsStayFiniteWithRidge) {
  std::mt19937_64 rng(1);
  Eigen::MatrixXd A = random_matrix(rng, 40, 3);
  A.col(2) = A.col(1);
  const Eigen::VectorXd y = A.col(1);
  const auto r = least_squares(A, y, 1e-10);
  EXPECT_TRUE(r.theta.allFinite());
  EXPECT_LT((A * r.theta - y).norm(), 1e-6);
  EXPECT_NEAR(r.theta(1), r.theta(2), 1e-6);
}

TEST(LeastSquares, MatchesNormalEquationOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd A = random_matrix(rng, 60, 6);
    const Eigen::VectorXd y = random_matrix(rng, 60, 1).col(0);
    const auto theta = least_squares(A, y, 0.0).theta;
    const auto oracle = normal_equations(A, y, {0, 1, 2, 3, 4, 5});
    for (Eigen::Index k = 0; k < 6; ++k) EXPECT_NEAR(theta(k), static_cast<double>(oracle[static_cast<std::size_t>(k)]), 1e-8);
  }
}

TEST(Stlsq, RecoversPlantedColumn) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd A = random_matrix(rng, 50, 5);
  const Eigen::VectorXd y = 3.0 * A.col(2);
  StlsqConfig cfg;
  cfg.lambda = 0.1;
  const auto s = stlsq(problem(A, y), cfg);
  EXPECT_EQ(s.support, std::vector<std::size_t>{2});
  EXPECT_NEAR(s.theta(2), 3.0, 1e-9);
  EXPECT_LT(s.residual_rms, 1e-10);
}

TEST(Stlsq, MatchesBestSubsetOnPlantedProblems) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> pick(0, 9);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index K = 10;
    const Eigen::MatrixXd A = random_matrix(rng, 80, K);
    std::vector<std::size_t> truth;
    while (truth.size() < 3) {
      const auto c = static_cast<std::size_t>(pick(rng));
      if (std::find(truth.begin(), truth.end(), c) == truth.end()) truth.push_back(c);
    }
    std::sort(truth.begin(), truth.end());
    Eigen::VectorXd y = Eigen::VectorXd::Zero(80);
    for (auto c : truth) y += (2.0 + static_cast<double>(c)) * A.col(static_cast<Eigen::Index>(c));
    y += 1e-3 * random_matrix(rng, 80, 1).col(0);

    StlsqConfig cfg;
    cfg.lambda = 0.5;
    const auto s = stlsq(problem(A, y), cfg);

    // exhaustive search over all 3-column subsets
    std::vector<std::size_t> best;
    double best_res = INFINITY;
    for (std::size_t a = 0; a < 10; ++a)
      for (std::size_t b = a + 1; b < 10; ++b)
        for (std::size_t c = b + 1; c < 10; ++c) {
          const double r = residual_for(A, y, {a, b, c});
          if (r < best_res) best_res = r, best = {a, b, c};
        }
    EXPECT_EQ(best, truth);
    EXPECT_EQ(s.support, best);
  }
}

TEST(Stlsq, EmptySupportWhenLambdaTooLarge) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd A = random_matrix(rng, 30, 4);
  StlsqConfig cfg;
  cfg.lambda = 1e9;
  EXPECT_EQ(code_of([&] { (void)stlsq(problem(A, A.col(0)), cfg); }), ErrorCode::EmptySupport);
}

TEST(Stlsq, AllZeroLibraryIsEmptySupport) {
  const Eigen::MatrixXd A = Eigen::MatrixXd::Zero(10, 3);
  EXPECT_EQ(code_of([&] { (void)stlsq(problem(A, Eigen::VectorXd::Ones(10)), {}); }), ErrorCode::EmptySupport);
}

TEST(Stlsq, NoConvergenceWithinIterationBudget) {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd A = random_matrix(rng, 50, 6);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(50);
  for (Eigen::Index k = 0; k < 6; ++k) y += std::pow(3.0, static_cast<double>(k)) * 0.01 * A.col(k);
  StlsqConfig cfg;
  cfg.lambda = 0.05;
  cfg.max_iterations = 1;
  EXPECT_EQ(code_of([&] { (void)stlsq(problem(A, y), cfg); }), ErrorCode::NoConvergence);
}

TEST(Stlsq, InvalidConfig) {
  const auto p = problem(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Ones(3));
  StlsqConfig cfg;
  cfg.lambda = 0;
  EXPECT_EQ(code_of([&] { (void)stlsq(p, cfg); }), ErrorCode::InvalidArgument);
  cfg.lambda = 1;
  cfg.ridge = -1;
  EXPECT_EQ(code_of([&] { (void)stlsq(p, cfg); }), ErrorCode::InvalidArgument);
}

TEST(StlsqProperties, SupportShrinksAsLambdaGrows) {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd A = random_matrix(rng, 100, 8);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(100);
  for (Eigen::Index k = 0; k < 8; ++k) y += std::pow(2.0, static_cast<double>(k)) * 0.1 * A.col(k);
  y += 0.01 * random_matrix(rng, 100, 1).col(0);
  const auto p = problem(A, y);
  std::vector<std::size_t> prev;
  bool first = true;
  for (double lambda : {0.01, 0.15, 0.3, 0.6, 1.2, 2.5, 5.0, 10.0}) {
    StlsqConfig cfg;
    cfg.lambda = lambda;
    const auto s = stlsq(p, cfg);
    if (!first) EXPECT_TRUE(std::includes(prev.begin(), prev.end(), s.support.begin(), s.support.end())) << lambda;
    prev = s.support;
    first = false;
  }
}

TEST(StlsqProperties, IdempotentOnItsSupport) {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd A = random_matrix(rng, 60, 6);
  const Eigen::VectorXd y = 2 * A.col(1) - 5 * A.col(4) + 0.01 * random_matrix(rng, 60, 1).col(0);
  StlsqConfig cfg;
  cfg.lambda = 0.5;
  const auto s = stlsq(problem(A, y), cfg);
  Eigen::MatrixXd B(A.rows(), static_cast<Eigen::Index>(s.support.size()));
  for (std::size_t k = 0; k < s.support.size(); ++k) B.col(static_cast<Eigen::Index>(k)) = A.col(static_cast<Eigen::Index>(s.support[k]));
  const auto again = stlsq(problem(B, y), cfg);
  ASSERT_EQ(again.support.size(), s.support.size());
  for (std::size_t k = 0; k < s.support.size(); ++k)
    EXPECT_NEAR(again.theta(static_cast<Eigen::Index>(k)), s.theta(static_cast<Eigen::Index>(s.support[k])), 1e-10);
}

TEST(StlsqProperties, ScaleCovariance) {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd A = random_matrix(rng, 60, 6);
  const Eigen::VectorXd y = 2 * A.col(0) + 4 * A.col(3) + 0.01 * random_matrix(rng, 60, 1).col(0);
  StlsqConfig cfg;
  cfg.lambda = 0.5;
  cfg.ridge = 0;
  const auto s = stlsq(problem(A, y), cfg);
  const double a = 7.5;
  cfg.lambda *= a;
  const auto t = stlsq(problem(A, a * y), cfg);
  EXPECT_EQ(s.support, t.support);
  EXPECT_LT((t.theta - a * s.theta).norm(), 1e-9 * a * s.theta.norm());
}

TEST(StlsqProperties, Deterministic) {
  std::mt19937_64 rng(10);
  const Eigen::MatrixXd A = random_matrix(rng, 60, 6);
  const Eigen::VectorXd y = A.col(0) - 3 * A.col(5) + 0.1 * random_matrix(rng, 60, 1).col(0);
  StlsqConfig cfg;
  cfg.lambda = 0.3;
  const auto a = stlsq(problem(A, y), cfg), b = stlsq(problem(A, y), cfg);
  EXPECT_EQ(a.support, b.support);
  EXPECT_EQ(a.theta, b.theta);
}

TEST(BuildProblem, SplitsOffKineticColumn) {
  ELMatrix el;
  el.values = Eigen::MatrixXd::Random(10, 4);
  const auto p = build_problem(el, 2, {"1", "x0^2", "v0^2", "x0^4"});
  EXPECT_EQ(p.y, el.values.col(2));
  EXPECT_EQ(p.A.cols(), 3);
  EXPECT_EQ(p.labels, (std::vector<std::string>{"1", "x0^2", "x0^4"}));
  EXPECT_EQ(p.source_columns, (std::vector<std::size_t>{0, 1, 3}));
  EXPECT_EQ(p.A.col(2), el.values.col(3));
  EXPECT_EQ(code_of([&] { (void)build_problem(el, 4, {}); }), ErrorCode::BadColumn);
}
