#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "expr.hpp"

namespace lagrangify {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Sampled states; row n holds sample n, column i coordinate i.
struct Trajectory {
  Eigen::VectorXd t;
  RowMatrix X;
  RowMatrix V;
  std::optional<RowMatrix> F;

  [[nodiscard]] std::size_t samples() const noexcept { return static_cast<std::size_t>(t.size()); }
  [[nodiscard]] std::size_t dofs() const noexcept { return static_cast<std::size_t>(X.cols()); }
  [[nodiscard]] double dt() const { return samples() > 1 ? t(1) - t(0) : 0.0; }

  [[nodiscard]] EvalContext context(std::size_t n) const {
    const auto m = dofs();
    const auto row = static_cast<Eigen::Index>(n);
    EvalContext ctx{{X.data() + row * X.cols(), m}, {V.data() + row * V.cols(), m}, {}};
    if (F) ctx.f = {F->data() + row * F->cols(), static_cast<std::size_t>(F->cols())};
    return ctx;
  }

  // Checks shape, finiteness and grid uniformity.
  void validate(std::size_t min_samples = 5) const {
    const auto n = samples();
    if (n < min_samples)
      throw Error(ErrorCode::ParseError, "trajectory needs at least " + std::to_string(min_samples) + " samples");
    if (static_cast<std::size_t>(X.rows()) != n || V.rows() != X.rows() || V.cols() != X.cols() || X.cols() == 0)
      throw Error(ErrorCode::ParseError, "inconsistent trajectory shape");
    if (F && (static_cast<std::size_t>(F->rows()) != n || F->cols() != X.cols()))
      throw Error(ErrorCode::ParseError, "forcing block shape mismatch");
    if (!t.allFinite() || !X.allFinite() || !V.allFinite() || (F && !F->allFinite()))
      throw Error(ErrorCode::ParseError, "non-finite entry");
    const double h = dt();
    if (!(h > 0)) throw Error(ErrorCode::NonUniformTimeGrid, "time step must be positive");
    for (std::size_t k = 1; k < n; ++k) {
      const double hk = t(static_cast<Eigen::Index>(k)) - t(static_cast<Eigen::Index>(k - 1));
      if (std::abs(hk - h) > 1e-9 * std::max(1.0, std::abs(t(static_cast<Eigen::Index>(k)))) + 1e-9 * h)
        throw Error(ErrorCode::NonUniformTimeGrid, "step " + std::to_string(k) + " differs from the first");
    }
  }
};

inline void write_csv(std::ostream& os, const Trajectory& tr) {
  const auto m = tr.dofs();
  os << "t";
  for (std::size_t i = 0; i < m; ++i) os << ",x" << i;
  for (std::size_t i = 0; i < m; ++i) os << ",v" << i;
  if (tr.F)
    for (std::size_t i = 0; i < m; ++i) os << ",f" << i;
  os << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (Eigen::Index n = 0; n < tr.t.size(); ++n) {
    put(tr.t(n));
    for (Eigen::Index i = 0; i < tr.X.cols(); ++i) os << ',', put(tr.X(n, i));
    for (Eigen::Index i = 0; i < tr.V.cols(); ++i) os << ',', put(tr.V(n, i));
    if (tr.F)
      for (Eigen::Index i = 0; i < tr.F->cols(); ++i) os << ',', put((*tr.F)(n, i));
    os << '\n';
  }
}

inline void write_csv(const std::string& path, const Trajectory& tr) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::ParseError, "cannot write " + path);
  write_csv(os, tr);
}

inline Trajectory read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.empty()) throw Error(ErrorCode::ParseError, "empty trajectory file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string tok; std::getline(ss, tok, ',');) header.push_back(tok);
  }
  if (header.empty() || header[0] != "t") throw Error(ErrorCode::ParseError, "header must start with t");
  const std::size_t cols = header.size() - 1;
  std::size_t m = 0;
  while (m < cols && header[1 + m] == "x" + std::to_string(m)) ++m;
  const bool forced = cols == 3 * m;
  if (m == 0 || (cols != 2 * m && !forced)) throw Error(ErrorCode::ParseError, "header must be t,x0..,v0..[,f0..]");
  for (std::size_t i = 0; i < m; ++i) {
    if (header[1 + m + i] != "v" + std::to_string(i)) throw Error(ErrorCode::ParseError, "bad velocity header");
    if (forced && header[1 + 2 * m + i] != "f" + std::to_string(i))
      throw Error(ErrorCode::ParseError, "bad forcing header");
  }

  std::vector<double> vals;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* p = line.c_str();
    for (std::size_t c = 0; c <= cols; ++c) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw Error(ErrorCode::ParseError, "row " + std::to_string(rows + 1) + ": bad number");
      vals.push_back(v);
      p = end;
      if (c < cols) {
        if (*p != ',') throw Error(ErrorCode::ParseError, "row " + std::to_string(rows + 1) + ": too few fields");
        ++p;
      }
    }
    while (*p == ' ' || *p == '\t') ++p;
    if (*p != '\0') throw Error(ErrorCode::ParseError, "row " + std::to_string(rows + 1) + ": too many fields");
    ++rows;
  }
  if (rows == 0) throw Error(ErrorCode::ParseError, "no samples");

  Trajectory tr;
  const auto R = static_cast<Eigen::Index>(rows);
  const auto M = static_cast<Eigen::Index>(m);
  tr.t.resize(R);
  tr.X.resize(R, M);
  tr.V.resize(R, M);
  if (forced) tr.F = RowMatrix(R, M);
  const std::size_t stride = cols + 1;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = vals.data() + r * stride;
    const auto n = static_cast<Eigen::Index>(r);
    tr.t(n) = row[0];
    for (std::size_t i = 0; i < m; ++i) {
      tr.X(n, static_cast<Eigen::Index>(i)) = row[1 + i];
      tr.V(n, static_cast<Eigen::Index>(i)) = row[1 + m + i];
      if (forced) (*tr.F)(n, static_cast<Eigen::Index>(i)) = row[1 + 2 * m + i];
    }
  }
  return tr;
}

inline Trajectory read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::ParseError, "cannot open " + path);
  return read_csv(is);
}

// Relative L2 (Frobenius) distance of positions, ||a - b|| / ||b||.
inline double relative_l2(const RowMatrix& a, const RowMatrix& b) {
  const double den = b.norm();
  return den > 0 ? (a - b).norm() / den : (a - b).norm();
}

}  // namespace lagrangify
