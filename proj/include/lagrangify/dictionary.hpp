#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "error.hpp"
#include "expr.hpp"
#include "trajectory.hpp"

namespace lagrangify {

struct DictionarySpec {
  std::size_t m = 1;
  int poly_degree = 2;  // rho
  int min_degree = 1;   // lowest monomial / difference power
  bool include_harmonics = false;
  int harmonic_count = 1;  // sin(k x), cos(k x) for k = 1..count
  bool velocity_harmonics = false;
  bool include_pairwise_differences = false;
  int diff_poly_degree = 2;
  std::optional<std::size_t> neighbor_window;
  bool include_forcing_coupling = false;
  bool include_curvature = false;  // (x[c+1] - 2 x[c] + x[c-1])^2, two fixed nodes left of x0

  void validate() const {
    if (m == 0) throw Error(ErrorCode::SpecInvalid, "m must be positive");
    if (poly_degree < 2) throw Error(ErrorCode::SpecInvalid, "poly_degree must be >= 2 so v_i^2 exists");
    if (min_degree < 1 || min_degree > 2) throw Error(ErrorCode::SpecInvalid, "min_degree must be 1 or 2");
    if (include_harmonics && harmonic_count < 1) throw Error(ErrorCode::SpecInvalid, "harmonic_count must be >= 1");
    if (include_pairwise_differences && diff_poly_degree < 1)
      throw Error(ErrorCode::SpecInvalid, "diff_poly_degree must be >= 1");
  }
};

inline nlohmann::json to_json(const DictionarySpec& s) {
  nlohmann::json j{{"m", s.m},
                   {"poly_degree", s.poly_degree},
                   {"min_degree", s.min_degree},
                   {"include_harmonics", s.include_harmonics},
                   {"harmonic_count", s.harmonic_count},
                   {"velocity_harmonics", s.velocity_harmonics},
                   {"include_pairwise_differences", s.include_pairwise_differences},
                   {"diff_poly_degree", s.diff_poly_degree},
                   {"include_forcing_coupling", s.include_forcing_coupling},
                   {"include_curvature", s.include_curvature}};
  j["neighbor_window"] = s.neighbor_window ? nlohmann::json(*s.neighbor_window) : nlohmann::json(nullptr);
  return j;
}

inline DictionarySpec dictionary_spec_from_json(const nlohmann::json& j) {
  try {
    DictionarySpec s;
    s.m = j.at("m").get<std::size_t>();
    s.poly_degree = j.value("poly_degree", s.poly_degree);
    s.min_degree = j.value("min_degree", s.min_degree);
    s.include_harmonics = j.value("include_harmonics", s.include_harmonics);
    s.harmonic_count = j.value("harmonic_count", s.harmonic_count);
    s.velocity_harmonics = j.value("velocity_harmonics", s.velocity_harmonics);
    s.include_pairwise_differences = j.value("include_pairwise_differences", s.include_pairwise_differences);
    s.diff_poly_degree = j.value("diff_poly_degree", s.diff_poly_degree);
    s.include_forcing_coupling = j.value("include_forcing_coupling", s.include_forcing_coupling);
    s.include_curvature = j.value("include_curvature", s.include_curvature);
    if (j.contains("neighbor_window") && !j["neighbor_window"].is_null())
      s.neighbor_window = j["neighbor_window"].get<std::size_t>();
    return s;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::ParseError, ex.what());
  }
}

struct Dictionary {
  std::size_t m = 0;
  std::vector<Expr> basis;
  std::vector<std::string> labels;         // canonical renderings
  std::vector<std::size_t> kinetic_index;  // column of v_i^2 per coordinate

  [[nodiscard]] std::size_t size() const noexcept { return basis.size(); }
};

// Wraps an explicit basis list; basis[0] must be the constant and every v_i^2 must appear.
inline Dictionary make_dictionary(std::size_t m, const std::vector<Expr>& bases) {
  Dictionary d;
  d.m = m;
  std::unordered_set<std::string> seen;
  for (const auto& b : bases) {
    auto s = simplify(b);
    auto label = render(s);
    if (!seen.insert(label).second) continue;
    d.basis.push_back(std::move(s));
    d.labels.push_back(std::move(label));
  }
  if (d.basis.empty() || d.labels.front() != "1") throw Error(ErrorCode::SpecInvalid, "basis[0] must be the constant 1");
  for (std::size_t i = 0; i < m; ++i) {
    const auto want = "v" + std::to_string(i) + "^2";
    auto it = std::find(d.labels.begin(), d.labels.end(), want);
    if (it == d.labels.end()) throw Error(ErrorCode::SpecInvalid, "kinetic basis " + want + " missing");
    d.kinetic_index.push_back(static_cast<std::size_t>(it - d.labels.begin()));
  }
  return d;
}

inline Expr harmonic_argument(const Expr& x, int k) { return k == 1 ? x : product({constant(k), x}); }

// Second difference x[c+1] - 2 x[c] + x[c-1]; nodes -1 and -2 are held at zero.
inline Expr second_difference(long c, std::size_t m) {
  std::vector<Expr> terms;
  auto add = [&](long node, double w) {
    if (node >= 0 && node < static_cast<long>(m)) terms.push_back(w * pos(static_cast<std::size_t>(node)));
  };
  add(c + 1, 1.0);
  add(c, -2.0);
  add(c - 1, 1.0);
  return sum(std::move(terms));
}

// Enumeration order: 1; per coordinate x_i^p, v_i^p (p = min..rho); harmonics per coordinate;
// differences (x_j - x_i)^p for i < j; curvature squares; forcing couplings x_i f_i.
inline Dictionary build_dictionary(const DictionarySpec& spec) {
  spec.validate();
  const auto m = spec.m;
  std::vector<Expr> b{constant(1.0)};
  for (std::size_t i = 0; i < m; ++i)
    for (int p = spec.min_degree; p <= spec.poly_degree; ++p) {
      b.push_back(p == 1 ? pos(i) : power(pos(i), p));
      b.push_back(p == 1 ? vel(i) : power(vel(i), p));
    }
  if (spec.include_harmonics)
    for (std::size_t i = 0; i < m; ++i)
      for (int k = 1; k <= spec.harmonic_count; ++k) {
        b.push_back(sin(harmonic_argument(pos(i), k)));
        b.push_back(cos(harmonic_argument(pos(i), k)));
        if (spec.velocity_harmonics) {
          b.push_back(sin(harmonic_argument(vel(i), k)));
          b.push_back(cos(harmonic_argument(vel(i), k)));
        }
      }
  if (spec.include_pairwise_differences)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        if (spec.neighbor_window && j - i > *spec.neighbor_window) continue;
        for (int p = spec.min_degree; p <= spec.diff_poly_degree; ++p) {
          auto d = pos(j) - pos(i);
          b.push_back(p == 1 ? d : power(d, p));
        }
      }
  if (spec.include_curvature)
    for (long c = -1; c <= static_cast<long>(m) - 2; ++c) b.push_back(power(second_difference(c, m), 2));
  if (spec.include_forcing_coupling)
    for (std::size_t i = 0; i < m; ++i) b.push_back(pos(i) * forcing(i));
  return make_dictionary(m, b);
}

inline bool uses_forcing(const Dictionary& d) {
  for (const auto& e : d.basis)
    if (!footprint(e).forcings.empty()) return true;
  return false;
}

// N x K library values.
inline Eigen::MatrixXd evaluate_dictionary(const Dictionary& d, const Trajectory& tr) {
  if (tr.dofs() != d.m) throw Error(ErrorCode::BadColumn, "trajectory has " + std::to_string(tr.dofs()) + " coordinates");
  if (uses_forcing(d) && !tr.F) throw Error(ErrorCode::MissingForcing, "library has forcing bases but data has none");
  const auto N = static_cast<Eigen::Index>(tr.samples());
  Eigen::MatrixXd D(N, static_cast<Eigen::Index>(d.size()));
  for (std::size_t k = 0; k < d.size(); ++k) {
    const CompiledExpr f(d.basis[k]);
    for (Eigen::Index n = 0; n < N; ++n) D(n, static_cast<Eigen::Index>(k)) = f(tr.context(static_cast<std::size_t>(n)));
  }
  return D;
}

// Central-difference weights c_1..c_h for d/dt, f'(t) ~ sum_j c_j (f(t+jh) - f(t-jh)) / dt.
inline std::span<const double> central_stencil(int order) {
  static const double o2[] = {1.0 / 2};
  static const double o4[] = {2.0 / 3, -1.0 / 12};
  static const double o6[] = {3.0 / 4, -3.0 / 20, 1.0 / 60};
  static const double o8[] = {4.0 / 5, -1.0 / 5, 4.0 / 105, -1.0 / 280};
  switch (order) {
    case 2: return o2;
    case 4: return o4;
    case 6: return o6;
    case 8: return o8;
    default: throw Error(ErrorCode::InvalidArgument, "stencil order must be 2, 4, 6 or 8");
  }
}

// Derivative of uniformly sampled g on the interior rows [h, N-h).
inline Eigen::VectorXd time_derivative(const Eigen::VectorXd& g, double dt, int order = 2) {
  const auto c = central_stencil(order);
  const auto h = static_cast<Eigen::Index>(c.size());
  const auto rows = g.size() - 2 * h;
  if (rows <= 0) throw Error(ErrorCode::ParseError, "too few samples for the stencil");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(rows);
  for (Eigen::Index j = 1; j <= h; ++j)
    out += c[static_cast<std::size_t>(j - 1)] * (g.segment(h + j, rows) - g.segment(h - j, rows));
  return out / dt;
}

struct ELMatrix {
  Eigen::MatrixXd values;  // (N - 2h) x K
  std::size_t coord = 0;
  Eigen::Index offset = 1;            // first trajectory row represented
  std::vector<bool> structural_zero;  // basis independent of x_i and v_i
};

// EL column of a single expression for coordinate i: d/dt(dl/dv_i) - dl/dx_i on interior samples.
inline Eigen::VectorXd euler_lagrange_column(const Expr& l, const Trajectory& tr, std::size_t i, int order = 2,
                                             bool* structural_zero = nullptr) {
  const auto h = static_cast<Eigen::Index>(central_stencil(order).size());
  const auto N = static_cast<Eigen::Index>(tr.samples());
  const auto rows = N - 2 * h;
  if (rows <= 0) throw Error(ErrorCode::ParseError, "too few samples for the stencil");
  const auto dv = partial(l, {i, VarKind::Velocity});
  const auto dx = partial(l, {i, VarKind::Position});
  if (structural_zero) *structural_zero = dv.is_zero() && dx.is_zero();
  Eigen::VectorXd col = Eigen::VectorXd::Zero(rows);
  if (!dv.is_zero() && !dv.is_const()) {
    const CompiledExpr g(dv);
    Eigen::VectorXd gs(N);
    for (Eigen::Index n = 0; n < N; ++n) gs(n) = g(tr.context(static_cast<std::size_t>(n)));
    col = time_derivative(gs, tr.dt(), order);
  }
  if (!dx.is_zero()) {
    const CompiledExpr g(dx);
    for (Eigen::Index r = 0; r < rows; ++r) col(r) -= g(tr.context(static_cast<std::size_t>(r + h)));
  }
  return col;
}

inline ELMatrix euler_lagrange_matrix(const Dictionary& d, const Trajectory& tr, std::size_t i, int order = 2) {
  if (i >= d.m) throw Error(ErrorCode::IndexOutOfRange, "coordinate " + std::to_string(i));
  if (tr.dofs() != d.m) throw Error(ErrorCode::BadColumn, "trajectory has " + std::to_string(tr.dofs()) + " coordinates");
  tr.validate();
  if (uses_forcing(d) && !tr.F) throw Error(ErrorCode::MissingForcing, "library has forcing bases but data has none");
  ELMatrix el;
  el.coord = i;
  el.offset = static_cast<Eigen::Index>(central_stencil(order).size());
  const auto rows = static_cast<Eigen::Index>(tr.samples()) - 2 * el.offset;
  el.values = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(d.size()));
  el.structural_zero.assign(d.size(), true);
  const Var xi{i, VarKind::Position}, vi{i, VarKind::Velocity};
  for (std::size_t k = 0; k < d.size(); ++k) {
    const auto fp = footprint(d.basis[k]);
    if (!fp.vars.contains(xi) && !fp.vars.contains(vi)) continue;
    bool zero = false;
    el.values.col(static_cast<Eigen::Index>(k)) = euler_lagrange_column(d.basis[k], tr, i, order, &zero);
    el.structural_zero[k] = zero;
  }
  return el;
}

}  // namespace lagrangify
