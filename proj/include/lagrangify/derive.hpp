#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "expr.hpp"
#include "trajectory.hpp"

namespace lagrangify {

enum class Provenance { Truth, Derived };

// Explicit second-order system: xddot_i = rhs_i(x, v, f).
struct OdeSystem {
  std::size_t m = 0;
  std::vector<Expr> rhs;
  Provenance provenance = Provenance::Derived;
};

struct HamiltonianExpr {
  Expr expr;
};

// Legendre transform, sum_i v_i dL/dv_i - L.
inline HamiltonianExpr hamiltonian(const Expr& L, std::size_t m) {
  std::vector<Expr> terms;
  for (std::size_t i = 0; i < m; ++i) terms.push_back(product({partial(L, {i, VarKind::Velocity}), vel(i)}));
  terms.push_back(-L);
  return {simplify(sum(std::move(terms)))};
}

// Diagonal kinetic weights c_i of 1/2 c_i v_i^2; throws when the kinetic part is not of that form.
inline std::vector<double> kinetic_weights(const Expr& L, std::size_t m) {
  std::vector<double> c(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto p = partial(L, {i, VarKind::Velocity});
    for (std::size_t j = 0; j < m; ++j) {
      const auto q = partial(p, {j, VarKind::Velocity});
      if (j != i && !q.is_zero())
        throw Error(ErrorCode::NonDiagonalKinetic, "cross velocity term between v" + std::to_string(i) + " and v" + std::to_string(j));
      if (j == i) {
        if (!q.is_const() || !(q.value() > 0))
          throw Error(ErrorCode::NonDiagonalKinetic, "kinetic part in v" + std::to_string(i) + " is not a positive quadratic");
        c[i] = q.value();
      }
    }
    for (std::size_t j = 0; j < m; ++j)
      if (!partial(p, {j, VarKind::Position}).is_zero())
        throw Error(ErrorCode::NonDiagonalKinetic, "momentum of coordinate " + std::to_string(i) + " depends on positions");
  }
  return c;
}

inline OdeSystem equations_of_motion(const Expr& L, std::size_t m) {
  const auto c = kinetic_weights(L, m);
  OdeSystem sys;
  sys.m = m;
  for (std::size_t i = 0; i < m; ++i)
    sys.rhs.push_back(simplify(product({constant(1.0 / c[i]), partial(L, {i, VarKind::Position})})));
  return sys;
}

// Mean over samples of |H - H_truth| / |H_truth|.
inline double hamiltonian_error(const Expr& h, const Expr& truth, const Trajectory& tr) {
  const CompiledExpr a(h), b(truth);
  double acc = 0.0;
  for (std::size_t n = 0; n < tr.samples(); ++n) {
    const auto ctx = tr.context(n);
    const double ht = b(ctx);
    acc += ht != 0.0 ? std::abs(a(ctx) - ht) / std::abs(ht) : std::abs(a(ctx));
  }
  return tr.samples() ? acc / static_cast<double>(tr.samples()) : 0.0;
}

// Samples of an expression along a trajectory.
inline Eigen::VectorXd sample(const Expr& e, const Trajectory& tr) {
  const CompiledExpr f(e);
  Eigen::VectorXd out(static_cast<Eigen::Index>(tr.samples()));
  for (std::size_t n = 0; n < tr.samples(); ++n) out(static_cast<Eigen::Index>(n)) = f(tr.context(n));
  return out;
}

// Peak-to-peak variation of H along tr relative to its mean magnitude.
inline double energy_drift(const Expr& h, const Trajectory& tr) {
  const auto s = sample(h, tr);
  const double mean = std::abs(s.mean());
  const double p2p = s.maxCoeff() - s.minCoeff();
  return mean > 0 ? p2p / mean : p2p;
}

inline nlohmann::json to_json(const OdeSystem& s) {
  nlohmann::json rhs = nlohmann::json::array();
  for (std::size_t i = 0; i < s.rhs.size(); ++i) rhs.push_back({{"coord", i}, {"xddot", render(s.rhs[i])}});
  return {{"m", s.m}, {"provenance", s.provenance == Provenance::Truth ? "truth" : "derived"}, {"rhs", rhs}};
}

}  // namespace lagrangify
