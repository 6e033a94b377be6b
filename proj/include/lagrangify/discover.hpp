#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dictionary.hpp"
#include "error.hpp"
#include "expr.hpp"
#include "regress.hpp"
#include "trajectory.hpp"

namespace lagrangify {

struct DiscoverConfig {
  StlsqConfig stlsq;
  int stencil_order = 2;
  double residual_tolerance = 1e-2;  // relative EL residual of the reconstruction; <= 0 disables the gate
};

struct AssembleConfig {
  double coupling_tolerance = 0.05;
  bool infer_mass_ratios = false;  // scale kinetic terms so shared couplings agree
};

struct DofLagrangian {
  std::size_t coord = 0;
  Expr expr;
  SparseSolution solution;
  std::vector<std::string> support_labels;
  std::vector<Expr> support_bases;
  std::vector<double> support_theta;
  double el_residual = 0.0;  // rms(EL[expr]) / rms(y / 2)
};

struct SharedTerm {
  std::string label;
  Expr basis;
  std::vector<std::size_t> dofs;
  std::vector<double> theta;         // raw per-DOF regression weights
  std::vector<double> contribution;  // per-DOF Lagrangian coefficient, -c_i theta / 2
  double coefficient = 0.0;          // reconciled Lagrangian coefficient
  double spread = 0.0;               // (max - min) / |mean| of contributions
};

struct SystemLagrangian {
  std::size_t m = 0;
  Expr expr;
  std::vector<DofLagrangian> per_dof;
  std::vector<double> kinetic;  // c_i in sum 1/2 c_i v_i^2
  std::vector<SharedTerm> terms;
};

// Reconstructs 1/2 v_i^2 - 1/2 sum theta_j l_j, the form whose EL operator vanishes on the fit.
inline Expr reconstruct(std::size_t i, const std::vector<Expr>& bases, const std::vector<double>& theta) {
  std::vector<Expr> terms{product({constant(0.5), power(vel(i), 2)})};
  for (std::size_t k = 0; k < bases.size(); ++k) terms.push_back(product({constant(-0.5 * theta[k]), bases[k]}));
  return simplify(sum(std::move(terms)));
}

inline DofLagrangian discover_dof(const Trajectory& tr, const Dictionary& d, std::size_t i, const DiscoverConfig& cfg) {
  if (i >= d.kinetic_index.size()) throw Error(ErrorCode::IndexOutOfRange, "coordinate " + std::to_string(i));
  const auto el = euler_lagrange_matrix(d, tr, i, cfg.stencil_order);
  const auto p = build_problem(el, d.kinetic_index[i], d.labels);

  DofLagrangian out;
  out.coord = i;
  out.solution = stlsq(p, cfg.stlsq);
  for (auto k : out.solution.support) {
    out.support_labels.push_back(p.labels[k]);
    out.support_bases.push_back(d.basis[p.source_columns[k]]);
    out.support_theta.push_back(out.solution.theta(static_cast<Eigen::Index>(k)));
  }
  out.expr = reconstruct(i, out.support_bases, out.support_theta);

  const Eigen::VectorXd r = euler_lagrange_column(out.expr, tr, i, cfg.stencil_order);
  const double ref = 0.5 * p.y.norm();
  out.el_residual = ref > 0 ? r.norm() / ref : r.norm();
  if (cfg.residual_tolerance > 0 && out.el_residual > cfg.residual_tolerance)
    throw Error(ErrorCode::ResidualTooLarge, "coordinate " + std::to_string(i) + ": relative EL residual " +
                                                 format_number(out.el_residual));
  return out;
}

// Runs discover_dof for every coordinate, split over worker threads.
inline std::vector<DofLagrangian> discover_all(const Trajectory& tr, const Dictionary& d, const DiscoverConfig& cfg,
                                               unsigned threads = 1) {
  const auto m = d.m;
  std::vector<DofLagrangian> out(m);
  std::vector<std::exception_ptr> errors(m);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < m; i += stride) {
      try {
        out[i] = discover_dof(tr, d, i, cfg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(m)));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w, threads);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

namespace detail {

// Relative kinetic weights c_i from shared bases: c_i theta_i = c_j theta_j on every shared term.
inline std::vector<double> infer_kinetic(std::size_t m, const std::map<std::string, SharedTerm>& terms) {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(m);  // (neighbor, c_nb / c_self)
  for (const auto& [label, t] : terms)
    for (std::size_t a = 0; a < t.dofs.size(); ++a)
      for (std::size_t b = 0; b < t.dofs.size(); ++b) {
        if (a == b) continue;
        const double ratio = t.theta[a] / t.theta[b];
        if (!(ratio > 0) || !std::isfinite(ratio))
          throw Error(ErrorCode::InconsistentCoupling, label + ": coefficients of opposite sign across coordinates");
        adj[t.dofs[a]].emplace_back(t.dofs[b], ratio);
      }
  std::vector<double> c(m, 0.0);
  for (std::size_t root = 0; root < m; ++root) {
    if (c[root] > 0) continue;
    c[root] = 1.0;
    std::queue<std::size_t> q;
    q.push(root);
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (auto [w, ratio] : adj[u])
        if (c[w] == 0.0) {
          c[w] = c[u] * ratio;
          q.push(w);
        }
    }
  }
  return c;
}

}  // namespace detail

inline SystemLagrangian assemble(const std::vector<DofLagrangian>& per_dof, const AssembleConfig& cfg = {}) {
  SystemLagrangian sys;
  sys.m = per_dof.size();
  sys.per_dof = per_dof;
  std::map<std::string, SharedTerm> terms;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < per_dof.size(); ++i) {
    if (per_dof[i].coord != i) throw Error(ErrorCode::InvalidArgument, "per-DOF results must cover 0..m-1 in order");
    const auto& d = per_dof[i];
    for (std::size_t k = 0; k < d.support_labels.size(); ++k) {
      auto [it, fresh] = terms.try_emplace(d.support_labels[k]);
      if (fresh) {
        it->second.label = d.support_labels[k];
        it->second.basis = d.support_bases[k];
        order.push_back(d.support_labels[k]);
      }
      it->second.dofs.push_back(i);
      it->second.theta.push_back(d.support_theta[k]);
    }
  }

  sys.kinetic = cfg.infer_mass_ratios ? detail::infer_kinetic(sys.m, terms) : std::vector<double>(sys.m, 1.0);

  std::vector<Expr> parts;
  for (std::size_t i = 0; i < sys.m; ++i) parts.push_back(product({constant(0.5 * sys.kinetic[i]), power(vel(i), 2)}));
  for (const auto& label : order) {
    auto& t = terms.at(label);
    double lo = INFINITY, hi = -INFINITY, mean = 0.0;
    for (std::size_t k = 0; k < t.dofs.size(); ++k) {
      const double v = -0.5 * sys.kinetic[t.dofs[k]] * t.theta[k];
      t.contribution.push_back(v);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      mean += v;
    }
    mean /= static_cast<double>(t.dofs.size());
    t.coefficient = mean;
    t.spread = mean != 0.0 ? (hi - lo) / std::abs(mean) : 0.0;
    if (t.dofs.size() > 1 && t.spread > cfg.coupling_tolerance)
      throw Error(ErrorCode::InconsistentCoupling, label + ": per-coordinate estimates spread " +
                                                       format_number(100 * t.spread) + "%");
    parts.push_back(product({constant(mean), t.basis}));
    sys.terms.push_back(t);
  }
  sys.expr = simplify(sum(std::move(parts)));
  return sys;
}

// Relative L2 distance of the two Lagrangians sampled along tr, |La - L*| / |La|.
inline double lagrangian_error(const Expr& discovered, const Expr& truth, const Trajectory& tr) {
  const CompiledExpr a(truth), b(discovered);
  double num = 0.0, den = 0.0;
  for (std::size_t n = 0; n < tr.samples(); ++n) {
    const auto ctx = tr.context(n);
    const double la = a(ctx), lb = b(ctx);
    num += (la - lb) * (la - lb);
    den += la * la;
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline nlohmann::json to_json(const DofLagrangian& d) {
  nlohmann::json sup = nlohmann::json::array();
  for (std::size_t k = 0; k < d.support_labels.size(); ++k) sup.push_back({{"basis", d.support_labels[k]}, {"theta", d.support_theta[k]}});
  return {{"coord", d.coord},
          {"lagrangian", render(d.expr)},
          {"support", sup},
          {"residual_rms", d.solution.residual_rms},
          {"iterations", d.solution.iterations},
          {"el_residual", d.el_residual}};
}

inline nlohmann::json to_json(const SystemLagrangian& s) {
  nlohmann::json per = nlohmann::json::array(), shared = nlohmann::json::array();
  for (const auto& d : s.per_dof) per.push_back(to_json(d));
  for (const auto& t : s.terms)
    shared.push_back({{"basis", t.label}, {"dofs", t.dofs}, {"theta", t.theta}, {"contribution", t.contribution},
                      {"coefficient", t.coefficient}, {"spread", t.spread}});
  return {{"m", s.m}, {"lagrangian", render(s.expr)}, {"expr", to_json(s.expr)}, {"kinetic", s.kinetic},
          {"per_dof", per}, {"shared_terms", shared}};
}

}  // namespace lagrangify
