#include <algorithm>
#include <cmath>
#include <set>

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

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

struct Fit {
  BenchmarkPreset preset;
  Trajectory data;
  Dictionary dict;
  std::vector<DofLagrangian> per;
};

Fit fit(const std::string& name) {
  Fit f{builtin_preset(name), {}, {}, {}};
  f.data = simulate(f.preset);
  f.dict = build_dictionary(f.preset.dictionary);
  f.per = discover_all(f.data, f.dict, f.preset.discover);
  return f;
}

// Hand-built DofLagrangian with the given (label, basis, theta) triples.
DofLagrangian dof(std::size_t i, std::vector<std::pair<Expr, double>> terms) {
  DofLagrangian d;
  d.coord = i;
  for (auto& [b, th] : terms) {
    const auto s = simplify(b);
    d.support_labels.push_back(render(s));
    d.support_bases.push_back(s);
    d.support_theta.push_back(th);
  }
  d.expr = reconstruct(i, d.support_bases, d.support_theta);
  return d;
}

}  // namespace

TEST(Discover, HarmonicOscillatorSupportAndCoefficient) {
  const auto f = fit("HarmonicFree");
  ASSERT_EQ(f.per.size(), 1u);
  EXPECT_EQ(as_set(f.per[0].support_labels), (std::set<std::string>{"x0^2"}));
  EXPECT_NEAR(f.per[0].support_theta[0], 500.0, 500.0 * 1e-5);
  const auto sys = assemble(f.per, f.preset.assemble);
  ASSERT_EQ(sys.terms.size(), 1u);
  EXPECT_NEAR(sys.terms[0].coefficient, -250.0, 250.0 * 1e-6);
}

TEST(Discover, PendulumSelectsCosine) {
  const auto f = fit("Pendulum");
  EXPECT_EQ(as_set(f.per[0].support_labels), (std::set<std::string>{"cos(x0)"}));
  EXPECT_NEAR(-0.5 * f.per[0].support_theta[0], 9.81, 9.81 * 1e-4);
}

TEST(Discover, ForcedOscillatorSelectsForcingCoupling) {
  const auto f = fit("HarmonicForced");
  EXPECT_EQ(as_set(f.per[0].support_labels), (std::set<std::string>{"x0^2", "x0*f0"}));
  const auto sys = assemble(f.per);
  for (const auto& t : sys.terms) {
    if (t.label == "x0*f0") EXPECT_NEAR(t.coefficient, 1.0, 1e-3);
    if (t.label == "x0^2") EXPECT_NEAR(t.coefficient, -250.0, 250.0 * 1e-3);
  }
}

TEST(Discover, ThreeDofSupportsAreNearestNeighbour) {
  const auto f = fit("ThreeDof");
  EXPECT_EQ(as_set(f.per[0].support_labels), (std::set<std::string>{"x0^2", "(x1 - x0)^2"}));
  EXPECT_EQ(as_set(f.per[1].support_labels), (std::set<std::string>{"(x1 - x0)^2", "(x2 - x1)^2"}));
  EXPECT_EQ(as_set(f.per[2].support_labels), (std::set<std::string>{"(x2 - x1)^2"}));
}

// EL applied to the reconstruction equals (y - A theta) / 2 on every row, with the same stencil.
TEST(DiscoverProperties, ReconstructionIdentity) {
  for (const std::string name : {"HarmonicFree", "Pendulum", "ThreeDof", "Triatomic"}) {
    const auto f = fit(name);
    for (std::size_t i = 0; i < f.dict.m; ++i) {
      const auto order = f.preset.discover.stencil_order;
      const auto el = euler_lagrange_matrix(f.dict, f.data, i, order);
      const auto p = build_problem(el, f.dict.kinetic_index[i], f.dict.labels);
      const Eigen::VectorXd half = 0.5 * (p.y - p.A * f.per[i].solution.theta);
      const Eigen::VectorXd got = euler_lagrange_column(f.per[i].expr, f.data, i, order);
      EXPECT_LT((got - half).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, p.y.cwiseAbs().maxCoeff())) << name << " " << i;
    }
  }
}

TEST(DiscoverProperties, ResidualBelowToleranceForEveryPreset) {
  for (auto name : kPresetNames) {
    const auto p = builtin_preset(name);
    const auto f = fit(std::string(name));
    for (const auto& d : f.per) EXPECT_LE(d.el_residual, p.discover.residual_tolerance) << name << " " << d.coord;
  }
}

TEST(DiscoverProperties, ThreadCountDoesNotChangeResults) {
  const auto p = builtin_preset("ThreeDof");
  const auto tr = simulate(p);
  const auto d = build_dictionary(p.dictionary);
  const auto a = discover_all(tr, d, p.discover, 1), b = discover_all(tr, d, p.discover, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a[i].support_labels, b[i].support_labels);
    EXPECT_EQ(a[i].solution.theta, b[i].solution.theta);
  }
}

TEST(Discover, ResidualGateRejectsBadFit) {
  auto p = builtin_preset("Pendulum");
  p.dictionary.include_harmonics = false;  // cosine unavailable: polynomials cannot close the residual
  p.T = 2.0;
  p.initial.x = {1.5};
  p.discover.residual_tolerance = 1e-6;
  const auto tr = simulate(p);
  const auto d = build_dictionary(p.dictionary);
  EXPECT_EQ(code_of([&] { (void)discover_all(tr, d, p.discover); }), ErrorCode::ResidualTooLarge);
}

TEST(Discover, ErrorsPropagateFromWorkers) {
  const auto p = builtin_preset("ThreeDof");
  const auto tr = simulate(p);
  const auto d = build_dictionary(p.dictionary);
  auto cfg = p.discover;
  cfg.stlsq.lambda = 1e12;
  EXPECT_EQ(code_of([&] { (void)discover_all(tr, d, cfg, 3); }), ErrorCode::EmptySupport);
}

TEST(Assemble, MergesSharedTerms) {
  const auto e = power(pos(1) - pos(0), 2);
  const auto sys = assemble({dof(0, {{e, 100.0}}), dof(1, {{e, 100.0}})});
  ASSERT_EQ(sys.terms.size(), 1u);
  EXPECT_EQ(sys.terms[0].dofs, (std::vector<std::size_t>{0, 1}));
  EXPECT_DOUBLE_EQ(sys.terms[0].coefficient, -50.0);
  EXPECT_EQ(render(sys.expr), "0.5*v0^2 + 0.5*v1^2 - 50*(x1 - x0)^2");
}

TEST(Assemble, IsIdempotent) {
  const auto f = fit("ThreeDof");
  const auto a = assemble(f.per), b = assemble(f.per);
  EXPECT_EQ(render(a.expr), render(b.expr));
  const auto terms = lagrangian_terms(a.expr);
  std::set<std::string> labels;
  for (const auto& t : terms) EXPECT_TRUE(labels.insert(t.label).second) << t.label;
}

TEST(Assemble, InconsistentCouplingIsReported) {
  const auto e = power(pos(1) - pos(0), 2);
  EXPECT_EQ(code_of([&] { (void)assemble({dof(0, {{e, 100.0}}), dof(1, {{e, 150.0}})}); }), ErrorCode::InconsistentCoupling);
}

TEST(Assemble, InfersMassRatios) {
  // m0 = 1, m1 = 2: theta_i = k / m_i.
  const auto e = power(pos(1) - pos(0), 2);
  AssembleConfig cfg;
  cfg.infer_mass_ratios = true;
  const auto sys = assemble({dof(0, {{e, 100.0}}), dof(1, {{e, 50.0}})}, cfg);
  EXPECT_DOUBLE_EQ(sys.kinetic[0], 1.0);
  EXPECT_DOUBLE_EQ(sys.kinetic[1], 2.0);
  EXPECT_DOUBLE_EQ(sys.terms[0].coefficient, -50.0);
}

TEST(Assemble, TriatomicRecoversMassRatio) {
  const auto f = fit("Triatomic");
  const auto sys = assemble(f.per, f.preset.assemble);
  EXPECT_NEAR(sys.kinetic[1] / sys.kinetic[0], 2.0, 1e-5);
  EXPECT_NEAR(sys.kinetic[2] / sys.kinetic[0], 1.0, 1e-5);
}

TEST(LagrangianError, ZeroForTruthAndScaleSensitive) {
  const auto p = builtin_preset("ThreeDof");
  const auto tr = simulate(p);
  const auto L = truth_lagrangian(p);
  EXPECT_EQ(lagrangian_error(L, L, tr), 0.0);
  EXPECT_NEAR(lagrangian_error(product({constant(1.1), L}), L, tr), 0.1, 1e-12);
}
