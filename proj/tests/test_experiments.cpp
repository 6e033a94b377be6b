#include <cmath>
#include <set>
#include <sstream>

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

const ParameterEstimate& param(const BenchmarkReport& r, const std::string& name) {
  for (const auto& e : r.parameters)
    if (e.name == name) return e;
  throw std::runtime_error("no parameter " + name);
}

const BenchmarkReport& triatomic() {
  static const auto r = run_benchmark("Triatomic");
  return r;
}

}  // namespace

TEST(Benchmark, HarmonicFreeRecoversStiffness) {
  const auto r = run_benchmark("HarmonicFree");
  ASSERT_TRUE(r.ok) << r.failure;
  EXPECT_TRUE(r.support_exact);
  EXPECT_NEAR(param(r, "k/m").value, 500.0, 0.5);
  EXPECT_LT(r.resimulation_error, 5e-3);
  EXPECT_LT(r.energy_drift, 1e-2);
}

TEST(Benchmark, TriatomicRecoversStiffness) {
  const auto& r = triatomic();
  ASSERT_TRUE(r.ok) << r.failure;
  EXPECT_TRUE(r.support_exact);
  EXPECT_NEAR(param(r, "k/m").value, 1870.0, 1.87);
}

TEST(Benchmark, ReportInvariants) {
  for (auto name : kPresetNames) {
    if (name == "TransversalWave" || name == "BladeFlexion") continue;
    const auto r = run_benchmark(std::string(name));
    ASSERT_TRUE(r.ok) << name << ": " << r.failure;
    for (const auto& s : r.supports) EXPECT_FALSE(s.empty()) << name;
    for (const auto& e : r.parameters) EXPECT_GE(e.relative_error, 0.0) << name;
    EXPECT_GE(r.lagrangian_error, 0.0);
    EXPECT_GE(r.hamiltonian_error, 0.0);
    EXPECT_GE(r.resimulation_error, 0.0);
    const auto j = to_json(r);
    EXPECT_EQ(j["preset"], std::string(name));
  }
}

TEST(Benchmark, FailuresBecomeReports) {
  RunOptions opt;
  opt.lambda = 1e12;
  const auto r = run_benchmark("ThreeDof", opt);
  EXPECT_FALSE(r.ok);
  ASSERT_TRUE(r.failure_code.has_value());
  EXPECT_EQ(*r.failure_code, ErrorCode::EmptySupport);
  EXPECT_FALSE(r.failure.empty());
}

TEST(Benchmark, UnknownPresetThrows) {
  EXPECT_EQ(code_of([] { (void)run_benchmark(std::string("Nope")); }), ErrorCode::UnknownPreset);
}

TEST(Benchmark, ReproducibleFromPresetAndSeed) {
  RunOptions opt;
  opt.noise = NoiseSpec{2.0, 11};
  const auto a = run_benchmark("ThreeDof", opt), b = run_benchmark("ThreeDof", opt);
  EXPECT_EQ(a.supports, b.supports);
  EXPECT_EQ(a.lagrangian_error, b.lagrangian_error);
  EXPECT_EQ(render(a.system->expr), render(b.system->expr));
}

TEST(TruthSupports, NearestNeighbourPattern) {
  const auto s = truth_supports(truth_lagrangian(builtin_preset("ThreeDof")), 3);
  EXPECT_EQ(s[0], (SupportSet{"x0^2", "(x1 - x0)^2"}));
  EXPECT_EQ(s[1], (SupportSet{"(x1 - x0)^2", "(x2 - x1)^2"}));
  EXPECT_EQ(s[2], (SupportSet{"(x2 - x1)^2"}));
}

TEST(NoiseStudy, DeterministicAndMonotoneOnOscillator) {
  const auto a = noise_study({"HarmonicFree"}, {1, 2, 3, 4, 5});
  const auto b = noise_study({"HarmonicFree"}, {1, 2, 3, 4, 5});
  ASSERT_EQ(a.size(), 5u);
  double prev = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_TRUE(a[k].correct) << a[k].level;
    EXPECT_EQ(a[k].lagrangian_error, b[k].lagrangian_error);
    EXPECT_GT(a[k].lagrangian_error, prev);
    prev = a[k].lagrangian_error;
  }
  std::stringstream ss;
  write_noise_csv(ss, a);
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "preset,noise_pct,correct_support,lagrangian_error,detail");
}

TEST(NoiseStudy, RejectsNegativeLevels) {
  EXPECT_EQ(code_of([] { (void)noise_study({"HarmonicFree"}, {-1}); }), ErrorCode::InvalidArgument);
}

TEST(Prediction, TrainingWindowEqualsResimulation) {
  const auto p = builtin_preset("HarmonicFree");
  const auto r = run_benchmark(p);
  ASSERT_TRUE(r.ok);
  const auto pr = perpetual_prediction(p, *r.eom, p.T, 1);
  const auto ic = resolve_initial(p, p.initial);
  const auto truth = simulate(p);
  const auto model = rk4_integrate(*r.eom, ic.x, ic.v, p.steps());
  EXPECT_NEAR(pr.max_abs_error, (model.X - truth.X).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(pr.series.size(), truth.samples());
}

TEST(Prediction, ZeroShotFromTrainingConditionIsResimulation) {
  const auto p = builtin_preset("Pendulum");
  const auto r = run_benchmark(p);
  ASSERT_TRUE(r.ok);
  const auto z = zero_shot(p, *r.eom, p.initial);
  EXPECT_DOUBLE_EQ(z.relative_error, r.resimulation_error);
}

TEST(Prediction, PendulumUnseenAmplitude) {
  const auto p = builtin_preset("Pendulum");
  const auto r = run_benchmark(p);
  ASSERT_TRUE(r.ok && p.zero_shot);
  EXPECT_LT(zero_shot(p, *r.eom, *p.zero_shot).relative_error, 0.01);
}

// Resimulating at 2 dt: the error against the dt truth is the integrator's own error.
TEST(Prediction, DoubledStepIsIntegratorDominated) {
  const auto p = builtin_preset("HarmonicFree");
  const auto r = run_benchmark(p);
  ASSERT_TRUE(r.ok);
  const auto truth = simulate(p);
  auto coarse = p.steps();
  coarse.dt *= 2;
  const auto ic = resolve_initial(p, p.initial);
  const auto model = rk4_integrate(*r.eom, ic.x, ic.v, coarse);
  const auto exact = rk4_integrate(truth_accel(p), ic.x, ic.v, coarse);
  double e_model = 0, e_exact = 0;
  const double w = std::sqrt(500.0);
  for (Eigen::Index n = 0; n < model.X.rows(); ++n) {
    e_model = std::max(e_model, std::abs(model.X(n, 0) - truth.X(2 * n, 0)));
    e_exact = std::max(e_exact, std::abs(exact.X(n, 0) - std::cos(w * exact.t(n))));
  }
  EXPECT_GT(e_model, r.resimulation_error);
  EXPECT_NEAR(e_model / e_exact, 1.0, 0.2);
}

TEST(Prediction, InvalidHorizon) {
  const auto p = builtin_preset("HarmonicFree");
  const auto eom = equations_of_motion(truth_lagrangian(p), 1);
  EXPECT_EQ(code_of([&] { (void)perpetual_prediction(p, eom, 0.0); }), ErrorCode::InvalidArgument);
}

TEST(Chain, ThreeUnitsReducesToTriatomic) {
  const auto& r = triatomic();
  ASSERT_TRUE(r.ok);
  const auto tpl = extract_template(*r.system);
  EXPECT_GT(tpl.coupling, 0);
  EXPECT_NEAR(tpl.heavy / tpl.light, 2.0, 1e-5);
  const auto p = builtin_preset("Triatomic");
  const auto c = generalize_chain(tpl, 3, p);
  EXPECT_LT(relative_l2(c.direct.X, simulate(p).X), 1e-12);
  EXPECT_NEAR(c.relative_error, r.resimulation_error, 1e-3);
}

TEST(Chain, ThirtyUnitsMatchDirectSimulation) {
  const auto& r = triatomic();
  ASSERT_TRUE(r.ok);
  const auto c = generalize_chain(extract_template(*r.system), 30, builtin_preset("Triatomic"));
  EXPECT_EQ(c.generalized.dofs(), 30u);
  EXPECT_LT(c.relative_error, 0.01);
}

TEST(Chain, PerturbedCouplingIsDetected) {
  const auto& r = triatomic();
  ASSERT_TRUE(r.ok);
  auto tpl = extract_template(*r.system);
  tpl.coupling *= 1.1;
  EXPECT_GT(generalize_chain(tpl, 30, builtin_preset("Triatomic")).relative_error, 0.01);
}

TEST(Chain, TemplateMismatch) {
  const auto r = run_benchmark("ThreeDof");
  ASSERT_TRUE(r.ok);
  EXPECT_EQ(code_of([&] { (void)extract_template(*r.system); }), ErrorCode::TemplateMismatch);
  const auto h = run_benchmark("HarmonicFree");
  EXPECT_EQ(code_of([&] { (void)extract_template(*h.system); }), ErrorCode::TemplateMismatch);
}

TEST(Chain, LagrangianShape) {
  const auto L = chain_lagrangian({1.0, 2.0, 100.0}, 3);
  EXPECT_EQ(render(L), "0.5*v0^2 + v1^2 + 0.5*v2^2 - 50*(x1 - x0)^2 - 50*(x2 - x1)^2");
  EXPECT_EQ(code_of([] { (void)chain_lagrangian({1, 2, 1}, 1); }), ErrorCode::InvalidArgument);
}
