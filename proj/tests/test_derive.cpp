#include <cmath>
#include <random>

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

double at(const Expr& e, std::vector<double> x, std::vector<double> v) { return eval(e, {x, v, {}}); }

}  // namespace

TEST(Hamiltonian, Oscillator) {
  const auto L = sum({product({constant(0.5), power(vel(0), 2)}), product({constant(-250.0), power(pos(0), 2)})});
  EXPECT_EQ(render(hamiltonian(L, 1).expr), "0.5*v0^2 + 250*x0^2");
}

TEST(Hamiltonian, Pendulum) {
  const auto L = sum({product({constant(0.5), power(vel(0), 2)}), product({constant(9.81), cos(pos(0))})});
  EXPECT_EQ(render(hamiltonian(L, 1).expr), "0.5*v0^2 - 9.81*cos(x0)");
}

// For L = T(v) - U(x) with T quadratic, H + L = 2T.
TEST(HamiltonianProperties, LegendreOfQuadraticKinetic) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2, 2);
  for (auto name : kPresetNames) {
    const auto p = builtin_preset(name);
    if (p.kind == SystemKind::HarmonicForced) continue;
    const auto m = p.dofs();
    const auto L = truth_lagrangian(p);
    const auto H = hamiltonian(L, m).expr;
    const auto c = kinetic_weights(L, m);
    for (int k = 0; k < 5; ++k) {
      std::vector<double> x(m), v(m);
      double T = 0;
      for (std::size_t i = 0; i < m; ++i) x[i] = u(rng), v[i] = u(rng), T += 0.5 * c[i] * v[i] * v[i];
      const double h = at(H, x, v), l = at(L, x, v);
      EXPECT_NEAR(h + l, 2 * T, 1e-10 * std::max(1.0, std::abs(h) + std::abs(l))) << name;
    }
  }
}

TEST(EquationsOfMotion, Oscillator) {
  const auto L = sum({product({constant(0.5), power(vel(0), 2)}), product({constant(-250.0), power(pos(0), 2)})});
  const auto eom = equations_of_motion(L, 1);
  EXPECT_EQ(render(eom.rhs[0]), "-500*x0");
}

TEST(EquationsOfMotion, Pendulum) {
  const auto L = sum({product({constant(0.5), power(vel(0), 2)}), product({constant(9.81), cos(pos(0))})});
  EXPECT_EQ(render(equations_of_motion(L, 1).rhs[0]), "-9.81*sin(x0)");
}

TEST(EquationsOfMotion, TriatomicDividesByMass) {
  const double k = 1870;
  const auto L = sum({product({constant(0.5), power(vel(0), 2)}), power(vel(1), 2), product({constant(0.5), power(vel(2), 2)}),
                      product({constant(-0.5 * k), power(pos(1) - pos(0), 2)}),
                      product({constant(-0.5 * k), power(pos(2) - pos(1), 2)})});
  const auto eom = equations_of_motion(L, 3);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int n = 0; n < 5; ++n) {
    std::vector<double> x{u(rng), u(rng), u(rng)}, v{0, 0, 0};
    EXPECT_NEAR(at(eom.rhs[0], x, v), k * (x[1] - x[0]), 1e-9);
    EXPECT_NEAR(at(eom.rhs[1], x, v), k / 2 * (x[0] - 2 * x[1] + x[2]), 1e-9);
    EXPECT_NEAR(at(eom.rhs[2], x, v), k * (x[1] - x[2]), 1e-9);
  }
}

TEST(EquationsOfMotion, ForcingTermCarriesThrough) {
  const auto L = sum({product({constant(0.5), power(vel(0), 2)}), product({constant(-250.0), power(pos(0), 2)}), pos(0) * forcing(0)});
  EXPECT_EQ(render(equations_of_motion(L, 1).rhs[0]), "f0 - 500*x0");
}

TEST(EquationsOfMotion, NonDiagonalKinetic) {
  const auto cross = sum({product({constant(0.5), power(vel(0), 2)}), product({constant(0.5), power(vel(1), 2)}), vel(0) * vel(1)});
  EXPECT_EQ(code_of([&] { (void)equations_of_motion(cross, 2); }), ErrorCode::NonDiagonalKinetic);
  const auto quartic = sum({product({constant(0.5), power(vel(0), 2)}), power(vel(0), 4)});
  EXPECT_EQ(code_of([&] { (void)equations_of_motion(quartic, 1); }), ErrorCode::NonDiagonalKinetic);
  const auto position_dependent = product({power(pos(0), 2), power(vel(0), 2)});
  EXPECT_EQ(code_of([&] { (void)equations_of_motion(position_dependent, 1); }), ErrorCode::NonDiagonalKinetic);
}

TEST(EquationsOfMotion, TruthEomMatchesTruthAcceleration) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto name : kPresetNames) {
    const auto p = builtin_preset(name);
    if (p.kind == SystemKind::HarmonicForced) continue;
    const auto m = p.dofs();
    const auto eom = equations_of_motion(truth_lagrangian(p), m);
    const auto accel = truth_accel(p);
    std::vector<double> x(m), v(m), a(m);
    for (std::size_t i = 0; i < m; ++i) x[i] = 0.01 * u(rng), v[i] = u(rng);
    accel(0.0, x, v, a);
    for (std::size_t i = 0; i < m; ++i)
      EXPECT_NEAR(at(eom.rhs[i], x, v), a[i], 1e-9 * std::max(1.0, std::abs(a[i]))) << name << " " << i;
  }
}

TEST(HamiltonianError, ZeroForIdenticalAndRelativeOtherwise) {
  const auto p = builtin_preset("Pendulum");
  const auto tr = simulate(p);
  const auto H = truth_hamiltonian(p);
  EXPECT_EQ(hamiltonian_error(H, H, tr), 0.0);
  EXPECT_NEAR(hamiltonian_error(product({constant(1.02), H}), H, tr), 0.02, 1e-12);
}

TEST(EnergyDrift, ConstantSeriesHasNoDrift) {
  const auto p = builtin_preset("HarmonicFree");
  const auto tr = simulate(p);
  EXPECT_EQ(energy_drift(constant(3.0), tr), 0.0);
  EXPECT_LT(energy_drift(truth_hamiltonian(p), tr), 1e-6);
}
