// acceptance: one PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <lagrangify/lagrangify.hpp>

using namespace lagrangify;

namespace {

int failures = 0;

void verdict(int n, bool pass, const std::string& what) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", n, what.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string pct(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f%%", digits, 100 * v);
  return buf;
}

const ParameterEstimate* find_param(const BenchmarkReport& r, const std::string& name) {
  for (const auto& e : r.parameters)
    if (e.name == name) return &e;
  return nullptr;
}

// ---- criterion 10 helpers: oracles kept apart from the library code paths ----

bool derivative_agreement(std::string& note) {
  const std::vector<Expr> zoo{power(vel(0), 2),
                              power(pos(1) - pos(0), 3),
                              product({constant(2.0), pos(0), vel(1)}),
                              sin(product({constant(3.0), pos(1)})),
                              cos(vel(0) + pos(1)),
                              power(absdiff({1, VarKind::Position}, {0, VarKind::Position}), 2),
                              power(cos(pos(0)), 3)};
  const std::vector<Var> vars{{0, VarKind::Position}, {1, VarKind::Position}, {0, VarKind::Velocity}, {1, VarKind::Velocity}};
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  double worst = 0;
  for (const auto& e : zoo)
    for (const auto& w : vars) {
      const auto d = partial(e, w);
      for (int k = 0; k < 20; ++k) {
        std::vector<double> x{u(rng), u(rng)}, v{u(rng), u(rng)};
        if (std::abs(x[1] - x[0]) < 1e-3) continue;
        auto& slot = (w.kind == VarKind::Position ? x : v)[w.index];
        const double h = 1e-5, base = slot;
        slot = base + h;
        const double up = eval(e, {x, v, {}});
        slot = base - h;
        const double dn = eval(e, {x, v, {}});
        slot = base;
        const double fd = (up - dn) / (2 * h), an = eval(d, {x, v, {}});
        worst = std::max(worst, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
      }
    }
  char buf[64];
  std::snprintf(buf, sizeof buf, "d/dx vs FD %.1e", worst);
  note += buf;
  return worst < 1e-6;
}

bool best_subset_agreement(std::string& note) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g;
  const Eigen::Index N = 80, K = 10;
  int agree = 0, trials = 10;
  for (int t = 0; t < trials; ++t) {
    Eigen::MatrixXd A(N, K);
    for (Eigen::Index i = 0; i < N; ++i)
      for (Eigen::Index j = 0; j < K; ++j) A(i, j) = g(rng);
    std::vector<std::size_t> truth{static_cast<std::size_t>(t % K), static_cast<std::size_t>((t + 3) % K), static_cast<std::size_t>((t + 7) % K)};
    std::sort(truth.begin(), truth.end());
    Eigen::VectorXd y = Eigen::VectorXd::Zero(N);
    for (auto c : truth) y += (1.5 + static_cast<double>(c)) * A.col(static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < N; ++i) y(i) += 1e-3 * g(rng);

    RegressionProblem p{A, y, {}, {}};
    StlsqConfig cfg;
    cfg.lambda = 0.5;
    const auto s = stlsq(p, cfg);

    // exhaustive search, each subset solved through its normal equations
    std::vector<std::size_t> best;
    double best_res = INFINITY;
    for (std::size_t a = 0; a < 10; ++a)
      for (std::size_t b = a + 1; b < 10; ++b)
        for (std::size_t c = b + 1; c < 10; ++c) {
          Eigen::MatrixXd B(N, 3);
          B << A.col(static_cast<Eigen::Index>(a)), A.col(static_cast<Eigen::Index>(b)), A.col(static_cast<Eigen::Index>(c));
          const Eigen::Vector3d x = (B.transpose() * B).ldlt().solve(B.transpose() * y);
          const double r = (y - B * x).norm();
          if (r < best_res) best_res = r, best = {a, b, c};
        }
    agree += s.support == best;
  }
  note += ", best-subset " + std::to_string(agree) + "/" + std::to_string(trials);
  return agree == trials;
}

bool rk4_fourth_order(std::string& note) {
  const double w = std::sqrt(500.0);
  auto err = [&](double dt) {
    auto p = builtin_preset("HarmonicFree");
    p.dt = dt;
    const auto tr = simulate(p);
    double e = 0;
    for (Eigen::Index n = 0; n < tr.t.size(); ++n) e = std::max(e, std::abs(tr.X(n, 0) - std::cos(w * tr.t(n))));
    return e;
  };
  const double r1 = err(4e-3) / err(2e-3), r2 = err(2e-3) / err(1e-3);
  char buf[64];
  std::snprintf(buf, sizeof buf, ", RK4 ratios %.1f/%.1f", r1, r2);
  note += buf;
  return std::abs(r1 - 16) < 2 && std::abs(r2 - 16) < 2;
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();

  std::map<std::string, BenchmarkReport> reports;
  for (auto name : kPresetNames) {
    const std::string n(name);
    reports[n] = run_benchmark(n);
    const auto& r = reports[n];
    std::printf("  %-16s %s  e_L=%s  H=%s  resim=%s  (%.2fs)\n", n.c_str(), r.ok ? "ok    " : "failed",
                pct(r.lagrangian_error).c_str(), pct(r.hamiltonian_error).c_str(), pct(r.resimulation_error).c_str(),
                r.runtime.total);
    if (!r.ok) std::printf("    %s\n", r.failure.c_str());
  }

  // 1. parameter recovery
  {
    const std::vector<std::tuple<std::string, std::string, double>> want{
        {"HarmonicFree", "k/m", 0.001}, {"HarmonicForced", "k/m", 0.005}, {"HarmonicForced", "F/m", 0.02},
        {"Pendulum", "g/l", 0.002},     {"ThreeDof", "k1/m", 0.001},      {"ThreeDof", "k2/m", 0.001},
        {"ThreeDof", "k3/m", 0.001},    {"Triatomic", "k/m", 0.001},      {"TransversalWave", "c", 0.005},
        {"BladeFlexion", "c", 0.025}};
    bool ok = true;
    std::string note;
    for (const auto& [preset, name, tol] : want) {
      const auto* e = find_param(reports[preset], name);
      const bool pass = reports[preset].ok && e && e->relative_error <= tol;
      ok &= pass;
      if (!pass) note += " " + preset + ":" + name + (e ? "=" + pct(e->relative_error) : " missing");
    }
    double worst = 0;
    for (const auto& [preset, name, tol] : want)
      if (const auto* e = find_param(reports[preset], name)) worst = std::max(worst, e->relative_error / tol);
    verdict(1, ok, "parameter recovery within tolerance (worst error/tolerance " + std::to_string(worst) + ")" + note);
  }

  // 2. support exactness
  {
    bool ok = true;
    std::string note;
    for (auto& [n, r] : reports)
      if (!r.ok || !r.support_exact) ok = false, note += " " + n;
    verdict(2, ok, ok ? "discovered supports equal ground truth for all 7 benchmarks" : "support mismatch:" + note);
  }

  // 3. Lagrangian error
  {
    const std::vector<std::pair<std::string, double>> want{{"HarmonicFree", 0.001}, {"Triatomic", 0.01}, {"ThreeDof", 0.005}};
    bool ok = true;
    std::string note;
    for (const auto& [n, tol] : want) {
      const auto& r = reports[n];
      ok &= r.ok && r.lagrangian_error <= tol;
      note += " " + n + "=" + pct(r.lagrangian_error);
    }
    verdict(3, ok, "e_L" + note);
  }

  // 4. Hamiltonian conservation and error against 3x the reference values (percent)
  {
    const std::map<std::string, double> reference{{"HarmonicFree", 0.0986},   {"HarmonicForced", 0.0006}, {"Pendulum", 0.0776},
                                                  {"ThreeDof", 0.0101},       {"Triatomic", 0.0127},      {"TransversalWave", 0.0645},
                                                  {"BladeFlexion", 1.873}};
    bool ok = true;
    std::string note;
    double worst_drift = 0;
    for (auto& [n, r] : reports) {
      const double limit = 3 * reference.at(n) / 100;
      const bool h_ok = r.ok && r.hamiltonian_error <= limit;
      bool d_ok = true;
      if (conservative(builtin_preset(n))) {
        d_ok = r.ok && r.energy_drift < 0.01;
        worst_drift = std::max(worst_drift, r.energy_drift);
      }
      ok &= h_ok && d_ok;
      if (!h_ok) note += " " + n + " H=" + pct(r.hamiltonian_error) + ">" + pct(limit);
      if (!d_ok) note += " " + n + " drift=" + pct(r.energy_drift);
    }
    verdict(4, ok, "H drift < 1% (worst " + pct(worst_drift) + "), H error <= 3x reference" + note);
  }

  // 5. resimulation
  {
    bool ok = true;
    std::string note;
    for (auto& [n, r] : reports) {
      const auto kind = builtin_preset(n).kind;
      const double tol = kind == SystemKind::TransversalWave || kind == SystemKind::BladeFlexion ? 0.0025 : 0.005;
      ok &= r.ok && r.resimulation_error < tol;
      note += " " + n + "=" + pct(r.resimulation_error, 5);
    }
    verdict(5, ok, "resimulation L2 error" + note);
  }

  // 6. perpetual prediction of the wave to 100 s
  {
    const auto& r = reports["TransversalWave"];
    bool ok = false;
    std::string note = "wave discovery failed";
    if (r.ok) {
      try {
        const auto pr = perpetual_prediction(builtin_preset("TransversalWave"), *r.eom, 100.0, 1000);
        ok = pr.relative_max_error < 0.01;
        note = "wave 100 s max |error| / amplitude = " + pct(pr.relative_max_error);
      } catch (const Error& e) {
        note = e.what();
      }
    }
    verdict(6, ok, note);
  }

  // 7. zero-shot blade third mode
  {
    const auto& r = reports["BladeFlexion"];
    bool ok = false;
    std::string note = "blade discovery failed";
    if (r.ok) {
      const auto p = builtin_preset("BladeFlexion");
      const auto z = zero_shot(p, *r.eom, *p.zero_shot);
      ok = z.relative_error < 0.01;
      note = "blade " + p.zero_shot->profile + " relative L2 error = " + pct(z.relative_error);
    }
    verdict(7, ok, note);
  }

  // 8. noise sensitivity pattern
  {
    const std::vector<double> levels{1, 2, 3, 4, 5};
    const auto rows = noise_study({"HarmonicFree", "Triatomic", "ThreeDof"}, levels, kDefaultSeed);
    std::map<std::string, std::vector<NoiseStudyRow>> by;
    for (const auto& row : rows) by[row.preset].push_back(row);
    // first failing level, 0 if none; e_L must grow over the levels that survive before it
    auto first_failure = [&](const std::string& n) {
      for (const auto& row : by[n])
        if (!row.correct) return row.level;
      return 0.0;
    };
    auto monotone = [&](const std::string& n) {
      double prev = -1;
      for (const auto& row : by[n]) {
        if (!row.correct) break;
        if (!(row.lagrangian_error > prev)) return false;
        prev = row.lagrangian_error;
      }
      return true;
    };
    const double h = first_failure("HarmonicFree"), t = first_failure("Triatomic"), d = first_failure("ThreeDof");
    const bool ok = h == 0 && (t == 3 || t == 4 || t == 5) && (d == 4 || d == 5) && monotone("HarmonicFree") &&
                    monotone("Triatomic") && monotone("ThreeDof");
    std::string note;
    for (const std::string n : {"HarmonicFree", "Triatomic", "ThreeDof"}) {
      note += " " + n + "[";
      for (const auto& row : by[n]) note += row.correct ? "Y" : "N";
      note += monotone(n) ? "] " : "] non-monotone";
    }
    verdict(8, ok, "seed " + std::to_string(kDefaultSeed) + ", levels 1-5%:" + note);
  }

  // 9. chain generalization
  {
    const auto& r = reports["Triatomic"];
    bool ok = false;
    std::string note = "triatomic discovery failed";
    if (r.ok) {
      try {
        const auto c = generalize_chain(extract_template(*r.system), 30, builtin_preset("Triatomic"));
        ok = c.relative_error < 0.01;
        note = "30-atom chain relative L2 error = " + pct(c.relative_error);
      } catch (const Error& e) {
        note = e.what();
      }
    }
    verdict(9, ok, note);
  }

  // 10. property suites
  {
    std::string note;
    bool ok = derivative_agreement(note);
    ok &= best_subset_agreement(note);
    ok &= rk4_fourth_order(note);
    double worst = 0;
    bool residual_ok = true;
    for (auto& [n, r] : reports) {
      if (!r.ok) continue;
      residual_ok &= r.max_el_residual < builtin_preset(n).discover.residual_tolerance;
      worst = std::max(worst, r.max_el_residual);
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, ", max EL residual %.1e", worst);
    note += buf;
    RunOptions opt;
    opt.noise = NoiseSpec{3.0, kDefaultSeed};
    const auto a = run_benchmark("ThreeDof", opt), b = run_benchmark("ThreeDof", opt);
    const bool same = a.supports == b.supports && a.lagrangian_error == b.lagrangian_error;
    note += same ? ", seeded runs identical" : ", seeded runs differ";
    verdict(10, ok && residual_ok && same, note);
  }

  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool fast = elapsed < 300;
  std::printf("suite runtime %.1f s (%s 5 min budget)\n", elapsed, fast ? "within" : "over");
  if (!fast) ++failures;
  std::printf("%d criteria failed\n", failures);
  return failures ? 1 : 0;
}
