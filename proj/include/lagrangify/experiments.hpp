#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "derive.hpp"
#include "dictionary.hpp"
#include "discover.hpp"
#include "error.hpp"
#include "expr.hpp"
#include "presets.hpp"
#include "sim.hpp"
#include "trajectory.hpp"

namespace lagrangify {

// ---- ground truth per preset -----------------------------------------------

struct LagrangianTerm {
  double coefficient = 0.0;
  Expr basis;
  std::string label;
};

// Splits a simplified sum into coefficient * basis terms.
inline std::vector<LagrangianTerm> lagrangian_terms(const Expr& L) {
  const auto s = simplify(L);
  std::vector<Expr> items = s.op() == Op::Sum ? s.args() : std::vector<Expr>{s};
  std::vector<LagrangianTerm> out;
  for (const auto& t : items) {
    auto [c, rest] = detail::split_coefficient(t);
    auto b = simplify(product(rest));
    out.push_back({c, b, render(b)});
  }
  return out;
}

using SupportSet = std::set<std::string>;

// Non-kinetic terms of L that involve coordinate i.
inline std::vector<SupportSet> truth_supports(const Expr& L, std::size_t m) {
  std::vector<SupportSet> out(m);
  for (const auto& t : lagrangian_terms(L)) {
    if (t.basis.is_const()) continue;
    const auto fp = footprint(t.basis);
    for (std::size_t i = 0; i < m; ++i) {
      if (t.label == "v" + std::to_string(i) + "^2") continue;
      if (fp.vars.contains({i, VarKind::Position}) || fp.vars.contains({i, VarKind::Velocity})) out[i].insert(t.label);
    }
  }
  return out;
}

struct ParameterSpec {
  std::string name;
  std::vector<std::string> bases;  // Lagrangian terms whose mean coefficient feeds the estimate
  std::function<double(double)> from_coefficient;
  double truth = 0.0;
};

struct ParameterEstimate {
  std::string name;
  double value = std::numeric_limits<double>::quiet_NaN();
  double truth = 0.0;
  double relative_error = std::numeric_limits<double>::infinity();
};

inline std::vector<ParameterSpec> parameter_specs(const BenchmarkPreset& p) {
  auto stiffness = [](double c) { return -2.0 * c; };
  auto identity = [](double c) { return c; };
  std::vector<ParameterSpec> out;
  std::vector<std::string> potential;
  for (const auto& t : lagrangian_terms(truth_lagrangian(p))) {
    const auto fp = footprint(t.basis);
    bool kinetic = false;
    for (const auto& v : fp.vars) kinetic |= v.kind == VarKind::Velocity;
    if (!kinetic && fp.forcings.empty() && !t.basis.is_const()) potential.push_back(t.label);
  }
  switch (p.kind) {
    case SystemKind::HarmonicFree:
      out.push_back({"k/m", {"x0^2"}, stiffness, p.param("k") / p.param("m")});
      break;
    case SystemKind::HarmonicForced:
      out.push_back({"k/m", {"x0^2"}, stiffness, p.param("k") / p.param("m")});
      out.push_back({"F/m", {"x0*f0"}, identity, p.param("A") / p.param("m")});
      break;
    case SystemKind::Pendulum:
      out.push_back({"g/l", {"cos(x0)"}, identity, p.param("g") / p.param("l")});
      break;
    case SystemKind::ThreeDof:
      out.push_back({"k1/m", {"x0^2"}, stiffness, p.param("k1") / p.param("m")});
      out.push_back({"k2/m", {"(x1 - x0)^2"}, stiffness, p.param("k2") / p.param("m")});
      out.push_back({"k3/m", {"(x2 - x1)^2"}, stiffness, p.param("k3") / p.param("m")});
      break;
    case SystemKind::Triatomic:
      out.push_back({"k/m", potential, stiffness, p.param("k") / p.param("m")});
      break;
    case SystemKind::TransversalWave: {
      const double d = p.param("delta");
      out.push_back({"c", potential, [d](double c) { return d * std::sqrt(std::max(0.0, -2.0 * c)); }, p.param("c")});
      break;
    }
    case SystemKind::BladeFlexion: {
      const double d4 = std::pow(p.param("delta"), 4);
      out.push_back({"c", potential, [d4](double c) { return -2.0 * c * d4; }, p.param("c")});
      out.push_back({"beta", potential, stiffness, blade_beta(p)});
      break;
    }
  }
  return out;
}

inline std::vector<ParameterEstimate> estimate_parameters(const SystemLagrangian& sys, const std::vector<ParameterSpec>& specs) {
  std::vector<ParameterEstimate> out;
  const auto terms = lagrangian_terms(sys.expr);
  for (const auto& s : specs) {
    ParameterEstimate e{s.name, std::numeric_limits<double>::quiet_NaN(), s.truth, std::numeric_limits<double>::infinity()};
    double acc = 0.0;
    std::size_t found = 0;
    for (const auto& label : s.bases)
      for (const auto& t : terms)
        if (t.label == label) acc += t.coefficient, ++found;
    if (found == s.bases.size() && found > 0) {
      e.value = s.from_coefficient(acc / static_cast<double>(found));
      e.relative_error = std::abs(e.value - s.truth) / std::abs(s.truth);
    }
    out.push_back(e);
  }
  return out;
}

inline bool conservative(const BenchmarkPreset& p) { return p.kind != SystemKind::HarmonicForced; }

// ---- benchmark reports -----------------------------------------------------

struct Runtimes {
  double simulate = 0, discover = 0, derive = 0, resimulate = 0, total = 0;
};

struct BenchmarkReport {
  std::string preset;
  NoiseSpec noise;
  bool ok = false;
  std::optional<ErrorCode> failure_code;
  std::string failure;

  std::vector<std::vector<std::string>> supports;
  std::vector<std::vector<std::string>> expected_supports;
  bool support_exact = false;
  std::vector<ParameterEstimate> parameters;

  double lagrangian_error = std::numeric_limits<double>::quiet_NaN();
  double hamiltonian_error = std::numeric_limits<double>::quiet_NaN();
  double energy_drift = std::numeric_limits<double>::quiet_NaN();
  double resimulation_error = std::numeric_limits<double>::quiet_NaN();
  double max_el_residual = std::numeric_limits<double>::quiet_NaN();

  std::optional<SystemLagrangian> system;
  std::optional<Expr> hamiltonian;
  std::optional<OdeSystem> eom;
  Runtimes runtime;
};

namespace detail {
class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};
}  // namespace detail

struct RunOptions {
  std::optional<NoiseSpec> noise;
  unsigned threads = 1;
  bool resimulate = true;
  std::optional<double> lambda;
};

// Errors become a Failed report with diagnostics instead of propagating.
inline BenchmarkReport run_benchmark(const BenchmarkPreset& p, const RunOptions& opt = {}) {
  BenchmarkReport r;
  r.preset = p.name;
  if (opt.noise) r.noise = *opt.noise;
  detail::Stopwatch total, sw;
  try {
    const auto clean = simulate(p);
    const auto data = opt.noise ? add_noise(clean, *opt.noise) : clean;
    r.runtime.simulate = sw.lap();

    const auto dict = build_dictionary(p.dictionary);
    auto cfg = p.discover;
    if (opt.lambda) cfg.stlsq.lambda = *opt.lambda;
    if (opt.noise && opt.noise->level > 0) cfg.residual_tolerance = 0;  // noisy derivatives never close the residual
    const auto truth = truth_lagrangian(p);
    for (const auto& s : truth_supports(truth, p.dofs())) r.expected_supports.emplace_back(s.begin(), s.end());

    auto per = discover_all(data, dict, cfg, opt.threads);
    r.max_el_residual = 0;
    for (const auto& d : per) {
      r.supports.push_back(d.support_labels);
      r.max_el_residual = std::max(r.max_el_residual, d.el_residual);
    }
    r.support_exact = r.supports.size() == r.expected_supports.size();
    for (std::size_t i = 0; r.support_exact && i < r.supports.size(); ++i)
      r.support_exact = SupportSet(r.supports[i].begin(), r.supports[i].end()) ==
                        SupportSet(r.expected_supports[i].begin(), r.expected_supports[i].end());
    r.system = assemble(per, p.assemble);
    r.runtime.discover = sw.lap();

    r.parameters = estimate_parameters(*r.system, parameter_specs(p));
    r.lagrangian_error = lagrangian_error(r.system->expr, truth, clean);
    r.hamiltonian = hamiltonian(r.system->expr, p.dofs()).expr;
    r.hamiltonian_error = hamiltonian_error(*r.hamiltonian, truth_hamiltonian(p), clean);
    if (conservative(p)) r.energy_drift = energy_drift(*r.hamiltonian, clean);
    r.eom = equations_of_motion(r.system->expr, p.dofs());
    r.runtime.derive = sw.lap();

    if (opt.resimulate) {
      const auto ic = resolve_initial(p, p.initial);
      const auto resim = rk4_integrate(*r.eom, ic.x, ic.v, p.steps(), truth_forcing(p));
      r.resimulation_error = relative_l2(resim.X, clean.X);
      r.runtime.resimulate = sw.lap();
    }
    r.ok = true;
  } catch (const Error& e) {
    r.failure_code = e.code();
    r.failure = e.what();
  }
  r.runtime.total = total.lap();
  return r;
}

inline BenchmarkReport run_benchmark(const std::string& name, const RunOptions& opt = {}) {
  return run_benchmark(load_preset(name), opt);
}

inline nlohmann::json to_json(const ParameterEstimate& e) {
  return {{"name", e.name},
          {"identified", std::isfinite(e.value) ? nlohmann::json(e.value) : nlohmann::json(nullptr)},
          {"truth", e.truth},
          {"relative_error", std::isfinite(e.relative_error) ? nlohmann::json(e.relative_error) : nlohmann::json(nullptr)}};
}

namespace detail {
inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
}  // namespace detail

inline nlohmann::json to_json(const BenchmarkReport& r) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& e : r.parameters) params.push_back(to_json(e));
  nlohmann::json j{{"preset", r.preset},
                   {"status", r.ok ? "ok" : "failed"},
                   {"noise", {{"level", r.noise.level}, {"seed", r.noise.seed}}},
                   {"supports", r.supports},
                   {"expected_supports", r.expected_supports},
                   {"support_exact", r.support_exact},
                   {"parameters", params},
                   {"lagrangian_error", detail::finite_or_null(r.lagrangian_error)},
                   {"hamiltonian_error", detail::finite_or_null(r.hamiltonian_error)},
                   {"energy_drift", detail::finite_or_null(r.energy_drift)},
                   {"resimulation_error", detail::finite_or_null(r.resimulation_error)},
                   {"max_el_residual", detail::finite_or_null(r.max_el_residual)},
                   {"runtime_s",
                    {{"simulate", r.runtime.simulate},
                     {"discover", r.runtime.discover},
                     {"derive", r.runtime.derive},
                     {"resimulate", r.runtime.resimulate},
                     {"total", r.runtime.total}}}};
  if (!r.ok) j["failure"] = {{"code", to_string(*r.failure_code)}, {"message", r.failure}};
  if (r.system) {
    j["lagrangian"] = render(r.system->expr);
    j["system"] = to_json(*r.system);
  }
  if (r.hamiltonian) j["hamiltonian"] = render(*r.hamiltonian);
  if (r.eom) j["equations_of_motion"] = to_json(*r.eom);
  return j;
}

// One row per identified parameter: preset, parameter, truth, identified, error %, e_L, H error, drift, resim, support.
inline void write_summary_csv(std::ostream& os, const std::vector<BenchmarkReport>& reports) {
  os << "preset,status,parameter,truth,identified,relative_error_pct,lagrangian_error,hamiltonian_error,energy_drift,"
        "resimulation_error,support_exact,runtime_s\n";
  auto num = [](double v) { return std::isfinite(v) ? format_number(v) : std::string{}; };
  for (const auto& r : reports) {
    const auto tail = "," + num(r.lagrangian_error) + "," + num(r.hamiltonian_error) + "," + num(r.energy_drift) + "," +
                      num(r.resimulation_error) + "," + (r.support_exact ? "true" : "false") + "," + num(r.runtime.total);
    if (r.parameters.empty()) os << r.preset << "," << (r.ok ? "ok" : "failed") << ",,,,," << tail.substr(1) << "\n";
    for (const auto& e : r.parameters)
      os << r.preset << "," << (r.ok ? "ok" : "failed") << "," << e.name << "," << num(e.truth) << "," << num(e.value) << ","
         << num(100 * e.relative_error) << tail << "\n";
  }
}

// ---- noise study -----------------------------------------------------------

struct NoiseStudyRow {
  std::string preset;
  double level = 0.0;
  bool correct = false;
  double lagrangian_error = std::numeric_limits<double>::quiet_NaN();  // only when correct
  std::string detail;
};

// Exact support recovery per (preset, level); one seed for every level, so noise grows linearly.
inline std::vector<NoiseStudyRow> noise_study(const std::vector<std::string>& names, const std::vector<double>& levels,
                                              std::uint64_t seed = kDefaultSeed, unsigned threads = 1) {
  for (double z : levels)
    if (z < 0) throw Error(ErrorCode::InvalidArgument, "noise levels must be nonnegative");
  std::vector<NoiseStudyRow> rows;
  for (const auto& name : names) {
    const auto p = load_preset(name);
    for (double z : levels) {
      RunOptions opt;
      opt.noise = NoiseSpec{z, seed};
      opt.threads = threads;
      opt.resimulate = false;
      const auto r = run_benchmark(p, opt);
      NoiseStudyRow row{name, z, r.ok && r.support_exact, std::numeric_limits<double>::quiet_NaN(), {}};
      if (row.correct) row.lagrangian_error = r.lagrangian_error;
      if (!r.ok)
        row.detail = to_string(*r.failure_code);
      else if (!r.support_exact)
        row.detail = "wrong support";
      rows.push_back(row);
    }
  }
  return rows;
}

inline void write_noise_csv(std::ostream& os, const std::vector<NoiseStudyRow>& rows) {
  os << "preset,noise_pct,correct_support,lagrangian_error,detail\n";
  for (const auto& r : rows)
    os << r.preset << "," << format_number(r.level) << "," << (r.correct ? "Yes" : "No") << ","
       << (std::isfinite(r.lagrangian_error) ? format_number(r.lagrangian_error) : "") << "," << r.detail << "\n";
}

inline nlohmann::json to_json(const std::vector<NoiseStudyRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows)
    j.push_back({{"preset", r.preset}, {"noise_pct", r.level}, {"correct", r.correct},
                 {"lagrangian_error", detail::finite_or_null(r.lagrangian_error)}, {"detail", r.detail}});
  return j;
}

// ---- long-horizon and unseen-condition prediction --------------------------

struct PredictionSample {
  double t = 0.0;
  double max_abs_error = 0.0;  // over coordinates, at this instant
};

struct PredictionResult {
  std::vector<PredictionSample> series;
  double amplitude = 0.0;       // max |x_truth| over the horizon
  double max_abs_error = 0.0;   // over the horizon
  double relative_max_error = 0.0;
};

// Integrates truth and the derived system side by side with the preset step (no substeps),
// recording the error every `record_every` steps.
inline PredictionResult perpetual_prediction(const BenchmarkPreset& p, const OdeSystem& eom, double horizon,
                                             std::size_t record_every = 10) {
  if (!(horizon >= p.dt)) throw Error(ErrorCode::InvalidArgument, "horizon must be at least one time step");
  if (record_every == 0) throw Error(ErrorCode::InvalidArgument, "record interval must be positive");
  if (p.kind == SystemKind::TransversalWave || p.kind == SystemKind::BladeFlexion) {
    auto q = p;
    q.substeps = 1;
    check_stability(q);
  }
  const auto ic = resolve_initial(p, p.initial);
  const auto forcing = truth_forcing(p);
  Rk4 truth(truth_accel(p), ic.x, ic.v), model(accel_of(eom, forcing), ic.x, ic.v);
  const auto steps = static_cast<std::size_t>(std::floor(horizon / p.dt + 1e-9));
  PredictionResult out;
  auto record = [&](std::size_t n) {
    double e = 0.0, a = 0.0;
    for (std::size_t i = 0; i < ic.x.size(); ++i) {
      e = std::max(e, std::abs(truth.x()[i] - model.x()[i]));
      a = std::max(a, std::abs(truth.x()[i]));
    }
    out.amplitude = std::max(out.amplitude, a);
    out.max_abs_error = std::max(out.max_abs_error, e);
    if (n % record_every == 0) out.series.push_back({static_cast<double>(n) * p.dt, e});
  };
  record(0);
  for (std::size_t n = 1; n <= steps; ++n) {
    truth.step(p.dt);
    model.step(p.dt);
    truth.set_time(static_cast<double>(n) * p.dt);
    model.set_time(static_cast<double>(n) * p.dt);
    if (!model.finite()) throw Error(ErrorCode::NonFinite, "prediction blew up at step " + std::to_string(n));
    record(n);
  }
  out.relative_max_error = out.amplitude > 0 ? out.max_abs_error / out.amplitude : out.max_abs_error;
  return out;
}

inline void write_prediction_csv(std::ostream& os, const PredictionResult& r) {
  os << "t,max_abs_error,relative_error\n";
  for (const auto& s : r.series)
    os << format_number(s.t) << "," << format_number(s.max_abs_error) << ","
       << format_number(r.amplitude > 0 ? s.max_abs_error / r.amplitude : s.max_abs_error) << "\n";
}

struct ZeroShotResult {
  InitialCondition condition;
  double relative_error = 0.0;  // relative L2 over the preset window
  double max_abs_error = 0.0;
  double amplitude = 0.0;
};

inline ZeroShotResult zero_shot(const BenchmarkPreset& p, const OdeSystem& eom, const InitialCondition& ic) {
  ZeroShotResult out;
  out.condition = resolve_initial(p, ic);
  const auto truth = simulate_with(p, ic);
  const auto model = rk4_integrate(eom, out.condition.x, out.condition.v, p.steps(), truth_forcing(p));
  out.relative_error = relative_l2(model.X, truth.X);
  out.max_abs_error = (model.X - truth.X).cwiseAbs().maxCoeff();
  out.amplitude = truth.X.cwiseAbs().maxCoeff();
  return out;
}

// ---- chain generalization --------------------------------------------------

struct ChainTemplate {
  double light = 1.0;     // kinetic weight of the light atom
  double heavy = 2.0;     // kinetic weight of the heavy atom
  double coupling = 0.0;  // k in 1/2 k (x_{j+1} - x_j)^2, same units as the kinetic weights
};

// Reads the unit cell off a discovered light-heavy-light molecule.
inline ChainTemplate extract_template(const SystemLagrangian& sys, double tolerance = 0.05) {
  if (sys.m != 3) throw Error(ErrorCode::TemplateMismatch, "template needs a three-atom molecule");
  const SupportSet want[3] = {{"(x1 - x0)^2"}, {"(x1 - x0)^2", "(x2 - x1)^2"}, {"(x2 - x1)^2"}};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& labels = sys.per_dof.at(i).support_labels;
    if (SupportSet(labels.begin(), labels.end()) != want[i])
      throw Error(ErrorCode::TemplateMismatch, "coordinate " + std::to_string(i) + " is not nearest-neighbor coupled only");
  }
  double k[2] = {0, 0};
  for (const auto& t : sys.terms) {
    if (t.label == "(x1 - x0)^2") k[0] = -2 * t.coefficient;
    if (t.label == "(x2 - x1)^2") k[1] = -2 * t.coefficient;
  }
  const double mean = 0.5 * (k[0] + k[1]);
  if (!(mean > 0)) throw Error(ErrorCode::TemplateMismatch, "coupling coefficient must be positive");
  if (std::abs(k[0] - k[1]) / mean > tolerance)
    throw Error(ErrorCode::TemplateMismatch, "bond stiffnesses differ by more than the coupling tolerance");
  const double c0 = sys.kinetic[0], c1 = sys.kinetic[1], c2 = sys.kinetic[2];
  if (std::abs(c0 - c2) / (0.5 * (c0 + c2)) > tolerance)
    throw Error(ErrorCode::TemplateMismatch, "end atoms carry different kinetic weights");
  return {0.5 * (c0 + c2), c1, mean};
}

// Lagrangian of an n-atom chain light, heavy, light, ... with identical bonds.
inline Expr chain_lagrangian(const ChainTemplate& tpl, std::size_t n) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "chain needs at least two atoms");
  std::vector<Expr> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back(product({constant(0.5 * (i % 2 ? tpl.heavy : tpl.light)), power(vel(i), 2)}));
  for (std::size_t i = 0; i + 1 < n; ++i) t.push_back(product({constant(-0.5 * tpl.coupling), power(pos(i + 1) - pos(i), 2)}));
  return simplify(sum(std::move(t)));
}

struct ChainResult {
  OdeSystem eom;
  Trajectory generalized;
  Trajectory direct;
  double relative_error = 0.0;
};

// Direct numeric simulation of the physical chain with the preset masses and bond constant.
inline Trajectory simulate_chain(const BenchmarkPreset& tri, std::size_t n, const StepOptions& opt) {
  const double m = tri.param("m"), M = tri.param("M"), k = tri.param("k");
  std::vector<double> inv(n);
  for (std::size_t i = 0; i < n; ++i) inv[i] = 1.0 / (i % 2 ? M : m);
  auto accel = [inv, k](double, std::span<const double> x, std::span<const double>, std::span<double> a) {
    const auto N = x.size();
    for (std::size_t i = 0; i < N; ++i) a[i] = 0.0;
    for (std::size_t i = 0; i + 1 < N; ++i) {
      const double f = k * (x[i + 1] - x[i]);
      a[i] += f * inv[i];
      a[i + 1] -= f * inv[i + 1];
    }
  };
  std::vector<double> x0(n, 0.0), v0(n, 0.0);
  x0[0] = 1.0;
  return rk4_integrate(accel, x0, v0, opt);
}

inline ChainResult generalize_chain(const ChainTemplate& tpl, std::size_t n, const BenchmarkPreset& tri) {
  ChainResult out;
  out.eom = equations_of_motion(chain_lagrangian(tpl, n), n);
  std::vector<double> x0(n, 0.0), v0(n, 0.0);
  x0[0] = 1.0;
  out.generalized = rk4_integrate(out.eom, x0, v0, tri.steps());
  out.direct = simulate_chain(tri, n, tri.steps());
  out.relative_error = relative_l2(out.generalized.X, out.direct.X);
  return out;
}

inline nlohmann::json to_json(const ChainTemplate& t) {
  return {{"light", t.light}, {"heavy", t.heavy}, {"coupling", t.coupling}};
}

}  // namespace lagrangify
