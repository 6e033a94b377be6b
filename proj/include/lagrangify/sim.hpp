#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "derive.hpp"
#include "dictionary.hpp"
#include "discover.hpp"
#include "error.hpp"
#include "expr.hpp"
#include "regress.hpp"
#include "trajectory.hpp"

namespace lagrangify {

// ---- integration -----------------------------------------------------------

using AccelFn = std::function<void(double t, std::span<const double> x, std::span<const double> v, std::span<double> a)>;
using ForcingFn = std::function<void(double t, std::span<double> f)>;

struct StepOptions {
  double dt = 1e-3;
  double T = 1.0;
  int substeps = 1;  // internal RK4 steps per recorded sample

  [[nodiscard]] std::size_t samples() const { return static_cast<std::size_t>(std::floor(T / dt + 1e-9)) + 1; }

  void validate() const {
    if (!(dt > 0)) throw Error(ErrorCode::InvalidArgument, "time step must be positive");
    if (!(T >= dt)) throw Error(ErrorCode::InvalidArgument, "duration must be at least one time step");
    if (substeps < 1) throw Error(ErrorCode::InvalidArgument, "substeps must be positive");
  }
};

// Classical fixed-step RK4 on (x, v) with state kept between calls.
class Rk4 {
 public:
  Rk4(AccelFn accel, std::vector<double> x0, std::vector<double> v0)
      : accel_(std::move(accel)), x_(std::move(x0)), v_(std::move(v0)) {
    if (x_.size() != v_.size()) throw Error(ErrorCode::InvalidArgument, "position and velocity sizes differ");
    const auto m = x_.size();
    for (auto* buf : {&xs_, &vs_, &k1x_, &k1v_, &k2x_, &k2v_, &k3x_, &k3v_, &k4x_, &k4v_}) buf->assign(m, 0.0);
  }

  void step(double h) {
    const auto m = x_.size();
    accel_(t_, x_, v_, k1v_);
    k1x_ = v_;
    for (std::size_t i = 0; i < m; ++i) xs_[i] = x_[i] + 0.5 * h * k1x_[i], vs_[i] = v_[i] + 0.5 * h * k1v_[i];
    accel_(t_ + 0.5 * h, xs_, vs_, k2v_);
    k2x_ = vs_;
    for (std::size_t i = 0; i < m; ++i) xs_[i] = x_[i] + 0.5 * h * k2x_[i], vs_[i] = v_[i] + 0.5 * h * k2v_[i];
    accel_(t_ + 0.5 * h, xs_, vs_, k3v_);
    k3x_ = vs_;
    for (std::size_t i = 0; i < m; ++i) xs_[i] = x_[i] + h * k3x_[i], vs_[i] = v_[i] + h * k3v_[i];
    accel_(t_ + h, xs_, vs_, k4v_);
    k4x_ = vs_;
    for (std::size_t i = 0; i < m; ++i) {
      x_[i] += h / 6.0 * (k1x_[i] + 2 * k2x_[i] + 2 * k3x_[i] + k4x_[i]);
      v_[i] += h / 6.0 * (k1v_[i] + 2 * k2v_[i] + 2 * k3v_[i] + k4v_[i]);
    }
    t_ += h;
  }

  [[nodiscard]] double t() const noexcept { return t_; }
  void set_time(double t) noexcept { t_ = t; }
  [[nodiscard]] const std::vector<double>& x() const noexcept { return x_; }
  [[nodiscard]] const std::vector<double>& v() const noexcept { return v_; }
  [[nodiscard]] bool finite() const {
    for (std::size_t i = 0; i < x_.size(); ++i)
      if (!std::isfinite(x_[i]) || !std::isfinite(v_[i])) return false;
    return true;
  }

 private:
  AccelFn accel_;
  std::vector<double> x_, v_;
  std::vector<double> xs_, vs_, k1x_, k1v_, k2x_, k2v_, k3x_, k3v_, k4x_, k4v_;
  double t_ = 0.0;
};

inline Trajectory rk4_integrate(const AccelFn& accel, const std::vector<double>& x0, const std::vector<double>& v0,
                                const StepOptions& opt, const ForcingFn& forcing = {}) {
  opt.validate();
  const auto N = opt.samples();
  const auto m = x0.size();
  Trajectory tr;
  const auto R = static_cast<Eigen::Index>(N), M = static_cast<Eigen::Index>(m);
  tr.t.resize(R);
  tr.X.resize(R, M);
  tr.V.resize(R, M);
  if (forcing) tr.F = RowMatrix(R, M);
  Rk4 rk(accel, x0, v0);
  std::vector<double> f(m, 0.0);
  const double h = opt.dt / opt.substeps;
  for (std::size_t n = 0; n < N; ++n) {
    if (n > 0) {
      for (int s = 0; s < opt.substeps; ++s) rk.step(h);
      rk.set_time(static_cast<double>(n) * opt.dt);
      if (!rk.finite()) throw Error(ErrorCode::NonFinite, "state blew up at sample " + std::to_string(n));
    }
    const auto r = static_cast<Eigen::Index>(n);
    tr.t(r) = static_cast<double>(n) * opt.dt;
    for (std::size_t i = 0; i < m; ++i) {
      tr.X(r, static_cast<Eigen::Index>(i)) = rk.x()[i];
      tr.V(r, static_cast<Eigen::Index>(i)) = rk.v()[i];
    }
    if (forcing) {
      forcing(tr.t(r), f);
      for (std::size_t i = 0; i < m; ++i) (*tr.F)(r, static_cast<Eigen::Index>(i)) = f[i];
    }
  }
  return tr;
}

// Acceleration callback evaluating a symbolic system; forcing is sampled at stage times.
inline AccelFn accel_of(const OdeSystem& sys, ForcingFn forcing = {}) {
  std::vector<CompiledExpr> code;
  for (const auto& e : sys.rhs) code.emplace_back(e);
  auto fbuf = std::make_shared<std::vector<double>>(sys.m, 0.0);
  return [code = std::move(code), forcing = std::move(forcing), fbuf](double t, std::span<const double> x,
                                                                      std::span<const double> v, std::span<double> a) {
    EvalContext ctx{x, v, {}};
    if (forcing) {
      forcing(t, *fbuf);
      ctx.f = *fbuf;
    }
    for (std::size_t i = 0; i < code.size(); ++i) a[i] = code[i](ctx);
  };
}

inline Trajectory rk4_integrate(const OdeSystem& sys, const std::vector<double>& x0, const std::vector<double>& v0,
                                const StepOptions& opt, const ForcingFn& forcing = {}) {
  if (x0.size() != sys.m) throw Error(ErrorCode::InvalidArgument, "initial state size differs from the system");
  return rk4_integrate(accel_of(sys, forcing), x0, v0, opt, forcing);
}

// ---- noise -----------------------------------------------------------------

struct NoiseSpec {
  double level = 0.0;  // percent of each channel's standard deviation
  std::uint64_t seed = 0;
};

inline constexpr std::uint64_t kDefaultSeed = 5;

// Adds N(0, (level/100 * std(channel))^2) to every position and velocity channel. The unit
// normal draws depend only on the seed, so noise scales linearly with level.
inline Trajectory add_noise(const Trajectory& tr, const NoiseSpec& spec) {
  if (spec.level < 0) throw Error(ErrorCode::InvalidArgument, "noise level must be nonnegative");
  Trajectory out = tr;
  if (spec.level == 0.0) return out;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto perturb = [&](RowMatrix& M) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      const auto col = M.col(c);
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(col.size()));
      const double sigma = spec.level / 100.0 * sd;
      for (Eigen::Index n = 0; n < M.rows(); ++n) M(n, c) += sigma * normal(rng);
    }
  };
  perturb(out.X);
  perturb(out.V);
  return out;
}

// ---- benchmark presets -----------------------------------------------------

enum class SystemKind { HarmonicFree, HarmonicForced, Pendulum, ThreeDof, Triatomic, TransversalWave, BladeFlexion };

inline std::string to_string(SystemKind k) {
  switch (k) {
    case SystemKind::HarmonicFree: return "HarmonicFree";
    case SystemKind::HarmonicForced: return "HarmonicForced";
    case SystemKind::Pendulum: return "Pendulum";
    case SystemKind::ThreeDof: return "ThreeDof";
    case SystemKind::Triatomic: return "Triatomic";
    case SystemKind::TransversalWave: return "TransversalWave";
    case SystemKind::BladeFlexion: return "BladeFlexion";
  }
  return "?";
}

inline SystemKind system_kind_from_string(const std::string& s) {
  for (auto k : {SystemKind::HarmonicFree, SystemKind::HarmonicForced, SystemKind::Pendulum, SystemKind::ThreeDof,
                 SystemKind::Triatomic, SystemKind::TransversalWave, SystemKind::BladeFlexion})
    if (to_string(k) == s) return k;
  throw Error(ErrorCode::UnknownPreset, "unknown benchmark '" + s + "'");
}

struct InitialCondition {
  std::vector<double> x;
  std::vector<double> v;
  std::string profile;  // grid systems: "cosine", "cantilever-mode-1", "discrete-mode-3", ...
};

struct BenchmarkPreset {
  std::string name;
  SystemKind kind = SystemKind::HarmonicFree;
  std::map<std::string, double> params;
  InitialCondition initial;
  std::optional<InitialCondition> zero_shot;
  double dt = 1e-3;
  double T = 1.0;
  int substeps = 1;
  std::size_t grid = 0;
  DictionarySpec dictionary;
  DiscoverConfig discover;
  AssembleConfig assemble;

  [[nodiscard]] double param(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) throw Error(ErrorCode::SpecInvalid, name + ": missing parameter '" + key + "'");
    return it->second;
  }
  [[nodiscard]] std::size_t dofs() const {
    switch (kind) {
      case SystemKind::ThreeDof:
      case SystemKind::Triatomic: return 3;
      case SystemKind::TransversalWave:
      case SystemKind::BladeFlexion: return grid;
      default: return 1;
    }
  }
  [[nodiscard]] StepOptions steps() const { return {dt, T, substeps}; }
};

inline nlohmann::json to_json(const InitialCondition& ic) {
  nlohmann::json j{{"x", ic.x}, {"v", ic.v}};
  if (!ic.profile.empty()) j["profile"] = ic.profile;
  return j;
}

inline InitialCondition initial_condition_from_json(const nlohmann::json& j) {
  InitialCondition ic;
  ic.x = j.value("x", std::vector<double>{});
  ic.v = j.value("v", std::vector<double>{});
  ic.profile = j.value("profile", std::string{});
  return ic;
}

inline nlohmann::json to_json(const BenchmarkPreset& p) {
  nlohmann::json j{{"name", p.name},
                   {"kind", to_string(p.kind)},
                   {"params", p.params},
                   {"initial", to_json(p.initial)},
                   {"dt", p.dt},
                   {"T", p.T},
                   {"substeps", p.substeps},
                   {"grid", p.grid},
                   {"dictionary", to_json(p.dictionary)},
                   {"lambda", p.discover.stlsq.lambda},
                   {"ridge", p.discover.stlsq.ridge},
                   {"max_iterations", p.discover.stlsq.max_iterations},
                   {"normalize", p.discover.stlsq.normalize},
                   {"stencil_order", p.discover.stencil_order},
                   {"residual_tolerance", p.discover.residual_tolerance},
                   {"coupling_tolerance", p.assemble.coupling_tolerance},
                   {"infer_mass_ratios", p.assemble.infer_mass_ratios}};
  if (p.zero_shot) j["zero_shot"] = to_json(*p.zero_shot);
  return j;
}

inline BenchmarkPreset preset_from_json(const nlohmann::json& j) {
  try {
    BenchmarkPreset p;
    p.name = j.at("name").get<std::string>();
    p.kind = system_kind_from_string(j.at("kind").get<std::string>());
    p.params = j.at("params").get<std::map<std::string, double>>();
    p.initial = initial_condition_from_json(j.at("initial"));
    if (j.contains("zero_shot")) p.zero_shot = initial_condition_from_json(j["zero_shot"]);
    p.dt = j.at("dt").get<double>();
    p.T = j.at("T").get<double>();
    p.substeps = j.value("substeps", 1);
    p.grid = j.value("grid", std::size_t{0});
    p.dictionary = dictionary_spec_from_json(j.at("dictionary"));
    p.discover.stlsq.lambda = j.at("lambda").get<double>();
    p.discover.stlsq.ridge = j.value("ridge", p.discover.stlsq.ridge);
    p.discover.stlsq.max_iterations = j.value("max_iterations", p.discover.stlsq.max_iterations);
    p.discover.stlsq.normalize = j.value("normalize", p.discover.stlsq.normalize);
    p.discover.stencil_order = j.value("stencil_order", p.discover.stencil_order);
    p.discover.residual_tolerance = j.value("residual_tolerance", p.discover.residual_tolerance);
    p.assemble.coupling_tolerance = j.value("coupling_tolerance", p.assemble.coupling_tolerance);
    p.assemble.infer_mass_ratios = j.value("infer_mass_ratios", p.assemble.infer_mass_ratios);
    return p;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::ParseError, ex.what());
  }
}

// ---- ground-truth systems --------------------------------------------------

struct MassSpring {
  Eigen::Vector3d masses;
  Eigen::Matrix3d M;
  Eigen::Matrix3d K;
};

// 3DOF: wall-anchored chain; triatomic: free molecule m - M - m with two identical springs.
inline MassSpring mass_spring(const BenchmarkPreset& p) {
  MassSpring s;
  if (p.kind == SystemKind::ThreeDof) {
    const double m = p.param("m"), k1 = p.param("k1"), k2 = p.param("k2"), k3 = p.param("k3");
    s.masses = Eigen::Vector3d::Constant(m);
    s.K << k1 + k2, -k2, 0, -k2, k2 + k3, -k3, 0, -k3, k3;
  } else if (p.kind == SystemKind::Triatomic) {
    const double m = p.param("m"), M = p.param("M"), k = p.param("k");
    s.masses << m, M, m;
    s.K << k, -k, 0, -k, 2 * k, -k, 0, -k, k;
  } else {
    throw Error(ErrorCode::InvalidArgument, p.name + " is not a mass-spring system");
  }
  s.M = s.masses.asDiagonal();
  return s;
}

// Linear operator G with (G u)_c = u[c+1] - 2u[c] + u[c-1], c = -1..m-2, ghosts at zero.
inline Eigen::MatrixXd curvature_operator(std::size_t m) {
  const auto M = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(M, M);
  for (Eigen::Index row = 0; row < M; ++row) {
    const Eigen::Index c = row - 1;
    for (auto [node, w] : {std::pair{c + 1, 1.0}, std::pair{c, -2.0}, std::pair{c - 1, 1.0}})
      if (node >= 0 && node < M) G(row, node) += w;
  }
  return G;
}

inline double wave_theta(const BenchmarkPreset& p) {
  const double c = p.param("c"), d = p.param("delta");
  return c * c / (d * d);
}

inline double blade_beta(const BenchmarkPreset& p) {
  const double d = p.param("delta");
  return p.param("c") / (d * d * d * d);
}

// Stiffness of the grid systems in mass-normalized form, xddot = -K x.
inline Eigen::MatrixXd grid_stiffness(const BenchmarkPreset& p) {
  const auto m = static_cast<Eigen::Index>(p.grid);
  if (p.kind == SystemKind::TransversalWave) {
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m, m);
    const double th = wave_theta(p);
    for (Eigen::Index i = 0; i + 1 < m; ++i) {
      K(i, i) += th, K(i + 1, i + 1) += th;
      K(i, i + 1) -= th, K(i + 1, i) -= th;
    }
    return K;
  }
  if (p.kind == SystemKind::BladeFlexion) {
    const auto G = curvature_operator(p.grid);
    return blade_beta(p) * G.transpose() * G;
  }
  throw Error(ErrorCode::InvalidArgument, p.name + " is not a grid system");
}

struct Modes {
  Eigen::VectorXd omega;  // ascending
  Eigen::MatrixXd shapes;  // columns, unit max-norm, positive at the last node
};

inline Modes grid_modes(const BenchmarkPreset& p) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(grid_stiffness(p));
  Modes md;
  md.omega = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  md.shapes = es.eigenvectors();
  for (Eigen::Index k = 0; k < md.shapes.cols(); ++k) {
    auto col = md.shapes.col(k);
    col /= col.cwiseAbs().maxCoeff();
    if (col(col.size() - 1) < 0) col = -col;
  }
  return md;
}

// Continuous clamped-free first bending mode sampled at x = (i+1) delta, i = 0..m-1.
inline Eigen::VectorXd cantilever_first_mode(std::size_t m) {
  const double b = 1.8751040687119611;
  const double s = (std::cosh(b) + std::cos(b)) / (std::sinh(b) + std::sin(b));
  Eigen::VectorXd u(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const double z = b * static_cast<double>(i + 1) / static_cast<double>(m);
    u(static_cast<Eigen::Index>(i)) = std::cosh(z) - std::cos(z) - s * (std::sinh(z) - std::sin(z));
  }
  return u / u.cwiseAbs().maxCoeff();
}

// Resolves profile-based initial conditions of the grid systems.
inline InitialCondition resolve_initial(const BenchmarkPreset& p, const InitialCondition& ic) {
  if (ic.profile.empty()) {
    if (ic.x.size() != p.dofs() || ic.v.size() != p.dofs())
      throw Error(ErrorCode::SpecInvalid, p.name + ": initial state must have " + std::to_string(p.dofs()) + " entries");
    return ic;
  }
  const auto m = p.grid;
  InitialCondition out;
  out.v.assign(m, 0.0);
  out.x.assign(m, 0.0);
  if (ic.profile == "cosine") {
    for (std::size_t i = 0; i < m; ++i)
      out.x[i] = std::cos(2 * std::numbers::pi * static_cast<double>(i) * p.param("delta"));
  } else if (ic.profile == "constant") {
    out.x.assign(m, 1.0);
  } else if (ic.profile == "zero") {
  } else if (ic.profile == "cantilever-mode-1") {
    // keep only modes the sampling resolves: omega below the preset cutoff
    const auto md = grid_modes(p);
    const Eigen::VectorXd u = cantilever_first_mode(m);
    Eigen::MatrixXd Q = md.shapes;
    for (Eigen::Index k = 0; k < Q.cols(); ++k) Q.col(k).normalize();
    const Eigen::VectorXd a = Q.transpose() * u;
    Eigen::VectorXd kept = Eigen::VectorXd::Zero(u.size());
    const double cutoff = p.param("mode_cutoff");
    for (Eigen::Index k = 0; k < Q.cols(); ++k)
      if (md.omega(k) < cutoff) kept += a(k) * Q.col(k);
    kept /= kept.cwiseAbs().maxCoeff();
    for (std::size_t i = 0; i < m; ++i) out.x[i] = kept(static_cast<Eigen::Index>(i));
  } else if (ic.profile.rfind("discrete-mode-", 0) == 0) {
    const auto k = std::stoul(ic.profile.substr(14));
    const auto md = grid_modes(p);
    if (k < 1 || k > m) throw Error(ErrorCode::SpecInvalid, "mode index out of range");
    for (std::size_t i = 0; i < m; ++i) out.x[i] = md.shapes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k - 1));
  } else {
    throw Error(ErrorCode::SpecInvalid, "unknown initial profile '" + ic.profile + "'");
  }
  return out;
}

inline ForcingFn truth_forcing(const BenchmarkPreset& p) {
  if (p.kind != SystemKind::HarmonicForced) return {};
  return [](double t, std::span<double> f) { f[0] = std::sin(2 * std::numbers::pi * t); };
}

// Numeric right-hand side of the true dynamics, independent of the symbolic machinery.
inline AccelFn truth_accel(const BenchmarkPreset& p) {
  switch (p.kind) {
    case SystemKind::HarmonicFree: {
      const double w2 = p.param("k") / p.param("m");
      return [w2](double, std::span<const double> x, std::span<const double>, std::span<double> a) { a[0] = -w2 * x[0]; };
    }
    case SystemKind::HarmonicForced: {
      const double w2 = p.param("k") / p.param("m"), g = p.param("A") / p.param("m");
      return [w2, g](double t, std::span<const double> x, std::span<const double>, std::span<double> a) {
        a[0] = -w2 * x[0] + g * std::sin(2 * std::numbers::pi * t);
      };
    }
    case SystemKind::Pendulum: {
      const double w2 = p.param("g") / p.param("l");
      return [w2](double, std::span<const double> x, std::span<const double>, std::span<double> a) {
        a[0] = -w2 * std::sin(x[0]);
      };
    }
    case SystemKind::ThreeDof:
    case SystemKind::Triatomic: {
      const auto s = mass_spring(p);
      const Eigen::Matrix3d A = -s.M.inverse() * s.K;
      return [A](double, std::span<const double> x, std::span<const double>, std::span<double> a) {
        for (int i = 0; i < 3; ++i) a[static_cast<std::size_t>(i)] = A(i, 0) * x[0] + A(i, 1) * x[1] + A(i, 2) * x[2];
      };
    }
    case SystemKind::TransversalWave: {
      const double th = wave_theta(p);
      return [th](double, std::span<const double> u, std::span<const double>, std::span<double> a) {
        const auto m = u.size();
        for (std::size_t i = 0; i < m; ++i) a[i] = 0.0;
        for (std::size_t i = 0; i + 1 < m; ++i) {
          const double d = th * (u[i + 1] - u[i]);
          a[i] += d;
          a[i + 1] -= d;
        }
      };
    }
    case SystemKind::BladeFlexion: {
      const double beta = blade_beta(p);
      auto D = std::make_shared<std::vector<double>>(p.grid + 1, 0.0);
      return [beta, D](double, std::span<const double> u, std::span<const double>, std::span<double> a) {
        const long m = static_cast<long>(u.size());
        auto at = [&](long i) { return i >= 0 && i < m ? u[static_cast<std::size_t>(i)] : 0.0; };
        for (long c = -1; c <= m - 2; ++c) (*D)[static_cast<std::size_t>(c + 1)] = at(c + 1) - 2 * at(c) + at(c - 1);
        for (long i = 0; i < m; ++i) {
          double g = 0.0;
          for (auto [c, w] : {std::pair{i - 1, 1.0}, std::pair{i, -2.0}, std::pair{i + 1, 1.0}})
            if (c >= -1 && c <= m - 2) g += w * (*D)[static_cast<std::size_t>(c + 1)];
          a[static_cast<std::size_t>(i)] = -beta * g;
        }
      };
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown system");
}

// Mass-normalized true Lagrangian (light mass for the triatomic molecule).
inline Expr truth_lagrangian(const BenchmarkPreset& p) {
  std::vector<Expr> t;
  auto half_v2 = [&](std::size_t i, double c) { t.push_back(product({constant(0.5 * c), power(vel(i), 2)})); };
  switch (p.kind) {
    case SystemKind::HarmonicFree:
    case SystemKind::HarmonicForced:
      half_v2(0, 1.0);
      t.push_back(product({constant(-0.5 * p.param("k") / p.param("m")), power(pos(0), 2)}));
      if (p.kind == SystemKind::HarmonicForced) t.push_back(product({constant(p.param("A") / p.param("m")), pos(0), forcing(0)}));
      break;
    case SystemKind::Pendulum:
      half_v2(0, 1.0);
      t.push_back(product({constant(p.param("g") / p.param("l")), cos(pos(0))}));
      break;
    case SystemKind::ThreeDof: {
      const double m = p.param("m");
      for (std::size_t i = 0; i < 3; ++i) half_v2(i, 1.0);
      t.push_back(product({constant(-0.5 * p.param("k1") / m), power(pos(0), 2)}));
      t.push_back(product({constant(-0.5 * p.param("k2") / m), power(pos(1) - pos(0), 2)}));
      t.push_back(product({constant(-0.5 * p.param("k3") / m), power(pos(2) - pos(1), 2)}));
      break;
    }
    case SystemKind::Triatomic: {
      const double m = p.param("m"), r = p.param("M") / m, k = p.param("k") / m;
      half_v2(0, 1.0), half_v2(1, r), half_v2(2, 1.0);
      t.push_back(product({constant(-0.5 * k), power(pos(1) - pos(0), 2)}));
      t.push_back(product({constant(-0.5 * k), power(pos(2) - pos(1), 2)}));
      break;
    }
    case SystemKind::TransversalWave: {
      const double th = wave_theta(p);
      for (std::size_t i = 0; i < p.grid; ++i) half_v2(i, 1.0);
      for (std::size_t i = 0; i + 1 < p.grid; ++i) t.push_back(product({constant(-0.5 * th), power(pos(i + 1) - pos(i), 2)}));
      break;
    }
    case SystemKind::BladeFlexion: {
      const double beta = blade_beta(p);
      for (std::size_t i = 0; i < p.grid; ++i) half_v2(i, 1.0);
      for (long c = -1; c <= static_cast<long>(p.grid) - 2; ++c)
        t.push_back(product({constant(-0.5 * beta), power(second_difference(c, p.grid), 2)}));
      break;
    }
  }
  return simplify(sum(std::move(t)));
}

inline Expr truth_hamiltonian(const BenchmarkPreset& p) { return hamiltonian(truth_lagrangian(p), p.dofs()).expr; }

// Checks the time-step limits of the grid presets.
inline void check_stability(const BenchmarkPreset& p) {
  const double h = p.dt / p.substeps;
  if (p.kind == SystemKind::TransversalWave) {
    const double cfl = p.param("c") * p.dt / p.param("delta");
    if (cfl > 1.0) throw Error(ErrorCode::CflViolation, "c dt / delta = " + format_number(cfl) + " exceeds 1");
    // RK4 covers |omega h| <= 2.8 on the imaginary axis; omega_max <= 2 c / delta.
    if (2 * p.param("c") / p.param("delta") * h > 2.8)
      throw Error(ErrorCode::StabilityViolation, "internal step too large for the wave grid");
  }
  if (p.kind == SystemKind::BladeFlexion) {
    // omega_max <= 4 sqrt(beta) (Gershgorin bound on the fourth difference)
    const double wmax = 4 * std::sqrt(blade_beta(p));
    if (wmax * h > 2.8)
      throw Error(ErrorCode::StabilityViolation, "internal step " + format_number(h) + " exceeds the RK4 limit " +
                                                     format_number(2.8 / wmax) + "; raise substeps");
  }
}

inline Trajectory simulate_with(const BenchmarkPreset& p, const InitialCondition& ic) {
  if (p.kind == SystemKind::TransversalWave || p.kind == SystemKind::BladeFlexion) {
    if (p.grid < 3) throw Error(ErrorCode::SpecInvalid, "grid needs at least 3 nodes");
    check_stability(p);
  }
  const auto s = resolve_initial(p, ic);
  return rk4_integrate(truth_accel(p), s.x, s.v, p.steps(), truth_forcing(p));
}

inline Trajectory simulate(const BenchmarkPreset& p) { return simulate_with(p, p.initial); }

inline Trajectory simulate_wave(const BenchmarkPreset& p) {
  if (p.kind != SystemKind::TransversalWave) throw Error(ErrorCode::InvalidArgument, p.name + " is not a wave preset");
  return simulate(p);
}

inline Trajectory simulate_blade(const BenchmarkPreset& p) {
  if (p.kind != SystemKind::BladeFlexion) throw Error(ErrorCode::InvalidArgument, p.name + " is not a blade preset");
  return simulate(p);
}

}  // namespace lagrangify
