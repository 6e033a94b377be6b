#pragma once

#include <array>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "sim.hpp"

namespace lagrangify {

inline constexpr std::array<std::string_view, 7> kPresetNames{
    "HarmonicFree", "HarmonicForced", "Pendulum", "ThreeDof", "Triatomic", "TransversalWave", "BladeFlexion"};

// Built-in benchmark definitions. The JSON files under presets/ are generated from these.
inline BenchmarkPreset builtin_preset(std::string_view name) {
  BenchmarkPreset p;
  p.name = std::string(name);
  p.kind = system_kind_from_string(p.name);
  auto& d = p.dictionary;
  d.min_degree = 2;
  p.discover.stencil_order = 4;
  switch (p.kind) {
    case SystemKind::HarmonicFree:
      p.params = {{"m", 10.0}, {"k", 5000.0}};
      p.initial = {{1.0}, {0.0}, {}};
      p.dt = 1e-3, p.T = 1.0;
      d.m = 1, d.poly_degree = 3;
      p.discover.stlsq.lambda = 100.0;
      break;
    case SystemKind::HarmonicForced:
      p.params = {{"m", 10.0}, {"k", 5000.0}, {"A", 10.0}};
      p.initial = {{1.0}, {0.0}, {}};
      p.dt = 5e-4, p.T = 2.0;
      d.m = 1, d.poly_degree = 3, d.include_harmonics = true, d.include_forcing_coupling = true;
      p.discover.stlsq.lambda = 1.0;
      break;
    case SystemKind::Pendulum:
      p.params = {{"g", 9.81}, {"l", 1.0}};
      p.initial = {{0.5}, {0.0}, {}};
      p.zero_shot = InitialCondition{{1.0}, {0.0}, {}};
      p.dt = 1e-3, p.T = 10.0;
      d.m = 1, d.poly_degree = 3, d.include_harmonics = true;
      p.discover.stlsq.lambda = 1.0;
      break;
    case SystemKind::ThreeDof:
      p.params = {{"m", 10.0}, {"k1", 5000.0}, {"k2", 5000.0}, {"k3", 5000.0}};
      p.initial = {{1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, {}};
      p.dt = 1e-3, p.T = 1.0;
      d.m = 3, d.poly_degree = 4, d.include_pairwise_differences = true, d.diff_poly_degree = 4;
      p.discover.stlsq.lambda = 30.0;
      break;
    case SystemKind::Triatomic:
      p.params = {{"m", 1.0}, {"M", 2.0}, {"k", 1870.0}};
      p.initial = {{1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, {}};
      p.dt = 1e-3, p.T = 1.0;
      d.m = 3, d.poly_degree = 3, d.include_pairwise_differences = true, d.diff_poly_degree = 3;
      p.discover.stlsq.lambda = 40.0;
      p.assemble.infer_mass_ratios = true;
      break;
    case SystemKind::TransversalWave:
      p.params = {{"c", 25.0}, {"delta", 0.01}};
      p.grid = 50;
      p.initial.profile = "cosine";
      p.dt = 1e-4, p.T = 1.0, p.substeps = 8;
      d.m = 50, d.poly_degree = 3, d.include_pairwise_differences = true, d.diff_poly_degree = 3, d.neighbor_window = 1;
      p.discover.stlsq.lambda = 1e5;
      p.discover.stencil_order = 8;
      break;
    case SystemKind::BladeFlexion:
      p.params = {{"c", 1.0}, {"delta", 0.01}, {"mode_cutoff", 500.0}};
      p.grid = 50;
      p.initial.profile = "cantilever-mode-1";
      p.zero_shot = InitialCondition{{}, {}, "discrete-mode-3"};
      p.dt = 1e-3, p.T = 2.0, p.substeps = 20;
      d.m = 50, d.poly_degree = 2, d.include_curvature = true;
      p.discover.stlsq.lambda = 1e5;
      p.discover.stlsq.ridge = 0.0;
      p.discover.stencil_order = 8;
      break;
  }
  return p;
}

inline std::vector<BenchmarkPreset> builtin_presets() {
  std::vector<BenchmarkPreset> out;
  for (auto n : kPresetNames) out.push_back(builtin_preset(n));
  return out;
}

// Looks up a preset by name: a JSON file in dir named <name>.json wins over the built-in table.
inline BenchmarkPreset load_preset(const std::string& name, const std::string& dir = {}) {
  if (!dir.empty()) {
    std::ifstream in(dir + "/" + name + ".json");
    if (in) {
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::ParseError, name + ".json: " + ex.what());
      }
      return preset_from_json(j);
    }
  }
  for (auto n : kPresetNames)
    if (n == name) return builtin_preset(n);
  throw Error(ErrorCode::UnknownPreset, "unknown preset '" + name + "'");
}

}  // namespace lagrangify
