// lagrangify: command-line front end for Lagrangian discovery from trajectory data.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <lagrangify/lagrangify.hpp>

namespace fs = std::filesystem;
using namespace lagrangify;

namespace {

struct Common {
  std::string preset;
  std::string data;
  std::string dict;
  std::optional<double> lambda;
  double noise = 0.0;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
  unsigned threads = 1;
  std::optional<double> duration;
  std::optional<double> dt;
  int stencil = 2;
  std::string preset_dir;
};

std::string default_out() {
  const char* env = std::getenv("LAGRANGIFY_OUT");
  return env && *env ? env : ".";
}

fs::path out_dir(const Common& c) {
  fs::path p = c.out.empty() ? default_out() : c.out;
  fs::create_directories(p);
  return p;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  os << j.dump(2) << "\n";
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  return os;
}

BenchmarkPreset resolve_preset(const Common& c) {
  auto p = load_preset(c.preset, c.preset_dir);
  if (c.duration) p.T = *c.duration;
  if (c.dt) p.dt = *c.dt;
  if (c.lambda) p.discover.stlsq.lambda = *c.lambda;
  return p;
}

std::optional<NoiseSpec> noise_of(const Common& c) {
  if (c.noise < 0) throw Error(ErrorCode::InvalidArgument, "noise level must be nonnegative");
  if (c.noise == 0) return std::nullopt;
  return NoiseSpec{c.noise, c.seed};
}

void require_one_source(const Common& c) {
  const bool files = !c.data.empty() || !c.dict.empty();
  if (c.preset.empty() == !files) throw Error(ErrorCode::InvalidArgument, "give either --preset or --data with --dict");
  if (files && (c.data.empty() || c.dict.empty())) throw Error(ErrorCode::InvalidArgument, "--data and --dict go together");
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::ParseError, path + ": " + ex.what());
  }
}

// Discovery on user files; the dictionary JSON may carry regression settings next to the spec.
nlohmann::json discover_files(const Common& c, SystemLagrangian* out_sys) {
  auto tr = read_csv(c.data);
  tr.validate();
  const auto j = read_json_file(c.dict);
  const auto spec = dictionary_spec_from_json(j.contains("dictionary") ? j["dictionary"] : j);
  if (spec.m != tr.dofs())
    throw Error(ErrorCode::SpecInvalid, "dictionary m=" + std::to_string(spec.m) + " but data has " +
                                            std::to_string(tr.dofs()) + " coordinates");
  DiscoverConfig cfg;
  cfg.stencil_order = j.value("stencil_order", c.stencil);
  cfg.stlsq.lambda = c.lambda.value_or(j.value("lambda", 1.0));
  cfg.stlsq.ridge = j.value("ridge", cfg.stlsq.ridge);
  cfg.stlsq.normalize = j.value("normalize", false);
  cfg.residual_tolerance = j.value("residual_tolerance", cfg.residual_tolerance);
  AssembleConfig acfg;
  acfg.infer_mass_ratios = j.value("infer_mass_ratios", false);
  if (auto z = noise_of(c)) tr = add_noise(tr, *z);

  const auto dict = build_dictionary(spec);
  const auto per = discover_all(tr, dict, cfg, c.threads);
  const auto sys = assemble(per, acfg);
  nlohmann::json r{{"source", c.data}, {"status", "ok"}, {"lagrangian", render(sys.expr)}, {"system", to_json(sys)}};
  nlohmann::json supports = nlohmann::json::array();
  for (const auto& d : per) supports.push_back(d.support_labels);
  r["supports"] = supports;
  r["hamiltonian"] = render(hamiltonian(sys.expr, sys.m).expr);
  r["equations_of_motion"] = to_json(equations_of_motion(sys.expr, sys.m));
  if (out_sys) *out_sys = sys;
  return r;
}

// t, discovered H and true H along the clean training trajectory
void write_energy_csv(const fs::path& path, const BenchmarkPreset& p, const Expr& H) {
  const auto tr = simulate(p);
  const auto found = sample(H, tr), truth = sample(truth_hamiltonian(p), tr);
  auto os = open_out(path);
  os.precision(17);
  os << "t,H,H_true\n";
  for (Eigen::Index n = 0; n < tr.t.size(); ++n) os << tr.t(n) << "," << found(n) << "," << truth(n) << "\n";
}

int cmd_simulate(const Common& c) {
  const auto p = resolve_preset(c);
  auto tr = simulate(p);
  if (auto z = noise_of(c)) tr = add_noise(tr, *z);
  const auto path = out_dir(c) / (p.name + ".csv");
  auto os = open_out(path);
  write_csv(os, tr);
  std::cout << p.name << ": " << tr.samples() << " samples, " << tr.dofs() << " coordinates -> " << path.string() << "\n";
  return 0;
}

int cmd_discover(const Common& c) {
  require_one_source(c);
  const auto dir = out_dir(c);
  if (!c.preset.empty()) {
    const auto p = resolve_preset(c);
    RunOptions opt;
    opt.noise = noise_of(c);
    opt.threads = c.threads;
    const auto r = run_benchmark(p, opt);
    write_json(dir / (p.name + "_report.json"), to_json(r));
    if (!r.ok) {
      std::cerr << "error: " << r.failure << "\n";
      return exit_code(*r.failure_code);
    }
    std::cout << p.name << ": L = " << render(r.system->expr) << "\n";
    for (const auto& e : r.parameters)
      std::cout << "  " << e.name << " = " << format_number(e.value) << " (truth " << format_number(e.truth) << ", error "
                << format_number(100 * e.relative_error) << "%)\n";
    std::cout << "  support exact: " << (r.support_exact ? "yes" : "no") << "\n";
    write_energy_csv(dir / (p.name + "_energy.csv"), p, *r.hamiltonian);
    return 0;
  }
  const auto r = discover_files(c, nullptr);
  const auto path = dir / (fs::path(c.data).stem().string() + "_report.json");
  write_json(path, r);
  std::cout << "L = " << r["lagrangian"].get<std::string>() << "\n";
  return 0;
}

int cmd_derive(const Common& c, const std::string& lagrangian_file) {
  Expr L;
  std::size_t m = 0;
  std::string name = "derived";
  if (!lagrangian_file.empty()) {
    const auto j = read_json_file(lagrangian_file);
    const auto& s = j.contains("system") ? j["system"] : j;
    try {
      m = s.at("m").get<std::size_t>();
      L = expr_from_json(s.at("expr"));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::ParseError, ex.what());
    }
    name = fs::path(lagrangian_file).stem().string();
  } else {
    require_one_source(c);
    SystemLagrangian sys;
    if (!c.preset.empty()) {
      const auto p = resolve_preset(c);
      RunOptions opt;
      opt.noise = noise_of(c);
      opt.threads = c.threads;
      opt.resimulate = false;
      const auto r = run_benchmark(p, opt);
      if (!r.ok) {
        std::cerr << "error: " << r.failure << "\n";
        return exit_code(*r.failure_code);
      }
      sys = *r.system;
      name = p.name;
    } else {
      discover_files(c, &sys);
      name = fs::path(c.data).stem().string();
    }
    L = sys.expr;
    m = sys.m;
  }
  const auto H = hamiltonian(L, m).expr;
  const auto eom = equations_of_motion(L, m);
  write_json(out_dir(c) / (name + "_derived.json"),
             {{"lagrangian", render(L)}, {"hamiltonian", render(H)}, {"hamiltonian_expr", to_json(H)},
              {"equations_of_motion", to_json(eom)}});
  std::cout << "L = " << render(L) << "\nH = " << render(H) << "\n";
  for (std::size_t i = 0; i < eom.rhs.size(); ++i) std::cout << "a" << i << " = " << render(eom.rhs[i]) << "\n";
  return 0;
}

int cmd_predict(const Common& c, std::optional<double> horizon, bool zero) {
  if (c.preset.empty()) throw Error(ErrorCode::InvalidArgument, "predict needs --preset");
  const auto p = resolve_preset(c);
  RunOptions opt;
  opt.noise = noise_of(c);
  opt.threads = c.threads;
  opt.resimulate = false;
  const auto r = run_benchmark(p, opt);
  if (!r.ok) {
    std::cerr << "error: " << r.failure << "\n";
    return exit_code(*r.failure_code);
  }
  const auto dir = out_dir(c);
  if (zero) {
    if (!p.zero_shot) throw Error(ErrorCode::InvalidArgument, p.name + " defines no alternate initial condition");
    const auto z = zero_shot(p, *r.eom, *p.zero_shot);
    write_json(dir / (p.name + "_zero_shot.json"), {{"preset", p.name},
                                                    {"condition", to_json(*p.zero_shot)},
                                                    {"relative_error", z.relative_error},
                                                    {"max_abs_error", z.max_abs_error},
                                                    {"amplitude", z.amplitude}});
    std::cout << p.name << " zero-shot relative L2 error: " << format_number(z.relative_error) << "\n";
    return 0;
  }
  const double T = horizon.value_or(p.T);
  const auto every = static_cast<std::size_t>(std::max(1.0, std::round(1e-3 / p.dt)));
  const auto pr = perpetual_prediction(p, *r.eom, T, every);
  auto os = open_out(dir / (p.name + "_prediction.csv"));
  write_prediction_csv(os, pr);
  std::cout << p.name << " prediction to " << format_number(T) << " s: max abs error " << format_number(pr.max_abs_error)
            << " (" << format_number(100 * pr.relative_max_error) << "% of amplitude)\n";
  return 0;
}

int cmd_noise_study(const Common& c, std::vector<std::string> names, std::vector<double> levels) {
  if (names.empty()) names = {"HarmonicFree", "Triatomic", "ThreeDof"};
  if (levels.empty()) levels = {1, 2, 3, 4, 5};
  const auto rows = noise_study(names, levels, c.seed, c.threads);
  const auto dir = out_dir(c);
  auto os = open_out(dir / "noise_study.csv");
  write_noise_csv(os, rows);
  write_json(dir / "noise_study.json", to_json(rows));
  write_noise_csv(std::cout, rows);
  return 0;
}

int cmd_generalize(const Common& c, std::size_t units) {
  auto cc = c;
  if (cc.preset.empty()) cc.preset = "Triatomic";
  const auto p = resolve_preset(cc);
  if (p.kind != SystemKind::Triatomic) throw Error(ErrorCode::InvalidArgument, "chain template comes from a triatomic preset");
  RunOptions opt;
  opt.noise = noise_of(c);
  opt.resimulate = false;
  const auto r = run_benchmark(p, opt);
  if (!r.ok) {
    std::cerr << "error: " << r.failure << "\n";
    return exit_code(*r.failure_code);
  }
  const auto tpl = extract_template(*r.system, p.assemble.coupling_tolerance);
  const auto chain = generalize_chain(tpl, units, p);
  const auto dir = out_dir(c);
  write_json(dir / ("chain_" + std::to_string(units) + ".json"),
             {{"units", units}, {"template", to_json(tpl)}, {"relative_error", chain.relative_error},
              {"equations_of_motion", to_json(chain.eom)}});
  auto os = open_out(dir / ("chain_" + std::to_string(units) + ".csv"));
  write_csv(os, chain.generalized);
  std::cout << units << "-atom chain: relative L2 error vs direct simulation " << format_number(chain.relative_error) << "\n";
  return 0;
}

int cmd_benchmark(const Common& c, std::vector<std::string> names) {
  if (names.empty()) names.assign(kPresetNames.begin(), kPresetNames.end());
  std::vector<BenchmarkReport> reports;
  const auto dir = out_dir(c);
  for (const auto& n : names) {
    auto cc = c;
    cc.preset = n;
    RunOptions opt;
    opt.noise = noise_of(c);
    opt.threads = c.threads;
    reports.push_back(run_benchmark(resolve_preset(cc), opt));
    write_json(dir / (n + "_report.json"), to_json(reports.back()));
  }
  auto os = open_out(dir / "summary.csv");
  write_summary_csv(os, reports);
  write_summary_csv(std::cout, reports);
  for (const auto& r : reports)
    if (!r.ok) return exit_code(*r.failure_code);
  return 0;
}

int cmd_presets(const Common& c, bool write) {
  for (const auto& p : builtin_presets()) {
    std::cout << p.name << "\n";
    if (write) write_json(out_dir(c) / (p.name + ".json"), to_json(p));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discover Lagrangians from trajectory data"};
  app.require_subcommand(1);
  Common c;
  auto common = [&c](CLI::App* s, bool source) {
    if (source) {
      s->add_option("--preset", c.preset, "Benchmark preset name");
      s->add_option("--data", c.data, "Trajectory CSV");
      s->add_option("--dict", c.dict, "Dictionary JSON");
      s->add_option("--stencil", c.stencil, "Central-difference order for d/dt (2, 4, 6, 8)");
    }
    s->add_option("--lambda", c.lambda, "Sparsity threshold override");
    s->add_option("--noise", c.noise, "Noise level in percent of channel standard deviation");
    s->add_option("--seed", c.seed, "Noise seed");
    s->add_option("--out", c.out, "Output directory (default $LAGRANGIFY_OUT or .)");
    s->add_option("--threads", c.threads, "Worker threads for per-coordinate regressions");
    s->add_option("--preset-dir", c.preset_dir, "Directory of preset JSON files overriding the built-ins");
  };

  auto* sim = app.add_subcommand("simulate", "Write a preset's ground-truth trajectory CSV");
  sim->add_option("--preset", c.preset, "Benchmark preset name")->required();
  sim->add_option("--duration", c.duration, "Override duration T in seconds");
  sim->add_option("--dt", c.dt, "Override sampling step in seconds");
  common(sim, false);

  auto* disc = app.add_subcommand("discover", "Identify a Lagrangian from a preset or from files");
  common(disc, true);

  std::string lagrangian_file;
  auto* der = app.add_subcommand("derive", "Hamiltonian and equations of motion from a Lagrangian");
  common(der, true);
  der->add_option("--lagrangian", lagrangian_file, "Report or derived JSON holding a system Lagrangian");

  std::optional<double> horizon;
  bool zero = false;
  auto* pred = app.add_subcommand("predict", "Long-horizon or unseen-condition prediction");
  pred->add_option("--preset", c.preset, "Benchmark preset name")->required();
  pred->add_option("--horizon", horizon, "Prediction horizon in seconds");
  pred->add_flag("--zero-shot", zero, "Use the preset's alternate initial condition");
  common(pred, false);

  std::vector<std::string> names;
  std::vector<double> levels;
  auto* noise = app.add_subcommand("noise-study", "Support recovery under increasing noise");
  noise->add_option("--preset", names, "Presets to study (repeatable)");
  noise->add_option("--levels", levels, "Noise levels in percent")->delimiter(',');
  noise->add_option("--seed", c.seed, "Noise seed");
  noise->add_option("--out", c.out, "Output directory");
  noise->add_option("--threads", c.threads, "Worker threads");

  std::size_t units = 30;
  auto* gen = app.add_subcommand("generalize", "Build an n-atom chain from the discovered triatomic cell");
  gen->add_option("--units", units, "Number of atoms")->check(CLI::Range(2, 100000));
  gen->add_option("--preset", c.preset, "Triatomic preset (default Triatomic)");
  gen->add_option("--noise", c.noise, "Noise level for the template data");
  gen->add_option("--seed", c.seed, "Noise seed");
  gen->add_option("--out", c.out, "Output directory");

  std::vector<std::string> bench_names;
  auto* bench = app.add_subcommand("benchmark", "Run full benchmark reports and a summary CSV");
  bench->add_option("--preset", bench_names, "Presets to run (default all)");
  bench->add_option("--lambda", c.lambda, "Sparsity threshold override");
  bench->add_option("--noise", c.noise, "Noise level in percent");
  bench->add_option("--seed", c.seed, "Noise seed");
  bench->add_option("--out", c.out, "Output directory");
  bench->add_option("--threads", c.threads, "Worker threads");

  bool write_presets = false;
  auto* pre = app.add_subcommand("presets", "List built-in presets");
  pre->add_flag("--write", write_presets, "Write each preset as JSON into --out");
  pre->add_option("--out", c.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(c);
    if (*disc) return cmd_discover(c);
    if (*der) return cmd_derive(c, lagrangian_file);
    if (*pred) return cmd_predict(c, horizon, zero);
    if (*noise) return cmd_noise_study(c, names, levels);
    if (*gen) return cmd_generalize(c, units);
    if (*bench) return cmd_benchmark(c, bench_names);
    if (*pre) return cmd_presets(c, write_presets);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
