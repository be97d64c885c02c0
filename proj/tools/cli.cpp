#include "cli.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "replab/attrition.hpp"
#include "replab/bounds.hpp"
#include "replab/errors.hpp"
#include "replab/ess.hpp"
#include "replab/io.hpp"
#include "replab/sde.hpp"

namespace replab::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return ss.str();
}

namespace {

constexpr const char* kVersion = "0.3.0";

// Everything a command produces, committed only after it has fully succeeded.
struct Run {
  std::vector<std::string> args;
  std::vector<std::string> inputs;
  std::vector<std::pair<std::string, std::string>> outputs;
  std::optional<std::uint64_t> seed;
  std::string primary;  // manifest goes to primary + ".manifest.json"

  void add_output(const std::string& path, std::string content) {
    if (primary.empty()) primary = path;
    outputs.emplace_back(path, std::move(content));
  }

  std::string manifest() const {
    ojson m;
    m["tool"] = "replab";
    m["version"] = kVersion;
    m["command"] = args;
    ojson in = ojson::array();
    for (const auto& p : inputs) in.push_back({{"path", p}, {"sha256", sha256_hex(read_file(p))}});
    m["inputs"] = std::move(in);
    m["seed"] = seed ? ojson(*seed) : ojson(nullptr);
    m["defaults"] = {{"h", kDefaultStep},
                     {"y_cap", kDefaultYCap},
                     {"max_recorded_points", kMaxRecordedPoints},
                     {"extinction_threshold", kExtinctionThreshold}};
    ojson outs = ojson::array();
    for (const auto& [p, c] : outputs) outs.push_back({{"path", p}, {"sha256", sha256_hex(c)}});
    m["outputs"] = std::move(outs);
    return m.dump(2) + "\n";
  }

  void commit() const {
    if (outputs.empty()) return;
    const std::string man = manifest();
    for (const auto& [p, c] : outputs) write_file_atomic(p, c);
    write_file_atomic(primary + ".manifest.json", man);
  }
};

NoiseSpec noise_from(const std::vector<double>& flag, const std::optional<NoiseSpec>& file, std::size_t n) {
  if (!flag.empty()) {
    if (flag.size() == 1) return NoiseSpec::uniform(n, flag[0]);
    if (flag.size() != n) throw FormatError("--sigma needs 1 or n values");
    return NoiseSpec(flag);
  }
  if (file) return *file;
  throw FormatError("no noise coefficients: give sigma in the game file or --sigma");
}

SimplexPoint start_from(const std::vector<double>& flag, std::size_t n) {
  if (flag.empty()) return SimplexPoint::barycenter(n);
  if (flag.size() != n) throw FormatError("--x0 needs n values");
  return SimplexPoint::interior(flag);
}

std::size_t strategy_index(long k, std::size_t n) {
  if (k < 1 || static_cast<std::size_t>(k) > n) throw FormatError("--k must lie in 1..n");
  return static_cast<std::size_t>(k - 1);
}

std::string join(std::span<const double> v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_shortest(v[i]);
  return s + ")";
}

void print_report(const BoundReport& r, std::ostream& out) {
  out << r.name << ": " << to_string(r.verdict) << "\n"
      << "  analytic  " << format_g17(r.analytic_value) << "\n"
      << "  empirical " << format_g17(r.empirical_value) << " (se " << format_g17(r.standard_error) << ")\n";
  for (const auto& [k, v] : r.details) out << "  " << k << " = " << format_g17(v) << "\n";
  for (const auto& n : r.notes) out << "  note: " << n << "\n";
}

int verdict_exit(Verdict v) {
  switch (v) {
    case Verdict::kConsistent: return kExitOk;
    case Verdict::kViolated: return kExitViolated;
    case Verdict::kInconclusive: return kExitInconclusive;
  }
  return kExitInconclusive;
}

// --- analyze ---------------------------------------------------------------

struct AnalyzeArgs {
  std::string game;
  std::string out;
};

int cmd_analyze(const AnalyzeArgs& a, Run& run, std::ostream& out) {
  const GameFile g = parse_game(read_file(a.game));
  run.inputs.push_back(a.game);
  const std::string json = analysis_json(g);
  const auto parsed = ojson::parse(json);
  if (a.out.empty()) {
    out << json;
    return kExitOk;
  }
  out << "lambda2 = " << format_g17(parsed["lambda2"].get<double>()) << " (" << parsed["cnd"].get<std::string>()
      << ")\n";
  if (parsed["equilibria"].is_array())
    for (const auto& e : parsed["equilibria"]) {
      std::vector<double> w = e["strategy"].get<std::vector<double>>();
      out << "equilibrium " << join(w) << " " << e["status"].get<std::string>() << "\n";
    }
  if (parsed["dominance"].is_array())
    for (const auto& d : parsed["dominance"])
      if (d["dominated"] != "none")
        out << "strategy " << d["strategy"].get<std::size_t>() << " " << d["dominated"].get<std::string>()
            << "ly dominated, c1 = " << format_g17(d["c1"].get<double>()) << "\n";
  run.add_output(a.out, json);
  return kExitOk;
}

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string game;
  std::vector<double> x0, sigma;
  double horizon = 10.0;
  double h = kDefaultStep;
  std::uint64_t seed = 0;
  std::size_t paths = 1;
  std::size_t stride = 0;
  std::string statistic = "final:1";
  std::string out, per_path;
  bool ode = false;
  unsigned workers = 0;
};

int cmd_simulate(const SimulateArgs& a, Run& run, std::ostream& out) {
  const GameFile g = parse_game(read_file(a.game));
  run.inputs.push_back(a.game);
  run.seed = a.seed;
  const std::size_t n = g.a.size();
  const SimplexPoint x0 = start_from(a.x0, n);
  SdeConfig cfg;
  cfg.h = a.h;
  cfg.horizon = a.horizon;
  cfg.seed = a.seed;
  cfg.record_stride = a.stride;
  if (a.paths == 0) throw FormatError("--paths must be positive");

  if (a.paths == 1) {
    const Trajectory traj = a.ode ? simulate_ode(g.a, x0, cfg)
                                  : simulate_sde(g.a, noise_from(a.sigma, g.sigma, n), x0, cfg);
    run.add_output(a.out, trajectory_csv(traj));
    out << "wrote " << traj.size() << " points to " << a.out << "\n"
        << "final state " << join(traj.final_state()) << "\n";
    if (traj.clamped()) out << "note: log-ratio clamp engaged\n";
    return kExitOk;
  }
  if (a.ode) throw FormatError("--ode takes a single path");
  const auto b = batch_run(g.a, noise_from(a.sigma, g.sigma, n), x0, cfg, a.paths,
                           parse_statistic(a.statistic, n), BatchOptions{a.workers});
  run.add_output(a.out, batch_json(b));
  if (!a.per_path.empty()) run.add_output(a.per_path, per_path_csv(b.per_path));
  out << b.statistic << ": mean " << format_g17(b.mean) << " (se " << format_g17(b.std_error) << ") over "
      << b.n_paths << " paths";
  if (b.n_failed) out << ", " << b.n_failed << " failed";
  out << "\n";
  return kExitOk;
}

// --- verify ----------------------------------------------------------------

struct VerifyArgs {
  std::string input;
  std::string theorem;
  std::vector<double> x0, sigma;
  std::optional<double> horizon, delta, burn_in, eps, radius;
  std::optional<long> k;
  double h = kDefaultStep;
  std::uint64_t seed = 0;
  std::size_t paths = 200;
  std::string out, per_path;
  unsigned workers = 0;
};

int cmd_verify(const VerifyArgs& a, Run& run, std::ostream& out) {
  run.inputs.push_back(a.input);
  run.seed = a.seed;
  const std::string text = read_file(a.input);
  const std::string& th = a.theorem;

  CampaignOptions opt;
  opt.cfg.h = a.h;
  opt.cfg.seed = a.seed;
  opt.n_paths = a.paths;
  opt.batch.workers = a.workers;
  const double default_t = th == "3.1" ? 20.0 : th == "4.1" ? 50.0 : 200.0;
  opt.cfg.horizon = a.horizon.value_or(default_t);

  BoundReport r;
  if (th == "5.1") {
    const AttritionFile f = parse_attrition(text);
    if (!f.constant) throw FormatError("persistence needs a constant-reward attrition spec");
    const std::size_t n = f.constant->n + 1;
    if (a.sigma.empty()) throw FormatError("persistence needs --sigma");
    r = persistence_experiment(*f.constant, noise_from(a.sigma, std::nullopt, n), start_from(a.x0, n), opt,
                               a.eps.value_or(0.05));
  } else {
    const GameFile g = parse_game(text);
    const std::size_t n = g.a.size();
    const NoiseSpec sigma = noise_from(a.sigma, g.sigma, n);
    const SimplexPoint x0 = start_from(a.x0, n);
    if (th == "2.3a" || th == "2.3b" || th == "2.4") {
      const SimplexPoint p = unique_ess_under_cnd(g.a).strategy;
      const double l2 = lambda2(g.a);
      const double delta = a.delta.value_or(2.0 * kappa(p, sigma) / std::sqrt(-l2));
      if (th == "2.3a")
        r = verify_stationary_mass(g.a, sigma, p, x0, delta, a.burn_in.value_or(opt.cfg.horizon / 5.0), opt);
      else if (th == "2.3b")
        r = verify_hitting_time(g.a, sigma, p, x0, delta, opt);
      else
        r = verify_time_average(g.a, sigma, p, x0, opt);
    } else if (th == "2.8") {
      const SimplexPoint p = unique_ess_under_cnd(modified_matrix(g.a, sigma)).strategy;
      r = verify_time_average_adjusted(g.a, sigma, p, x0, opt);
    } else if (th == "3.1") {
      std::optional<std::size_t> k;
      std::optional<DominatingStrategy> dom;
      for (std::size_t j = 0; j < n && !dom; ++j) {
        if (a.k && strategy_index(*a.k, n) != j) continue;
        if ((dom = search_dominating_strategy(g.a, j))) k = j;
      }
      if (!dom) throw PreconditionError(a.k ? "strategy " + std::to_string(*a.k) + " is not dominated"
                                            : std::string("no dominated strategy"));
      r = verify_extinction_tail(g.a, *k, dom->p, sigma, x0, a.eps.value_or(0.05), opt);
    } else if (th == "4.1") {
      std::optional<std::size_t> k;
      for (std::size_t j = 0; j < n && !k; ++j) {
        if (a.k && strategy_index(*a.k, n) != j) continue;
        if (strict_nash_condition_4_1(g.a, sigma, j)) k = j;
      }
      if (!k) throw PreconditionError("condition a_kk > a_jk + sigma_k^2 holds for no candidate strategy");
      r = stability_basin_probe(g.a, sigma, *k, a.radius.value_or(0.05), opt);
    } else if (th == "4.2") {
      r = coordination_absorption(g.a, sigma, x0, a.eps.value_or(0.01), opt);
    } else if (th == "4.3") {
      r = verify_vertex_hitting(g.a, sigma, x0, a.eps.value_or(0.1), opt);
    } else {
      throw FormatError("unknown theorem tag " + th);
    }
  }
  // Reports carry the tag they were requested under; the campaign name moves to the notes.
  r.notes.insert(r.notes.begin(), "campaign " + r.name);
  r.name = th;
  run.add_output(a.out, bound_report_json(r));
  if (!a.per_path.empty()) run.add_output(a.per_path, per_path_csv(r.per_path));
  print_report(r, out);
  return verdict_exit(r.verdict);
}

// --- attrition -------------------------------------------------------------

struct AttritionArgs {
  std::string spec;
  std::optional<long> n;
  std::optional<double> v, rho;
  bool sweep = false;
  long n_max = 8;
  double v_step = 0.25;
  std::vector<double> rho_fractions{0.0, 0.1, 0.2, 0.4};
  std::optional<double> v_max;
  std::string out;
};

void print_constant(const ConstantAttritionSpec& s, const ClosedFormEss& ess, std::ostream& out) {
  out << "p = " << join(ess.p.weights()) << "\n";
  out << "s = " << (ess.s ? std::to_string(*ess.s) : std::string("(large reward)")) << "\n";
  if (ess.c) out << "c = " << format_g17(*ess.c) << " (t-form " << format_g17(*ess.c_check) << ")\n";
  const PayoffMatrix b = build_constant(s);
  out << "det B = " << format_g17(det_B_5_4(s)) << " (cofactor " << format_g17(determinant(b.matrix()))
      << ")\n";
  const AttritionSpec g = s.general();
  for (std::size_t k = 0; k <= s.n; ++k)
    out << "det B with column " << k << " replaced = " << format_g17(det_column_replaced_5_3(g, k))
        << " (cofactor " << format_g17(determinant(column_replaced(b, k))) << ")\n";
}

int cmd_attrition(const AttritionArgs& a, Run& run, std::ostream& out) {
  std::string payload;
  if (a.sweep) {
    SweepGrid grid;
    if (a.n_max < 1) throw FormatError("--n-max must be positive");
    grid.n_max = static_cast<std::size_t>(a.n_max);
    grid.v_step = a.v_step;
    grid.rho_fractions = a.rho_fractions;
    grid.v_max = a.v_max;
    const auto sweep = ess_sweep(grid);
    payload = sweep_csv(sweep);
    out << sweep.rows.size() << " instances, " << sweep.perturbed << " nudged off a degenerate boundary\n";
  } else if (!a.spec.empty()) {
    run.inputs.push_back(a.spec);
    const AttritionFile f = parse_attrition(read_file(a.spec));
    if (f.constant) {
      const auto ess = closed_form_ess(*f.constant);
      print_constant(*f.constant, ess, out);
      payload = sweep_csv_header(f.constant->n) + sweep_csv_row(*f.constant, ess, f.constant->n);
    } else {
      const AttritionSpec& s = *f.general;
      const PayoffMatrix b = build_modified_5_3(s);
      const auto ess = unique_ess_under_cnd(b);
      const auto zeros = support_threshold_5_2(s);
      ojson j;
      j["n"] = s.n;
      j["p"] = ess.strategy.vec();
      j["support"] = ess.support;
      j["payoff"] = ess.common_payoff;
      j["lambda2"] = lambda2(b);
      j["certificate"] = cnd_certificate(s);
      j["forced_zeros"] = zeros;
      payload = j.dump(2) + "\n";
      out << "p = " << join(ess.strategy.weights()) << "\n";
    }
  } else {
    if (!a.n || !a.v) throw FormatError("give a spec file, --sweep, or --n and --v");
    if (*a.n < 1) throw PreconditionError("n must be at least 1");
    const ConstantAttritionSpec s{static_cast<std::size_t>(*a.n), *a.v, a.rho.value_or(0.0)};
    const auto ess = closed_form_ess(s);
    print_constant(s, ess, out);
    payload = sweep_csv_header(s.n) + sweep_csv_row(s, ess, s.n);
  }
  if (a.out.empty()) out << payload;
  else run.add_output(a.out, payload);
  return kExitOk;
}

// --- replay ----------------------------------------------------------------

int cmd_replay(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
  ojson m;
  try {
    m = ojson::parse(read_file(manifest_path));
  } catch (const ojson::exception& e) {
    throw FormatError(std::string("invalid manifest: ") + e.what());
  }
  if (!m.contains("command") || !m.contains("outputs")) throw FormatError("manifest lacks command or outputs");
  std::vector<std::string> args = m["command"].get<std::vector<std::string>>();
  for (const auto& in : m.value("inputs", ojson::array())) {
    const auto p = in["path"].get<std::string>();
    if (sha256_hex(read_file(p)) != in["sha256"].get<std::string>())
      err << "warning: input " << p << " changed since the recorded run\n";
  }

  static int counter = 0;
  const fs::path scratch =
      fs::temp_directory_path() / ("replab-replay-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::create_directories(scratch);
  struct Cleanup {
    fs::path p;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  } cleanup{scratch};

  std::vector<std::pair<std::string, std::string>> targets;  // recorded path, scratch path
  std::size_t i = 0;
  for (const auto& o : m["outputs"]) {
    const auto p = o["path"].get<std::string>();
    const auto s = (scratch / (std::to_string(i++) + "_" + fs::path(p).filename().string())).string();
    targets.emplace_back(p, s);
    for (auto& arg : args) {
      if (arg == p) arg = s;
      else if (auto eq = arg.find('='); eq != std::string::npos && arg.compare(0, 2, "--") == 0 &&
                                       arg.substr(eq + 1) == p)
        arg = arg.substr(0, eq + 1) + s;
    }
  }

  std::ostringstream sink;
  const int code = run(args, sink, err);
  bool same = true;
  i = 0;
  for (const auto& o : m["outputs"]) {
    const auto& [recorded, replayed] = targets[i++];
    std::string digest = "(missing)";
    if (fs::exists(replayed)) digest = sha256_hex(read_file(replayed));
    const bool match = digest == o["sha256"].get<std::string>();
    same = same && match;
    out << (match ? "identical " : "DIFFERENT ") << recorded << "\n";
  }
  out << "replayed command exited with " << code << "\n";
  return same ? kExitOk : kExitViolated;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"replab: stochastic replicator dynamics laboratory", "replab"};
  app.set_help_flag("--help", "Print help and exit");  // -h is taken by the step size
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Static analysis of a game file");
  analyze->add_option("game", an.game, "Game JSON")->required();
  analyze->add_option("--out", an.out, "Report JSON (default: stdout)");

  SimulateArgs si;
  auto* simulate = app.add_subcommand("simulate", "Simulate paths of the stochastic dynamics");
  simulate->add_option("game", si.game, "Game JSON")->required();
  simulate->add_option("--x0", si.x0, "Initial state")->delimiter(',');
  simulate->add_option("--sigma", si.sigma, "Noise coefficients (one value means uniform)")->delimiter(',');
  simulate->add_option("--T", si.horizon, "Horizon")->capture_default_str();
  simulate->add_option("--h", si.h, "Step size")->capture_default_str();
  simulate->add_option("--seed", si.seed, "Seed")->required();
  simulate->add_option("--paths", si.paths, "Number of paths; 1 writes a trajectory CSV")->capture_default_str();
  simulate->add_option("--stride", si.stride, "Recording stride (0 = automatic)");
  simulate->add_option("--statistic", si.statistic,
                       "Batch statistic: final:K, above:K:LEVEL, vertex:EPS, hit_vertex:EPS, log_rate:K")
      ->capture_default_str();
  simulate->add_flag("--ode", si.ode, "Integrate the deterministic dynamics instead");
  simulate->add_option("--out", si.out, "Output path")->required();
  simulate->add_option("--per-path", si.per_path, "Per-path CSV for batches");
  simulate->add_option("--workers", si.workers, "Worker threads (never affects outputs)");

  VerifyArgs ve;
  auto* verify = app.add_subcommand("verify", "Hold an analytic bound against simulated paths");
  verify->add_option("input", ve.input, "Game JSON, or attrition JSON for 5.1")->required();
  verify->add_option("--theorem", ve.theorem, "Bound to check")
      ->required()
      ->check(CLI::IsMember({"2.3a", "2.3b", "2.4", "2.8", "3.1", "4.1", "4.2", "4.3", "5.1"}));
  verify->add_option("--x0", ve.x0, "Initial state")->delimiter(',');
  verify->add_option("--sigma", ve.sigma, "Noise coefficients")->delimiter(',');
  verify->add_option("--T", ve.horizon, "Horizon");
  verify->add_option("--h", ve.h, "Step size")->capture_default_str();
  verify->add_option("--seed", ve.seed, "Seed")->required();
  verify->add_option("--paths", ve.paths, "Number of paths")->capture_default_str();
  verify->add_option("--k", ve.k, "Strategy (1-based)");
  verify->add_option("--delta", ve.delta, "Ball radius for 2.3a/2.3b");
  verify->add_option("--burn-in", ve.burn_in, "Burn-in for 2.3a (default T/5)");
  verify->add_option("--eps", ve.eps, "Threshold for 3.1, 4.2, 4.3 and 5.1");
  verify->add_option("--radius", ve.radius, "Base radius for 4.1");
  verify->add_option("--out", ve.out, "Report JSON")->required();
  verify->add_option("--per-path", ve.per_path, "Per-path CSV");
  verify->add_option("--workers", ve.workers, "Worker threads (never affects outputs)");

  AttritionArgs at;
  auto* attrition = app.add_subcommand("attrition", "War of attrition ESS");
  attrition->add_option("spec", at.spec, "Attrition JSON");
  attrition->add_option("--n", at.n, "Number of effort levels above zero");
  attrition->add_option("--v", at.v, "Reward");
  attrition->add_option("--rho", at.rho, "Tie penalty");
  attrition->add_flag("--sweep", at.sweep, "Enumerate the closed form over a grid");
  attrition->add_option("--n-max", at.n_max, "Sweep: largest n")->capture_default_str();
  attrition->add_option("--v-step", at.v_step, "Sweep: v spacing")->capture_default_str();
  attrition->add_option("--rho-fractions", at.rho_fractions, "Sweep: rho / v values")->delimiter(',');
  attrition->add_option("--v-max", at.v_max, "Sweep: largest v (default 2n + 2 rho + 1)");
  attrition->add_option("--out", at.out, "CSV or JSON output (default: stdout)");

  std::string manifest;
  auto* replay = app.add_subcommand("replay", "Re-run a manifest and compare output hashes");
  replay->add_option("manifest", manifest, "Manifest JSON")->required();

  std::vector<const char*> argv{"replab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitMalformed;
  }

  Run run_state;
  run_state.args = args;
  try {
    int code = kExitOk;
    if (*analyze) code = cmd_analyze(an, run_state, out);
    else if (*simulate) code = cmd_simulate(si, run_state, out);
    else if (*verify) code = cmd_verify(ve, run_state, out);
    else if (*attrition) code = cmd_attrition(at, run_state, out);
    else if (*replay) return cmd_replay(manifest, out, err);
    run_state.commit();
    return code;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitMalformed;
  } catch (const PreconditionError& e) {
    err << "precondition failed: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitMalformed;
  }
}

}  // namespace replab::cli
