// Apache License, Version 2.0, refer to LICENSE.txt

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "bnptvp/bnptvp.hpp"

namespace fs = std::filesystem;
using namespace bnptvp;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

unsigned worker_limit() {
  unsigned limit = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BNPTVP_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) limit = static_cast<unsigned>(v);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring malformed BNPTVP_THREADS='" << env << "'\n";
    }
  }
  return limit;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  int n = 3;
  int t_len = 100;
  double sparsity = 0.8;
  std::uint64_t seed = 1;
  std::string out;
  bool allow_explosive = false;
  double noise = 0.1;
  int regimes = 2;
};

std::string fmt_lyapunov(double g) {
  if (std::isinf(g) && g < 0) return "-inf (coefficient products vanish)";
  std::ostringstream os;
  os << g;
  return os.str();
}

int cmd_simulate(const SimulateArgs& a) {
  std::cout << "effective config: simulate --n " << a.n << " --t-len " << a.t_len << " --sparsity " << a.sparsity
            << " --seed " << a.seed << " --noise " << a.noise << " --regimes " << a.regimes << " --out " << a.out
            << (a.allow_explosive ? " --allow-explosive" : "") << "\n";
  SyntheticOptions o;
  o.n = a.n;
  o.T = a.t_len;
  o.sparsity = a.sparsity;
  o.seed = a.seed;
  o.noise_var = a.noise;
  o.regimes = a.regimes;
  o.allow_explosive = a.allow_explosive;
  const SyntheticSystem sys = simulate_synthetic(o);

  fs::create_directories(a.out);
  write_panel(sys.panel, fs::path(a.out) / "panel.csv");

  nlohmann::ordered_json truth;
  truth["n"] = a.n;
  truth["T"] = a.t_len;
  truth["seed"] = a.seed;
  truth["lyapunov"] = std::isfinite(sys.lyapunov) ? nlohmann::ordered_json(sys.lyapunov) : nlohmann::ordered_json("-inf");
  std::vector<std::vector<double>> sigma;
  for (int i = 0; i < a.n; ++i) {
    sigma.emplace_back();
    for (int k = 0; k < a.n; ++k) sigma.back().push_back(sys.sigma(i, k));
  }
  truth["sigma"] = sigma;
  nlohmann::ordered_json coefs = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < sys.path.size(); ++s) {
    nlohmann::ordered_json slice;
    slice["t"] = s + 2;
    std::vector<std::vector<double>> b;
    std::vector<std::vector<int>> support;
    for (int i = 0; i < a.n; ++i) {
      b.emplace_back();
      support.emplace_back();
      for (int k = 0; k < a.n; ++k) {
        b.back().push_back(sys.path[s](i, k));
        support.back().push_back(sys.path[s](i, k) != 0.0 ? 1 : 0);
      }
    }
    slice["B"] = b;
    slice["support"] = support;
    coefs.push_back(slice);
  }
  truth["coefficients"] = coefs;
  std::ofstream(fs::path(a.out) / "truth.json") << truth.dump(1) << "\n";

  std::cout << "lyapunov exponent: " << fmt_lyapunov(sys.lyapunov) << "\n";
  if (sys.lyapunov >= 0.0) std::cout << "warning: system is not certified stationary\n";
  std::cout << "wrote " << (fs::path(a.out) / "panel.csv").string() << " and "
            << (fs::path(a.out) / "truth.json").string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// fit

int cmd_fit(RunConfig cfg, const std::string& config_path, const std::vector<std::pair<std::string, std::string>>& overrides) {
  if (!config_path.empty()) load_config(config_path, cfg);
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  cfg.validate();
  std::cout << "effective config: " << cfg.effective_line() << "\n";

  const Panel panel = read_panel(cfg.input, cfg.demean, cfg.standardize);
  const ModelSpec spec = cfg.to_spec(static_cast<int>(panel.n()), static_cast<int>(panel.T()));

  const int chains = cfg.chains;
  std::vector<PosteriorDraws> results(static_cast<std::size_t>(chains));
  std::vector<double> seconds(static_cast<std::size_t>(chains), 0.0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));
  std::mutex log_mutex;

  auto run_one = [&](int c) {
    try {
      RunOptions ro;
      ro.iters = cfg.iters;
      ro.burn_in = cfg.burn_in;
      ro.thin = cfg.thin;
      ro.seed = cfg.seed + static_cast<std::uint64_t>(c);
      ro.progress_every = cfg.progress_every;
      ro.progress = &std::cerr;
      ro.label = "[chain " + std::to_string(c) + "] ";
      const auto t0 = std::chrono::steady_clock::now();
      PosteriorDraws pd = run_chain(spec, panel, ro);
      seconds[static_cast<std::size_t>(c)] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      pd.info.input = cfg.input;
      results[static_cast<std::size_t>(c)] = std::move(pd);
    } catch (...) {
      std::lock_guard<std::mutex> lock(log_mutex);
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  };

  const unsigned workers = std::min<unsigned>(worker_limit(), static_cast<unsigned>(chains));
  for (int first = 0; first < chains; first += static_cast<int>(workers)) {
    std::vector<std::thread> pool;
    for (int c = first; c < std::min(chains, first + static_cast<int>(workers)); ++c) pool.emplace_back(run_one, c);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (int c = 0; c < chains; ++c) {
    const auto& pd = results[static_cast<std::size_t>(c)];
    const fs::path dir = fs::path(cfg.out) / ("chain_" + std::to_string(c));
    write_draws(pd, dir);
    double kmean = 0.0;
    int kmin = std::numeric_limits<int>::max();
    int kmax = 0;
    for (const auto& d : pd.draws) {
      kmean += d.k_star;
      kmin = std::min(kmin, d.k_star);
      kmax = std::max(kmax, d.k_star);
    }
    if (!pd.draws.empty()) kmean /= static_cast<double>(pd.draws.size());
    else kmin = 0;
    std::cout << "chain " << c << ": seed " << pd.info.seed << ", " << pd.draws.size() << " draws, "
              << seconds[static_cast<std::size_t>(c)] * 1e3 / static_cast<double>(cfg.iters) << " ms/sweep, k* mean "
              << kmean << " range [" << kmin << ", " << kmax << "] -> " << dir.string() << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// graphs / diagnose

std::vector<PosteriorDraws> load_chains(const fs::path& dir) {
  std::vector<PosteriorDraws> chains;
  if (fs::exists(dir / "manifest.json")) {
    chains.push_back(read_draws(dir));
    return chains;
  }
  if (!fs::is_directory(dir)) throw FormatError("draws directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> subdirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && fs::exists(e.path() / "manifest.json")) subdirs.push_back(e.path());
  std::sort(subdirs.begin(), subdirs.end());
  for (const auto& p : subdirs) chains.push_back(read_draws(p));
  if (chains.empty()) throw FormatError("no draws found under '" + dir.string() + "'");
  return chains;
}

PosteriorDraws pool_chains(const std::vector<PosteriorDraws>& chains) {
  PosteriorDraws pooled = chains.front();
  for (std::size_t c = 1; c < chains.size(); ++c)
    pooled.draws.insert(pooled.draws.end(), chains[c].draws.begin(), chains[c].draws.end());
  return pooled;
}

struct GraphsArgs {
  std::string draws;
  std::string out;
  std::string format = "dot";
  double threshold = 0.5;
  bool weighted = false;
};

int cmd_graphs(const GraphsArgs& a) {
  const GraphFormat fmt = parse_graph_format(a.format);
  std::cout << "effective config: graphs --draws " << a.draws << " --out " << a.out << " --format " << a.format
            << " --threshold " << a.threshold << (a.weighted ? " --weighted" : "") << "\n";
  const PosteriorDraws pooled = pool_chains(load_chains(a.draws));
  if (pooled.draws.empty()) throw FormatError("draw set is empty");
  GraphMode mode;
  mode.weighted = a.weighted;
  mode.threshold = a.threshold;
  const auto graphs = extract_graphs(pooled, mode);
  fs::create_directories(a.out);
  std::size_t edges = 0;
  for (const auto& g : graphs) {
    std::ofstream(fs::path(a.out) / ("graph_t" + std::to_string(g.t) + "." + graph_file_extension(fmt)))
        << export_graph(g, fmt);
    edges += g.edges.size();
  }
  std::cout << "wrote " << graphs.size() << " graphs (" << edges << " edges, "
            << (graphs.empty() ? 0 : graphs.front().intensity.size()) << " intensity levels) to " << a.out << "\n";
  return kOk;
}

struct DiagnoseArgs {
  std::string draws;
  std::string out;
  std::int64_t geweke_sweeps = 20000;
  std::uint64_t seed = 1;
};

int cmd_diagnose(const DiagnoseArgs& a) {
  std::cout << "effective config: diagnose --draws " << a.draws << " --out " << a.out << " --geweke-sweeps "
            << a.geweke_sweeps << " --seed " << a.seed << "\n";
  const auto chains = load_chains(a.draws);
  const Summary summary = summarize(chains);
  fs::create_directories(a.out);
  {
    std::ofstream os(fs::path(a.out) / "summary.csv");
    write_summary_csv(summary, os);
  }
  {
    // Whitespace-separated traces for plotting: iteration, chain, k*, sigma11, pi at the first slice.
    std::ofstream os(fs::path(a.out) / "traces.dat");
    os << "# iteration chain k_star sigma11 pi_first\n";
    for (std::size_t c = 0; c < chains.size(); ++c)
      for (const auto& d : chains[c].draws)
        os << d.iteration << ' ' << c << ' ' << d.k_star << ' ' << d.sigma(0, 0) << ' ' << d.pi[0] << '\n';
  }
  std::cout << "summary: " << summary.rows.size() << " parameters over " << chains.size() << " chain(s)"
            << (summary.has_rhat ? ", with R-hat" : "") << "\n";

  if (a.geweke_sweeps > 0) {
    GewekeOptions go;
    go.sweeps = a.geweke_sweeps;
    go.seed = a.seed;
    const ModelSpec gspec = geweke_spec(chains.front().spec.variant);
    const GewekeResult res = geweke_joint_test(gspec, go);
    std::ofstream os(fs::path(a.out) / "geweke.csv");
    os << "statistic,mean_marginal,mean_successive,se_marginal,se_successive,z\n";
    for (const auto& s : res.stats)
      os << s.name << ',' << s.mean_marginal << ',' << s.mean_successive << ',' << s.se_marginal << ','
         << s.se_successive << ',' << s.z << '\n';
    std::cout << "geweke (" << to_string(gspec.variant) << ", n=" << gspec.n << ", T=" << gspec.T << ", "
              << a.geweke_sweeps << " sweeps): max |z| = " << res.max_abs_z()
              << (res.max_abs_z() < 4.0 ? "  ok" : "  SUSPICIOUS") << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spike-and-slab TVP-VAR with a time-series dependent DP slab"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "simulate a sparse piecewise-constant TVP-VAR panel");
  simulate->add_option("--n", sim.n, "number of series")->check(CLI::PositiveNumber);
  simulate->add_option("--t-len", sim.t_len, "number of time points")->check(CLI::Range(3, 1000000));
  simulate->add_option("--sparsity", sim.sparsity, "share of zero coefficients")->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--seed", sim.seed, "random seed");
  simulate->add_option("--out", sim.out, "output directory")->required();
  simulate->add_option("--noise", sim.noise, "innovation variance")->check(CLI::PositiveNumber);
  simulate->add_option("--regimes", sim.regimes, "number of constant-coefficient regimes")->check(CLI::PositiveNumber);
  simulate->add_flag("--allow-explosive", sim.allow_explosive, "write the system even if it is not stable");

  RunConfig cfg;
  std::string config_path;
  std::string f_input, f_out, f_variant;
  std::int64_t f_iters = 0, f_burn = 0, f_thin = 0, f_progress = 0;
  std::uint64_t f_seed = 0;
  int f_chains = 0;
  bool f_standardize = false, f_no_demean = false;
  auto* fit = app.add_subcommand("fit", "run the Gibbs sampler on a CSV panel");
  auto* o_input = fit->add_option("--input", f_input, "CSV panel (header row of series names)");
  fit->add_option("--config", config_path, "key=value configuration file");
  auto* o_variant = fit->add_option("--variant", f_variant, "spike: dirac | normal | de");
  auto* o_iters = fit->add_option("--iters", f_iters, "total sweeps");
  auto* o_burn = fit->add_option("--burn-in", f_burn, "discarded sweeps");
  auto* o_thin = fit->add_option("--thin", f_thin, "keep every k-th sweep");
  auto* o_seed = fit->add_option("--seed", f_seed, "random seed (chain c uses seed + c)");
  auto* o_chains = fit->add_option("--chains", f_chains, "independent chains");
  auto* o_out = fit->add_option("--out", f_out, "output directory");
  auto* o_progress = fit->add_option("--progress-every", f_progress, "progress line interval (0 = silent)");
  auto* o_std = fit->add_flag("--standardize", f_standardize, "scale each series to unit variance");
  auto* o_nodemean = fit->add_flag("--no-demean", f_no_demean, "keep series means");
  std::vector<std::string> f_set;
  fit->add_option("--set", f_set, "hyper-parameter override key=value (repeatable)");

  GraphsArgs ga;
  auto* graphs = app.add_subcommand("graphs", "write per-time Granger graphs from posterior draws");
  graphs->add_option("--draws", ga.draws, "draws directory written by fit")->required();
  graphs->add_option("--out", ga.out, "output directory")->required();
  graphs->add_option("--format", ga.format, "dot | graphml | json");
  graphs->add_option("--threshold", ga.threshold, "inclusion threshold in (0, 1]");
  graphs->add_flag("--weighted", ga.weighted, "keep every edge, weighted by inclusion probability");

  DiagnoseArgs da;
  auto* diagnose = app.add_subcommand("diagnose", "posterior summary and Geweke check");
  diagnose->add_option("--draws", da.draws, "draws directory written by fit")->required();
  diagnose->add_option("--out", da.out, "output directory")->required();
  diagnose->add_option("--geweke-sweeps", da.geweke_sweeps, "sweeps for the joint-distribution test (0 skips)");
  diagnose->add_option("--seed", da.seed, "seed for the Geweke test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*fit) {
      std::vector<std::pair<std::string, std::string>> ov;
      if (*o_input) ov.emplace_back("input", f_input);
      if (*o_out) ov.emplace_back("out", f_out);
      if (*o_variant) ov.emplace_back("variant", f_variant);
      if (*o_iters) ov.emplace_back("iters", std::to_string(f_iters));
      if (*o_burn) ov.emplace_back("burn_in", std::to_string(f_burn));
      if (*o_thin) ov.emplace_back("thin", std::to_string(f_thin));
      if (*o_seed) ov.emplace_back("seed", std::to_string(f_seed));
      if (*o_chains) ov.emplace_back("chains", std::to_string(f_chains));
      if (*o_progress) ov.emplace_back("progress_every", std::to_string(f_progress));
      if (*o_std) ov.emplace_back("standardize", "true");
      if (*o_nodemean) ov.emplace_back("demean", "false");
      for (const auto& kv : f_set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw InvalidParameters("--set expects key=value, got '" + kv + "'");
        ov.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
      }
      return cmd_fit(cfg, config_path, ov);
    }
    if (*graphs) return cmd_graphs(ga);
    if (*diagnose) return cmd_diagnose(da);
  } catch (const InvalidParameters& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const FormatError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kUsage;
}
