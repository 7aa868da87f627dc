// Command-line front end: solve, compare, spectra, aux-dump, gen.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "dnum/diagnostics.hpp"
#include "dnum/harness.hpp"

namespace fs = std::filesystem;
using namespace dnum;

namespace {

/// Relative output paths land under $DNUM_OUTPUT_DIR when it is set.
fs::path resolve_output(const std::string& path) {
  const char* dir = std::getenv("DNUM_OUTPUT_DIR");
  fs::path p = path;
  if (dir != nullptr && *dir != '\0' && p.is_relative()) {
    p = fs::path(dir) / p;
  }
  return p;
}

std::string output_path(const std::string& path) {
  fs::path p = resolve_output(path);
  if (p.has_parent_path()) {
    fs::create_directories(p.parent_path());
  }
  return p.string();
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(output_path(path), text);
  }
}

struct SolveOptions {
  std::string network;
  SolverConfig config;
  bool two_pass = false;
  bool exact = false;
  bool route_price_ratio = false;
  bool single_mu_scale = false;
  std::string trace;
  std::string json;
};

int run_solve(const SolveOptions& opt) {
  SolverConfig config = opt.config;
  if (opt.exact) {
    config.mode = DirectionMode::Exact;
  }
  if (opt.route_price_ratio) {
    config.denominator = RatioDenominator::RoutePrice;
  }
  validate(config);
  Network net = load_network(opt.network);

  Json report;
  if (opt.two_pass) {
    TwoPassResult run = two_pass_solve(
        net, config, opt.single_mu_scale ? ScaleRule::SingleMu : ScaleRule::BarrierCount);
    if (!opt.trace.empty()) {
      fs::path base = opt.trace;
      std::string stem = (base.parent_path() / base.stem()).string();
      std::string ext = base.has_extension() ? base.extension().string() : ".csv";
      emit(stem + "_pass1" + ext, trace_to_csv(run.first.trace));
      emit(stem + "_pass2" + ext, trace_to_csv(run.second.trace));
    }
    report = Json{{"scale", run.scale},
                  {"shift", run.shift},
                  {"h", eval_h(net, run.x)},
                  {"first", solve_to_json(run.first)},
                  {"second", solve_to_json(run.second)}};
    std::cout << "two-pass: scale " << format_number(run.scale) << ", h "
              << format_number(eval_h(net, run.x)) << ", counted iterations "
              << run.first.counted_iterations() + run.second.counted_iterations()
              << '\n';
  } else {
    SolveResult run = newton_solve(BarrierProblem{net, config.mu, 1.0}, config);
    if (!opt.trace.empty()) {
      emit(opt.trace, trace_to_csv(run.trace));
    }
    report = solve_to_json(run);
    report["h"] = eval_h(net, run.x);
    std::cout << (run.converged ? "converged" : "stopped at the iteration cap")
              << ": f " << format_number(run.trace.back().f) << ", h "
              << format_number(eval_h(net, run.x)) << ", primal steps "
              << run.primal_steps() << ", dual iterations " << run.dual_iterations()
              << '\n';
  }
  if (!opt.json.empty()) {
    emit(opt.json, report.dump(2) + '\n');
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed inexact Newton solver for network utility maximization"};
  app.require_subcommand(1);

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one network");
  solve_cmd->add_option("network", solve.network, "Network JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  solve_cmd->add_option("--mu", solve.config.mu, "Barrier coefficient (>= 1)");
  solve_cmd->add_option("--p", solve.config.p, "Relative direction error tolerance");
  solve_cmd->add_option("--epsilon", solve.config.epsilon, "Absolute error tolerance");
  solve_cmd->add_option("--V", solve.config.V, "Phase threshold in (0, 0.267)");
  solve_cmd->add_option("--b", solve.config.b, "Stepsize constant");
  solve_cmd->add_option("--T", solve.config.stage1_budget,
                        "Stage-1 dual budget (0 derives it)");
  solve_cmd->add_option("--theta-term", solve.config.theta_term,
                        "Termination threshold on theta");
  solve_cmd->add_option("--max-iters", solve.config.max_primal_iters,
                        "Primal iteration cap");
  solve_cmd->add_option("--a", solve.config.a, "Two-pass relative error target");
  solve_cmd->add_flag("--two-pass", solve.two_pass, "Run the two-pass scheme");
  solve_cmd->add_flag("--single-mu-scale", solve.single_mu_scale,
                      "Second-pass scale from a single mu instead of one per log term");
  solve_cmd->add_flag("--exact", solve.exact, "Use dense exact directions");
  solve_cmd->add_flag("--route-price-ratio", solve.route_price_ratio,
                      "Stage-1 ratio over the weighted route price alone");
  solve_cmd->add_option("--trace", solve.trace, "Trace CSV output");
  solve_cmd->add_option("--json", solve.json, "Full JSON report output");

  std::string spec_file;
  std::string summary_out;
  std::string trace_dir;
  int tune = 0;
  std::string tune_out;
  auto* compare_cmd = app.add_subcommand("compare", "Run a comparison experiment");
  compare_cmd->add_option("spec", spec_file, "Experiment spec JSON")
      ->required()
      ->check(CLI::ExistingFile);
  compare_cmd->add_option("--summary", summary_out, "Summary JSON output (- for stdout)");
  compare_cmd->add_option("--traces", trace_dir, "Directory for per-trial trace CSVs");
  compare_cmd->add_option("--tune", tune,
                          "Grid-search baseline stepsizes on this many calibration "
                          "networks first");
  compare_cmd->add_option("--tune-out", tune_out, "Write tuned stepsizes here");

  std::string spectra_file;
  int enumeration_limit = 20;
  double spectra_mu = 1.0;
  auto* spectra_cmd = app.add_subcommand("spectra", "Dual-graph report at the start point");
  spectra_cmd->add_option("network", spectra_file, "Network JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  spectra_cmd->add_option("--limit", enumeration_limit, "Max links for exact max cut");
  spectra_cmd->add_option("--mu", spectra_mu, "Barrier coefficient");

  std::string aux_file;
  std::string aux_out;
  auto* aux_cmd = app.add_subcommand("aux-dump", "Dump the auxiliary graph");
  aux_cmd->add_option("network", aux_file, "Network JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  aux_cmd->add_option("--out", aux_out, "Output file (default stdout)");

  int gen_links = 0;
  int gen_sources = 0;
  double gen_prob = 0.5;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a random network");
  gen_cmd->add_option("--links", gen_links, "Number of links")->required();
  gen_cmd->add_option("--sources", gen_sources, "Number of sources")->required();
  gen_cmd->add_option("--prob", gen_prob, "Bernoulli routing probability");
  gen_cmd->add_option("--seed", gen_seed, "Random seed");
  gen_cmd->add_option("--out", gen_out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve_cmd) {
      return run_solve(solve);
    }
    if (*compare_cmd) {
      fs::path spec_path = spec_file;
      ExperimentSpec spec;
      Json doc = read_json_file(spec_file);
      if (tune > 0) {
        // Stepsizes are about to be replaced; accept a spec without them.
        Json relaxed = doc;
        relaxed["stepsizes"] = Json{{"subgradient", 1.0}, {"diagonal_scaled", 1.0}};
        spec = spec_from_json(relaxed, spec_path.parent_path());
        std::vector<double> grid = default_stepsize_grid();
        spec.stepsizes = tune_stepsizes(spec, tune, grid);
        Json tuned = Json::object();
        for (const auto& [name, value] : spec.stepsizes) {
          tuned[name] = value;
        }
        std::cerr << "tuned stepsizes: " << tuned.dump() << '\n';
        if (!tune_out.empty()) {
          emit(tune_out, tuned.dump(2) + '\n');
        }
      } else {
        spec = spec_from_json(doc, spec_path.parent_path());
      }
      if (!trace_dir.empty()) {
        spec.trace_dir = trace_dir;
      }
      if (!spec.trace_dir.empty()) {
        spec.trace_dir = resolve_output(spec.trace_dir).string();
      }
      if (!summary_out.empty()) {
        spec.summary_path = summary_out;
      }
      ComparisonResult result = run_comparison(spec);
      for (const MethodSummary& s : result.summary) {
        std::cerr << s.method << ": mean " << format_number(s.mean) << " over "
                  << s.reached << " trials, " << s.failed << " failed\n";
      }
      std::string text = comparison_to_json(spec, result).dump(2) + '\n';
      emit(spec.summary_path.empty() ? "-" : spec.summary_path, text);
      return 0;
    }
    if (*spectra_cmd) {
      Network net = load_network(spectra_file);
      BarrierProblem problem{net, spectra_mu, 1.0};
      if (!(spectra_mu > 0.0)) {
        throw Error("mu must be positive");
      }
      Vector hess = eval_hessian_diag(problem, feasible_init(net));
      SpectralReport report = spectral_diagnostics(net, hess, enumeration_limit);
      Json j = spectral_to_json(report);
      j["max_cut_computed"] = report.max_cut.has_value();
      std::cout << j.dump(2) << '\n';
      return 0;
    }
    if (*aux_cmd) {
      Network net = load_network(aux_file);
      AuxiliaryGraph aux = build_auxiliary_graph(net);
      emit(aux_out, aux_graph_to_json(aux).dump(2) + '\n');
      return 0;
    }
    if (*gen_cmd) {
      Network net = random_network(gen_links, gen_sources, gen_prob, gen_seed);
      emit(gen_out, network_to_json(net).dump(2) + '\n');
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
