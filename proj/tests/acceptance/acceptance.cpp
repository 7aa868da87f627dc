// Acceptance checks. One PASS/FAIL line per criterion; tolerances are fixed here.
// Exit status is nonzero only when a criterion outside the known-failure list fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dnum/diagnostics.hpp"
#include "dnum/harness.hpp"
#include "../unit/support.hpp"

using namespace dnum;
using namespace dnum::testing;
namespace fs = std::filesystem;

namespace {

// Criteria whose failure is analysed in the README (limits of the stated bounds
// and of the comparison protocol); they still print FAIL when they fail.
const std::set<int> kKnownFailures{3, 9, 10};

constexpr double kFixedPointTol = 1e-9;
constexpr double kEquivalenceTol = 1e-12;
constexpr double kBoundSlack = 1e-12;
constexpr double kSectionTol = 0.05;
constexpr double kSumTol = 1e-12;
constexpr double kFeasTol = 1e-9;
constexpr double kTwoPassTol = 0.01;
constexpr double kComparisonGap = 10.0;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Network experiment_network(std::uint64_t seed) {
  return random_network(15, 8, 0.5, seed);
}

Verdict dual_splitting_soundness() {
  std::mt19937_64 gen(101);
  int bad_radius = 0;
  int bad_fixed_point = 0;
  double worst_radius = 0.0;
  double worst_error = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Network net = random_instance(seed + 10'000);
    BarrierProblem problem{net, 1.0, 1.0};
    Vector x = random_feasible_point(net, gen);
    Vector hess = eval_hessian_diag(problem, x);
    Vector grad = eval_grad(problem, x);
    SplittingData split = build_splitting(net, hess, grad);
    Matrix bbar = split.row_sums.asDiagonal();
    Matrix iteration = split.pivot().cwiseInverse().asDiagonal() * (bbar - split.off_diag);
    double radius = Eigen::EigenSolver<Matrix>(iteration).eigenvalues().cwiseAbs().maxCoeff();
    worst_radius = std::max(worst_radius, radius);
    bad_radius += !(radius < 1.0);

    Vector exact = solve_dual_exact(net, hess, grad);
    Vector w = Vector::Ones(net.num_links());
    for (int t = 0; t < 200'000; ++t) {
      Vector next = dual_step_matrix(split, w);
      bool still = (next - w).lpNorm<Eigen::Infinity>() == 0.0;
      w = std::move(next);
      if (still || (t % 64 == 0 &&
                    (w - exact).lpNorm<Eigen::Infinity>() <= 1e-3 * kFixedPointTol)) {
        break;
      }
    }
    double error = (w - exact).lpNorm<Eigen::Infinity>() /
                   std::max(1.0, exact.lpNorm<Eigen::Infinity>());
    worst_error = std::max(worst_error, error);
    bad_fixed_point += !(error <= kFixedPointTol);
  }
  return {bad_radius == 0 && bad_fixed_point == 0,
          "100 networks; max spectral radius " + fmt(worst_radius) +
              ", max fixed-point error " + fmt(worst_error)};
}

Verdict distributed_equivalence() {
  std::mt19937_64 gen(202);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Network net = random_instance(seed + 20'000);
    BarrierProblem problem{net, 1.0, 1.0};
    Vector x = random_feasible_point(net, gen);
    Vector hess = eval_hessian_diag(problem, x);
    Vector grad = eval_grad(problem, x);
    Vector w = random_vector(net.num_links(), gen, -2.0, 2.0);
    Vector matrix_step = dual_step_matrix(build_splitting(net, hess, grad), w);
    DualState state = make_dual_state(net, hess, w);
    Vector distributed = dual_step_distributed(net, hess, grad, state).w;
    double scale = std::max(1.0, matrix_step.lpNorm<Eigen::Infinity>());
    worst = std::max(worst, (distributed - matrix_step).lpNorm<Eigen::Infinity>() / scale);
  }
  return {worst <= kEquivalenceTol, "100 pairs; max difference " + fmt(worst)};
}

Vector section_point(const Network& net) {
  Vector x(net.num_sources() + net.num_links());
  x.head(net.num_sources()).setConstant(10.0);
  x.tail(net.num_links()) = net.capacities() - net.link_loads(x.head(net.num_sources()));
  return x;
}

Verdict spectral_bounds() {
  std::mt19937_64 gen(303);
  int lower_violations = 0;
  int upper_violations = 0;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Network net = random_instance(seed + 30'000);
    Vector hess = eval_hessian_diag(BarrierProblem{net, 1.0, 1.0},
                                    random_feasible_point(net, gen));
    SpectralReport r = spectral_diagnostics(net, hess, 20);
    ++checked;
    upper_violations += r.lambda1 > r.upper_bound + kBoundSlack;
    lower_violations += r.lower_bound && *r.lower_bound > r.lambda1 + kBoundSlack;
  }
  bool examples_ok = true;
  std::string examples;
  for (auto [file, target] : {std::pair{"congested.json", 0.47}, std::pair{"spread.json", 0.12}}) {
    Network net = load_network(data_file(file));
    SpectralReport r = spectral_diagnostics(
        net, eval_hessian_diag(BarrierProblem{net, 1.0, 1.0}, section_point(net)));
    bool ok = std::abs(r.lambda1 - target) <= kSectionTol && r.lower_bound &&
              *r.lower_bound <= r.lambda1 + kBoundSlack &&
              r.lambda1 <= r.upper_bound + kBoundSlack;
    examples_ok = examples_ok && ok;
    examples += std::string(", ") + file + " lambda1 " + fmt(r.lambda1) + " in [" +
                fmt(r.lower_bound.value_or(0.0)) + ", " + fmt(r.upper_bound) + "]";
  }
  return {lower_violations == 0 && upper_violations == 0 && examples_ok,
          std::to_string(checked) + " networks; lower-bound violations " +
              std::to_string(lower_violations) + ", upper-bound violations " +
              std::to_string(upper_violations) + examples};
}

Verdict auxiliary_graph() {
  int bad = 0;
  int wrong_rounds = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Network net = random_instance(seed + 40'000);
    AuxiliaryGraph aux = build_auxiliary_graph(net);
    bad += !verify_auxiliary_graph(net, aux).empty();
    wrong_rounds += aux.construction_rounds != net.num_sources() - 1;
  }
  return {bad == 0 && wrong_rounds == 0,
          "500 networks; property failures " + std::to_string(bad) +
              ", round-count mismatches " + std::to_string(wrong_rounds)};
}

std::set<int> neighborhood(const std::vector<std::vector<int>>& adj, int i, int t) {
  std::set<int> seen{i};
  std::vector<int> frontier{i};
  for (int step = 0; step < t; ++step) {
    std::vector<int> next;
    for (int u : frontier) {
      for (int v : adj[u]) {
        if (seen.insert(v).second) {
          next.push_back(v);
        }
      }
    }
    frontier = std::move(next);
  }
  return seen;
}

double sigma(const Network& net, const std::set<int>& sources, const Vector& y_star,
             const Vector& z_star) {
  double total = 0.0;
  for (int i : sources) {
    total += y_star[i];
    for (int l : net.route(i)) {
      total += z_star[l];
    }
  }
  return total;
}

Verdict distributed_summation() {
  std::mt19937_64 gen(505);
  double worst_final = 0.0;
  double worst_round = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Network net = random_instance(seed + 50'000, 20, 8);
    AuxiliaryGraph aux = build_auxiliary_graph(net);
    auto adj = aux.adjacency();
    Vector y_star = random_vector(net.num_sources(), gen, 0.0, 2.0);
    Vector z_star = random_vector(net.num_links(), gen, 0.0, 2.0);
    SummationResult r = distributed_sum(net, aux, y_star, z_star, true);
    double direct = y_star.sum();
    for (int l = 0; l < net.num_links(); ++l) {
      direct += static_cast<double>(net.users(l).size()) * z_star[l];
    }
    for (int i = 0; i < net.num_sources(); ++i) {
      worst_final = std::max(worst_final, std::abs(r.source_values[i] - direct) / direct);
    }
    for (int l = 0; l < net.num_links(); ++l) {
      worst_final = std::max(worst_final, std::abs(r.link_values[l] - direct) / direct);
    }
    for (int t = 1; t <= net.num_sources(); ++t) {
      for (int i = 0; i < net.num_sources(); ++i) {
        double expected = sigma(net, neighborhood(adj, i, t), y_star, z_star);
        worst_round = std::max(worst_round,
                               std::abs(r.source_history[t][i] - expected) / expected);
      }
      for (int l = 0; l < net.num_links(); ++l) {
        std::set<int> joined;
        for (int i : aux.theta[l]) {
          auto n = neighborhood(adj, i, t - 1);
          joined.insert(n.begin(), n.end());
        }
        double expected = sigma(net, joined, y_star, z_star);
        worst_round = std::max(worst_round,
                               std::abs(r.link_history[t][l] - expected) / expected);
      }
    }
  }
  return {worst_final <= kSumTol && worst_round <= kSumTol,
          "100 networks; max relative error final " + fmt(worst_final) +
              ", per round " + fmt(worst_round)};
}

double h_norm_sq(const Vector& v, const Vector& hess) {
  return (v.array().square() * hess.array()).sum();
}

Verdict error_control() {
  std::mt19937_64 gen(606);
  int accepted = 0;
  int stage_two = 0;
  int violations = 0;
  int step_checks = 0;
  int step_violations = 0;
  for (std::uint64_t seed = 0; accepted < 100; ++seed) {
    Network net = experiment_network(seed + 60'000);
    BarrierProblem problem{net, 1.0, 1.0};
    Vector x = random_feasible_point(net, gen);
    Vector hess = eval_hessian_diag(problem, x);
    Vector grad = eval_grad(problem, x);
    Vector exact_w = solve_dual_exact(net, hess, grad);
    ErrorControlConfig cfg;
    // Rotate through a cold start with the default budget, a cold start with a
    // single step, and a warm start near the fixed point, so both stages accept.
    cfg.stage1_budget = seed % 3 == 1 ? 1 : 0;
    Vector start = Vector::Ones(net.num_links());
    if (seed % 3 == 2) {
      start = exact_w + 1e-6 * random_vector(net.num_links(), gen);
    }
    DualSolveResult r = run_dual_with_error_control(net, hess, grad, cfg, start);
    Vector exact_dir = primal_direction(net, hess, grad, exact_w).delta;
    Vector dir = primal_direction(net, hess, grad, r.w).delta;
    double gamma = h_norm_sq(exact_dir - dir, hess);
    violations += gamma > cfg.p * cfg.p * h_norm_sq(dir, hess) + cfg.epsilon;
    stage_two += r.certificate.stage == 2;
    ++accepted;

    // Step-length bound on the distance to the fixed point, along the whole run.
    double F = r.certificate.spectral_bound;
    double factor = std::sqrt(static_cast<double>(net.num_links())) / (1.0 - F);
    LinkAggregates agg = gather_link_aggregates(net, hess, grad);
    DualState state = make_dual_state(net, hess, start);
    for (std::int64_t t = 0; t <= r.certificate.dual_iters; ++t) {
      DualState next = dual_step_distributed(net, hess, agg, state);
      double bound = factor * (next.w - state.w).lpNorm<Eigen::Infinity>();
      double distance = (exact_w - state.w).lpNorm<Eigen::Infinity>();
      ++step_checks;
      step_violations += distance > bound * (1.0 + 1e-9) + 1e-12;
      state = std::move(next);
    }
  }
  return {violations == 0 && step_violations == 0,
          std::to_string(accepted) + " accepted iterates (" + std::to_string(stage_two) +
              " by stage 2); error-bound violations " + std::to_string(violations) +
              ", step-length bound violations " + std::to_string(step_violations) +
              " of " + std::to_string(step_checks)};
}

struct SolveCase {
  std::string name;
  Network net;
  SolveResult run;
  double f_ref = 0.0;
};

std::vector<SolveCase> newton_cases() {
  std::vector<SolveCase> cases;
  SolverConfig cfg;
  cfg.record_exact_decrement = true;
  cfg.record_iterates = true;
  auto add = [&](std::string name, Network net) {
    BarrierProblem problem{net, 1.0, 1.0};
    double f_ref = solve_barrier_reference(problem, feasible_init(net)).f;
    SolveResult run = newton_solve(problem, cfg);
    cases.push_back({std::move(name), std::move(net), std::move(run), f_ref});
  };
  add("fig1", fig1());
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    add("random" + std::to_string(seed), experiment_network(seed + 70'000));
  }
  return cases;
}

Verdict primal_invariants(const std::vector<SolveCase>& cases) {
  SolverConfig cfg;
  int nonpositive = 0;
  int infeasible = 0;
  int decrease_violations = 0;
  int damped_steps = 0;
  for (const SolveCase& c : cases) {
    for (const IterationRecord& r : c.run.trace) {
      nonpositive += !(r.x.minCoeff() > 0.0);
      infeasible += r.feas_residual > kFeasTol;
    }
    PhaseReport report = phase_diagnostics(c.run.trace, cfg, c.f_ref);
    damped_steps += report.damped_checks;
    for (const PhaseViolation& v : report.violations) {
      decrease_violations += v.check == "damped_decrease" || v.check == "stepsize_bracket";
    }
  }
  DampedConstants d = damped_constants(cfg);
  return {nonpositive == 0 && infeasible == 0 && decrease_violations == 0 && d.valid,
          std::to_string(cases.size()) + " solves; nonpositive iterates " +
              std::to_string(nonpositive) + ", infeasible " + std::to_string(infeasible) +
              ", damped-decrease violations " + std::to_string(decrease_violations) +
              " of " + std::to_string(damped_steps) + " (required decrease " +
              fmt(d.decrease) + ")"};
}

Verdict quadratic_phase(const std::vector<SolveCase>& cases) {
  SolverConfig cfg;
  int rate_checks = 0;
  int rate_violations = 0;
  int sub_checks = 0;
  int sub_violations = 0;
  int unconverged = 0;
  for (const SolveCase& c : cases) {
    unconverged += !c.run.converged;
    PhaseReport report = phase_diagnostics(c.run.trace, cfg, c.f_ref);
    rate_checks += report.quadratic_checks;
    sub_checks += report.suboptimality_checks;
    for (const PhaseViolation& v : report.violations) {
      rate_violations += v.check == "quadratic_rate";
      sub_violations += v.check == "suboptimality";
    }
  }
  return {rate_violations == 0 && sub_violations == 0 && unconverged == 0 && rate_checks > 0,
          "rate violations " + std::to_string(rate_violations) + " of " +
              std::to_string(rate_checks) + ", suboptimality violations " +
              std::to_string(sub_violations) + " of " + std::to_string(sub_checks) +
              ", unconverged " + std::to_string(unconverged)};
}

Verdict barrier_error() {
  int barrier_violations = 0;
  double worst_gap = 0.0;
  double worst_relative = 0.0;
  int two_pass_failures = 0;
  SolverConfig cfg;
  cfg.a = 0.01;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Network net = experiment_network(seed + 90'000);
    ReferenceSolution ref = solve_utility_reference(net);
    BarrierProblem problem{net, 1.0, 1.0};
    double h_mu = solve_barrier_reference(problem, feasible_init(net)).h;
    double gap = h_mu - ref.h;
    worst_gap = std::max(worst_gap, gap);
    barrier_violations += gap > problem.mu;
    TwoPassResult run = two_pass_solve(net, cfg);
    double relative = std::abs(eval_h(net, run.x) - ref.h) / std::abs(ref.h);
    worst_relative = std::max(worst_relative, relative);
    two_pass_failures += !(relative <= kTwoPassTol);
  }
  return {barrier_violations == 0 && two_pass_failures == 0,
          "20 networks; barrier gap above mu on " + std::to_string(barrier_violations) +
              " (max gap " + fmt(worst_gap) + "), two-pass above 1% on " +
              std::to_string(two_pass_failures) + " (max " + fmt(100 * worst_relative) +
              "%)"};
}

Verdict comparison() {
  ExperimentSpec spec = spec_from_json(read_json_file(data_file("compare_50.json")),
                                       DNUM_DATA_DIR);
  ComparisonResult result = run_comparison(spec);
  double newton = 0.0;
  std::vector<double> baselines;
  std::string detail;
  bool all_reached = true;
  for (const MethodSummary& s : result.summary) {
    all_reached = all_reached && s.failed == 0;
    if (s.method == "newton") {
      newton = s.mean;
    } else {
      baselines.push_back(s.mean);
    }
    detail += s.method + " mean " + fmt(s.mean) + " (" + std::to_string(s.reached) + "/" +
              std::to_string(spec.trials) + " reached); ";
  }
  bool gap = !baselines.empty();
  for (double b : baselines) {
    gap = gap && kComparisonGap * newton <= b;
  }
  return {gap && all_reached, detail + "required gap " + fmt(kComparisonGap) + "x"};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Verdict determinism() {
  ExperimentSpec spec = spec_from_json(read_json_file(data_file("compare_small.json")),
                                       DNUM_DATA_DIR);
  fs::path root = fs::temp_directory_path() / "dnum_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::string> summaries;
  for (const char* run : {"a", "b"}) {
    spec.trace_dir = (root / run).string();
    summaries.push_back(comparison_to_json(spec, run_comparison(spec)).dump(2));
  }
  int files = 0;
  int differing = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    ++files;
    differing += slurp(entry.path()) != slurp(root / "b" / entry.path().filename());
  }
  SolverConfig cfg;
  std::string solve_a = trace_to_csv(newton_solve(BarrierProblem{fig1(), 1.0, 1.0}, cfg).trace);
  std::string solve_b = trace_to_csv(newton_solve(BarrierProblem{fig1(), 1.0, 1.0}, cfg).trace);
  std::string gen_a = network_to_json(random_network(15, 8, 0.5, 42)).dump();
  std::string gen_b = network_to_json(random_network(15, 8, 0.5, 42)).dump();
  fs::remove_all(root);
  bool ok = summaries[0] == summaries[1] && differing == 0 && files > 0 &&
            solve_a == solve_b && gen_a == gen_b;
  return {ok, std::to_string(files) + " trace files compared, " +
                  std::to_string(differing) + " differ; summaries " +
                  (summaries[0] == summaries[1] ? "identical" : "differ")};
}

}  // namespace

int main() {
  int unexpected = 0;
  auto report = [&](int id, const std::function<Verdict()>& check) {
    auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d: %s  %s [%.1fs]\n", id, v.pass ? "PASS" : "FAIL",
                v.detail.c_str(), seconds);
    std::fflush(stdout);
    if (!v.pass && !kKnownFailures.contains(id)) {
      ++unexpected;
    }
  };

  report(1, dual_splitting_soundness);
  report(2, distributed_equivalence);
  report(3, spectral_bounds);
  report(4, auxiliary_graph);
  report(5, distributed_summation);
  report(6, error_control);
  std::vector<SolveCase> cases;
  report(7, [&] {
    cases = newton_cases();
    return primal_invariants(cases);
  });
  report(8, [&] { return quadratic_phase(cases); });
  report(9, barrier_error);
  report(10, comparison);
  report(11, determinism);
  if (unexpected > 0) {
    std::printf("%d criteria failed outside the known-failure list\n", unexpected);
  }
  return unexpected > 0 ? 1 : 0;
}
