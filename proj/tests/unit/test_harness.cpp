#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dnum/harness.hpp"
#include "support.hpp"

using namespace dnum;
using namespace dnum::testing;

namespace {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Json small_spec() {
  return Json{{"trials", 1},
              {"links", 6},
              {"sources", 4},
              {"bernoulli_p", 0.6},
              {"seed", 5},
              {"stepsizes", {{"subgradient", 0.01}, {"diagonal_scaled", 0.3}}},
              {"band", 0.005},
              {"band_hold", 50},
              {"max_iters", 200000}};
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("spec parsing") {
  ExperimentSpec spec = spec_from_json(small_spec());
  CHECK(spec.trials == 1);
  CHECK(spec.methods.size() == 3);
  CHECK(spec.stepsizes.at("diagonal_scaled") == 0.3);
  CHECK(spec.trial_seed(2) == 7);

  ExperimentSpec full = spec_from_json(read_json_file(data_file("compare_50.json")),
                                        DNUM_DATA_DIR);
  CHECK(full.trials == 50);
  CHECK(full.links == 15);
  CHECK(full.sources == 8);
  CHECK(full.stepsizes.size() == 2);

  auto rejects = [](auto mutate) {
    Json j = small_spec();
    mutate(j);
    CHECK_THROWS(spec_from_json(j));
  };
  rejects([](Json& j) { j["trials"] = 0; });
  rejects([](Json& j) { j["bernoulli_p"] = 1.5; });
  rejects([](Json& j) { j.erase("links"); });
  rejects([](Json& j) { j["stepsizes"].erase("subgradient"); });
  rejects([](Json& j) { j["methods"] = {"newton", "heavy_ball"}; });
  rejects([](Json& j) { j["newton"] = {{"V", 0.5}}; });
  rejects([](Json& j) { j["stepsizes"] = "no-such-file.json"; });
}

TEST_CASE("newton band entry counts iterations before the final in-band run") {
  std::vector<IterationRecord> trace(4);
  double hs[] = {-1.0, -1.9, -2.5, -2.0};
  std::int64_t duals[] = {3, 4, 5, 0};
  for (int k = 0; k < 4; ++k) {
    trace[k].k = k;
    trace[k].h = hs[k];
    trace[k].dual_iters = duals[k];
    trace[k].stepsize = k < 3 ? 1.0 : 0.0;
  }
  // Band 5% around -2: record 1 is in, 2 out, 3 in.
  CHECK(newton_band_entry(trace, -2.0, 0.05) == 3 + 1 + 4 + 1 + 5 + 1);
  CHECK(newton_band_entry(trace, -2.0, 0.3) == 3 + 1);
  CHECK(newton_band_entry(trace, -10.0, 0.05) == -1);
}

TEST_CASE("one trial: every method lands near the reference") {
  ExperimentSpec spec = spec_from_json(small_spec());
  TrialOutcome t = run_trial(spec, 0);
  REQUIRE(t.error.empty());
  REQUIRE(t.methods.size() == 3);
  for (const MethodOutcome& m : t.methods) {
    INFO(m.method << ": " << m.error);
    REQUIRE(m.ok);
    CHECK(m.band_count >= 0);
    CHECK(m.relative_error <= 0.01);
  }
  CHECK(t.methods[0].relative_error <= 0.01);
  CHECK(t.methods[0].final_min_slack > 0.0);
}

TEST_CASE("summaries and outputs are deterministic") {
  Json j = small_spec();
  j["trials"] = 2;
  j["band"] = 0.05;
  ExperimentSpec spec = spec_from_json(j);
  auto dir = std::filesystem::temp_directory_path() / "dnum_harness_test";
  std::filesystem::remove_all(dir);
  spec.trace_dir = (dir / "a").string();
  ComparisonResult first = run_comparison(spec);
  std::string first_json = comparison_to_json(spec, first).dump();
  spec.trace_dir = (dir / "b").string();
  ComparisonResult second = run_comparison(spec);
  std::string second_json = comparison_to_json(spec, second).dump();
  CHECK(first_json == second_json);
  REQUIRE(first.summary.size() == 3);
  for (const MethodSummary& s : first.summary) {
    CHECK(s.reached + s.failed == 2);
    CHECK(s.min <= s.median);
    CHECK(s.median <= s.max);
    CHECK(s.geometric_mean <= s.mean + 1e-9);
  }
  for (const char* name : {"newton_trial0_pass1.csv", "newton_trial0_pass2.csv",
                           "subgradient_trial1.csv", "diagonal_scaled_trial0.csv"}) {
    std::string a = read_text_file(dir / "a" / name);
    std::string b = read_text_file(dir / "b" / name);
    CHECK(!a.empty());
    CHECK(a == b);
    CHECK(a.rfind(trace_csv_header(), 0) == 0);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("calibration draws networks disjoint from the trials") {
  ExperimentSpec spec = spec_from_json(small_spec());
  std::vector<double> grid{1e-2, 1e-1};
  spec.max_iters = 20000;
  auto tuned = tune_stepsizes(spec, 1, grid);
  CHECK(tuned.size() == 2);
  for (const auto& [name, value] : tuned) {
    CHECK(std::find(grid.begin(), grid.end(), value) != grid.end());
  }
  CHECK(default_stepsize_grid().size() == 13);
}

}
