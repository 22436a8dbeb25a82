#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "qnls/config.hpp"
#include "qnls/errors.hpp"
#include "qnls/field_io.hpp"
#include "qnls/pipeline.hpp"
#include "qnls/spectral.hpp"
#include "qnls/verify.hpp"

using namespace qnls;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("qnls_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

RunConfig small_blowup(const fs::path& out) {
  RunConfig c = preset("explicit-blowup");
  c.grid = {20.0, 2048};
  c.solver.t_end = 0.3;
  c.solver.snapshot_interval = 0.05;
  c.output_dir = out.string();
  return c;
}

}  // namespace

TEST(Config, JsonRoundTrip) {
  RunConfig c = preset("explicit-blowup");
  c.perturbation = {PerturbationShape::RootMode, 1e-3, 0.5, 2.0, 4};
  c.seed = 99;
  const RunConfig d = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(d), config_to_json(c));
  EXPECT_EQ(d.perturbation.shape, PerturbationShape::RootMode);
  EXPECT_EQ(d.solver.sup_threshold, c.solver.sup_threshold);
}

TEST(Config, InfiniteThresholdIsNull) {
  RunConfig c = preset("standing-wave");
  const auto j = config_to_json(c);
  EXPECT_TRUE(j.at("solver").at("sup_threshold").is_null());
  EXPECT_TRUE(std::isinf(config_from_json(j).solver.sup_threshold));
}

TEST(Config, StrictParsing) {
  auto j = config_to_json(preset("standing-wave"));
  j["solver"]["dtt"] = 1.0;
  EXPECT_THROW(config_from_json(j), UsageError);
  j = config_to_json(preset("standing-wave"));
  j["grid"]["n"] = "big";
  EXPECT_THROW(config_from_json(j), UsageError);
  j = config_to_json(preset("standing-wave"));
  j["perturbation"]["amplitude"] = -1.0;
  EXPECT_THROW(config_from_json(j), UsageError);
  j = config_to_json(preset("standing-wave"));
  j["scenario"]["kind"] = "galaxy";
  EXPECT_THROW(config_from_json(j), UsageError);
  EXPECT_THROW(preset("nope"), UsageError);
}

TEST(Config, Overrides) {
  const RunConfig c = apply_overrides(preset("explicit-blowup"),
                                      {"solver.t_end=0.5", "grid.n=4096", "perturbation.shape=gaussian-bump",
                                       "name=abc"});
  EXPECT_EQ(c.solver.t_end, 0.5);
  EXPECT_EQ(c.grid.n, 4096);
  EXPECT_EQ(c.perturbation.shape, PerturbationShape::GaussianBump);
  EXPECT_EQ(c.name, "abc");
  EXPECT_THROW(apply_overrides(c, {"solver.t_end"}), UsageError);
  EXPECT_THROW(apply_overrides(c, {"solver.nothing=1"}), UsageError);
  EXPECT_THROW(apply_overrides(c, {"grid.n=7"}), UsageError);
}

TEST(Config, ScenarioDataMatchesParameters) {
  RunConfig c = preset("explicit-blowup");
  c.grid = {20.0, 2048};
  const ComplexField psi = build_initial_data(c);
  EXPECT_LT(max_abs(psi - build_W(scenario_params(c, 0.0), make_grid(c.grid))), 1e-14);
  EXPECT_NEAR(scenario_params(c, 0.5).lambda, 2.0, 1e-14);
  c.perturbation = {PerturbationShape::DispersiveRandom, 1e-3, 0.0, 1.0, 2};
  const ComplexField a = build_initial_data(c), b = build_initial_data(c);
  EXPECT_EQ(a.data(), b.data());
  c.seed = 2;
  EXPECT_NE(build_initial_data(c).data(), a.data());
  EXPECT_NEAR(norm(a - psi), 1e-3, 1e-12);
}

TEST(Output, RootFromEnvironment) {
  ::setenv(kOutputRootEnv, "/tmp/qnls-root", 1);
  EXPECT_EQ(resolve_output("a/b"), fs::path("/tmp/qnls-root/a/b"));
  EXPECT_EQ(resolve_output("/abs"), fs::path("/abs"));
  ::unsetenv(kOutputRootEnv);
  EXPECT_EQ(resolve_output("a/b"), fs::path("a/b"));
}

TEST_F(TempDir, SimulateWritesReadableArtifacts) {
  const RunConfig c = small_blowup(dir_ / "run");
  const SimulateResult res = cmd_simulate(c);
  const LoadedRun back = read_manifest(res.manifest);
  EXPECT_EQ(config_to_json(back.config), config_to_json(c));
  ASSERT_EQ(back.trajectory.times.size(), res.trajectory.times.size());
  for (std::size_t i = 0; i < back.trajectory.times.size(); ++i) {
    EXPECT_EQ(back.trajectory.snapshots[i].data(), res.trajectory.snapshots[i].data());
    EXPECT_EQ(back.trajectory.diagnostics[i].sup, res.trajectory.diagnostics[i].sup);
  }
  EXPECT_EQ(back.trajectory.stop, res.trajectory.stop);
  EXPECT_EQ(back.trajectory.steps, res.trajectory.steps);
}

TEST_F(TempDir, SimulateIsByteDeterministic) {
  RunConfig c = small_blowup(dir_ / "a");
  c.perturbation = {PerturbationShape::GaussianBump, 1e-3, 0.5, 1.0, 2};
  cmd_simulate(c);
  c.output_dir = (dir_ / "b").string();
  cmd_simulate(c);
  EXPECT_EQ(slurp(dir_ / "a" / "diagnostics.csv"), slurp(dir_ / "b" / "diagnostics.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "snapshots" / "snap_00003.bin"), slurp(dir_ / "b" / "snapshots" / "snap_00003.bin"));
}

TEST_F(TempDir, DiagnosticsCsvRoundTrip) {
  Trajectory tr;
  for (int i = 0; i < 3; ++i) {
    tr.times.push_back(0.1 * i + 1.0 / 3.0);
    tr.diagnostics.push_back({1.0 / 7.0, -2.0 / 3.0, 1e-300, std::sqrt(2.0), 1e10 / 3.0, 0.1 * i});
  }
  write_diagnostics_csv(dir_ / "d.csv", tr);
  const auto back = read_diagnostics_csv(dir_ / "d.csv");
  ASSERT_EQ(back.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].first, tr.times[i]);
    EXPECT_EQ(back[i].second.energy, tr.diagnostics[i].energy);
    EXPECT_EQ(back[i].second.sup, tr.diagnostics[i].sup);
    EXPECT_EQ(back[i].second.pconf_energy, tr.diagnostics[i].pconf_energy);
  }
}

TEST_F(TempDir, ModulationCsvRoundTrip) {
  TrackPoint ok;
  ok.t = 0.25;
  DecompositionResult r;
  r.params = {1.5, 0.25, -1.0 / 3.0, 0.1, 2.0, 0.25};
  r.R = sample(make_grid(10.0, 64), [](double x) { return cplx(std::exp(-x * x), 0.0); });
  for (int i = 0; i < 6; ++i) r.root_coeffs[i] = {0.1 * i, -0.2 * i};
  ok.result = r;
  TrackPoint bad;
  bad.t = 0.3;
  bad.error = "diverged";
  write_modulation_csv(dir_ / "m.csv", {ok, bad});
  const auto rows = read_modulation_csv(dir_ / "m.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0].ok);
  EXPECT_EQ(rows[0].params.mu, -1.0 / 3.0);
  EXPECT_EQ(rows[0].root_coeffs[5], cplx(0.5, -1.0));
  EXPECT_EQ(rows[0].r_l2, norm(r.R));
  EXPECT_FALSE(rows[1].ok);
  EXPECT_TRUE(std::isnan(rows[1].params.lambda));
}

TEST_F(TempDir, BatchLoadingAndErrors) {
  std::ofstream(dir_ / "empty.json") << R"({"runs": []})";
  EXPECT_THROW(load_batch(dir_ / "empty.json"), UsageError);
  EXPECT_THROW(cmd_batch({}, (dir_ / "x").string()), UsageError);
  std::ofstream(dir_ / "junk.json") << R"({"what": 1})";
  EXPECT_THROW(load_batch(dir_ / "junk.json"), UsageError);
  nlohmann::json sweep;
  sweep["base"] = config_to_json(small_blowup("b"));
  sweep["sweep"] = {{"path", "perturbation.amplitude"}, {"values", {0.0, 1e-3}}};
  std::ofstream(dir_ / "sweep.json") << sweep.dump();
  const auto configs = load_batch(dir_ / "sweep.json");
  ASSERT_EQ(configs.size(), 2u);
  EXPECT_EQ(configs[1].perturbation.amplitude, 1e-3);
  EXPECT_NE(configs[0].output_dir, configs[1].output_dir);
}

// A finished row is reused: its row.json is trusted and not recomputed.
TEST_F(TempDir, BatchResumesFromCompletedRows) {
  RunConfig a = small_blowup("a"), b = small_blowup("b");
  a.name = "a";
  b.name = "b";
  b.perturbation = {PerturbationShape::GaussianBump, 1e-3, 0.0, 1.0, 2};
  fs::create_directories(dir_ / "out" / "a");
  std::ofstream(dir_ / "out" / "a" / "row.json")
      << R"({"name":"a","amplitude":0.0,"seed":1,"stop_reason":"completed","T_est":null,)"
      << R"("verdict":"SENTINEL","c":null,"T_rate":null,"error":""})";
  const auto rows = cmd_batch({a, b}, (dir_ / "out").string());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].verdict, "SENTINEL");
  EXPECT_FALSE(fs::exists(dir_ / "out" / "a" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "b" / "manifest.json"));
  // Seven snapshots are too few to classify: the row records the error.
  EXPECT_EQ(rows[1].verdict, "ERROR");
  EXPECT_NE(rows[1].error.find("classify_rate"), std::string::npos);
  const auto table = read_batch_csv(dir_ / "out" / "batch.csv");
  ASSERT_EQ(table.size(), 2u);
  EXPECT_EQ(table[1].name, "b");
  EXPECT_EQ(table[1].error, rows[1].error);
  const std::string first = slurp(dir_ / "out" / "batch.csv");
  cmd_batch({a, b}, (dir_ / "out").string(), 2);
  EXPECT_EQ(slurp(dir_ / "out" / "batch.csv"), first);
}

TEST(Verify, ResolutionIndicator) {
  EXPECT_LT(resolution_indicator(40.0, 1024), kUnderresolved);
  EXPECT_GT(resolution_indicator(40.0, 128), kUnderresolved);
}

TEST(Verify, UnderresolvedGridWarnsInsteadOfFailing) {
  VerifyOptions o;
  o.n = 128;
  o.conservation = false;
  const VerifyReport r = cmd_verify(o);
  EXPECT_TRUE(r.ok());
  int warns = 0;
  for (const auto& c : r.checks) warns += c.status == CheckStatus::Warn;
  EXPECT_GT(warns, 0);
  EXPECT_EQ(r.to_json().at("verdict"), "PASS");
}

TEST(Verify, CorruptedKappa2FailsOnlyTheGramCheck) {
  VerifyOptions o;
  o.kappa2_factor = 1.01;
  o.conservation = false;
  const VerifyReport r = cmd_verify(o);
  EXPECT_FALSE(r.ok());
  for (const auto& c : r.checks) {
    if (c.name == "gram_nonzero_entries")
      EXPECT_EQ(c.status, CheckStatus::Fail);
    else
      EXPECT_EQ(c.status, CheckStatus::Pass) << c.name << ": " << c.detail;
  }
}
