#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qnls/evolve.hpp"
#include "qnls/modulation.hpp"
#include "qnls/soliton.hpp"

namespace qnls {

struct GridSpec {
  double L = 20.0;
  int n = 8192;
};

enum class PerturbationShape { None, GaussianBump, RootMode, DispersiveRandom };

struct PerturbationSpec {
  PerturbationShape shape = PerturbationShape::None;
  double amplitude = 0.0;  // epsilon >= 0
  double center = 0.0;
  double width = 1.0;
  int mode = 2;  // root mode 1..6 for RootMode
};

enum class Scenario { StandingWave, ExplicitBlowup, ExactModulated, GalileiSoliton };

struct RunConfig {
  std::string name = "run";
  GridSpec grid;
  Scenario scenario = Scenario::ExplicitBlowup;
  double alpha = 1.0;            // standing-wave, galilei-soliton
  SL2Params sl2{1.0, -1.0, 0.0, 1.0};  // explicit-blowup
  GalileiParams galilei;         // galilei-soliton
  ExactWaveParams exact;         // exact-modulated
  PerturbationSpec perturbation;
  SolverConfig solver;
  std::string output_dir = "run";
  std::uint64_t seed = 1;

  // Throws UsageError on any invalid field.
  void validate() const;
};

std::string to_string(Scenario s);
std::string to_string(PerturbationShape s);

// Strict conversion: unknown keys, wrong types and invalid values throw
// UsageError. Missing keys keep their defaults.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);

RunConfig load_config(const std::filesystem::path& path);
// Applies "a.b.c=value" overrides (value parsed as JSON, falling back to a
// string) to the JSON form of the config, then re-validates.
RunConfig apply_overrides(const RunConfig& c, const std::vector<std::string>& overrides);

// Named starting points: "standing-wave", "explicit-blowup".
RunConfig preset(const std::string& name);

GridPtr make_grid(const GridSpec& spec);

// Scenario data at t = 0 plus the seeded perturbation.
ComplexField build_initial_data(const RunConfig& c);
// Modulation parameters of the unperturbed scenario at time t.
ModParams scenario_params(const RunConfig& c, double t);

}  // namespace qnls
