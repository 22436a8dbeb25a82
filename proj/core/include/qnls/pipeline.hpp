#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qnls/config.hpp"
#include "qnls/dfourier.hpp"
#include "qnls/evolve.hpp"
#include "qnls/modulation.hpp"

namespace qnls {

inline constexpr const char* kOutputRootEnv = "QNLS_OUTPUT_ROOT";

// Relative paths are resolved against $QNLS_OUTPUT_ROOT (or the working
// directory when unset); absolute paths are kept.
std::filesystem::path resolve_output(const std::filesystem::path& p);

// Diagnostics series as CSV: t,mass,energy,sup,h1,pconf,pconf_energy.
void write_diagnostics_csv(const std::filesystem::path& path, const Trajectory& traj);
std::vector<std::pair<double, Diagnostics>> read_diagnostics_csv(const std::filesystem::path& path);

struct Conservation {
  double mass_drift = 0.0;          // relative to the initial mass
  double energy_drift = 0.0;        // relative to the initial ||psi||_{H^1}^2
  double pconf_energy_drift = 0.0;  // relative to the initial value
};
Conservation conservation_report(const Trajectory& traj);

struct SimulateResult {
  std::filesystem::path manifest;
  Trajectory trajectory;
  nlohmann::json summary;
};

// Runs the scenario and writes manifest.json, diagnostics.csv and
// snapshots/snap_NNNNN.bin under the resolved output directory.
SimulateResult cmd_simulate(const RunConfig& config);

struct LoadedRun {
  RunConfig config;
  Trajectory trajectory;
};
LoadedRun read_manifest(const std::filesystem::path& manifest);

struct LinspecOptions {
  double L = 40.0;
  int n = 512;
  std::string output_dir = "linspec";
};
// Gram table and dense spectrum; writes linspec.json and eigenvalues.csv.
nlohmann::json cmd_linspec(const LinspecOptions& options);

struct DfourierOptions {
  double L = 40.0;
  int n = 1024;
  Potential potential = Potential::Soliton;
  SpectrumOptions spectrum;
  bool decay = false;  // dispersive decay fit (expensive)
  std::string output_dir = "dfourier";
};
// Scattering data, edge extrapolation and Plancherel checks; writes
// scattering.csv, dfourier.json and (with decay) decay.csv.
nlohmann::json cmd_dfourier(const DfourierOptions& options);

// Modulation series of a simulated run: modulation.csv plus
// classification.json next to the manifest (or in output_dir when given).
nlohmann::json cmd_modulate(const std::filesystem::path& manifest,
                            const std::optional<std::filesystem::path>& output_dir = {});

// Series rows of modulation.csv.
struct ModulationRow {
  double t = 0.0;
  bool ok = false;
  ModParams params;
  RootCoefficients root_coeffs{};
  double r_l2 = 0.0;
  double r_h1 = 0.0;
};
void write_modulation_csv(const std::filesystem::path& path, const std::vector<TrackPoint>& series);
std::vector<ModulationRow> read_modulation_csv(const std::filesystem::path& path);

// Batch file: {"runs": [config, ...]} or
// {"base": config, "sweep": {"path": "perturbation.amplitude", "values": [...]}}.
std::vector<RunConfig> load_batch(const std::filesystem::path& path);

struct BatchRow {
  std::string name;
  double amplitude = 0.0;
  std::uint64_t seed = 0;
  std::string stop_reason;
  double T_est = 0.0;
  std::string verdict;  // NONGENERIC, UNDETERMINED or ERROR
  double c = 0.0;
  double T_rate = 0.0;
  std::string error;
};

// Runs simulate + modulate per config (rows with a finished row.json are
// reused), writes batch.csv and returns the table in input order.
std::vector<BatchRow> cmd_batch(const std::vector<RunConfig>& configs, const std::string& output_dir,
                                int threads = 1);
std::vector<BatchRow> read_batch_csv(const std::filesystem::path& path);

}  // namespace qnls
