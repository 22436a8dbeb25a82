// qnls: command-line front end.
#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qnls/config.hpp"
#include "qnls/errors.hpp"
#include "qnls/pipeline.hpp"
#include "qnls/verify.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNumerical = 2;

void print(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quintic NLS blow-up toolkit. Relative output paths resolve against $" +
               std::string(qnls::kOutputRootEnv) + "."};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Evolve a scenario and write manifest, diagnostics and snapshots");
  std::string config_path, preset_name;
  std::vector<std::string> overrides;
  std::string sim_output;
  auto* cfg_opt = sim->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  sim->add_option("--preset", preset_name, "standing-wave | explicit-blowup")->excludes(cfg_opt);
  sim->add_option("--set", overrides, "Override a config field, e.g. solver.t_end=0.5");
  sim->add_option("--output", sim_output, "Output directory (overrides output_dir)");

  // linspec
  auto* lin = app.add_subcommand("linspec", "Gram table and spectrum of the linearized operator");
  qnls::LinspecOptions lin_opts;
  lin->add_option("--L", lin_opts.L, "Half length of the grid");
  lin->add_option("--n", lin_opts.n, "Grid points");
  lin->add_option("--output", lin_opts.output_dir, "Output directory");

  // dfourier
  auto* df = app.add_subcommand("dfourier", "Scattering data, edge check and Plancherel identities");
  qnls::DfourierOptions df_opts;
  bool df_free = false;
  df->add_option("--L", df_opts.L, "Half length of the grid");
  df->add_option("--n", df_opts.n, "Grid points");
  df->add_flag("--free", df_free, "Use the zero-potential operator");
  df->add_flag("--decay", df_opts.decay, "Also fit dispersive decay exponents (slow)");
  df->add_option("--output", df_opts.output_dir, "Output directory");

  // modulate
  auto* mod = app.add_subcommand("modulate", "Track modulation parameters of a simulated run");
  std::string manifest;
  std::string mod_output;
  mod->add_option("--manifest", manifest, "manifest.json of a run")->required()->check(CLI::ExistingFile);
  mod->add_option("--output", mod_output, "Output directory (default: next to the manifest)");

  // verify
  auto* ver = app.add_subcommand("verify", "Run the invariant suite and print a JSON verdict");
  qnls::VerifyOptions ver_opts;
  bool ver_quick = false;
  ver->add_option("--L", ver_opts.L, "Half length of the grid");
  ver->add_option("--n", ver_opts.n, "Grid points");
  ver->add_option("--corrupt-kappa2", ver_opts.kappa2_factor, "Scale kappa2 in the expected Gram table");
  ver->add_flag("--quick", ver_quick, "Skip the conservation runs");

  // batch
  auto* bat = app.add_subcommand("batch", "Simulate and classify a list of runs");
  std::string batch_path, batch_output = "batch";
  int threads = 1;
  bat->add_option("--config", batch_path, "Batch JSON file")->required()->check(CLI::ExistingFile);
  bat->add_option("--output", batch_output, "Output directory");
  bat->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) {
      qnls::RunConfig cfg;
      if (!config_path.empty())
        cfg = qnls::load_config(config_path);
      else if (!preset_name.empty())
        cfg = qnls::preset(preset_name);
      else
        throw qnls::UsageError("simulate needs --config or --preset");
      cfg = qnls::apply_overrides(cfg, overrides);
      if (!sim_output.empty()) cfg.output_dir = sim_output;
      const auto res = qnls::cmd_simulate(cfg);
      nlohmann::json out = res.summary;
      out["manifest"] = res.manifest.string();
      print(out);
      return qnls::is_failure(res.trajectory.stop) ? kNumerical : kOk;
    }
    if (*lin) {
      print(qnls::cmd_linspec(lin_opts));
      return kOk;
    }
    if (*df) {
      df_opts.potential = df_free ? qnls::Potential::Free : qnls::Potential::Soliton;
      print(qnls::cmd_dfourier(df_opts));
      return kOk;
    }
    if (*mod) {
      std::optional<std::filesystem::path> out;
      if (!mod_output.empty()) out = mod_output;
      print(qnls::cmd_modulate(manifest, out));
      return kOk;
    }
    if (*ver) {
      ver_opts.conservation = !ver_quick;
      const auto report = qnls::cmd_verify(ver_opts);
      print(report.to_json());
      return report.ok() ? kOk : kNumerical;
    }
    if (*bat) {
      const auto rows = qnls::cmd_batch(qnls::load_batch(batch_path), batch_output, threads);
      nlohmann::json out = nlohmann::json::array();
      for (const auto& r : rows)
        out.push_back({{"name", r.name}, {"verdict", r.verdict}, {"stop_reason", r.stop_reason},
                       {"error", r.error}});
      print(out);
      return kOk;
    }
  } catch (const qnls::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}
