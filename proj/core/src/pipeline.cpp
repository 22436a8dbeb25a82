#include "qnls/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "qnls/errors.hpp"
#include "qnls/field_io.hpp"
#include "qnls/spectral.hpp"

namespace qnls {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& j) { return j.is_null() ? NAN : j.get<double>(); }

// Writes next to the target and renames, so readers never see partial files.
void write_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw NumericalError("cannot open " + tmp.string() + " for writing");
    os << content;
    if (!os) throw NumericalError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path, std::string& header) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open " + path.string());
  std::getline(is, header);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw UsageError("malformed number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    if (s == "nan") return NAN;
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    throw UsageError("malformed number '" + s + "'");
  }
}

json diagnostics_json(const Diagnostics& d) {
  return {{"mass", d.mass}, {"energy", d.energy}, {"sup", d.sup}, {"h1", d.h1},
          {"pconf", d.pconf}, {"pconf_energy", d.pconf_energy}};
}

json fit_json(const BlowupFit& f) {
  return {{"T_est", f.T_est}, {"c", f.c}, {"residual", f.residual}, {"t_first", f.t_first},
          {"t_last", f.t_last}, {"points", f.points}, {"h1_rate_spread", f.h1_rate_spread}};
}

json rate_json(const RateReport& r) {
  return {{"verdict", to_string(r.verdict)},
          {"c_inverse", r.c_inverse},
          {"T_inverse", r.T_inverse},
          {"residual_inverse", number_or_null(r.residual_inverse)},
          {"c_sqrt", r.c_sqrt},
          {"T_sqrt", r.T_sqrt},
          {"residual_sqrt", number_or_null(r.residual_sqrt)},
          {"dynamic_range", r.dynamic_range},
          {"T_reference", r.T_reference},
          {"points", r.points}};
}

const ProfileSet& shared_profiles() {
  static const ProfileSet profiles(root_basis(make_grid(40.0, 1024)));
  return profiles;
}

// Tracking, rate classification and consistency residuals of one run.
json modulate_run(const LoadedRun& run, const ProfileSet& profiles, const fs::path& out_dir) {
  const auto series = track(run.trajectory, scenario_params(run.config, 0.0), profiles);
  write_modulation_csv(out_dir / "modulation.csv", series);

  json report;
  int ok = 0;
  for (const auto& p : series) ok += p.result.has_value();
  report["track"] = {{"snapshots", series.size()}, {"successes", ok}};

  double T_est = NAN;
  try {
    const BlowupFit fit = blowup_time_fit(run.trajectory);
    T_est = fit.T_est;
    report["blowup_fit"] = fit_json(fit);
  } catch (const NumericalError& e) {
    report["blowup_fit"] = {{"error", e.what()}};
  }
  std::vector<double> ts, ls;
  for (const auto& p : series) {
    if (!p.result) continue;
    ts.push_back(p.t);
    ls.push_back(p.result->params.lambda);
  }
  try {
    report["rate"] = rate_json(classify_rate(ts, ls, T_est));
  } catch (const std::exception& e) {
    report["rate"] = {{"error", e.what()}};
  }
  try {
    const auto cr = consistency_residuals(series);
    double worst = 0.0;
    for (const auto& p : cr)
      for (double r : p.residuals) worst = std::max(worst, std::abs(r) / (p.lambda * p.lambda));
    report["consistency"] = {{"max_relative_to_lambda2", worst}, {"points", cr.size()}};
  } catch (const NumericalError& e) {
    report["consistency"] = {{"error", e.what()}};
  }
  write_atomic(out_dir / "classification.json", report.dump(2) + "\n");
  return report;
}

}  // namespace

fs::path resolve_output(const fs::path& p) {
  if (p.is_absolute()) return p;
  const char* root = std::getenv(kOutputRootEnv);
  return (root && *root) ? fs::path(root) / p : p;
}

void write_diagnostics_csv(const fs::path& path, const Trajectory& traj) {
  std::ostringstream os;
  os << "t,mass,energy,sup,h1,pconf,pconf_energy\n" << std::setprecision(17);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const auto& d = traj.diagnostics[i];
    os << traj.times[i] << ',' << d.mass << ',' << d.energy << ',' << d.sup << ',' << d.h1 << ','
       << d.pconf << ',' << d.pconf_energy << '\n';
  }
  write_atomic(path, os.str());
}

std::vector<std::pair<double, Diagnostics>> read_diagnostics_csv(const fs::path& path) {
  std::string header;
  const auto rows = read_csv_rows(path, header);
  if (header != "t,mass,energy,sup,h1,pconf,pconf_energy")
    throw UsageError("unexpected diagnostics header in " + path.string());
  std::vector<std::pair<double, Diagnostics>> out;
  for (const auto& r : rows) {
    if (r.size() != 7) throw UsageError("malformed diagnostics row in " + path.string());
    Diagnostics d{to_double(r[1]), to_double(r[2]), to_double(r[3]),
                  to_double(r[4]), to_double(r[5]), to_double(r[6])};
    out.emplace_back(to_double(r[0]), d);
  }
  return out;
}

Conservation conservation_report(const Trajectory& traj) {
  if (traj.diagnostics.empty()) throw UsageError("empty trajectory");
  const auto& d0 = traj.diagnostics.front();
  Conservation c;
  for (const auto& d : traj.diagnostics) {
    c.mass_drift = std::max(c.mass_drift, std::abs(d.mass - d0.mass) / d0.mass);
    c.energy_drift = std::max(c.energy_drift, std::abs(d.energy - d0.energy) / (d0.h1 * d0.h1));
    c.pconf_energy_drift = std::max(
        c.pconf_energy_drift, std::abs(d.pconf_energy - d0.pconf_energy) / std::abs(d0.pconf_energy));
  }
  return c;
}

SimulateResult cmd_simulate(const RunConfig& config) {
  config.validate();
  const fs::path dir = resolve_output(config.output_dir);
  fs::create_directories(dir / "snapshots");
  const ComplexField psi0 = build_initial_data(config);

  SimulateResult res;
  res.trajectory = run(psi0, config.solver);
  const Trajectory& tr = res.trajectory;

  json snaps = json::array();
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "snap_%05zu.bin", i);
    io::write_snapshot(dir / "snapshots" / name, tr.snapshots[i]);
    snaps.push_back({{"t", tr.times[i]}, {"file", std::string("snapshots/") + name}});
  }
  write_diagnostics_csv(dir / "diagnostics.csv", tr);

  const Conservation cons = conservation_report(tr);
  json summary;
  summary["stop"] = {{"reason", to_string(tr.stop)},
                     {"guard_stop", tr.stop != StopReason::Completed},
                     {"failure", is_failure(tr.stop)},
                     {"message", tr.stop_message},
                     {"t_stop", tr.t_stop}};
  summary["steps"] = tr.steps;
  summary["conservation"] = {{"mass_drift", cons.mass_drift},
                             {"energy_drift", cons.energy_drift},
                             {"pconf_energy_drift", cons.pconf_energy_drift}};
  try {
    summary["blowup_fit"] = fit_json(blowup_time_fit(tr));
  } catch (const NumericalError& e) {
    summary["blowup_fit"] = {{"error", e.what()}};
  }
  summary["initial"] = diagnostics_json(tr.diagnostics.front());
  summary["final"] = diagnostics_json(tr.diagnostics.back());

  json manifest;
  manifest["config"] = config_to_json(config);
  manifest["summary"] = summary;
  manifest["snapshots"] = snaps;
  manifest["diagnostics_file"] = "diagnostics.csv";
  res.manifest = dir / "manifest.json";
  write_atomic(res.manifest, manifest.dump(2) + "\n");
  res.summary = summary;
  return res;
}

LoadedRun read_manifest(const fs::path& manifest) {
  const json j = read_json(manifest);
  if (!j.contains("config") || !j.contains("snapshots") || !j.contains("summary"))
    throw UsageError("not a run manifest: " + manifest.string());
  LoadedRun out;
  out.config = config_from_json(j.at("config"));
  const fs::path dir = manifest.parent_path();
  const auto diags = read_diagnostics_csv(dir / j.at("diagnostics_file").get<std::string>());
  const auto& snaps = j.at("snapshots");
  if (diags.size() != snaps.size()) throw UsageError("manifest and diagnostics disagree in length");
  Trajectory& tr = out.trajectory;
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    tr.times.push_back(snaps[i].at("t").get<double>());
    tr.snapshots.push_back(io::read_snapshot(dir / snaps[i].at("file").get<std::string>()));
    tr.diagnostics.push_back(diags[i].second);
  }
  const auto& stop = j.at("summary").at("stop");
  const std::string reason = stop.at("reason").get<std::string>();
  for (auto r : {StopReason::Completed, StopReason::SupThreshold, StopReason::DtUnderflow,
                 StopReason::NonFinite, StopReason::Wraparound, StopReason::Underresolved})
    if (to_string(r) == reason) tr.stop = r;
  tr.stop_message = stop.at("message").get<std::string>();
  tr.t_stop = stop.at("t_stop").get<double>();
  tr.steps = j.at("summary").at("steps").get<long>();
  return out;
}

json cmd_linspec(const LinspecOptions& options) {
  const GridPtr grid = make_grid(options.L, options.n);
  const RootSpaceBasis basis = root_basis(grid);
  const Gram g = gram_table(basis);
  const Gram e = expected_gram_table(basis.kappa1, basis.kappa2, basis.kappa3);
  const HOperator H(grid);
  const SpectrumReport rep = spectrum_check(H);

  json table = json::array();
  for (int i = 0; i < 6; ++i) {
    json row = json::array();
    for (int j = 0; j < 6; ++j) row.push_back({g(i, j).real(), g(i, j).imag()});
    table.push_back(row);
  }
  json out;
  out["grid"] = {{"L", options.L}, {"n", options.n}};
  out["kappa"] = {basis.kappa1, basis.kappa2, basis.kappa3};
  out["gram"] = table;
  out["gram_max_error"] = (g - e).cwiseAbs().maxCoeff();
  out["spectrum"] = {{"near_zero_count", rep.near_zero_count},
                     {"restricted_rank", rep.restricted_rank},
                     {"geometric_multiplicity", rep.geometric_multiplicity},
                     {"spectral_gap_ok", rep.spectral_gap_ok},
                     {"threshold", rep.threshold},
                     {"cluster_separation", rep.cluster_separation},
                     {"min_abs_real_outside", rep.min_abs_real_outside},
                     {"operator_norm", rep.operator_norm},
                     {"cluster_singular_values", rep.cluster_singular_values}};

  const fs::path dir = resolve_output(options.output_dir);
  std::ostringstream csv;
  csv << "re,im\n" << std::setprecision(17);
  for (const auto& l : rep.smallest_eigenvalues) csv << l.real() << ',' << l.imag() << '\n';
  write_atomic(dir / "eigenvalues.csv", csv.str());
  write_atomic(dir / "linspec.json", out.dump(2) + "\n");
  return out;
}

json cmd_dfourier(const DfourierOptions& options) {
  const GridPtr grid = make_grid(options.L, options.n);
  SpectrumOptions so = options.spectrum;
  so.potential = options.potential;
  const DistortedSpectrum sp = build_spectrum(grid, so);
  const fs::path dir = resolve_output(options.output_dir);

  std::ostringstream csv;
  csv << "xi,s_re,s_im,r_re,r_im,wronskian_drift\n" << std::setprecision(17);
  for (const auto& p : sp.points)
    csv << p.xi << ',' << p.s_coef.real() << ',' << p.s_coef.imag() << ',' << p.r_coef.real() << ','
        << p.r_coef.imag() << ',' << p.wronskian_drift << '\n';
  write_atomic(dir / "scattering.csv", csv.str());

  json out;
  out["grid"] = {{"L", options.L}, {"n", options.n}};
  out["potential"] = options.potential == Potential::Soliton ? "soliton" : "free";
  out["xi_points"] = sp.points.size();
  const EdgeValues ev = edge_check(grid, options.potential);
  out["edge"] = {{"s0", {ev.s0.real(), ev.s0.imag()}},
                 {"r0", {ev.r0.real(), ev.r0.imag()}},
                 {"abs_s0", std::abs(ev.s0)},
                 {"abs_r0_plus_1", std::abs(ev.r0 + 1.0)}};

  // Plancherel on two Gaussian bumps.
  const DispersiveFlow flow(grid, options.potential);
  auto bump = [&](double c, double w, double k) {
    return VectorField::from_scalar(sample(grid, [&](double x) {
      const double y = (x - c) / w;
      return std::exp(-y * y) * std::polar(1.0, k * x);
    }));
  };
  const VectorField f = bump(0.5, 1.5, 0.7), h = bump(-1.0, 2.0, -0.4);
  const VectorField pf = flow.project(f);
  const VectorField rec = inverse_distorted_transform(distorted_transform(f, sp), sp);
  const cplx lhs = inner(flow.project(f), h);
  const cplx rhs = distorted_pairing(f, h, sp);
  out["plancherel"] = {{"reconstruction_error", norm(rec - pf) / norm(pf)},
                       {"pairing_error", std::abs(lhs - rhs) / (norm(pf) * norm(h))}};

  if (options.decay) {
    // Frequency-localized datum on a wide grid; see band_limited_datum.
    const GridPtr wide = make_grid(200.0, 8192);
    const double pass = 1.0, stop = 1.6;
    SpectrumOptions dso;
    dso.potential = options.potential;
    dso.xi_max = dso.xi_far = dso.xi_tail = stop + 0.01;
    const DistortedSpectrum dsp = build_spectrum(wide, dso);
    const VectorField seed = VectorField::from_scalar(sample(wide, [](double x) {
      const double y = x - 0.5;
      return cplx(std::exp(-y * y / (2.0 * 0.49)));
    }));
    const VectorField datum = band_limited_datum(seed, dsp, pass, stop);
    const DispersiveFlow dflow(wide, options.potential);
    std::vector<double> times;
    for (int i = 0; i <= 180; ++i) times.push_back(5.0 + 0.25 * i);
    const auto fields = dflow.evolve_samples(datum, times);
    std::ostringstream dcsv;
    dcsv << "t,weighted_sup_theta0,weighted_sup_theta1\n" << std::setprecision(17);
    const DecayFit f0 = decay_fit_from_samples(fields, times, 0.0);
    const DecayFit f1 = decay_fit_from_samples(fields, times, 1.0);
    for (std::size_t i = 0; i < times.size(); ++i)
      dcsv << times[i] << ',' << f0.weighted_sup[i] << ',' << f1.weighted_sup[i] << '\n';
    write_atomic(dir / "decay.csv", dcsv.str());
    out["decay"] = {{"slope_theta0", f0.slope},
                    {"slope_theta1", f1.slope},
                    {"max_boundary_fraction", std::max(f0.max_boundary_fraction, f1.max_boundary_fraction)},
                    {"t_range", {times.front(), times.back()}}};
  }
  write_atomic(dir / "dfourier.json", out.dump(2) + "\n");
  return out;
}

void write_modulation_csv(const fs::path& path, const std::vector<TrackPoint>& series) {
  std::ostringstream os;
  os << "t,ok,lambda,beta,mu,omega,gamma";
  for (int i = 1; i <= 6; ++i) os << ",lambda" << i << "_re,lambda" << i << "_im";
  os << ",R_L2,R_H1\n" << std::setprecision(17);
  for (const auto& p : series) {
    os << p.t << ',' << (p.result ? 1 : 0);
    if (p.result) {
      const auto& r = *p.result;
      const auto& q = r.params;
      os << ',' << q.lambda << ',' << q.beta << ',' << q.mu << ',' << q.omega << ',' << q.gamma;
      for (const auto& c : r.root_coeffs) os << ',' << c.real() << ',' << c.imag();
      os << ',' << norm(r.R) << ',' << h1_norm(r.R) << '\n';
    } else {
      for (int k = 0; k < 19; ++k) os << ",nan";
      os << '\n';
    }
  }
  write_atomic(path, os.str());
}

std::vector<ModulationRow> read_modulation_csv(const fs::path& path) {
  std::string header;
  const auto rows = read_csv_rows(path, header);
  if (header.rfind("t,ok,lambda,beta,mu,omega,gamma", 0) != 0)
    throw UsageError("unexpected modulation header in " + path.string());
  std::vector<ModulationRow> out;
  for (const auto& r : rows) {
    if (r.size() != 21) throw UsageError("malformed modulation row in " + path.string());
    ModulationRow m;
    m.t = to_double(r[0]);
    m.ok = r[1] == "1";
    m.params = {to_double(r[2]), to_double(r[3]), to_double(r[4]), to_double(r[5]), to_double(r[6]), m.t};
    for (int i = 0; i < 6; ++i) m.root_coeffs[i] = {to_double(r[7 + 2 * i]), to_double(r[8 + 2 * i])};
    m.r_l2 = to_double(r[19]);
    m.r_h1 = to_double(r[20]);
    out.push_back(m);
  }
  return out;
}

json cmd_modulate(const fs::path& manifest, const std::optional<fs::path>& output_dir) {
  const LoadedRun run = read_manifest(manifest);
  const fs::path dir = output_dir ? resolve_output(*output_dir) : manifest.parent_path();
  return modulate_run(run, shared_profiles(), dir);
}

std::vector<RunConfig> load_batch(const fs::path& path) {
  const json j = read_json(path);
  std::vector<RunConfig> out;
  if (j.contains("runs")) {
    if (!j.at("runs").is_array()) throw UsageError("batch: runs must be an array");
    for (const auto& r : j.at("runs")) out.push_back(config_from_json(r));
  } else if (j.contains("base") && j.contains("sweep")) {
    const RunConfig base = config_from_json(j.at("base"));
    const auto& sw = j.at("sweep");
    const std::string key = sw.at("path").get<std::string>();
    int k = 0;
    for (const auto& v : sw.at("values")) {
      RunConfig c = apply_overrides(base, {key + "=" + v.dump()});
      c.name = base.name + "_" + std::to_string(k++);
      c.output_dir = c.name;
      out.push_back(c);
    }
  } else {
    throw UsageError("batch file needs 'runs' or 'base' + 'sweep'");
  }
  if (out.empty()) throw UsageError("batch: empty run list");
  return out;
}

namespace {

json row_to_json(const BatchRow& r) {
  return {{"name", r.name}, {"amplitude", r.amplitude}, {"seed", r.seed},
          {"stop_reason", r.stop_reason}, {"T_est", number_or_null(r.T_est)},
          {"verdict", r.verdict}, {"c", number_or_null(r.c)}, {"T_rate", number_or_null(r.T_rate)},
          {"error", r.error}};
}

BatchRow row_from_json(const json& j) {
  BatchRow r;
  r.name = j.at("name").get<std::string>();
  r.amplitude = j.at("amplitude").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.stop_reason = j.at("stop_reason").get<std::string>();
  r.T_est = number_from(j.at("T_est"));
  r.verdict = j.at("verdict").get<std::string>();
  r.c = number_from(j.at("c"));
  r.T_rate = number_from(j.at("T_rate"));
  r.error = j.at("error").get<std::string>();
  return r;
}

std::string csv_cell(const std::string& s) {
  std::string out = s;
  for (auto& ch : out)
    if (ch == ',' || ch == '\n') ch = ';';
  return out;
}

}  // namespace

std::vector<BatchRow> cmd_batch(const std::vector<RunConfig>& configs, const std::string& output_dir,
                                int threads) {
  if (configs.empty()) throw UsageError("batch: empty run list");
  const fs::path dir = resolve_output(output_dir);
  fs::create_directories(dir);
  const ProfileSet& profiles = shared_profiles();

  std::vector<BatchRow> rows(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      RunConfig c = configs[i];
      const fs::path row_dir = dir / c.name;
      const fs::path done = row_dir / "row.json";
      if (fs::exists(done)) {
        rows[i] = row_from_json(read_json(done));
        continue;
      }
      BatchRow r;
      r.name = c.name;
      r.amplitude = c.perturbation.amplitude;
      r.seed = c.seed;
      r.T_est = NAN;
      r.c = NAN;
      r.T_rate = NAN;
      r.verdict = "ERROR";
      try {
        c.output_dir = row_dir.string();
        const SimulateResult sim = cmd_simulate(c);
        r.stop_reason = to_string(sim.trajectory.stop);
        const json rep = modulate_run({c, sim.trajectory}, profiles, row_dir);
        if (rep.at("blowup_fit").contains("T_est")) r.T_est = rep.at("blowup_fit").at("T_est").get<double>();
        if (rep.at("rate").contains("verdict")) {
          r.verdict = rep.at("rate").at("verdict").get<std::string>();
          r.c = rep.at("rate").at("c_inverse").get<double>();
          r.T_rate = rep.at("rate").at("T_inverse").get<double>();
        } else {
          r.error = rep.at("rate").at("error").get<std::string>();
        }
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      write_atomic(done, row_to_json(r).dump(2) + "\n");
      rows[i] = r;
    }
  };
  const int nt = std::max(1, threads);
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream os;
  os << "name,amplitude,seed,stop_reason,T_est,verdict,c,T_rate,error\n" << std::setprecision(17);
  for (const auto& r : rows)
    os << csv_cell(r.name) << ',' << r.amplitude << ',' << r.seed << ',' << r.stop_reason << ','
       << r.T_est << ',' << r.verdict << ',' << r.c << ',' << r.T_rate << ',' << csv_cell(r.error)
       << '\n';
  write_atomic(dir / "batch.csv", os.str());
  return rows;
}

std::vector<BatchRow> read_batch_csv(const fs::path& path) {
  std::string header;
  const auto rows = read_csv_rows(path, header);
  if (header != "name,amplitude,seed,stop_reason,T_est,verdict,c,T_rate,error")
    throw UsageError("unexpected batch header in " + path.string());
  std::vector<BatchRow> out;
  for (const auto& c : rows) {
    if (c.size() != 9) throw UsageError("malformed batch row in " + path.string());
    BatchRow r;
    r.name = c[0];
    r.amplitude = to_double(c[1]);
    r.seed = std::stoull(c[2]);
    r.stop_reason = c[3];
    r.T_est = to_double(c[4]);
    r.verdict = c[5];
    r.c = to_double(c[6]);
    r.T_rate = to_double(c[7]);
    r.error = c[8];
    out.push_back(r);
  }
  return out;
}

}  // namespace qnls
