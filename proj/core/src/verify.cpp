#include "qnls/verify.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "qnls/dfourier.hpp"
#include "qnls/evolve.hpp"
#include "qnls/linop.hpp"
#include "qnls/pipeline.hpp"
#include "qnls/soliton.hpp"
#include "qnls/spectral.hpp"

namespace qnls {
using nlohmann::json;

namespace {

// Reference values of <rho, phi0> and <x^2 phi0, rho> from a converged
// (L = 60, n = 4096) computation; <phi0, phi0> is exact.
constexpr double kKappa1 = std::numbers::sqrt3 * std::numbers::pi / 2.0;
constexpr double kKappa2 = 0.83913197756;
constexpr double kKappa3 = 4.05196382804;

ComplexField random_packet(const GridPtr& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> center(-5.0, 5.0), width(0.6, 2.0), wave(-2.0, 2.0),
      phase(0.0, 2.0 * std::numbers::pi), amp(-1.0, 1.0);
  ComplexField out(grid);
  for (int k = 0; k < 3; ++k) {
    const double c = center(rng), w = width(rng), kk = wave(rng), p = phase(rng);
    const cplx a(amp(rng), amp(rng));
    out += sample(grid, [&](double x) {
      const double y = (x - c) / w;
      return a * std::exp(-y * y) * std::polar(1.0, kk * x + p);
    });
  }
  return out;
}

struct Recorder {
  std::vector<CheckResult>& out;
  bool underresolved;

  // Pass when value <= tolerance; a failing resolution-sensitive check on an
  // under-resolved grid becomes WARN.
  void add(std::string name, double value, double tolerance, bool sensitive, std::string detail = {}) {
    CheckResult r{std::move(name), CheckStatus::Pass, value, tolerance, std::move(detail)};
    if (!(value <= tolerance)) r.status = (sensitive && underresolved) ? CheckStatus::Warn : CheckStatus::Fail;
    out.push_back(std::move(r));
  }

  template <class F>
  void guarded(const std::string& name, bool sensitive, F&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      CheckResult r{name, CheckStatus::Fail, NAN, 0.0, e.what()};
      if (sensitive && underresolved) r.status = CheckStatus::Warn;
      out.push_back(std::move(r));
    }
  }
};

}  // namespace

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "PASS";
    case CheckStatus::Fail: return "FAIL";
    case CheckStatus::Warn: return "WARN";
  }
  return "?";
}

bool VerifyReport::ok() const {
  for (const auto& c : checks)
    if (c.status == CheckStatus::Fail) return false;
  return true;
}

json VerifyReport::to_json() const {
  json j;
  int counts[3] = {0, 0, 0};
  json list = json::array();
  for (const auto& c : checks) {
    ++counts[static_cast<int>(c.status)];
    list.push_back({{"name", c.name},
                    {"status", to_string(c.status)},
                    {"value", std::isfinite(c.value) ? json(c.value) : json(nullptr)},
                    {"tolerance", c.tolerance},
                    {"detail", c.detail}});
  }
  j["checks"] = list;
  j["summary"] = {{"pass", counts[0]}, {"fail", counts[1]}, {"warn", counts[2]}};
  j["verdict"] = ok() ? "PASS" : "FAIL";
  j["resolution_indicator"] = resolution_indicator;
  return j;
}

double resolution_indicator(double L, int n) {
  const double kmax = std::numbers::pi * n / (2.0 * L);
  return std::pow(3.0, 0.25) * std::exp(-std::numbers::pi * kmax / 4.0) * kmax * kmax;
}

VerifyReport cmd_verify(const VerifyOptions& options) {
  VerifyReport report;
  report.resolution_indicator = resolution_indicator(options.L, options.n);
  Recorder rec{report.checks, report.resolution_indicator > kUnderresolved};
  const GridPtr grid = make_grid(options.L, options.n);
  std::mt19937_64 rng(20240917);

  rec.guarded("soliton_residual", true, [&] {
    const ComplexField phi = sample(grid, [](double x) { return cplx(phi0(x)); });
    const ComplexField d2 = spectral_derivative(phi, 2);
    double worst = 0.0;
    for (int j = 0; j < grid->size(); ++j) {
      const double p = phi[j].real();
      worst = std::max(worst, std::abs(d2[j].real() - p + std::pow(p, 5)));
    }
    rec.add("soliton_residual", worst, 1e-8, true);
  });

  std::optional<RootSpaceBasis> basis;
  rec.guarded("gram_table", true, [&] {
    basis = root_basis(grid);
    const Gram g = gram_table(*basis);
    const Gram e = expected_gram_table(basis->kappa1, basis->kappa2 * options.kappa2_factor, basis->kappa3);
    const double scale = std::max({basis->kappa1, basis->kappa2, std::abs(basis->kappa3)});
    double zero_err = 0.0, rel_err = 0.0;
    for (int i = 0; i < 6; ++i)
      for (int k = 0; k < 6; ++k) {
        if (std::abs(e(i, k)) == 0.0)
          zero_err = std::max(zero_err, std::abs(g(i, k)));
        else
          rel_err = std::max(rel_err, std::abs(g(i, k) - e(i, k)) / std::abs(e(i, k)));
      }
    rec.add("gram_zero_entries", zero_err / scale, 1e-8, true);
    rec.add("gram_nonzero_entries", rel_err, 1e-6, true);
    const double kerr = std::max({std::abs(basis->kappa1 - kKappa1) / kKappa1,
                                  std::abs(basis->kappa2 - kKappa2) / kKappa2,
                                  std::abs(basis->kappa3 - kKappa3) / kKappa3});
    std::ostringstream d;
    d.precision(12);
    d << "kappa = (" << basis->kappa1 << ", " << basis->kappa2 << ", " << basis->kappa3 << ")";
    rec.add("kappa_reference_values", kerr, 1e-8, true, d.str());
  });

  rec.guarded("spectrum", true, [&] {
    const int ns = std::min(options.n, 512);
    const HOperator H(make_grid(options.L, ns));
    const SpectrumReport s = spectrum_check(H);
    const bool ok = s.near_zero_count == 6 && s.restricted_rank == 4 && s.geometric_multiplicity == 2 &&
                    s.spectral_gap_ok;
    std::ostringstream d;
    d << "n=" << ns << " near_zero=" << s.near_zero_count << " rank=" << s.restricted_rank
      << " min|Re|=" << s.min_abs_real_outside;
    rec.add("spectrum_counts", ok ? 0.0 : 1.0, 0.0, true, d.str());
  });

  rec.guarded("edge_soliton", true, [&] {
    const EdgeValues ev = edge_check(grid, Potential::Soliton);
    rec.add("edge_s0", std::abs(ev.s0), 1e-2, true);
    rec.add("edge_r0_plus_1", std::abs(ev.r0 + 1.0), 1e-2, true);
  });

  rec.guarded("edge_free_control", false, [&] {
    JostOptions jo;
    jo.potential = Potential::Free;
    double worst = 0.0;
    for (double xi : {0.05, 0.3, 1.0, 2.5}) worst = std::max(worst, std::abs(jost_solve(xi, grid, jo).s_coef - 1.0));
    rec.add("edge_free_control", worst, 1e-8, false);
  });

  rec.guarded("plancherel", true, [&] {
    const DistortedSpectrum sp = build_spectrum(grid);
    const DispersiveFlow flow(grid, Potential::Soliton);
    double recon = 0.0, pairing = 0.0;
    for (int k = 0; k < 3; ++k) {
      const VectorField f{random_packet(grid, rng), random_packet(grid, rng)};
      const VectorField h{random_packet(grid, rng), random_packet(grid, rng)};
      const VectorField pf = flow.project(f);
      const VectorField back = inverse_distorted_transform(distorted_transform(f, sp), sp);
      recon = std::max(recon, norm(back - pf) / norm(pf));
      const cplx lhs = inner(pf, h), rhs = distorted_pairing(f, h, sp);
      pairing = std::max(pairing, std::abs(lhs - rhs) / (norm(pf) * norm(h)));
    }
    rec.add("plancherel_reconstruction", recon, 1e-3, true);
    rec.add("plancherel_pairing", pairing, 1e-3, true);
  });

  rec.guarded("null_form", true, [&] {
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      const ComplexField u = random_packet(grid, rng);
      worst = std::max(worst, null_form_check(u, 0.3 + 0.1 * k) / std::max(1.0, max_abs(u) * max_abs(u)));
    }
    rec.add("null_form", worst, 1e-10, true);
  });

  rec.guarded("projection_identity", true, [&] {
    if (!basis) basis = root_basis(grid);
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      const VectorField f{random_packet(grid, rng), random_packet(grid, rng)};
      const Projection p = project(f, *basis);
      worst = std::max(worst, norm(root_part(p, *basis) + p.dispersive - f) / norm(f));
    }
    rec.add("projection_identity", worst, 1e-10, true);
  });

  if (options.conservation) {
    rec.guarded("conservation_standing_wave", true, [&] {
      SolverConfig sc;
      sc.t_end = 1.0;
      sc.snapshot_interval = 0.1;
      // The soliton tail sits near 1e-20 at the default verify grid.
      sc.tail_fraction = 1e-14;
      const Trajectory tr = run(standing_wave(0.0, 1.0, grid), sc);
      const Conservation c = conservation_report(tr);
      const std::string stop = "stop=" + to_string(tr.stop) + " t=" + std::to_string(tr.t_stop);
      rec.add("standing_wave_completed", tr.stop == StopReason::Completed ? 0.0 : 1.0, 0.0, true, stop);
      rec.add("standing_wave_mass_drift", c.mass_drift, 1e-12, true, stop);
      rec.add("standing_wave_energy_drift", c.energy_drift, 1e-5, true, stop);
    });
    rec.guarded("conservation_explicit", false, [&] {
      const GridPtr g = make_grid(20.0, 4096);
      const SL2Params m{1.0, -1.0, 0.0, 1.0};
      SolverConfig sc;
      sc.t_end = 0.5;
      sc.snapshot_interval = 0.05;
      const Trajectory tr = run(explicit_blowup(0.0, g, m), sc);
      const Conservation c = conservation_report(tr);
      rec.add("explicit_completed", tr.stop == StopReason::Completed ? 0.0 : 1.0, 0.0, false,
              "stop=" + to_string(tr.stop) + " t=" + std::to_string(tr.t_stop));
      rec.add("explicit_mass_drift", c.mass_drift, 1e-12, false);
      rec.add("explicit_energy_drift", c.energy_drift, 1e-5, false);
      rec.add("explicit_pconf_drift", c.pconf_energy_drift, 1e-4, false);
    });
  }
  return report;
}

}  // namespace qnls
