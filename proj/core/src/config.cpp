#include "qnls/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include "qnls/errors.hpp"
#include "qnls/spectral.hpp"

namespace qnls {
namespace {

using nlohmann::json;

const std::pair<Scenario, const char*> kScenarioNames[] = {
    {Scenario::StandingWave, "standing-wave"},
    {Scenario::ExplicitBlowup, "explicit-blowup"},
    {Scenario::ExactModulated, "exact-modulated"},
    {Scenario::GalileiSoliton, "galilei-soliton"},
};

const std::pair<PerturbationShape, const char*> kShapeNames[] = {
    {PerturbationShape::None, "none"},
    {PerturbationShape::GaussianBump, "gaussian-bump"},
    {PerturbationShape::RootMode, "root-mode-k"},
    {PerturbationShape::DispersiveRandom, "dispersive-random"},
};

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw UsageError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw UsageError(where + ": unknown key '" + key + "'");
  }
}

double get_number(const json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  if (!v.is_number()) throw UsageError(where + "." + key + ": expected a number");
  return v.get<double>();
}

template <class Int>
Int get_integer(const json& j, const char* key, Int fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw UsageError(where + "." + key + ": expected an integer");
  if constexpr (std::is_unsigned_v<Int>) {
    if (v.is_number_unsigned()) return v.get<Int>();
    if (v.get<long long>() < 0) throw UsageError(where + "." + key + ": must be non-negative");
  }
  return v.get<Int>();
}

std::string get_string(const json& j, const char* key, const std::string& fallback,
                       const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw UsageError(where + "." + key + ": expected a string");
  return j.at(key).get<std::string>();
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

Scenario scenario_from(const std::string& s) {
  for (const auto& [v, name] : kScenarioNames)
    if (s == name) return v;
  throw UsageError("unknown scenario '" + s + "'");
}

PerturbationShape shape_from(const std::string& s) {
  for (const auto& [v, name] : kShapeNames)
    if (s == name) return v;
  throw UsageError("unknown perturbation shape '" + s + "'");
}

json* walk(json& root, const std::string& dotted) {
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw UsageError("malformed override path '" + dotted + "'");
    if (!node->is_object()) throw UsageError("override path '" + dotted + "' does not name a field");
    node = &(*node)[key];
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

}  // namespace

std::string to_string(Scenario s) {
  for (const auto& [v, name] : kScenarioNames)
    if (v == s) return name;
  return "unknown";
}

std::string to_string(PerturbationShape s) {
  for (const auto& [v, name] : kShapeNames)
    if (v == s) return name;
  return "unknown";
}

void RunConfig::validate() const {
  if (name.empty()) throw UsageError("config: name must not be empty");
  if (output_dir.empty()) throw UsageError("config: output_dir must not be empty");
  if (!(grid.L > 0.0) || !std::isfinite(grid.L)) throw UsageError("config: grid.L must be positive");
  if (grid.n < 16 || grid.n % 2 != 0) throw UsageError("config: grid.n must be even and >= 16");
  if (!(alpha > 0.0)) throw UsageError("config: alpha must be positive");
  sl2.validate();
  if (scenario == Scenario::ExplicitBlowup && !(sl2.a > 0.0))
    throw UsageError("config: explicit-blowup needs a > 0 (regular at t = 0)");
  if (scenario == Scenario::ExactModulated && (exact.b == 0.0 || !(exact.a > 0.0)))
    throw UsageError("config: exact-modulated needs b != 0 and a > 0");
  const auto& p = perturbation;
  if (!(p.amplitude >= 0.0) || !std::isfinite(p.amplitude))
    throw UsageError("config: perturbation.amplitude must be >= 0");
  if (!(p.width > 0.0)) throw UsageError("config: perturbation.width must be positive");
  if (p.mode < 1 || p.mode > 6) throw UsageError("config: perturbation.mode must be in 1..6");
  solver.validate();
}

RunConfig config_from_json(const json& j) {
  check_keys(j, {"name", "grid", "scenario", "perturbation", "solver", "output_dir", "seed"}, "config");
  RunConfig c;
  c.name = get_string(j, "name", c.name, "config");
  c.output_dir = get_string(j, "output_dir", c.name, "config");
  c.seed = get_integer<std::uint64_t>(j, "seed", c.seed, "config");
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    check_keys(g, {"L", "n"}, "grid");
    c.grid.L = get_number(g, "L", c.grid.L, "grid");
    c.grid.n = get_integer<int>(g, "n", c.grid.n, "grid");
  }
  if (j.contains("scenario")) {
    const json& s = j.at("scenario");
    check_keys(s, {"kind", "alpha", "sl2", "galilei", "exact"}, "scenario");
    c.scenario = scenario_from(get_string(s, "kind", to_string(c.scenario), "scenario"));
    c.alpha = get_number(s, "alpha", c.alpha, "scenario");
    if (s.contains("sl2")) {
      const json& m = s.at("sl2");
      check_keys(m, {"a", "b", "c", "d"}, "scenario.sl2");
      c.sl2 = {get_number(m, "a", c.sl2.a, "sl2"), get_number(m, "b", c.sl2.b, "sl2"),
               get_number(m, "c", c.sl2.c, "sl2"), get_number(m, "d", c.sl2.d, "sl2")};
    }
    if (s.contains("galilei")) {
      const json& g = s.at("galilei");
      check_keys(g, {"gamma", "v", "mu0"}, "scenario.galilei");
      c.galilei = {get_number(g, "gamma", 0.0, "galilei"), get_number(g, "v", 0.0, "galilei"),
                   get_number(g, "mu0", 0.0, "galilei")};
    }
    if (s.contains("exact")) {
      const json& e = s.at("exact");
      check_keys(e, {"a", "b", "v", "gamma", "mu0"}, "scenario.exact");
      c.exact = {get_number(e, "a", 1.0, "exact"), get_number(e, "b", -1.0, "exact"),
                 get_number(e, "v", 0.0, "exact"), get_number(e, "gamma", 0.0, "exact"),
                 get_number(e, "mu0", 0.0, "exact")};
    }
  }
  if (j.contains("perturbation")) {
    const json& p = j.at("perturbation");
    check_keys(p, {"shape", "amplitude", "center", "width", "mode"}, "perturbation");
    auto& q = c.perturbation;
    q.shape = shape_from(get_string(p, "shape", to_string(q.shape), "perturbation"));
    q.amplitude = get_number(p, "amplitude", q.amplitude, "perturbation");
    q.center = get_number(p, "center", q.center, "perturbation");
    q.width = get_number(p, "width", q.width, "perturbation");
    q.mode = get_integer<int>(p, "mode", q.mode, "perturbation");
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    check_keys(s, {"dt0", "adaptive", "t_end", "snapshot_interval", "sup_threshold", "dt_min",
                   "boundary_fraction", "tail_fraction", "max_steps"},
               "solver");
    auto& v = c.solver;
    v.dt0 = get_number(s, "dt0", v.dt0, "solver");
    if (s.contains("adaptive")) {
      if (!s.at("adaptive").is_boolean()) throw UsageError("solver.adaptive: expected a boolean");
      v.adaptive = s.at("adaptive").get<bool>();
    }
    v.t_end = get_number(s, "t_end", v.t_end, "solver");
    v.snapshot_interval = get_number(s, "snapshot_interval", v.snapshot_interval, "solver");
    v.sup_threshold = get_number(s, "sup_threshold", v.sup_threshold, "solver");
    v.dt_min = get_number(s, "dt_min", v.dt_min, "solver");
    v.boundary_fraction = get_number(s, "boundary_fraction", v.boundary_fraction, "solver");
    v.tail_fraction = get_number(s, "tail_fraction", v.tail_fraction, "solver");
    v.max_steps = get_integer<long>(s, "max_steps", v.max_steps, "solver");
  }
  c.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["name"] = c.name;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["grid"] = {{"L", c.grid.L}, {"n", c.grid.n}};
  j["scenario"] = {
      {"kind", to_string(c.scenario)},
      {"alpha", c.alpha},
      {"sl2", {{"a", c.sl2.a}, {"b", c.sl2.b}, {"c", c.sl2.c}, {"d", c.sl2.d}}},
      {"galilei", {{"gamma", c.galilei.gamma}, {"v", c.galilei.v}, {"mu0", c.galilei.mu0}}},
      {"exact",
       {{"a", c.exact.a}, {"b", c.exact.b}, {"v", c.exact.v}, {"gamma", c.exact.gamma}, {"mu0", c.exact.mu0}}},
  };
  const auto& p = c.perturbation;
  j["perturbation"] = {{"shape", to_string(p.shape)}, {"amplitude", p.amplitude}, {"center", p.center},
                       {"width", p.width}, {"mode", p.mode}};
  const auto& s = c.solver;
  j["solver"] = {{"dt0", s.dt0},
                 {"adaptive", s.adaptive},
                 {"t_end", s.t_end},
                 {"snapshot_interval", s.snapshot_interval},
                 {"sup_threshold", number_or_null(s.sup_threshold)},
                 {"dt_min", s.dt_min},
                 {"boundary_fraction", s.boundary_fraction},
                 {"tail_fraction", s.tail_fraction},
                 {"max_steps", s.max_steps}};
  return j;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

RunConfig apply_overrides(const RunConfig& c, const std::vector<std::string>& overrides) {
  json j = config_to_json(c);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw UsageError("override '" + o + "' is not of the form key=value");
    const std::string path = o.substr(0, eq);
    const std::string text = o.substr(eq + 1);
    json value;
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      value = text;
    }
    *walk(j, path) = value;
  }
  return config_from_json(j);
}

RunConfig preset(const std::string& name) {
  RunConfig c;
  c.name = name;
  c.output_dir = name;
  if (name == "standing-wave") {
    c.scenario = Scenario::StandingWave;
    c.grid = {40.0, 2048};
    c.solver.dt0 = 1e-3;
    c.solver.t_end = 10.0;
    c.solver.snapshot_interval = 0.1;
  } else if (name == "explicit-blowup") {
    c.scenario = Scenario::ExplicitBlowup;
    c.sl2 = {1.0, -1.0, 0.0, 1.0};
    c.grid = {20.0, 16384};
    c.solver.dt0 = 1e-3;
    c.solver.t_end = 1.0;
    c.solver.snapshot_interval = 0.005;
    // Ten times the initial amplitude: reached at t = 0.99.
    c.solver.sup_threshold = 10.0 * phi0(0.0);
  } else {
    throw UsageError("unknown preset '" + name + "' (standing-wave, explicit-blowup)");
  }
  c.validate();
  return c;
}

GridPtr make_grid(const GridSpec& spec) { return make_grid(spec.L, spec.n); }

ModParams scenario_params(const RunConfig& c, double t) {
  ModParams p;
  p.t = t;
  switch (c.scenario) {
    case Scenario::StandingWave:
      p.lambda = std::sqrt(c.alpha);
      p.gamma = c.alpha * t;
      return p;
    case Scenario::ExplicitBlowup: {
      const double s = c.sl2.a + c.sl2.b * t;
      if (!(s > 0.0)) throw UsageError("explicit blow-up is singular at this time");
      p.lambda = 1.0 / s;
      p.beta = -c.sl2.b * s;
      p.gamma = (c.sl2.c + c.sl2.d * t) / s;
      return p;
    }
    case Scenario::ExactModulated:
      return exact_params(c.exact, t);
    case Scenario::GalileiSoliton: {
      const auto& g = c.galilei;
      p.lambda = std::sqrt(c.alpha);
      p.mu = 2.0 * t * g.v + g.mu0;
      p.omega = g.v / p.lambda;
      p.gamma = g.gamma + g.v * p.mu - g.v * g.v * t + c.alpha * t;
      return p;
    }
  }
  return p;
}

ComplexField build_initial_data(const RunConfig& c) {
  c.validate();
  const GridPtr grid = make_grid(c.grid);
  ComplexField psi = build_W(scenario_params(c, 0.0), grid);
  const auto& p = c.perturbation;
  if (p.shape == PerturbationShape::None || p.amplitude == 0.0) return psi;
  ComplexField bump(grid);
  switch (p.shape) {
    case PerturbationShape::GaussianBump:
      bump = sample(grid, [&](double x) {
        const double y = (x - p.center) / p.width;
        return cplx(std::exp(-y * y));
      });
      break;
    case PerturbationShape::RootMode: {
      const ProfileSet profiles(root_basis(make_grid(40.0, 1024)));
      bump = build_eta_family(scenario_params(c, 0.0), profiles, grid)[p.mode - 1].upper;
      bump *= cplx(1.0 / norm(bump));
      break;
    }
    case PerturbationShape::DispersiveRandom: {
      // A few seeded wave packets, normalized to unit L2 norm.
      std::mt19937_64 rng(c.seed);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (int k = 0; k < 8; ++k) {
        const double x0 = p.center + p.width * u(rng);
        const double k0 = 2.0 * u(rng);
        const cplx amp(u(rng), u(rng));
        bump += sample(grid, [&](double x) {
          const double y = (x - x0) / p.width;
          return amp * std::exp(-y * y) * std::polar(1.0, k0 * x);
        });
      }
      bump *= cplx(1.0 / norm(bump));
      break;
    }
    case PerturbationShape::None:
      break;
  }
  psi += cplx(p.amplitude) * bump;
  return psi;
}

}  // namespace qnls
