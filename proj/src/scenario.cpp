#include "jkoflow/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <json.hpp>

namespace jkoflow {

namespace {

using nlohmann::json;

ParseError parse_error_at(const std::string& text, std::size_t byte, const std::string& what) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') { ++line; col = 1; } else { ++col; }
  }
  return ParseError(what, line, col);
}

std::vector<double> as_vector(const json& j, std::size_t want, const char* what) {
  std::vector<double> v = j.get<std::vector<double>>();
  if (v.size() != want)
    throw ParseError(std::string(what) + ": expected " + std::to_string(want) + " entries", 0, 0);
  return v;
}

Grid parse_grid(const json& j) {
  const int dim = j.at("dim").get<int>();
  if (dim != 1 && dim != 2) throw ParseError("grid.dim must be 1 or 2", 0, 0);
  const auto n = j.at("n").get<std::vector<int>>();
  const auto lo = as_vector(j.at("lo"), dim, "grid.lo");
  const auto hi = as_vector(j.at("hi"), dim, "grid.hi");
  if (static_cast<int>(n.size()) != dim) throw ParseError("grid.n: wrong length", 0, 0);
  return dim == 1 ? Grid::line(n[0], lo[0], hi[0])
                  : Grid::box(n[0], n[1], lo[0], lo[1], hi[0], hi[1]);
}

DensityField parse_initial(const json& j, const Grid& g, const std::string& base_dir) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "uniform") {
    return normalize(make_density(g, 1.0));
  }
  if (kind == "cosine-bump") {
    const double eps = j.value("epsilon", 0.1);
    const int mode = j.value("mode", 1);
    return normalize(sample_density(g, [&](double x, double y) {
      double v = 1.0 + eps * std::cos(mode * M_PI * (x - g.lo[0]) / (g.hi[0] - g.lo[0]));
      if (g.dim == 2)
        v = 1.0 + eps * std::cos(mode * M_PI * (x - g.lo[0]) / (g.hi[0] - g.lo[0])) *
                      std::cos(mode * M_PI * (y - g.lo[1]) / (g.hi[1] - g.lo[1]));
      return v;
    }));
  }
  if (kind == "gaussian") {
    const auto c = as_vector(j.at("center"), g.dim, "initial.center");
    const double sigma = j.at("sigma").get<double>();
    const double floor = j.value("floor", 0.0);
    return normalize(sample_density(g, [&](double x, double y) {
      double r2 = (x - c[0]) * (x - c[0]);
      if (g.dim == 2) r2 += (y - c[1]) * (y - c[1]);
      return floor + std::exp(-r2 / (2.0 * sigma * sigma));
    }));
  }
  if (kind == "mixture") {
    const double floor = j.value("floor", 0.0);
    struct Comp { double w, sigma; std::vector<double> c; };
    std::vector<Comp> comps;
    for (const auto& cj : j.at("components")) {
      Comp c;
      c.w = cj.at("weight").get<double>();
      c.sigma = cj.at("sigma").get<double>();
      c.c = as_vector(cj.at("center"), g.dim, "mixture center");
      comps.push_back(c);
    }
    return normalize(sample_density(g, [&](double x, double y) {
      double v = floor;
      for (const auto& c : comps) {
        double r2 = (x - c.c[0]) * (x - c.c[0]);
        if (g.dim == 2) r2 += (y - c.c[1]) * (y - c.c[1]);
        v += c.w * std::exp(-r2 / (2.0 * c.sigma * c.sigma));
      }
      return v;
    }));
  }
  if (kind == "file") {
    const std::string p = j.at("path").get<std::string>();
    const std::filesystem::path full =
        std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : std::filesystem::path(base_dir) / p;
    DensityField d = read_snapshot_density(full.string());
    if (d.grid != g) throw ParseError("initial density file grid differs from scenario grid", 0, 0);
    return normalize(d);
  }
  throw ParseError("unknown initial density kind: " + kind, 0, 0);
}

// scalar builtins shared by potentials and kernels; kernels are evaluated on
// displacements so the callers pass centered coordinates
double builtin_value(const std::string& kind, const json& j, const Grid& g, double x, double y,
                     bool displacement) {
  if (kind == "quadratic") {
    const double a = j.value("coeff", 1.0);
    double cx = 0.0, cy = 0.0;
    if (!displacement && j.contains("center")) {
      const auto c = as_vector(j.at("center"), g.dim, "center");
      cx = c[0];
      cy = g.dim == 2 ? c[1] : 0.0;
    }
    double r2 = (x - cx) * (x - cx);
    if (g.dim == 2) r2 += (y - cy) * (y - cy);
    return a * r2;
  }
  if (kind == "linear") {
    if (displacement) {
      const double a = j.value("coeff", 1.0);
      double r2 = x * x;
      if (g.dim == 2) r2 += y * y;
      return a * std::sqrt(r2);
    }
    const auto s = as_vector(j.at("slope"), g.dim, "slope");
    return s[0] * x + (g.dim == 2 ? s[1] * y : 0.0);
  }
  if (kind == "cosine") {
    const double a = j.value("amplitude", 1.0);
    const int mode = j.value("mode", 1);
    double v = a;
    const double lx = displacement ? 0.0 : g.lo[0];
    const double sx = g.hi[0] - g.lo[0];
    v *= std::cos(mode * M_PI * (x - lx) / sx);
    if (g.dim == 2) {
      const double ly = displacement ? 0.0 : g.lo[1];
      const double sy = g.hi[1] - g.lo[1];
      v *= std::cos(mode * M_PI * (y - ly) / sy);
    }
    return v;
  }
  if (kind == "gaussian-well") {
    const double depth = j.value("depth", 1.0);
    const double sigma = j.value("sigma", 0.25);
    double cx = 0.0, cy = 0.0;
    if (!displacement && j.contains("center")) {
      const auto c = as_vector(j.at("center"), g.dim, "center");
      cx = c[0];
      cy = g.dim == 2 ? c[1] : 0.0;
    }
    double r2 = (x - cx) * (x - cx);
    if (g.dim == 2) r2 += (y - cy) * (y - cy);
    return -depth * std::exp(-r2 / (2.0 * sigma * sigma));
  }
  throw ParseError("unknown builtin: " + kind, 0, 0);
}

ScalarField parse_potential_field(const json& j, const Grid& g, const std::string& base_dir) {
  if (j.contains("file")) {
    const std::string p = j.at("file").get<std::string>();
    const std::filesystem::path full =
        std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : std::filesystem::path(base_dir) / p;
    ScalarField f = read_snapshot(full.string());
    if (f.grid != g) throw ParseError("potential file grid differs from scenario grid", 0, 0);
    return f;
  }
  const std::string kind = j.at("builtin").get<std::string>();
  return sample_scalar(g, [&](double x, double y) { return builtin_value(kind, j, g, x, y, false); });
}

Functional parse_functional(const json& j, const Grid& g, const std::string& base_dir) {
  Functional f;
  f.entropy = j.value("entropy", true);
  if (j.contains("potential")) {
    const json& pj = j.at("potential");
    PotentialTerm term;
    term.v = parse_potential_field(pj, g, base_dir);
    term.lipschitz = pj.value("lipschitz", 0.0);
    term.lambda = pj.value("lambda", 0.0);
    if (term.lipschitz < 0.0) throw ParseError("potential.lipschitz must be nonnegative", 0, 0);
    f.potential = std::move(term);
  }
  if (j.contains("interaction")) {
    const json& wj = j.at("interaction");
    const double lip = wj.value("lipschitz", 0.0);
    const double mu = wj.value("mu", 0.0);
    if (lip < 0.0 || mu < 0.0) throw ParseError("interaction constants must be nonnegative", 0, 0);
    const std::string kind = wj.at("builtin").get<std::string>();
    f.interaction = make_interaction(
        g, [&](double zx, double zy) { return builtin_value(kind, wj, g, zx, zy, true); }, lip, mu);
  }
  if (j.contains("keller_segel")) {
    const json& kj = j.at("keller_segel");
    KellerSegelTerm term;
    term.chi = kj.at("chi").get<double>();
    term.poisson_tol = kj.value("poisson_tol", 1e-10);
    if (!(term.chi > 0.0)) throw ParseError("keller_segel.chi must be positive", 0, 0);
    if (g.dim == 2 && term.chi >= 8.0 * M_PI)
      std::cerr << "warning: chi = " << term.chi
                << " is not subcritical (chi < 8 pi); boundedness is not guaranteed\n";
    f.keller_segel = term;
  }
  if (j.contains("lq_smoothing")) {
    const json& lj = j.at("lq_smoothing");
    LqSmoothingTerm term;
    term.delta = lj.at("delta").get<double>();
    term.q = lj.at("q").get<double>();
    if (term.delta < 0.0) throw ParseError("lq_smoothing.delta must be nonnegative", 0, 0);
    f.lq_smoothing = term;
  }
  return f;
}

JkoConfig parse_jko(const json& j) {
  JkoConfig cfg;
  cfg.tau = j.at("tau").get<double>();
  cfg.steps = j.value("steps", 1);
  cfg.eps = j.value("eps", 0.0);
  cfg.inner_tol = j.value("inner_tol", 1e-8);
  cfg.fixed_point_max = j.value("fixed_point_max", 50);
  cfg.fixed_point_damping = j.value("fixed_point_damping", 1.0);
  cfg.marginal_tol = j.value("marginal_tol", 1e-8);
  cfg.sinkhorn_max_iter = j.value("sinkhorn_max_iter", 50000);
  if (!(cfg.tau > 0.0)) throw ParseError("jko.tau must be positive", 0, 0);
  if (cfg.steps < 0) throw ParseError("jko.steps must be nonnegative", 0, 0);
  if (!(cfg.fixed_point_damping > 0.0 && cfg.fixed_point_damping <= 1.0))
    throw ParseError("jko.fixed_point_damping must lie in (0,1]", 0, 0);
  return cfg;
}

RadialConvexFn parse_radial(const json& j) {
  const std::string kind = j.value("kind", "power");
  if (kind == "power") {
    const double p = j.value("p", 2.0);
    if (!(p >= 1.0 && p <= 4.0)) throw ParseError("H power exponent must lie in [1,4]", 0, 0);
    return RadialConvexFn::power(p);
  }
  if (kind == "cosh") return RadialConvexFn::cosh_minus_one();
  if (kind == "ball") return RadialConvexFn::ball_penalty(j.value("radius", 1.0));
  throw ParseError("unknown H kind: " + kind, 0, 0);
}

std::vector<CheckRequest> parse_checks(const json& j) {
  std::vector<CheckRequest> out;
  for (const auto& cj : j) {
    CheckRequest req;
    req.id = check_from_name(cj.at("id").get<std::string>());
    CheckParams& p = req.params;
    p.p = cj.value("p", 2.0);
    p.K = cj.value("K", 1.0);
    p.A = cj.value("A", 0.0);
    p.lambda = cj.value("lambda", 0.0);
    p.mu = cj.value("mu", 0.0);
    p.growth_C = cj.value("growth_C", 0.0);
    p.D1_cap = cj.value("D1_cap", 1.0);
    p.C_cap = cj.value("C_cap", 1.0);
    p.tol = cj.value("tol", 1e-9);
    if (cj.contains("H")) p.H = parse_radial(cj.at("H"));
    out.push_back(req);
  }
  return out;
}

}  // namespace

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file " + path, 0, 0);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw parse_error_at(text, e.byte, e.what());
  }
  try {
    Scenario s;
    const int schema = j.value("schema", 1);
    if (schema != 1) throw ParseError("unsupported schema version", 0, 0);
    s.name = j.value("name", std::filesystem::path(path).stem().string());
    s.grid = parse_grid(j.at("grid"));
    const std::string base_dir = std::filesystem::path(path).parent_path().string();
    s.initial = parse_initial(j.at("initial"), s.grid, base_dir);
    s.functional = parse_functional(j.at("functional"), s.grid, base_dir);
    s.functional.validate(s.grid);
    s.jko = parse_jko(j.at("jko"));
    if (j.contains("checks")) s.checks = parse_checks(j.at("checks"));
    if (j.contains("norms_p")) s.report.norms_p = j.at("norms_p").get<std::vector<double>>();
    if (j.contains("jp_p")) s.report.jp_p = j.at("jp_p").get<std::vector<double>>();
    if (j.contains("output")) {
      s.out_dir = j.at("output").value("dir", "");
      s.snapshot_every = j.at("output").value("snapshot_every", 0);
    }
    s.oracle_tol = j.value("oracle_tol", 1e-5);
    s.budget_seconds = j.value("budget_seconds", 0.0);
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario field error: ") + e.what(), 0, 0);
  }
}

namespace {

std::string resolve_out_dir(const Scenario& s, const ScenarioOptions& opts) {
  if (!opts.out_dir.empty()) return opts.out_dir;
  if (const char* env = std::getenv("JKO_FLOW_OUT"); env && *env) return env;
  if (!s.out_dir.empty()) return s.out_dir;
  return "out";
}

}  // namespace

int run_scenario(const std::string& path, const ScenarioOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  Scenario s;
  try {
    s = load_scenario(path);
  } catch (const ParseError& e) {
    std::cerr << "parse error (" << path << ":" << e.line << ":" << e.column << "): " << e.what()
              << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error loading " << path << ": " << e.what() << "\n";
    return 1;
  }

  const std::string out_dir = resolve_out_dir(s, opts);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory " << out_dir << "\n";
    return 1;
  }
  const int snap_every = opts.snapshot_every >= 0 ? opts.snapshot_every : s.snapshot_every;

  write_snapshot(out_dir + "/rho_0.txt", s.initial);
  Trajectory traj = jko_run(s.initial, s.functional, s.jko, s.checks, s.report);
  write_csv(out_dir + "/" + s.name + ".csv", traj.reports, s.jko.tau);
  if (snap_every > 0) {
    for (std::size_t n = snap_every; n < traj.densities.size();
         n += static_cast<std::size_t>(snap_every))
      write_snapshot(out_dir + "/rho_" + std::to_string(n) + ".txt", traj.densities[n]);
  }
  if (!traj.densities.empty())
    write_snapshot(out_dir + "/rho_final.txt", traj.densities.back());

  // summary block
  std::map<std::string, int> fails, slack_passes;
  std::map<std::string, double> worst_margin, empirical;
  int hard_failures = 0;
  for (const auto& rep : traj.reports)
    for (const auto& v : rep.verdicts) {
      const std::string name = check_name(v.id);
      if (!worst_margin.count(name) || v.margin < worst_margin[name])
        worst_margin[name] = v.margin;
      if (!empirical.count(name) || v.empirical > empirical[name]) empirical[name] = v.empirical;
      if (v.status == Verdict::Status::Fail) {
        ++fails[name];
        ++hard_failures;
      } else if (v.status == Verdict::Status::SlackPass) {
        ++slack_passes[name];
      }
    }

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "scenario " << s.name << ": " << traj.reports.size() << " steps";
  if (traj.aborted) std::cout << " (aborted at step " << traj.failed_step << ": " << traj.error << ")";
  std::cout << "\n";
  for (const auto& [name, margin] : worst_margin) {
    std::cout << "  check " << name << ": worst margin " << format_double(margin)
              << ", empirical " << format_double(empirical[name]);
    if (fails.count(name)) std::cout << ", FAILED " << fails[name] << "x";
    if (slack_passes.count(name)) std::cout << ", slack-pass " << slack_passes[name] << "x";
    std::cout << "\n";
  }
  std::cout << "  elapsed " << elapsed << " s";
  if (s.budget_seconds > 0.0 && elapsed > s.budget_seconds)
    std::cout << " (over the declared budget of " << s.budget_seconds << " s)";
  std::cout << "\n";

  if (traj.aborted) return 1;
  return hard_failures == 0 ? 0 : 2;
}

int compare_oracle(const std::string& path, const ScenarioOptions& opts) {
  Scenario s;
  try {
    s = load_scenario(path);
    if (s.grid.size() > 64) throw GridTooLarge();
    const std::string out_dir = resolve_out_dir(s, opts);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);

    const JkoStepResult step = jko_step(s.initial, s.functional, s.jko);
    const DensityField ref = oracle_step(s.initial, s.functional, s.jko.tau);
    const double obj_step = jko_objective(s.initial, s.functional, s.jko, step.rho);
    const double obj_ref = jko_objective(s.initial, s.functional, s.jko, ref);
    const double gap = obj_step - obj_ref;

    std::ofstream out(out_dir + "/" + s.name + "_oracle.txt");
    out << "objective_step=" << format_double(obj_step) << "\n"
        << "objective_oracle=" << format_double(obj_ref) << "\n"
        << "gap=" << format_double(gap) << "\n";
    std::cout << "oracle gap for " << s.name << ": " << format_double(gap) << " (tolerance "
              << format_double(s.oracle_tol) << ")\n";
    return std::abs(gap) <= s.oracle_tol ? 0 : 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error (" << path << ":" << e.line << ":" << e.column << "): " << e.what()
              << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace jkoflow
