#include "jkoflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "jkoflow/elliptic.hpp"

namespace jkoflow {

double RadialConvexFn::operator()(double r) const {
  switch (kind) {
    case Kind::Power:
      return std::pow(r, p);
    case Kind::CoshMinusOne:
      return std::cosh(r) - 1.0;
    case Kind::BallPenalty: {
      const double e = std::max(0.0, r - radius);
      return e * e;
    }
  }
  return 0.0;
}

double RadialConvexFn::slope(double r) const {
  if (r <= 0.0) return 0.0;
  switch (kind) {
    case Kind::Power:
      return p * std::pow(r, p - 1.0);
    case Kind::CoshMinusOne:
      return std::sinh(r);
    case Kind::BallPenalty:
      return 2.0 * std::max(0.0, r - radius);
  }
  return 0.0;
}

std::string check_name(CheckId id) {
  switch (id) {
    case CheckId::LpLipschitzV: return "LpLipschitzV";
    case CheckId::LpLaplacianV: return "LpLaplacianV";
    case CheckId::LinfFPGeometric: return "LinfFPGeometric";
    case CheckId::WeightedSupFP: return "WeightedSupFP";
    case CheckId::LpLipschitzW: return "LpLipschitzW";
    case CheckId::WeightedSupInteraction: return "WeightedSupInteraction";
    case CheckId::FpKKellerSegel: return "FpKKellerSegel";
    case CheckId::FiveGradients: return "FiveGradients";
    case CheckId::JpSemiconvex: return "JpSemiconvex";
    case CheckId::JpInteraction: return "JpInteraction";
    case CheckId::JpKellerSegel: return "JpKellerSegel";
    case CheckId::EnergyDissipation: return "EnergyDissipation";
    case CheckId::LogLipschitz: return "LogLipschitz";
  }
  return "unknown";
}

CheckId check_from_name(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(CheckId::LogLipschitz); ++k)
    if (check_name(static_cast<CheckId>(k)) == name) return static_cast<CheckId>(k);
  throw BadParameter("unknown check id: " + name);
}

VectorField z_field(const DensityField& rho, const ScalarField& u) {
  if (rho.grid != u.grid) throw GridMismatch();
  const double floor = density_floor(rho.grid);
  VectorField g_rho = gradient(rho.as_scalar());
  const VectorField g_u = gradient(u);
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    const double r = std::max(rho.values[i], floor);
    for (int c = 0; c < rho.grid.dim; ++c) {
      g_rho.values[i * rho.grid.dim + c] =
          g_rho.values[i * rho.grid.dim + c] / r + g_u.values[i * rho.grid.dim + c];
    }
  }
  return g_rho;
}

namespace {

double z_magnitude(const VectorField& z, std::size_t i) {
  double s = 0.0;
  for (int c = 0; c < z.grid.dim; ++c) {
    const double v = z.values[i * z.grid.dim + c];
    s += v * v;
  }
  return std::sqrt(s);
}

}  // namespace

double j_p(const DensityField& rho, const ScalarField& u, double p) {
  if (!(p >= 1.0)) throw BadExponent();
  const VectorField z = z_field(rho, u);
  double s = 0.0;
  for (std::size_t i = 0; i < rho.values.size(); ++i)
    if (rho.values[i] > 0.0) s += std::pow(z_magnitude(z, i), p) * rho.values[i];
  return s * rho.grid.cell_volume();
}

double h_z_integral(const DensityField& rho, const ScalarField& u, const RadialConvexFn& H) {
  const VectorField z = z_field(rho, u);
  double s = 0.0;
  for (std::size_t i = 0; i < rho.values.size(); ++i)
    if (rho.values[i] > 0.0) s += H(z_magnitude(z, i)) * rho.values[i];
  return s * rho.grid.cell_volume();
}

double five_gradients_residual(const DensityField& rho, const DensityField& eta,
                               const TransportResult& tr, const RadialConvexFn& H) {
  const Grid& g = rho.grid;
  const int dim = g.dim;

  // gradient of the potential on each side; the exact 1D route reads it off
  // the monotone map, the entropic route differentiates the dual fields
  VectorField grad_phi = make_vector(g), grad_psi = make_vector(g);
  if (tr.method == TransportMethod::Exact1D) {
    for (int i = 0; i < g.n[0]; ++i)
      grad_phi.values[i] = g.center(0, i) - tr.map.values[i];
    const TransportResult rev = exact_ot_1d(eta, rho);
    for (int j = 0; j < g.n[0]; ++j)
      grad_psi.values[j] = g.center(0, j) - rev.map.values[j];
  } else {
    grad_phi = gradient(tr.phi);
    grad_psi = gradient(tr.psi);
  }

  const VectorField grad_rho = gradient(rho.as_scalar());
  const VectorField grad_eta = gradient(eta.as_scalar());

  auto pairing = [&](const VectorField& grad_f, const VectorField& grad_pot) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = z_magnitude(grad_pot, i);
      const double sl = H.slope(r);
      if (sl == 0.0 || r == 0.0) continue;
      for (int c = 0; c < dim; ++c)
        s += grad_f.values[i * dim + c] * sl * grad_pot.values[i * dim + c] / r;
    }
    return s * g.cell_volume();
  };
  return pairing(grad_rho, grad_phi) + pairing(grad_eta, grad_psi);
}

double log_lipschitz(const DensityField& rho, const ScalarField& v) {
  if (rho.grid != v.grid) throw GridMismatch();
  ScalarField lv = make_scalar(rho.grid);
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    if (!(rho.values[i] > 0.0)) throw NonPositiveDensity();
    lv.values[i] = std::log(rho.values[i]) + v.values[i];
  }
  const VectorField grad = gradient(lv);
  double m = 0.0;
  for (std::size_t i = 0; i < rho.values.size(); ++i) m = std::max(m, z_magnitude(grad, i));
  return m;
}

namespace {

double lp_power_integral(const DensityField& f, double p) {
  double s = 0.0;
  for (double v : f.values) s += std::pow(v, p);
  return s * f.grid.cell_volume();
}

double sup_weighted_value(const DensityField& rho, const ScalarField& weight_exponent) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rho.values.size(); ++i)
    if (rho.values[i] > 0.0)
      m = std::max(m, std::log(rho.values[i]) + weight_exponent.values[i]);
  return m;  // log of max rho e^w
}

void require(bool ok, const char* what) {
  if (!ok) throw WrongModelClass(what);
}

Verdict finish(CheckId id, double margin, double tol, double empirical) {
  Verdict v;
  v.id = id;
  v.margin = margin;
  v.empirical = empirical;
  v.status = margin >= 0.0 ? Verdict::Status::Pass
                           : (margin >= -tol ? Verdict::Status::SlackPass : Verdict::Status::Fail);
  return v;
}

}  // namespace

Verdict check_step(const DensityField& eta, const DensityField& rho, const TransportResult& tr,
                   const Functional& f, double tau, CheckId id, const CheckParams& params) {
  const bool has_v = f.potential.has_value();
  const bool has_w = f.interaction.has_value();
  const bool has_ks = f.keller_segel.has_value();

  switch (id) {
    case CheckId::LpLipschitzV: {
      require(has_v && !has_w && !has_ks, "Lp potential bound needs the potential-only model");
      const double p = params.p;
      const double lip = f.potential->lipschitz;
      const double factor = 1.0 - tau * p * (p - 1.0) / 4.0 * lip * lip;
      const double lhs = lp_power_integral(eta, p);
      const double rhs = lp_power_integral(rho, p);
      return finish(id, lhs - factor * rhs, params.tol, rhs / std::max(lhs, 1e-300));
    }
    case CheckId::LpLaplacianV: {
      require(has_v && !has_w && !has_ks, "Lp laplacian bound needs the potential-only model");
      const double p = params.p;
      const double factor = 1.0 - tau * (p - 1.0) * params.A;
      const double lhs = lp_power_integral(eta, p);
      const double rhs = lp_power_integral(rho, p);
      return finish(id, lhs - factor * rhs, params.tol, rhs / std::max(lhs, 1e-300));
    }
    case CheckId::LinfFPGeometric: {
      require(has_v && !has_w && !has_ks, "sup bound needs the potential-only model");
      const double d = rho.grid.dim;
      const double cap = lp_norm(eta, std::numeric_limits<double>::infinity()) *
                         std::pow(1.0 + tau * params.A / d, d);
      const double val = lp_norm(rho, std::numeric_limits<double>::infinity());
      return finish(id, cap - val, params.tol, val);
    }
    case CheckId::WeightedSupFP: {
      require(has_v && !has_w && !has_ks, "weighted sup bound needs the potential-only model");
      const double lhs = sup_weighted_value(eta, f.potential->v);
      const double rhs = sup_weighted_value(rho, f.potential->v);
      // compare max rho e^V itself; margin in linear scale
      return finish(id, std::exp(lhs) - std::exp(rhs), params.tol, std::exp(rhs));
    }
    case CheckId::LpLipschitzW: {
      require(has_w && !has_v && !has_ks, "Lp interaction bound needs the interaction-only model");
      const double p = params.p;
      const double lip = f.interaction->lipschitz;
      const double factor = 1.0 - tau * p * (p - 1.0) / 4.0 * lip * lip;
      const double lhs = lp_power_integral(eta, p);
      const double rhs = lp_power_integral(rho, p);
      return finish(id, lhs - factor * rhs, params.tol, rhs / std::max(lhs, 1e-300));
    }
    case CheckId::WeightedSupInteraction: {
      require(has_w && !has_v && !has_ks,
              "weighted interaction bound needs the interaction-only model");
      const double lip = f.interaction->lipschitz;
      const ScalarField u_rho = first_variation(f, rho);
      const ScalarField u_eta = first_variation(f, eta);
      // log-scale margin: log(rhs) - log(lhs) of the stated inequality
      const double lhs_log = sup_weighted_value(rho, u_rho) + evaluate(f, rho);
      const double rhs_log =
          sup_weighted_value(eta, u_eta) + evaluate(f, eta) + tau * lip * lip / 2.0;
      return finish(id, rhs_log - lhs_log, params.tol, lhs_log);
    }
    case CheckId::FpKKellerSegel: {
      require(has_ks && !has_w && !has_v, "FpK increment check needs the chemotaxis model");
      const McCannFunction fpk = McCannFunction::f_pk(params.p, params.K, rho.grid.dim);
      const double inc = f_pk_integral(fpk, rho) - f_pk_integral(fpk, eta);
      const double d1 = inc / tau;
      return finish(id, params.D1_cap * tau - inc, params.tol, d1);
    }
    case CheckId::FiveGradients: {
      const double res = five_gradients_residual(rho, eta, tr, params.H);
      return finish(id, res, params.tol, res);
    }
    case CheckId::JpSemiconvex: {
      require(has_v && !has_w && !has_ks, "Jp potential bound needs the potential-only model");
      const ScalarField& v = f.potential->v;
      const double j_rho = h_z_integral(rho, v, params.H);
      const double j_eta = h_z_integral(eta, v, params.H);
      const double lam = params.lambda;
      double margin;
      if (lam > 0.0) {
        margin = j_eta - (1.0 + lam * tau) * j_rho;
      } else if (lam == 0.0) {
        margin = j_eta - j_rho;
      } else {
        const double C = params.growth_C;
        margin = j_eta + C * tau - (1.0 - std::abs(lam) * C * tau) * j_rho;
      }
      return finish(id, margin, params.tol, j_rho / std::max(j_eta, 1e-300));
    }
    case CheckId::JpInteraction: {
      require(has_w && !has_ks, "Jp interaction bound needs the interaction model");
      const double p = params.p;
      const ScalarField u_rho = first_variation(f, rho);
      const ScalarField u_eta = first_variation(f, eta);
      const double j_rho = j_p(rho, u_rho, p);
      const double j_eta = j_p(eta, u_eta, p);
      const double factor = 1.0 + p * (params.lambda - 2.0 * params.mu) * tau;
      return finish(id, j_eta - factor * j_rho, params.tol, j_rho / std::max(j_eta, 1e-300));
    }
    case CheckId::JpKellerSegel: {
      require(has_ks && !has_w && !has_v, "Jp chemotaxis bound needs the chemotaxis model");
      const double p = params.p;
      if (!(p > 1.0 && p < 2.0)) throw BadParameter("Jp chemotaxis check needs 1 < p < 2");
      const double r = (4.0 - p) / (2.0 - p);
      const double chi = f.keller_segel->chi;
      const double ptol = f.keller_segel->poisson_tol;
      auto u_ks = [&](const DensityField& d) {
        const PoissonSolution sol = solve_poisson(d, ptol);
        ScalarField u = make_scalar(d.grid);
        for (std::size_t i = 0; i < u.values.size(); ++i) u.values[i] = -chi * sol.h.values[i];
        return u;
      };
      const double lhs = j_p(rho, u_ks(rho), p) + evaluate(f, rho) -
                         (j_p(eta, u_ks(eta), p) + evaluate(f, eta));
      const double mass_scale =
          std::max(lp_power_integral(rho, r), lp_power_integral(eta, r));
      const double c_emp = lhs / std::max(tau * mass_scale, 1e-300);
      return finish(id, params.C_cap * tau * mass_scale - lhs, params.tol, c_emp);
    }
    case CheckId::EnergyDissipation: {
      const double lhs = evaluate(f, rho) + tr.w2 * tr.w2 / (2.0 * tau);
      const double rhs = evaluate(f, eta);
      return finish(id, rhs - lhs, params.tol, lhs - rhs);
    }
    case CheckId::LogLipschitz: {
      require(has_v && !has_w && !has_ks, "log-Lipschitz decrease needs the potential-only model");
      const double before = log_lipschitz(eta, f.potential->v);
      const double after = log_lipschitz(rho, f.potential->v);
      return finish(id, before - after, params.tol, after);
    }
  }
  throw BadParameter("unhandled check id");
}

void write_csv(const std::string& path, const std::vector<StepReport>& reports, double tau) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "n,t,energy,entropy,w2_step";
  if (!reports.empty()) {
    for (const auto& [p, _] : reports.front().lp_norms) out << ",lp_" << format_double(p);
    out << ",sup_weighted,bv";
    for (const auto& [p, _] : reports.front().jp) out << ",jp_" << format_double(p);
    for (const auto& v : reports.front().verdicts)
      out << ",verdict_" << check_name(v.id) << ",margin_" << check_name(v.id);
  } else {
    out << ",sup_weighted,bv";
  }
  out << "\n";
  for (const auto& r : reports) {
    out << r.n << "," << format_double(r.n * tau) << "," << format_double(r.energy) << ","
        << format_double(r.entropy) << "," << format_double(r.w2_step);
    for (const auto& [_, v] : r.lp_norms) out << "," << format_double(v);
    out << "," << format_double(r.sup_weighted) << "," << format_double(r.bv);
    for (const auto& [_, v] : r.jp) out << "," << format_double(v);
    for (const auto& v : r.verdicts)
      out << "," << (v.status != Verdict::Status::Fail ? 1 : 0) << ","
          << format_double(v.margin);
    out << "\n";
  }
}

}  // namespace jkoflow
