#include "jkoflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace jkoflow {

Grid Grid::line(int nx, double lox, double hix) {
  if (nx < 2) throw BadParameter("grid needs n >= 2 per axis");
  if (!(hix > lox)) throw BadParameter("grid needs hi > lo per axis");
  Grid g;
  g.dim = 1;
  g.n = {nx, 1};
  g.lo = {lox, 0.0};
  g.hi = {hix, 0.0};
  return g;
}

Grid Grid::box(int nx, int ny, double lox, double loy, double hix, double hiy) {
  if (nx < 2 || ny < 2) throw BadParameter("grid needs n >= 2 per axis");
  if (!(hix > lox) || !(hiy > loy)) throw BadParameter("grid needs hi > lo per axis");
  Grid g;
  g.dim = 2;
  g.n = {nx, ny};
  g.lo = {lox, loy};
  g.hi = {hix, hiy};
  return g;
}

double Grid::max_spacing() const {
  double h = spacing(0);
  if (dim == 2) h = std::max(h, spacing(1));
  return h;
}

double Grid::cell_volume() const {
  double v = spacing(0);
  if (dim == 2) v *= spacing(1);
  return v;
}

double Grid::volume() const {
  double v = hi[0] - lo[0];
  if (dim == 2) v *= hi[1] - lo[1];
  return v;
}

double Grid::diameter() const {
  const double dx = hi[0] - lo[0];
  if (dim == 1) return dx;
  const double dy = hi[1] - lo[1];
  return std::sqrt(dx * dx + dy * dy);
}

ScalarField make_scalar(const Grid& g, double fill) {
  return ScalarField{g, std::vector<double>(g.size(), fill)};
}

DensityField make_density(const Grid& g, double fill) {
  return DensityField{g, std::vector<double>(g.size(), fill)};
}

VectorField make_vector(const Grid& g, double fill) {
  return VectorField{g, std::vector<double>(g.size() * g.dim, fill)};
}

DensityField normalize(const DensityField& f) {
  const double mass = quadrature(f);
  if (!(mass > 0.0)) throw ZeroMass();
  DensityField out = f;
  for (double& v : out.values) v /= mass;
  return out;
}

VectorField gradient(const ScalarField& f) {
  const Grid& g = f.grid;
  VectorField out = make_vector(g);
  const int ny = g.dim == 2 ? g.n[1] : 1;
  for (int axis = 0; axis < g.dim; ++axis) {
    const double h = g.spacing(axis);
    const int na = g.n[axis];
    // stride of one step along `axis` in the flat layout
    const std::size_t stride = axis == 0 ? static_cast<std::size_t>(ny) : 1;
    const int n_other = axis == 0 ? ny : g.n[0];
    for (int o = 0; o < n_other; ++o) {
      const std::size_t base = axis == 0 ? static_cast<std::size_t>(o) : g.index(o, 0);
      for (int i = 0; i < na; ++i) {
        const std::size_t idx = base + i * stride;
        double d;
        if (i == 0) {
          d = (f.values[idx + stride] - f.values[idx]) / h;
        } else if (i == na - 1) {
          d = (f.values[idx] - f.values[idx - stride]) / h;
        } else {
          d = (f.values[idx + stride] - f.values[idx - stride]) / (2.0 * h);
        }
        out.values[idx * g.dim + axis] = d;
      }
    }
  }
  return out;
}

double quadrature(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.grid.cell_volume();
}

double quadrature(const DensityField& f) { return quadrature(f.as_scalar()); }

double quadrature(const ScalarField& f, const DensityField& weight) {
  if (f.grid != weight.grid) throw GridMismatch();
  double s = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) s += f.values[i] * weight.values[i];
  return s * f.grid.cell_volume();
}

double lp_norm(const DensityField& f, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, v);
    return m;
  }
  if (!(p >= 1.0)) throw BadExponent();
  double s = 0.0;
  for (double v : f.values) s += std::pow(v, p);
  return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_snapshot(const std::string& path, const Grid& g, const std::vector<double>& values) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "# grid dim=" << g.dim << " n=" << g.n[0];
  if (g.dim == 2) out << "," << g.n[1];
  out << " lo=" << format_double(g.lo[0]);
  if (g.dim == 2) out << "," << format_double(g.lo[1]);
  out << " hi=" << format_double(g.hi[0]);
  if (g.dim == 2) out << "," << format_double(g.hi[1]);
  out << "\n";
  for (double v : values) out << format_double(v) << "\n";
}

namespace {

std::array<double, 2> parse_pair(const std::string& s, int expected, const char* what) {
  std::array<double, 2> out{0.0, 0.0};
  std::stringstream ss(s);
  std::string tok;
  int k = 0;
  while (std::getline(ss, tok, ',')) {
    if (k >= 2) throw ParseError(std::string("too many components in ") + what, 1, 0);
    out[k++] = std::stod(tok);
  }
  if (k != expected) throw ParseError(std::string("wrong component count in ") + what, 1, 0);
  return out;
}

}  // namespace

ScalarField read_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw ParseError("empty snapshot file", 1, 0);
  int dim = 0;
  std::string ns, los, his;
  {
    std::stringstream ss(header);
    std::string tok;
    while (ss >> tok) {
      if (tok.rfind("dim=", 0) == 0) dim = std::stoi(tok.substr(4));
      else if (tok.rfind("n=", 0) == 0) ns = tok.substr(2);
      else if (tok.rfind("lo=", 0) == 0) los = tok.substr(3);
      else if (tok.rfind("hi=", 0) == 0) his = tok.substr(3);
    }
  }
  if (dim != 1 && dim != 2) throw ParseError("snapshot header: dim must be 1 or 2", 1, 0);
  const auto nn = parse_pair(ns, dim, "n");
  const auto lo = parse_pair(los, dim, "lo");
  const auto hi = parse_pair(his, dim, "hi");
  Grid g = dim == 1 ? Grid::line(static_cast<int>(nn[0]), lo[0], hi[0])
                    : Grid::box(static_cast<int>(nn[0]), static_cast<int>(nn[1]), lo[0], lo[1],
                                hi[0], hi[1]);
  ScalarField f = make_scalar(g);
  std::string lineno;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::getline(in, lineno))
      throw ParseError("snapshot truncated", static_cast<int>(i + 2), 0);
    f.values[i] = std::stod(lineno);
  }
  return f;
}

DensityField read_snapshot_density(const std::string& path) {
  ScalarField s = read_snapshot(path);
  for (double v : s.values)
    if (v < 0.0) throw BadParameter("snapshot holds negative density values");
  return DensityField{s.grid, std::move(s.values)};
}

}  // namespace jkoflow
