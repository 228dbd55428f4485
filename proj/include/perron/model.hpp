#pragma once
// Potential a(x) and jump kernel Q(x, dy) of the nonlocal transport model,
// plus the derived constants (abar, Qbar, band lower bound).

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "perron/core_spaces.hpp"

namespace perron {

// two numeric columns; lines that do not parse (headers, comments) are skipped
inline void read_xy_csv(const std::string& path, std::vector<double>& xs, std::vector<double>& vs) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open table file: " + path);
  std::string line;
  xs.clear();
  vs.clear();
  while (std::getline(in, line)) {
    for (auto& ch : line)
      if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
    std::istringstream ss(line);
    double x, v;
    if (ss >> x >> v) {
      xs.push_back(x);
      vs.push_back(v);
    }
  }
  if (xs.size() < 2) throw InputError("table file needs >= 2 rows: " + path);
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) throw InputError("table abscissae must increase: " + path);
}

// piecewise-linear table, constant beyond its ends
struct Table {
  std::vector<double> x, v, cum;  // cum = integral from x[0]

  Table() = default;
  Table(std::vector<double> xs, std::vector<double> vs) : x(std::move(xs)), v(std::move(vs)) {
    if (x.size() != v.size() || x.size() < 2) throw InputError("table: need >= 2 matching rows");
    cum.assign(x.size(), 0.0);
    for (std::size_t i = 1; i < x.size(); ++i)
      cum[i] = cum[i - 1] + 0.5 * (v[i] + v[i - 1]) * (x[i] - x[i - 1]);
  }
  double operator()(double t) const {
    if (t <= x.front()) return v.front();
    if (t >= x.back()) return v.back();
    auto k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), t) - x.begin()) - 1;
    double u = (t - x[k]) / (x[k + 1] - x[k]);
    return v[k] + u * (v[k + 1] - v[k]);
  }
  // exact integral of the interpolant from x[0] to t
  double primitive(double t) const {
    if (t <= x.front()) return v.front() * (t - x.front());
    if (t >= x.back()) return cum.back() + v.back() * (t - x.back());
    auto k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), t) - x.begin()) - 1;
    return cum[k] + 0.5 * ((*this)(t) + v[k]) * (t - x[k]);
  }
};

struct Potential {
  enum class Kind { quadratic, table };
  Kind kind = Kind::quadratic;
  double abar = 0.0, curvature = 0.0;  // a = abar - curvature x^2
  Table table;

  static Potential quadratic(double abar, double curvature) {
    if (!(curvature >= 0.0)) throw InputError("potential: curvature must be >= 0");
    Potential p;
    p.abar = abar;
    p.curvature = curvature;
    return p;
  }
  static Potential constant(double a) { return quadratic(a, 0.0); }
  static Potential from_table(Table t) {
    Potential p;
    p.kind = Kind::table;
    p.table = std::move(t);
    return p;
  }

  double operator()(double x) const {
    return kind == Kind::quadratic ? abar - curvature * x * x : table(x);
  }
  double primitive(double x) const {
    return kind == Kind::quadratic ? abar * x - curvature * x * x * x / 3.0 : table.primitive(x);
  }
  double integral(double a, double b) const { return primitive(b) - primitive(a); }
  double sup() const {
    return kind == Kind::quadratic ? abar : *std::max_element(table.v.begin(), table.v.end());
  }
  double inf_on(double lo, double hi, const Grid1D& g) const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i) {
      double x = g.center(i);
      if (x > lo && x < hi) m = std::min(m, (*this)(x));
    }
    return m;
  }
};

struct Kernel {
  enum class Kind { uniform_band, truncated_gaussian, dirac_pair, table };
  Kind kind = Kind::uniform_band;
  double kappa0 = 0.0, epsilon = 0.0;               // band lower bound
  double amplitude = 0.0, width = 1.0, cutoff = 0.0;  // gaussian
  Table density;  // J(z), z = y - x, for table kernels

  static Kernel uniform_band(double k0, double eps) {
    if (!(k0 >= 0.0) || !(eps > 0.0)) throw InputError("uniform_band: need kappa0 >= 0, epsilon > 0");
    Kernel k;
    k.kappa0 = k0;
    k.epsilon = eps;
    return k;
  }
  static Kernel none() { return uniform_band(0.0, 1.0); }
  static Kernel gaussian(double A, double w, double cut, double eps = -1.0) {
    if (!(A >= 0.0) || !(w > 0.0) || !(cut > 0.0)) throw InputError("gaussian kernel: bad parameters");
    Kernel k;
    k.kind = Kind::truncated_gaussian;
    k.amplitude = A;
    k.width = w;
    k.cutoff = cut;
    k.epsilon = eps > 0.0 ? std::min(eps, cut) : std::min(cut, w);
    k.kappa0 = A * std::exp(-k.epsilon * k.epsilon / (2 * w * w));
    return k;
  }
  static Kernel dirac_pair() {
    Kernel k;
    k.kind = Kind::dirac_pair;
    return k;
  }
  static Kernel from_table(Table J) {
    Kernel k;
    k.kind = Kind::table;
    for (double v : J.v)
      if (v < 0.0) throw InputError("table kernel: density must be >= 0");
    // lower bound: half of the positive stretch around 0
    double e = 0.0;
    if (J(0.0) > 0.0) {
      double lo = 0.0, hi = 0.0;
      const double step = (J.x.back() - J.x.front()) / 4096.0;
      while (hi + step <= J.x.back() && J(hi + step) > 0.0) hi += step;
      while (lo - step >= J.x.front() && J(lo - step) > 0.0) lo -= step;
      e = 0.5 * std::min(hi, -lo);
    }
    k.epsilon = e;
    k.kappa0 = 0.0;
    if (e > 0.0) {
      double m = std::min(J(-e), J(e));
      for (std::size_t i = 0; i < J.x.size(); ++i)
        if (std::abs(J.x[i]) <= e) m = std::min(m, J.v[i]);
      k.kappa0 = m;
    }
    k.density = std::move(J);
    return k;
  }

  // Q(x, R)
  double total_mass() const {
    switch (kind) {
      case Kind::uniform_band:
        return 2.0 * kappa0 * epsilon;
      case Kind::truncated_gaussian:
        return amplitude * width * std::sqrt(2.0 * std::numbers::pi) *
               std::erf(cutoff / (std::sqrt(2.0) * width));
      case Kind::dirac_pair:
        return 2.0;
      case Kind::table:
        return density.primitive(density.x.back()) - density.primitive(density.x.front());
    }
    return 0.0;
  }
  bool has_density_lower_bound() const { return kappa0 > 0.0 && epsilon > 0.0; }
  // density of Q(x, dy) at offset z = y - x (not defined for dirac_pair)
  double density_at(double z) const {
    switch (kind) {
      case Kind::uniform_band:
        return std::abs(z) < epsilon ? kappa0 : 0.0;
      case Kind::truncated_gaussian:
        return std::abs(z) < cutoff ? amplitude * std::exp(-z * z / (2 * width * width)) : 0.0;
      case Kind::table:
        return (z < density.x.front() || z > density.x.back()) ? 0.0 : density(z);
      case Kind::dirac_pair:
        return 0.0;
    }
    return 0.0;
  }
  // support half-width in offset
  double reach() const {
    switch (kind) {
      case Kind::uniform_band:
        return epsilon;
      case Kind::truncated_gaussian:
        return cutoff;
      case Kind::dirac_pair:
        return 1.0;
      case Kind::table:
        return std::max(std::abs(density.x.front()), std::abs(density.x.back()));
    }
    return 0.0;
  }
  std::string name() const {
    switch (kind) {
      case Kind::uniform_band:
        return "uniform_band";
      case Kind::truncated_gaussian:
        return "truncated_gaussian";
      case Kind::dirac_pair:
        return "dirac_pair";
      case Kind::table:
        return "table";
    }
    return "?";
  }
};

struct ModelSpec {
  Potential a;
  Kernel Q;
  double boundary_threshold = -10.0;  // a at the end cells must lie below this

  double abar() const { return a.sup(); }
  double qbar() const { return Q.total_mass(); }
  double kappa0() const { return Q.kappa0; }
  double epsilon() const { return Q.epsilon; }

  struct Compliance {
    bool confining = false, banded = false, finite_qbar = false;
    double a_left = 0.0, a_right = 0.0;
    bool ok() const { return confining && banded && finite_qbar; }
  };
  Compliance compliance(const Grid1D& g) const {
    Compliance c;
    c.a_left = a(g.center(0));
    c.a_right = a(g.center(g.size() - 1));
    c.confining = std::isfinite(abar()) && c.a_left < boundary_threshold &&
                  c.a_right < boundary_threshold;
    c.banded = Q.has_density_lower_bound();
    c.finite_qbar = std::isfinite(qbar());
    return c;
  }
};

}  // namespace perron
