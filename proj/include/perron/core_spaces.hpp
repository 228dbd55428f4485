#pragma once
// Discrete weighted measures / functions on a uniform 1D grid, and the
// time measures used as crossing-time laws.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace perron {

struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class Grid1D {
 public:
  Grid1D() = default;
  Grid1D(double lower, double upper, std::size_t n_cells)
      : lower_(lower), upper_(upper), n_(n_cells) {
    if (!(lower < upper)) throw InputError("grid: lower must be < upper");
    if (n_cells < 2) throw InputError("grid: n_cells must be >= 2");
    dx_ = (upper - lower) / static_cast<double>(n_cells);
    if (!(dx_ > 0.0)) throw InputError("grid: dx underflows");
  }
  static Grid1D symmetric(double L, std::size_t n_cells) { return {-L, L, n_cells}; }

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  std::size_t size() const { return n_; }
  double dx() const { return dx_; }
  double center(std::size_t i) const { return lower_ + (static_cast<double>(i) + 0.5) * dx_; }
  double edge(std::size_t i) const { return lower_ + static_cast<double>(i) * dx_; }
  std::vector<double> centers() const {
    std::vector<double> c(n_);
    for (std::size_t i = 0; i < n_; ++i) c[i] = center(i);
    return c;
  }
  // index of the cell containing x, or -1 outside
  long locate(double x) const {
    if (x < lower_ || x >= upper_) return -1;
    auto i = static_cast<long>(std::floor((x - lower_) / dx_));
    return std::min<long>(i, static_cast<long>(n_) - 1);
  }
  // nearest cell center, clamped into the grid
  std::size_t nearest(double x) const {
    double r = std::round((x - lower_) / dx_ - 0.5);
    r = std::clamp(r, 0.0, static_cast<double>(n_ - 1));
    return static_cast<std::size_t>(r);
  }
  bool operator==(const Grid1D& o) const {
    return n_ == o.n_ && lower_ == o.lower_ && upper_ == o.upper_;
  }

 private:
  double lower_ = -1.0, upper_ = 1.0;
  std::size_t n_ = 2;
  double dx_ = 1.0;
};

inline void require_same_grid(const Grid1D& a, const Grid1D& b, const char* what) {
  if (!(a == b)) throw InputError(std::string(what) + ": grid mismatch");
}

struct GridFunction {
  Grid1D grid;
  std::vector<double> values;

  GridFunction() = default;
  GridFunction(Grid1D g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw InputError("GridFunction: size mismatch");
    for (double x : values)
      if (!std::isfinite(x)) throw InputError("GridFunction: non-finite value");
  }
  static GridFunction constant(const Grid1D& g, double c) {
    return {g, std::vector<double>(g.size(), c)};
  }
  template <class F>
  static GridFunction sample(const Grid1D& g, F&& f) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(g.center(i));
    return {g, std::move(v)};
  }
  double operator[](std::size_t i) const { return values[i]; }
};

struct DiscreteMeasure {
  Grid1D grid;
  std::vector<double> masses;

  DiscreteMeasure() = default;
  DiscreteMeasure(Grid1D g, std::vector<double> m) : grid(g), masses(std::move(m)) {
    if (masses.size() != grid.size()) throw InputError("DiscreteMeasure: size mismatch");
    for (double x : masses)
      if (!std::isfinite(x)) throw InputError("DiscreteMeasure: non-finite mass");
  }
  static DiscreteMeasure dirac(const Grid1D& g, double x, double mass = 1.0) {
    std::vector<double> m(g.size(), 0.0);
    m[g.nearest(x)] = mass;
    return {g, std::move(m)};
  }
  static DiscreteMeasure uniform(const Grid1D& g) {
    return {g, std::vector<double>(g.size(), 1.0 / static_cast<double>(g.size()))};
  }
  double total_variation() const {
    double s = 0.0;
    for (double m : masses) s += std::abs(m);
    return s;
  }
  double total_mass() const { return std::accumulate(masses.begin(), masses.end(), 0.0); }
  // Hahn-Jordan parts: each cell lands in exactly one of them
  DiscreteMeasure positive_part() const {
    auto m = masses;
    for (double& v : m) v = v > 0.0 ? v : 0.0;
    return {grid, std::move(m)};
  }
  DiscreteMeasure negative_part() const {
    auto m = masses;
    for (double& v : m) v = v < 0.0 ? -v : 0.0;
    return {grid, std::move(m)};
  }
};

struct Weight {
  Grid1D grid;
  std::vector<double> values;

  Weight() = default;
  Weight(Grid1D g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw InputError("Weight: size mismatch");
    for (double x : values)
      if (!(x > 0.0) || !std::isfinite(x)) throw InputError("Weight: values must be > 0");
  }
  static Weight unit(const Grid1D& g) { return {g, std::vector<double>(g.size(), 1.0)}; }
};

inline double pair(const DiscreteMeasure& mu, const GridFunction& f) {
  require_same_grid(mu.grid, f.grid, "pair");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.masses.size(); ++i) s += mu.masses[i] * f.values[i];
  return s;
}

inline double weighted_function_norm(const GridFunction& f, const Weight& V) {
  require_same_grid(f.grid, V.grid, "weighted_function_norm");
  double s = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    s = std::max(s, std::abs(f.values[i]) / V.values[i]);
  return s;
}

inline double weighted_measure_norm(const DiscreteMeasure& mu, const Weight& V) {
  require_same_grid(mu.grid, V.grid, "weighted_measure_norm");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.masses.size(); ++i) s += std::abs(mu.masses[i]) * V.values[i];
  return s;
}

// raw-vector versions used by the solvers
inline double sup_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}
inline double l1_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}
inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// composite trapezoid weights on m equispaced nodes with spacing h
inline std::vector<double> trapezoid_weights(std::size_t m, double h) {
  if (m < 2) throw InputError("trapezoid_weights: need >= 2 nodes");
  std::vector<double> w(m, h);
  w.front() = w.back() = 0.5 * h;
  return w;
}

// Probability measure on a uniform grid of [0, horizon]: weights w_j at
// nodes s_j. If built from a density, `density` holds the samples.
struct TimeMeasure {
  double horizon = 0.0;
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> density;  // empty for atomic measures

  std::size_t size() const { return nodes.size(); }
  bool atomic() const { return density.empty(); }
  double mass() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

  static std::vector<double> uniform_nodes(double horizon, std::size_t m) {
    if (m < 2) throw InputError("TimeMeasure: need >= 2 nodes");
    if (!(horizon > 0.0)) throw InputError("TimeMeasure: horizon must be > 0");
    std::vector<double> s(m);
    for (std::size_t j = 0; j < m; ++j)
      s[j] = horizon * static_cast<double>(j) / static_cast<double>(m - 1);
    return s;
  }
  static TimeMeasure dirac(double horizon, std::size_t m, std::size_t node) {
    TimeMeasure t;
    t.horizon = horizon;
    t.nodes = uniform_nodes(horizon, m);
    if (node >= m) throw InputError("TimeMeasure::dirac: node out of range");
    t.weights.assign(m, 0.0);
    t.weights[node] = 1.0;
    return t;
  }
  // Density samples on the uniform grid; trapezoid weights, renormalized.
  // Returns the unnormalized trapezoid mass through `mass_out`.
  static TimeMeasure from_density(double horizon, std::vector<double> dens,
                                  double* mass_out = nullptr) {
    TimeMeasure t;
    t.horizon = horizon;
    t.nodes = uniform_nodes(horizon, dens.size());
    auto tw = trapezoid_weights(dens.size(), horizon / static_cast<double>(dens.size() - 1));
    t.weights.resize(dens.size());
    double z = 0.0;
    for (std::size_t j = 0; j < dens.size(); ++j) {
      if (dens[j] < 0.0) throw InputError("TimeMeasure: negative density");
      t.weights[j] = tw[j] * dens[j];
      z += t.weights[j];
    }
    if (mass_out) *mass_out = z;
    if (!(z > 0.0)) throw InputError("TimeMeasure: zero mass");
    for (auto& w : t.weights) w /= z;
    for (auto& d : dens) d /= z;
    t.density = std::move(dens);
    return t;
  }
};

inline void require_same_time_grid(const TimeMeasure& a, const TimeMeasure& b) {
  if (a.size() != b.size() || std::abs(a.horizon - b.horizon) > 1e-14 * std::max(1.0, a.horizon))
    throw InputError("time measures live on different time grids");
}

inline double tv_distance(const TimeMeasure& a, const TimeMeasure& b) {
  require_same_time_grid(a, b);
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += std::abs(a.weights[j] - b.weights[j]);
  return s;
}

// weights of a ∧ b (cellwise minimum)
inline std::vector<double> overlap_weights(const TimeMeasure& a, const TimeMeasure& b) {
  require_same_time_grid(a, b);
  std::vector<double> w(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) w[j] = std::min(a.weights[j], b.weights[j]);
  return w;
}

}  // namespace perron
