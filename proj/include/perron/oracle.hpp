#pragma once
// Uniform access to a positive semigroup: f -> M_t f (right), mu -> mu M_t (left).

#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

namespace perron {

template <class P>
concept Propagator = requires(const P& p, std::span<const double> v) {
  { p.right(v) } -> std::same_as<std::vector<double>>;
  { p.left(v) } -> std::same_as<std::vector<double>>;
  { p.time() } -> std::convertible_to<double>;
};

template <class S>
concept SemigroupOracle = requires(const S& s, double t) {
  { s.dimension() } -> std::convertible_to<std::size_t>;
  { s.propagator(t) } -> Propagator;
};

// Exact cyclic shift on N cells of [0,1): M_t f(x) = f(x + t mod 1).
class CyclicShiftSemigroup {
 public:
  explicit CyclicShiftSemigroup(std::size_t n) : n_(n) {}
  std::size_t dimension() const { return n_; }
  double dx() const { return 1.0 / static_cast<double>(n_); }

  struct Prop {
    std::size_t n, k;
    double t;
    std::vector<double> right(std::span<const double> f) const {
      std::vector<double> out(n);
      for (std::size_t i = 0; i < n; ++i) out[i] = f[(i + k) % n];
      return out;
    }
    std::vector<double> left(std::span<const double> mu) const {
      std::vector<double> out(n);
      for (std::size_t i = 0; i < n; ++i) out[(i + k) % n] = mu[i];
      return out;
    }
    double time() const { return t; }
  };
  Prop propagator(double t) const {
    auto k = static_cast<std::size_t>(t * static_cast<double>(n_) + 1e-9);
    return {n_, k % n_, static_cast<double>(k) * dx()};
  }

 private:
  std::size_t n_;
};

}  // namespace perron
