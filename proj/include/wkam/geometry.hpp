#pragma once

#include "wkam/error.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>

namespace wkam {

// Points and covectors always carry two components; the second is unused in 1D.
using Vec = Eigen::Vector2d;
using Mat = Eigen::Matrix2d;

inline double wrap_unit(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 - 1e-12 ? 0.0 : r;
}

// Nearest representative of x in (-1/2, 1/2].
inline double periodic_delta(double x) { return x - std::round(x); }

// Uniform grid on the unit-period torus of dimension 1 or 2, n nodes per axis.
class TorusGeometry {
 public:
  TorusGeometry() = default;
  TorusGeometry(int dim, int n) : dim_(dim), n_(n) {
    if (dim != 1 && dim != 2) throw ConfigError("torus dimension must be 1 or 2");
    if (n < 16) throw ConfigError("grid size must be at least 16 per axis");
  }

  int dim() const { return dim_; }
  int n() const { return n_; }
  double h() const { return 1.0 / n_; }
  std::size_t size() const { return dim_ == 1 ? std::size_t(n_) : std::size_t(n_) * n_; }

  long wrap_index(long i) const {
    long r = i % n_;
    return r < 0 ? r + n_ : r;
  }
  std::size_t index(long i, long j = 0) const {
    return dim_ == 1 ? std::size_t(wrap_index(i)) : std::size_t(wrap_index(i) + long(n_) * wrap_index(j));
  }
  std::array<long, 2> coords(std::size_t k) const {
    return dim_ == 1 ? std::array<long, 2>{long(k), 0} : std::array<long, 2>{long(k % n_), long(k / n_)};
  }
  Vec node(std::size_t k) const {
    auto c = coords(k);
    return {c[0] * h(), c[1] * h()};
  }

  Vec wrap(const Vec& x) const { return {wrap_unit(x[0]), dim_ == 1 ? 0.0 : wrap_unit(x[1])}; }
  // Shortest periodic displacement from a to b.
  Vec delta(const Vec& a, const Vec& b) const {
    return {periodic_delta(b[0] - a[0]), dim_ == 1 ? 0.0 : periodic_delta(b[1] - a[1])};
  }
  double distance(const Vec& a, const Vec& b) const { return delta(a, b).norm(); }
  // Nearest node to a point.
  std::size_t nearest(const Vec& x) const {
    return index(std::lround(x[0] * n_), dim_ == 1 ? 0 : std::lround(x[1] * n_));
  }
  // Zero out the unused component so 1D points compare cleanly.
  Vec clean(Vec x) const {
    if (dim_ == 1) x[1] = 0.0;
    return x;
  }

  bool operator==(const TorusGeometry&) const = default;

 private:
  int dim_ = 1;
  int n_ = 16;
};

}  // namespace wkam
