#include "wkam/field.hpp"

#include "wkam/error.hpp"

#include <algorithm>
#include <cmath>

namespace wkam {

namespace {

// Catmull-Rom weights for the four nodes around t in [0,1), and their derivatives.
struct CubicWeights {
  double w[4], d[4], dd[4];
  explicit CubicWeights(double t) {
    double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2 * t2 - t);
    w[1] = 0.5 * (3 * t3 - 5 * t2 + 2);
    w[2] = 0.5 * (-3 * t3 + 4 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
    d[0] = 0.5 * (-3 * t2 + 4 * t - 1);
    d[1] = 0.5 * (9 * t2 - 10 * t);
    d[2] = 0.5 * (-9 * t2 + 8 * t + 1);
    d[3] = 0.5 * (3 * t2 - 2 * t);
    dd[0] = 0.5 * (-6 * t + 4);
    dd[1] = 0.5 * (18 * t - 10);
    dd[2] = 0.5 * (-18 * t + 8);
    dd[3] = 0.5 * (6 * t - 2);
  }
};

}  // namespace

ScalarField::ScalarField(TorusGeometry geom, std::vector<double> values, std::string label)
    : geom_(geom), values_(std::move(values)), label_(std::move(label)) {
  if (geom_.n() < 16) throw ConfigError("grid size must be at least 16 per axis");
  if (values_.size() != geom_.size()) throw ConfigError("field size does not match its grid");
  for (double v : values_)
    if (!std::isfinite(v)) throw InvariantError("field '" + label_ + "' has non-finite values");
}

ScalarField ScalarField::constant(const TorusGeometry& geom, double value, std::string label) {
  return ScalarField(geom, std::vector<double>(geom.size(), value), std::move(label));
}

ScalarJet ScalarField::jet(const Vec& x, int order) const {
  const int n = geom_.n();
  const double h = geom_.h();
  ScalarJet out;
  double s0 = wrap_unit(x[0]) * n;
  long i0 = long(std::floor(s0));
  CubicWeights wx(s0 - i0);
  if (geom_.dim() == 1) {
    for (int a = 0; a < 4; ++a) {
      double u = values_[geom_.index(i0 - 1 + a)];
      out.value += wx.w[a] * u;
      if (order >= 1) out.grad[0] += wx.d[a] * u;
      if (order >= 2) out.hess(0, 0) += wx.dd[a] * u;
    }
    out.grad[0] /= h;
    out.hess(0, 0) /= h * h;
    return out;
  }
  double s1 = wrap_unit(x[1]) * n;
  long j0 = long(std::floor(s1));
  CubicWeights wy(s1 - j0);
  for (int b = 0; b < 4; ++b) {
    double row = 0, row_d = 0, row_dd = 0;
    for (int a = 0; a < 4; ++a) {
      double u = values_[geom_.index(i0 - 1 + a, j0 - 1 + b)];
      row += wx.w[a] * u;
      row_d += wx.d[a] * u;
      row_dd += wx.dd[a] * u;
    }
    out.value += wy.w[b] * row;
    if (order >= 1) {
      out.grad[0] += wy.w[b] * row_d;
      out.grad[1] += wy.d[b] * row;
    }
    if (order >= 2) {
      out.hess(0, 0) += wy.w[b] * row_dd;
      out.hess(0, 1) += wy.d[b] * row_d;
      out.hess(1, 1) += wy.dd[b] * row;
    }
  }
  out.grad /= h;
  out.hess /= h * h;
  out.hess(1, 0) = out.hess(0, 1);
  return out;
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

double ScalarField::lipschitz() const {
  double best = 0;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    auto [i, j] = geom_.coords(k);
    best = std::max(best, std::abs(values_[geom_.index(i + 1, j)] - values_[k]));
    if (geom_.dim() == 2) best = std::max(best, std::abs(values_[geom_.index(i, j + 1)] - values_[k]));
  }
  return best / geom_.h();
}

double ScalarField::semiconcavity() const {
  double best = 0;
  const double h2 = geom_.h() * geom_.h();
  for (std::size_t k = 0; k < values_.size(); ++k) {
    auto [i, j] = geom_.coords(k);
    double u = values_[k];
    double uxx = values_[geom_.index(i + 1, j)] - 2 * u + values_[geom_.index(i - 1, j)];
    if (geom_.dim() == 1) {
      best = std::max(best, uxx);
      continue;
    }
    double uyy = values_[geom_.index(i, j + 1)] - 2 * u + values_[geom_.index(i, j - 1)];
    double uxy = 0.25 * (values_[geom_.index(i + 1, j + 1)] - values_[geom_.index(i + 1, j - 1)] -
                         values_[geom_.index(i - 1, j + 1)] + values_[geom_.index(i - 1, j - 1)]);
    double mean = 0.5 * (uxx + uyy), rad = std::hypot(0.5 * (uxx - uyy), uxy);
    best = std::max(best, mean + rad);
  }
  return best / h2;
}

double ScalarField::sup_distance(const ScalarField& other) const {
  if (!(geom_ == other.geom_)) throw ConfigError("fields live on different grids");
  double d = 0;
  for (std::size_t k = 0; k < values_.size(); ++k) d = std::max(d, std::abs(values_[k] - other.values_[k]));
  return d;
}

ScalarField& ScalarField::operator+=(double s) {
  for (double& v : values_) v += s;
  return *this;
}

ScalarField ScalarField::shifted(double s) const {
  ScalarField f = *this;
  f += s;
  return f;
}

}  // namespace wkam
