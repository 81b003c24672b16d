#pragma once

#include "wkam/geometry.hpp"
#include "wkam/system.hpp"

#include <span>
#include <string>
#include <vector>

namespace wkam {

// Periodic grid function with cubic (1D) or bicubic (2D) Catmull-Rom interpolation.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(TorusGeometry geom, std::vector<double> values, std::string label = {});
  static ScalarField constant(const TorusGeometry& geom, double value, std::string label = {});
  template <class F>
  static ScalarField sample(const TorusGeometry& geom, F&& f, std::string label = {}) {
    std::vector<double> v(geom.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = f(geom.node(k));
    return ScalarField(geom, std::move(v), std::move(label));
  }

  const TorusGeometry& geometry() const { return geom_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& values_mut() { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }
  std::size_t size() const { return values_.size(); }
  const std::string& label() const { return label_; }
  void set_label(std::string s) { label_ = std::move(s); }

  double operator()(const Vec& x) const { return jet(x, 0).value; }
  Vec gradient(const Vec& x) const { return jet(x, 1).grad; }
  // order 0: value only, 1: + gradient, 2: + Hessian.
  ScalarJet jet(const Vec& x, int order = 2) const;

  double min() const;
  double max() const;
  // Largest slope between adjacent nodes.
  double lipschitz() const;
  // Largest positive second difference (eigenvalue in 2D) divided by h^2.
  double semiconcavity() const;
  double sup_distance(const ScalarField& other) const;

  ScalarField& operator+=(double s);
  ScalarField shifted(double s) const;

 private:
  TorusGeometry geom_;
  std::vector<double> values_;
  std::string label_;
};

}  // namespace wkam
