#pragma once

#include <json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace hyperbend {

// Smooth scalar function of one variable with exact derivatives of any order.
class Function1D {
 public:
  enum class Kind { Poly, Fourier, Sum, Product, Scaled };

  Function1D();  // zero polynomial
  static Function1D constant(double c);
  static Function1D poly(std::vector<double> coeffs);
  // a0 + sum_k a_k cos(2 pi k s / period) + b_k sin(2 pi k s / period), k >= 1; b[0] is b_1
  static Function1D fourier(std::vector<double> a, std::vector<double> b, double period);
  static Function1D sum(const Function1D& f, const Function1D& g);
  static Function1D product(const Function1D& f, const Function1D& g);
  static Function1D scaled(double c, const Function1D& f);

  double operator()(double s) const { return derivative(0, s); }
  double derivative(int order, double s) const;
  bool is_zero() const;

  nlohmann::json to_json() const;
  static Function1D from_json(const nlohmann::json& j);

 private:
  Kind kind_ = Kind::Poly;
  std::vector<double> a_;
  std::vector<double> b_;
  double period_ = 1.0;
  double scale_ = 1.0;
  std::shared_ptr<const Function1D> lhs_;
  std::shared_ptr<const Function1D> rhs_;
};

}  // namespace hyperbend
