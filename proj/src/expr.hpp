#pragma once

#include "functions.hpp"
#include "jet.hpp"

#include <json.hpp>

#include <vector>

namespace hyperbend {

// Closed-form scalar expression in the chart parameters.
class Expr {
 public:
  enum class Op { Const, Var, Add, Mul, Fn };

  Expr() = default;
  static Expr constant(double c);
  static Expr var(int index);
  static Expr add(std::vector<Expr> terms);
  static Expr mul(std::vector<Expr> factors);
  static Expr fn(Function1D f, Expr arg);

  double eval(const Vec& x) const;
  Jet3 eval_jet(const Vec& x) const;
  int max_var() const;

  nlohmann::json to_json() const;
  // number | {"var": i} | {"add": [...]} | {"mul": [...]} | {"pow": [expr, k]} | {"fn": f, "arg": expr}
  static Expr from_json(const nlohmann::json& j);

 private:
  Op op_ = Op::Const;
  double c_ = 0.0;
  int var_ = 0;
  std::vector<Expr> args_;
  Function1D f_;
};

}  // namespace hyperbend
