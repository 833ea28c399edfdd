#include "expr.hpp"

#include "errors.hpp"

namespace hyperbend {

Expr Expr::constant(double c) {
  Expr e;
  e.op_ = Op::Const;
  e.c_ = c;
  return e;
}

Expr Expr::var(int index) {
  Expr e;
  e.op_ = Op::Var;
  e.var_ = index;
  return e;
}

Expr Expr::add(std::vector<Expr> terms) {
  Expr e;
  e.op_ = Op::Add;
  e.args_ = std::move(terms);
  return e;
}

Expr Expr::mul(std::vector<Expr> factors) {
  Expr e;
  e.op_ = Op::Mul;
  e.args_ = std::move(factors);
  return e;
}

Expr Expr::fn(Function1D f, Expr arg) {
  Expr e;
  e.op_ = Op::Fn;
  e.f_ = std::move(f);
  e.args_.push_back(std::move(arg));
  return e;
}

double Expr::eval(const Vec& x) const {
  switch (op_) {
    case Op::Const: return c_;
    case Op::Var: return x(var_);
    case Op::Add: {
      double acc = 0.0;
      for (const auto& a : args_) acc += a.eval(x);
      return acc;
    }
    case Op::Mul: {
      double acc = 1.0;
      for (const auto& a : args_) acc *= a.eval(x);
      return acc;
    }
    case Op::Fn: return f_(args_[0].eval(x));
  }
  return 0.0;
}

Jet3 Expr::eval_jet(const Vec& x) const {
  const int n = static_cast<int>(x.size());
  switch (op_) {
    case Op::Const: return Jet3::constant(n, c_);
    case Op::Var: return Jet3::variable(n, var_, x(var_));
    case Op::Add: {
      Jet3 acc = Jet3::constant(n, 0.0);
      for (const auto& a : args_) acc += a.eval_jet(x);
      return acc;
    }
    case Op::Mul: {
      Jet3 acc = Jet3::constant(n, 1.0);
      for (const auto& a : args_) acc = acc * a.eval_jet(x);
      return acc;
    }
    case Op::Fn: {
      const Jet3 u = args_[0].eval_jet(x);
      return compose(u, f_.derivative(0, u.v), f_.derivative(1, u.v), f_.derivative(2, u.v),
                     f_.derivative(3, u.v));
    }
  }
  return Jet3::constant(n, 0.0);
}

int Expr::max_var() const {
  int m = op_ == Op::Var ? var_ : -1;
  for (const auto& a : args_) m = std::max(m, a.max_var());
  return m;
}

nlohmann::json Expr::to_json() const {
  switch (op_) {
    case Op::Const: return c_;
    case Op::Var: return {{"var", var_}};
    case Op::Add:
    case Op::Mul: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& a : args_) arr.push_back(a.to_json());
      return {{op_ == Op::Add ? "add" : "mul", arr}};
    }
    case Op::Fn: return {{"fn", f_.to_json()}, {"arg", args_[0].to_json()}};
  }
  return nullptr;
}

Expr Expr::from_json(const nlohmann::json& j) {
  if (j.is_number()) return constant(j.get<double>());
  if (!j.is_object()) fail(ErrorCode::ValidationError, "expr", "expression must be a number or an object");
  if (j.contains("var")) {
    if (!j["var"].is_number_integer() || j["var"].get<int>() < 0) {
      fail(ErrorCode::ValidationError, "expr", "var index must be a nonnegative integer");
    }
    return var(j["var"].get<int>());
  }
  if (j.contains("add") || j.contains("mul")) {
    const bool is_add = j.contains("add");
    const auto& arr = is_add ? j["add"] : j["mul"];
    if (!arr.is_array()) fail(ErrorCode::ValidationError, "expr", "add/mul needs a list");
    std::vector<Expr> parts;
    for (const auto& a : arr) parts.push_back(from_json(a));
    return is_add ? add(std::move(parts)) : mul(std::move(parts));
  }
  if (j.contains("pow")) {
    const auto& p = j["pow"];
    if (!p.is_array() || p.size() != 2 || !p[1].is_number_integer() || p[1].get<int>() < 0) {
      fail(ErrorCode::ValidationError, "expr", "pow needs [expr, nonnegative integer]");
    }
    std::vector<Expr> parts(static_cast<size_t>(p[1].get<int>()), from_json(p[0]));
    return mul(std::move(parts));
  }
  if (j.contains("fn")) {
    if (!j.contains("arg")) fail(ErrorCode::ValidationError, "expr", "fn needs arg");
    return fn(Function1D::from_json(j["fn"]), from_json(j["arg"]));
  }
  fail(ErrorCode::ValidationError, "expr", "unknown expression node");
}

}  // namespace hyperbend
