#include "functions.hpp"

#include "errors.hpp"

#include <cmath>
#include <numbers>

namespace hyperbend {

Function1D::Function1D() = default;

Function1D Function1D::constant(double c) { return poly({c}); }

Function1D Function1D::poly(std::vector<double> coeffs) {
  Function1D f;
  f.kind_ = Kind::Poly;
  f.a_ = std::move(coeffs);
  return f;
}

Function1D Function1D::fourier(std::vector<double> a, std::vector<double> b, double period) {
  if (!(period > 0.0) || !std::isfinite(period)) {
    fail(ErrorCode::InvalidArgument, "functions", "fourier period must be positive");
  }
  Function1D f;
  f.kind_ = Kind::Fourier;
  f.a_ = std::move(a);
  f.b_ = std::move(b);
  f.period_ = period;
  return f;
}

Function1D Function1D::sum(const Function1D& f, const Function1D& g) {
  Function1D out;
  out.kind_ = Kind::Sum;
  out.lhs_ = std::make_shared<const Function1D>(f);
  out.rhs_ = std::make_shared<const Function1D>(g);
  return out;
}

Function1D Function1D::product(const Function1D& f, const Function1D& g) {
  Function1D out;
  out.kind_ = Kind::Product;
  out.lhs_ = std::make_shared<const Function1D>(f);
  out.rhs_ = std::make_shared<const Function1D>(g);
  return out;
}

Function1D Function1D::scaled(double c, const Function1D& f) {
  Function1D out;
  out.kind_ = Kind::Scaled;
  out.scale_ = c;
  out.lhs_ = std::make_shared<const Function1D>(f);
  return out;
}

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

double Function1D::derivative(int order, double s) const {
  switch (kind_) {
    case Kind::Poly: {
      // Horner on the differentiated coefficients
      double acc = 0.0;
      for (int k = static_cast<int>(a_.size()) - 1; k >= order; --k) {
        double c = a_[k];
        for (int j = 0; j < order; ++j) c *= (k - j);
        acc = acc * s + c;
      }
      return acc;
    }
    case Kind::Fourier: {
      const double w = 2.0 * std::numbers::pi / period_;
      double acc = (order == 0 && !a_.empty()) ? a_[0] : 0.0;
      const size_t kmax = std::max(a_.size(), b_.size() + 1);
      for (size_t k = 1; k < kmax; ++k) {
        const double ak = k < a_.size() ? a_[k] : 0.0;
        const double bk = k - 1 < b_.size() ? b_[k - 1] : 0.0;
        if (ak == 0.0 && bk == 0.0) continue;
        const double wk = w * static_cast<double>(k);
        const double x = wk * s;
        const double c = std::cos(x), sn = std::sin(x);
        // d^m/ds^m cos = wk^m cos(x + m pi/2), same for sin
        double dc = 0.0, ds = 0.0;
        switch (order % 4) {
          case 0: dc = c; ds = sn; break;
          case 1: dc = -sn; ds = c; break;
          case 2: dc = -c; ds = -sn; break;
          default: dc = sn; ds = -c; break;
        }
        acc += std::pow(wk, order) * (ak * dc + bk * ds);
      }
      return acc;
    }
    case Kind::Sum:
      return lhs_->derivative(order, s) + rhs_->derivative(order, s);
    case Kind::Product: {
      double acc = 0.0;
      for (int k = 0; k <= order; ++k) {
        acc += binomial(order, k) * lhs_->derivative(k, s) * rhs_->derivative(order - k, s);
      }
      return acc;
    }
    case Kind::Scaled:
      return scale_ * lhs_->derivative(order, s);
  }
  return 0.0;
}

bool Function1D::is_zero() const {
  switch (kind_) {
    case Kind::Poly:
      for (double c : a_) if (c != 0.0) return false;
      return true;
    case Kind::Fourier:
      for (double c : a_) if (c != 0.0) return false;
      for (double c : b_) if (c != 0.0) return false;
      return true;
    case Kind::Sum:
      return lhs_->is_zero() && rhs_->is_zero();
    case Kind::Product:
      return lhs_->is_zero() || rhs_->is_zero();
    case Kind::Scaled:
      return scale_ == 0.0 || lhs_->is_zero();
  }
  return false;
}

nlohmann::json Function1D::to_json() const {
  switch (kind_) {
    case Kind::Poly: return {{"poly", a_}};
    case Kind::Fourier: return {{"fourier", {{"a", a_}, {"b", b_}, {"period", period_}}}};
    case Kind::Sum: return {{"sum", {lhs_->to_json(), rhs_->to_json()}}};
    case Kind::Product: return {{"product", {lhs_->to_json(), rhs_->to_json()}}};
    case Kind::Scaled: return {{"scaled", {{"c", scale_}, {"f", lhs_->to_json()}}}};
  }
  return nullptr;
}

namespace {

std::vector<double> number_list(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) fail(ErrorCode::ValidationError, "functions", std::string(what) + " must be an array");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) fail(ErrorCode::ValidationError, "functions", std::string(what) + " entries must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

Function1D Function1D::from_json(const nlohmann::json& j) {
  if (j.is_number()) return constant(j.get<double>());
  if (!j.is_object() || j.size() != 1) {
    fail(ErrorCode::ValidationError, "functions",
         "function must be a number or an object with one of poly/fourier/sum/product/scaled");
  }
  if (j.contains("poly")) return poly(number_list(j["poly"], "poly"));
  if (j.contains("fourier")) {
    const auto& f = j["fourier"];
    if (!f.is_object() || !f.contains("period")) {
      fail(ErrorCode::ValidationError, "functions", "fourier needs a, b, period");
    }
    std::vector<double> a = f.contains("a") ? number_list(f["a"], "fourier.a") : std::vector<double>{};
    std::vector<double> b = f.contains("b") ? number_list(f["b"], "fourier.b") : std::vector<double>{};
    if (!f["period"].is_number()) fail(ErrorCode::ValidationError, "functions", "fourier.period must be a number");
    return fourier(std::move(a), std::move(b), f["period"].get<double>());
  }
  if (j.contains("sum") || j.contains("product")) {
    const bool is_sum = j.contains("sum");
    const auto& args = is_sum ? j["sum"] : j["product"];
    if (!args.is_array() || args.empty()) fail(ErrorCode::ValidationError, "functions", "sum/product needs a nonempty list");
    Function1D acc = from_json(args[0]);
    for (size_t k = 1; k < args.size(); ++k) {
      acc = is_sum ? sum(acc, from_json(args[k])) : product(acc, from_json(args[k]));
    }
    return acc;
  }
  if (j.contains("scaled")) {
    const auto& sc = j["scaled"];
    if (!sc.is_object() || !sc.contains("c") || !sc.contains("f") || !sc["c"].is_number()) {
      fail(ErrorCode::ValidationError, "functions", "scaled needs c and f");
    }
    return scaled(sc["c"].get<double>(), from_json(sc["f"]));
  }
  fail(ErrorCode::ValidationError, "functions", "unknown function encoding");
}

}  // namespace hyperbend
