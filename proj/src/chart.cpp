#include "chart.hpp"

#include "errors.hpp"

#include <cmath>

namespace hyperbend {

Box::Box(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size() || lo.size() < 1 || lo.size() > kMaxDim) {
    fail(ErrorCode::InvalidArgument, "geomcore", "box bounds must have equal dimension in 1..6");
  }
  for (int i = 0; i < lo.size(); ++i) {
    if (!(lo(i) < hi(i))) fail(ErrorCode::InvalidArgument, "geomcore", "box must have lo < hi on every axis");
  }
}

Box Box::cube(int n, double lo, double hi) { return Box(Vec::Constant(n, lo), Vec::Constant(n, hi)); }

bool Box::contains(const Vec& p) const {
  if (p.size() != lo.size()) return false;
  const double slack = 1e-12 * (1.0 + diameter());
  for (int i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p(i)) || p(i) < lo(i) - slack || p(i) > hi(i) + slack) return false;
  }
  return true;
}

void ChartJet::resize(int n_, int m_, int order_) {
  n = n_;
  m = m_;
  order = order_;
  value = Vec::Zero(m);
  d1 = Mat::Zero(m, n);
  if (order >= 2)
    for (int i = 0; i < n; ++i) d2[i] = Mat::Zero(m, n);
  if (order >= 3)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d3[i][j] = Mat::Zero(m, n);
}

ChartJet ChartImmersion::jet(const Vec& p, int order) const {
  if (!domain().contains(p)) {
    fail(ErrorCode::OutOfDomain, "geomcore", "point outside chart domain of " + name(), to_std(p));
  }
  if (order > jet_order()) {
    fail(ErrorCode::InvalidArgument, "geomcore", "requested jet order exceeds chart jet_order");
  }
  return compute_jet(p, order);
}

double ChartImmersion::normal_sign() const {
  int s = normal_sign_.load(std::memory_order_relaxed);
  if (s != 0) return s;
  const ChartJet j = compute_jet(domain().center(), 1);
  const Vec nrm = generalized_cross(j.d1);
  const double scale = nrm.norm();
  s = 1;
  for (int c = static_cast<int>(nrm.size()) - 1; c >= 0; --c) {
    if (std::abs(nrm(c)) > 1e-12 * scale) {
      s = nrm(c) > 0 ? 1 : -1;
      break;
    }
  }
  normal_sign_.store(s, std::memory_order_relaxed);
  return s;
}

ExpressionChart::ExpressionChart(std::string name, std::vector<Expr> components, Box box)
    : name_(std::move(name)), components_(std::move(components)), box_(std::move(box)) {
  if (static_cast<int>(components_.size()) != box_.dim() + 1) {
    fail(ErrorCode::ValidationError, "geomcore", "chart needs n+1 components for an n-dimensional box");
  }
  if (box_.dim() < 2) fail(ErrorCode::ValidationError, "geomcore", "chart dimension must be at least 2");
  for (const auto& c : components_) {
    if (c.max_var() >= box_.dim()) fail(ErrorCode::ValidationError, "geomcore", "expression uses a variable beyond n");
  }
}

ChartJet ExpressionChart::compute_jet(const Vec& p, int order) const {
  const int n = dim();
  const int m = n + 1;
  ChartJet out;
  out.resize(n, m, order);
  for (int c = 0; c < m; ++c) {
    if (order == 0) {
      out.value(c) = components_[c].eval(p);
      continue;
    }
    const Jet3 j = components_[c].eval_jet(p);
    out.value(c) = j.v;
    for (int i = 0; i < n; ++i) out.d1(c, i) = j.d1[i];
    if (order >= 2)
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) out.d2[i](c, k) = j.h(i, k);
    if (order >= 3)
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) out.d3[i][k](c, l) = j.t(i, k, l);
  }
  return out;
}

std::optional<Mat> ExpressionChart::ruling_directions(const Vec&) const { return rulings_; }

std::shared_ptr<ExpressionChart> make_flat_chart(int n, const Box& box) {
  std::vector<Expr> comps;
  for (int i = 0; i < n; ++i) comps.push_back(Expr::var(i));
  comps.push_back(Expr::constant(0.0));
  return std::make_shared<ExpressionChart>("flat", std::move(comps), box);
}

std::shared_ptr<ExpressionChart> make_graph_chart(int n, const Expr& height, const Box& box) {
  std::vector<Expr> comps;
  for (int i = 0; i < n; ++i) comps.push_back(Expr::var(i));
  comps.push_back(height);
  return std::make_shared<ExpressionChart>("graph", std::move(comps), box);
}

std::shared_ptr<ExpressionChart> make_paraboloid_chart(int n, const Box& box) {
  std::vector<Expr> squares;
  for (int i = 0; i < n; ++i) squares.push_back(Expr::mul({Expr::var(i), Expr::var(i)}));
  auto chart = make_graph_chart(n, Expr::add(std::move(squares)), box);
  return chart;
}

std::shared_ptr<ExpressionChart> make_cylinder_chart(int n, const std::vector<Expr>& base, const Box& box) {
  const int k = static_cast<int>(base.size()) - 1;
  if (k < 1 || k > n) fail(ErrorCode::ValidationError, "geomcore", "cylinder base dimension must be in 1..n");
  std::vector<Expr> comps = base;
  for (const auto& e : base) {
    if (e.max_var() >= k) fail(ErrorCode::ValidationError, "geomcore", "cylinder base uses a variable beyond its dimension");
  }
  for (int i = k; i < n; ++i) comps.push_back(Expr::var(i));
  return std::make_shared<ExpressionChart>("cylinder", std::move(comps), box);
}

ReparametrizedChart::ReparametrizedChart(ChartPtr base, Mat m, Vec b, Box box)
    : base_(std::move(base)), m_(std::move(m)), b_(std::move(b)), box_(std::move(box)) {}

ChartJet ReparametrizedChart::compute_jet(const Vec& q, int order) const {
  const Vec p = m_ * q + b_;
  const ChartJet f = base_->compute_jet(p, order);
  const int n = f.n;
  ChartJet out;
  out.resize(n, f.m, order);
  out.value = f.value;
  if (order >= 1) out.d1 = f.d1 * m_;
  if (order >= 2) {
    for (int i = 0; i < n; ++i) {
      Mat acc = Mat::Zero(f.m, n);
      for (int a = 0; a < n; ++a) acc += m_(a, i) * f.d2[a];
      out.d2[i] = acc * m_;
    }
  }
  if (order >= 3) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Mat acc = Mat::Zero(f.m, n);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) acc += m_(a, i) * m_(b, j) * f.d3[a][b];
        out.d3[i][j] = acc * m_;
      }
  }
  return out;
}

ChartJet finite_difference_jet(const ChartImmersion& chart, const Vec& p, double h1, double h2, double h3) {
  const int n = chart.dim();
  const int m = chart.ambient_dim();
  auto f = [&](const Vec& x) { return chart.jet(x, 0).value; };
  auto unit = [&](int i) {
    Vec e = Vec::Zero(n);
    e(i) = 1.0;
    return e;
  };
  // two Richardson levels for a second-order accurate difference quotient D(h)
  auto richardson2 = [](auto&& d, double h) -> Vec {
    const Vec a = d(h), b = d(h / 2), c = d(h / 4);
    const Vec r1 = (4.0 * b - a) / 3.0, r2 = (4.0 * c - b) / 3.0;
    return (16.0 * r2 - r1) / 15.0;
  };
  auto second = [&](const Vec& x, int i, int j, double h) -> Vec {
    const Vec ei = unit(i), ej = unit(j);
    if (i == j) return (f(x + h * ei) - 2.0 * f(x) + f(x - h * ei)) / (h * h);
    return (f(x + h * ei + h * ej) - f(x + h * ei - h * ej) - f(x - h * ei + h * ej) + f(x - h * ei - h * ej)) /
           (4.0 * h * h);
  };
  auto second_r = [&](const Vec& x, int i, int j) -> Vec {
    return richardson2([&](double h) { return second(x, i, j, h); }, h2);
  };

  ChartJet out;
  out.resize(n, m, 3);
  out.value = f(p);
  for (int i = 0; i < n; ++i) {
    const Vec e = unit(i);
    auto d = [&](double h) -> Vec { return (f(p + h * e) - f(p - h * e)) / (2.0 * h); };
    out.d1.col(i) = (4.0 * d(h1 / 2) - d(h1)) / 3.0;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.d2[i].col(j) = second_r(p, i, j);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Vec e = unit(k);
        out.d3[i][j].col(k) = richardson2(
            [&](double h) -> Vec { return (second_r(p + h * e, i, j) - second_r(p - h * e, i, j)) / (2.0 * h); }, h3);
      }
  return out;
}

}  // namespace hyperbend

namespace hyperbend {

std::vector<Vec> tensor_grid(const Box& box, const std::vector<int>& counts, double inset) {
  const int n = box.dim();
  if (static_cast<int>(counts.size()) != n) fail(ErrorCode::InvalidArgument, "geomcore", "grid counts must match box dimension");
  std::vector<Vec> out;
  std::vector<int> idx(n, 0);
  long total = 1;
  for (int c : counts) {
    if (c < 1) fail(ErrorCode::InvalidArgument, "geomcore", "grid counts must be positive");
    total *= c;
  }
  out.reserve(static_cast<size_t>(total));
  for (long t = 0; t < total; ++t) {
    long r = t;
    Vec p(n);
    for (int i = n - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(r % counts[i]);
      r /= counts[i];
      const double frac = counts[i] == 1 ? 0.5 : inset + (1.0 - 2.0 * inset) * idx[i] / (counts[i] - 1);
      p(i) = box.lo(i) + frac * (box.hi(i) - box.lo(i));
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace hyperbend
