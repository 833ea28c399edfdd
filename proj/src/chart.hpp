#pragma once

#include "expr.hpp"
#include "linalg.hpp"

#include <atomic>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hyperbend {

struct Box {
  Vec lo;
  Vec hi;

  Box() = default;
  Box(Vec lo_, Vec hi_);
  static Box cube(int n, double lo, double hi);

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& p) const;
  Vec center() const { return 0.5 * (lo + hi); }
  double min_side() const { return (hi - lo).minCoeff(); }
  double diameter() const { return (hi - lo).norm(); }
};

// Derivatives of the chart map: d1.col(i) = f_i, d2[i].col(j) = f_ij, d3[i][j].col(k) = f_ijk.
struct ChartJet {
  int n = 0;
  int m = 0;
  int order = 0;
  Vec value;
  Mat d1;
  std::array<Mat, kMaxDim> d2;
  std::array<std::array<Mat, kMaxDim>, kMaxDim> d3;

  void resize(int n_, int m_, int order_);
};

class ChartImmersion {
 public:
  virtual ~ChartImmersion() = default;

  virtual int dim() const = 0;
  int ambient_dim() const { return dim() + 1; }
  virtual const Box& domain() const = 0;
  virtual int jet_order() const { return 3; }
  virtual std::string name() const = 0;

  // Derivatives at p without domain checks.
  virtual ChartJet compute_jet(const Vec& p, int order) const = 0;

  // Spanning coordinate vectors of the ruling through p, for ruled charts.
  virtual std::optional<Mat> ruling_directions(const Vec&) const { return std::nullopt; }

  ChartJet jet(const Vec& p, int order) const;
  Vec value(const Vec& p) const { return jet(p, 0).value; }

  // +1 or -1 so that the oriented normal has positive last nonzero coordinate at the center.
  double normal_sign() const;
  double scale() const { return domain().min_side(); }

 private:
  mutable std::atomic<int> normal_sign_{0};
};

using ChartPtr = std::shared_ptr<const ChartImmersion>;

class ExpressionChart : public ChartImmersion {
 public:
  ExpressionChart(std::string name, std::vector<Expr> components, Box box);

  int dim() const override { return box_.dim(); }
  const Box& domain() const override { return box_; }
  std::string name() const override { return name_; }
  ChartJet compute_jet(const Vec& p, int order) const override;

  const std::vector<Expr>& components() const { return components_; }
  void set_rulings(Mat directions) { rulings_ = std::move(directions); }
  std::optional<Mat> ruling_directions(const Vec&) const override;

 private:
  std::string name_;
  std::vector<Expr> components_;
  Box box_;
  std::optional<Mat> rulings_;
};

// x |-> (x, 0)
std::shared_ptr<ExpressionChart> make_flat_chart(int n, const Box& box);
// x |-> (x, height(x))
std::shared_ptr<ExpressionChart> make_graph_chart(int n, const Expr& height, const Box& box);
// x |-> (x, sum x_i^2)
std::shared_ptr<ExpressionChart> make_paraboloid_chart(int n, const Box& box);
// (x, u) |-> (base(x), u) with base: R^k -> R^{k+1}
std::shared_ptr<ExpressionChart> make_cylinder_chart(int n, const std::vector<Expr>& base, const Box& box);

// p = M q + b composed with a chart; `box` is the domain in q.
class ReparametrizedChart : public ChartImmersion {
 public:
  ReparametrizedChart(ChartPtr base, Mat m, Vec b, Box box);
  int dim() const override { return base_->dim(); }
  const Box& domain() const override { return box_; }
  std::string name() const override { return base_->name() + "-reparam"; }
  ChartJet compute_jet(const Vec& q, int order) const override;

 private:
  ChartPtr base_;
  Mat m_;
  Vec b_;
  Box box_;
};

// Independent derivative oracle by central differences. First derivatives use one Richardson
// level at h1; second and third derivatives use two levels at the wider steps h2, h3.
ChartJet finite_difference_jet(const ChartImmersion& chart, const Vec& p, double h1 = 1e-5,
                               double h2 = 1e-2, double h3 = 4e-2);

}  // namespace hyperbend

namespace hyperbend {

// Tensor grid with `counts` points per axis, inset by a fraction of each side.
std::vector<Vec> tensor_grid(const Box& box, const std::vector<int>& counts, double inset = 0.05);

}  // namespace hyperbend
