#pragma once

#include "chart.hpp"
#include "geometry.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace hyperbend {

// Variation field tau along a chart. Jets reuse the ChartJet layout.
class BendingField {
 public:
  explicit BendingField(ChartPtr chart) : chart_(std::move(chart)) {}
  virtual ~BendingField() = default;

  const ChartImmersion& chart() const { return *chart_; }
  const ChartPtr& chart_ptr() const { return chart_; }
  virtual int jet_order() const = 0;
  virtual std::string name() const = 0;
  virtual ChartJet compute(const Vec& p, int order) const = 0;

  ChartJet jet(const Vec& p, int order) const;

 private:
  ChartPtr chart_;
};

using BendingPtr = std::shared_ptr<const BendingField>;

// tau = D f + w (trivial when D is skew).
class AffineBending : public BendingField {
 public:
  AffineBending(ChartPtr chart, Mat D, Vec w);
  int jet_order() const override { return chart().jet_order(); }
  std::string name() const override { return "affine"; }
  ChartJet compute(const Vec& p, int order) const override;
  const Mat& D() const { return D_; }
  const Vec& w() const { return w_; }

 private:
  Mat D_;
  Vec w_;
};

class ExpressionBending : public BendingField {
 public:
  ExpressionBending(ChartPtr chart, std::vector<Expr> components);
  int jet_order() const override { return 3; }
  std::string name() const override { return "expression"; }
  ChartJet compute(const Vec& p, int order) const override;

 private:
  std::vector<Expr> components_;
};

// sum_k c_k tau_k over bendings of the same chart.
class CombinationBending : public BendingField {
 public:
  CombinationBending(std::vector<double> coeffs, std::vector<BendingPtr> parts);
  int jet_order() const override;
  std::string name() const override { return "combination"; }
  ChartJet compute(const Vec& p, int order) const override;

 private:
  std::vector<double> coeffs_;
  std::vector<BendingPtr> parts_;
};

// f_t = f + t tau
class VariationChart : public ChartImmersion {
 public:
  VariationChart(BendingPtr bf, double t);
  int dim() const override { return bf_->chart().dim(); }
  const Box& domain() const override { return bf_->chart().domain(); }
  int jet_order() const override { return std::min(bf_->chart().jet_order(), bf_->jet_order()); }
  std::string name() const override { return bf_->chart().name() + "+t*tau"; }
  ChartJet compute_jet(const Vec& p, int order) const override;

 private:
  BendingPtr bf_;
  double t_;
};

std::shared_ptr<VariationChart> variation_immersion(BendingPtr bf, double t);

struct AssociatedTensors {
  GeometryState state;
  Mat L;        // m x n, column i = d_i tau
  Mat L0;       // tangential part as a coordinate endomorphism
  Vec xi;       // ambient vector
  Vec xi_coords;
  Mat b;        // bilinear form of B
  Mat B;        // endomorphism g^-1 b
  ChartJet tau;
};

AssociatedTensors compute_associated(const BendingField& bf, const Vec& p, const GeometryOptions& opts = {});

double bending_residual(const BendingField& bf, const std::vector<Vec>& grid);
double metric_deviation(const BendingField& bf, double t, const std::vector<Vec>& grid);
// max |g_t - g_{-t}| over the grid.
double metric_symmetry(const BendingField& bf, double t, const std::vector<Vec>& grid);

// Residuals of <xi, N> = 0 and <xi, f_i> + <N, L_i> = 0.
double xi_normal_residual(const AssociatedTensors& at);
double xi_tangent_residual(const AssociatedTensors& at);

Mat compute_B_fd(const BendingField& bf, const Vec& p, double h, bool richardson = true);

enum class DerivativeRoute { Jet, Stencil };
// (nabla_X L) Y - <BX,Y> N - <AX,Y> xi over an orthonormal frame; B may be overridden.
double verify_L_derivative(const BendingField& bf, const Vec& p, DerivativeRoute route = DerivativeRoute::Jet,
                           const Mat* B_override = nullptr);
// nabla_X xi + f_* B X + L A X, with xi differentiated on a stencil.
double verify_xi_derivative(const BendingField& bf, const Vec& p, const Mat* B_override = nullptr);

// BX ^ AY - BY ^ AX over orthonormal frame pairs, for an arbitrary candidate B.
double verify_B1(const GeometryState& state, const Mat& B);
double verify_B1(const AssociatedTensors& at);
// Codazzi residual of B with B differentiated on a stencil.
double verify_B2(const BendingField& bf, const Vec& p);
// Same check for an arbitrary endomorphism field B(x).
double verify_B2_field(const ChartImmersion& chart, const Vec& p, const std::function<Mat(const Vec&)>& B_at);

// max over nullity basis vectors v of |B v|.
double nullity_kernel_residual(const AssociatedTensors& at);

struct TrivialFit {
  Mat D;
  Vec w;
  double residual = 0.0;
  double tolerance = 0.0;
  bool is_trivial = false;
};
TrivialFit fit_trivial(const BendingField& bf, const std::vector<Vec>& grid);

double verify_normal_evolution(const BendingField& bf, const Vec& p, double t);

// stencil spacing for derived tensor fields
double stencil_spacing(const ChartImmersion& chart);

}  // namespace hyperbend
