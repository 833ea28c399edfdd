#pragma once

#include "bending.hpp"
#include "chart.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace hyperbend {

struct DiscretizationSpec {
  std::vector<int> degrees;      // Chebyshev degree per axis
  int total_degree = -1;         // cap on the multi-index sum; negative disables
  std::vector<int> quad_points;  // Gauss-Legendre points per axis; empty picks degree + 1
  std::optional<Box> box;        // defaults to the chart domain
  bool rigid = true;             // add the rigid generators D_ab f to the trial space
  double gap_threshold = 1e3;
  double drop_tol = 1e-14;       // relative Gram eigenvalue cut when orthonormalizing
  int sketch_columns = 50000;    // above this column count the rows are compressed by a Gaussian sketch
  std::uint64_t seed = 0;
};

// Trial fields: rigid generators first, then phi_alpha e_c.
class TrialSpace {
 public:
  TrialSpace(ChartPtr chart, const DiscretizationSpec& spec);

  const ChartImmersion& chart() const { return *chart_; }
  const ChartPtr& chart_ptr() const { return chart_; }
  int rigid_count() const { return static_cast<int>(pairs_.size()); }
  int raw_size() const { return rigid_count() + static_cast<int>(multi_.size()) * m_; }
  const std::vector<std::vector<int>>& multi_indices() const { return multi_; }
  const std::vector<std::pair<int, int>>& rigid_pairs() const { return pairs_; }
  const Box& box() const { return box_; }

  // Values and first/second derivatives of every basis polynomial at p.
  void polynomials(const Vec& p, int order, Eigen::VectorXd& val, Eigen::MatrixXd& grad,
                   std::vector<Eigen::MatrixXd>* hess) const;
  // Field jet for raw coefficients r.
  ChartJet field_jet(const Eigen::VectorXd& r, const Vec& p, int order) const;

 private:
  ChartPtr chart_;
  Box box_;
  int n_, m_;
  std::vector<int> degrees_;
  std::vector<std::vector<int>> multi_;
  std::vector<std::pair<int, int>> pairs_;
};

struct AssembledOperator {
  Eigen::MatrixXd M;  // rows x cols in the orthonormal trial basis
  Eigen::MatrixXd T;  // raw coefficients = T * trial coefficients
  Eigen::MatrixXd G;  // weighted L2 Gram matrix of the raw fields
  std::shared_ptr<const TrialSpace> space;
  std::vector<Vec> grid;
  std::vector<double> weights;
  int raw_columns = 0;
};

AssembledOperator assemble_operator(ChartPtr chart, const DiscretizationSpec& spec);

struct KernelElement {
  Eigen::VectorXd coeffs;  // trial coefficients
  bool trivial = false;
  double trivial_cosine = 0.0;  // |projection onto the trivial span|
  double fit_residual = 0.0;
  double B_norm = 0.0;
  double shape_residual = -1.0;     // negative when not applicable
  double nullity_residual = -1.0;   // relative |B v| over nullity v
};

struct KernelReport {
  std::vector<double> singular_values;  // descending
  bool ambiguous = false;
  int kernel_dim = -1;
  double gap_ratio = 0.0;
  int trivial_dim = 0;
  int rows = 0;
  int columns = 0;
  bool sketched = false;
  Eigen::MatrixXd kernel_basis;  // columns x kernel_dim
  std::vector<KernelElement> elements;
  int nontrivial_count = 0;
};

// Gap detection on a descending spectrum; sets kernel_dim or ambiguous.
void detect_gap(KernelReport& rep, double gap_threshold, double floor);
KernelReport kernel_svd(const Eigen::MatrixXd& M, const DiscretizationSpec& spec, int trivial_dim = 0);
KernelReport kernel_svd(const AssembledOperator& op, const DiscretizationSpec& spec);
// Throws NoGap for an ambiguous report.
void require_gap(const KernelReport& rep);

// Bending field of trial coefficients c.
class KernelField : public BendingField {
 public:
  KernelField(std::shared_ptr<const TrialSpace> space, Eigen::VectorXd raw);
  int jet_order() const override { return 2; }
  std::string name() const override { return "kernel-element"; }
  ChartJet compute(const Vec& p, int order) const override;

 private:
  std::shared_ptr<const TrialSpace> space_;
  Eigen::VectorXd raw_;
};

std::shared_ptr<KernelField> kernel_field(const AssembledOperator& op, const Eigen::VectorXd& coeffs);
// Raw coefficient vectors of the (n+1)(n+2)/2 trivial motions, in trial coordinates.
Eigen::MatrixXd trivial_coordinates(const AssembledOperator& op);
// Operator residual |M c| / |M| of a trivial motion given in trial coordinates.
double operator_residual(const AssembledOperator& op, const Eigen::VectorXd& coeffs);

void classify_kernel_elements(const AssembledOperator& op, KernelReport& rep, const std::vector<Vec>& verify_grid);

enum class SweepMode { Uniform, SAxis };
struct SweepRow {
  int degree = 0;
  int kernel_dim = -1;
  bool ambiguous = false;
  double gap_ratio = 0.0;
  int columns = 0;
  int expected = -1;
};
// Uniform: every axis at the degree with total-degree cap; SAxis: axis 0 at the degree, others from base.
std::vector<SweepRow> resolution_sweep(ChartPtr chart, const DiscretizationSpec& base, const std::vector<int>& degrees,
                                       SweepMode mode);

}  // namespace hyperbend
