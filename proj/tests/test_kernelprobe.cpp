#include "support.hpp"

#include "kernelprobe.hpp"
#include "scenario.hpp"

#include <random>

using namespace hyperbend;
using hbtest::vec;

namespace {

Expr sq(const Expr& e) { return Expr::mul({e, e}); }

Expr sum_squares(double scale) {
  std::vector<Expr> terms;
  for (int i = 0; i < 4; ++i) terms.push_back(sq(Expr::mul({Expr::constant(scale), Expr::var(i)})));
  return Expr::add(terms);
}

DiscretizationSpec uniform(int d) {
  DiscretizationSpec spec;
  spec.degrees.assign(4, d);
  spec.total_degree = d;
  return spec;
}

KernelReport synthetic(std::vector<double> sv, double floor) {
  KernelReport rep;
  rep.singular_values = std::move(sv);
  detect_gap(rep, 1e3, floor);
  return rep;
}

}  // namespace

TEST(KernelProbe, FlatTrivialMotionsSolveTheOperator) {
  const auto op = assemble_operator(make_flat_chart(4, Box::cube(4, -1, 1)), uniform(1));
  const Eigen::MatrixXd triv = trivial_coordinates(op);
  ASSERT_EQ(triv.cols(), 15);
  for (int k = 0; k < triv.cols(); ++k) EXPECT_LT(operator_residual(op, triv.col(k)), 1e-10);
  const KernelReport rep = kernel_svd(op, uniform(1));
  EXPECT_FALSE(rep.ambiguous);
  EXPECT_EQ(rep.kernel_dim, 15);
  EXPECT_EQ(rep.trivial_dim, 15);
}

TEST(KernelProbe, FullRankMatrixHasNoKernel) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd M(40, 10);
  for (int i = 0; i < M.size(); ++i) M.data()[i] = nd(rng);
  const KernelReport rep = kernel_svd(M, DiscretizationSpec{});
  EXPECT_FALSE(rep.ambiguous);
  EXPECT_EQ(rep.kernel_dim, 0);
  // two dependent columns
  M.col(9) = M.col(0) - 2.0 * M.col(3);
  M.col(8) = M.col(1);
  const KernelReport dep = kernel_svd(M, DiscretizationSpec{});
  EXPECT_EQ(dep.kernel_dim, 2);
  EXPECT_LT((M * dep.kernel_basis).norm(), 1e-12);
}

TEST(KernelProbe, GapDetection) {
  const KernelReport a = synthetic({1, 0.5, 1e-12, 1e-13}, 1e-16);
  EXPECT_EQ(a.kernel_dim, 2);
  EXPECT_DOUBLE_EQ(a.gap_ratio, 0.5e12);
  const KernelReport b = synthetic({1, 0.5, 0.1, 0.05}, 1e-3);
  EXPECT_TRUE(b.ambiguous);
  EXPECT_EQ(b.kernel_dim, -1);
  EXPECT_HB_ERROR(require_gap(b), ErrorCode::NoGap);
  EXPECT_EQ(synthetic({0, 0, 0}, 0).kernel_dim, 3);
  EXPECT_EQ(synthetic({}, 0).kernel_dim, 0);
  // values below the floor count as the floor
  EXPECT_EQ(synthetic({1, 1e-20, 1e-30}, 1e-15).kernel_dim, 2);
}

TEST(KernelProbe, RigidGraphHasOnlyTrivialKernel) {
  const ChartPtr chart = make_graph_chart(4, sum_squares(1.0), Box::cube(4, -1, 1));
  const auto op = assemble_operator(chart, uniform(3));
  KernelReport rep = kernel_svd(op, uniform(3));
  ASSERT_FALSE(rep.ambiguous);
  EXPECT_EQ(rep.kernel_dim, 15);
  classify_kernel_elements(op, rep, tensor_grid(chart->domain(), {2, 2, 2, 2}));
  EXPECT_EQ(rep.nontrivial_count, 0);

  // the same surface in rescaled coordinates
  const ChartPtr scaled = make_graph_chart(4, sum_squares(2.0), Box::cube(4, -0.5, 0.5));
  const KernelReport rs = kernel_svd(assemble_operator(scaled, uniform(3)), uniform(3));
  EXPECT_EQ(rs.kernel_dim, 15);
}

TEST(KernelProbe, RowSketchKeepsKernel) {
  DiscretizationSpec spec = uniform(1);
  spec.sketch_columns = 5;
  const KernelReport rep = kernel_svd(assemble_operator(make_flat_chart(4, Box::cube(4, -1, 1)), spec), spec);
  EXPECT_TRUE(rep.sketched);
  EXPECT_EQ(rep.kernel_dim, 15);
}

TEST(KernelProbe, KernelGrowsWithDegree) {
  const auto rows = resolution_sweep(make_flat_chart(4, Box::cube(4, -1, 1)), DiscretizationSpec{}, {1, 2}, SweepMode::Uniform);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].kernel_dim, 15);
  EXPECT_GT(rows[1].kernel_dim, rows[0].kernel_dim);
  EXPECT_GT(rows[1].columns, rows[0].columns);
}

TEST(KernelProbe, InvalidDiscretizations) {
  const ChartPtr flat = make_flat_chart(4, Box::cube(4, -1, 1));
  EXPECT_HB_ERROR(resolution_sweep(flat, DiscretizationSpec{}, {2, 1}, SweepMode::Uniform), ErrorCode::InvalidArgument);
  DiscretizationSpec spec = uniform(1);
  spec.quad_points = {0, 2, 2, 2};
  EXPECT_HB_ERROR(assemble_operator(flat, spec), ErrorCode::InvalidArgument);
  spec.quad_points = {2, 2};
  EXPECT_HB_ERROR(assemble_operator(flat, spec), ErrorCode::InvalidArgument);
  spec = uniform(1);
  spec.degrees = {1, 1, -1, 1};
  EXPECT_HB_ERROR(assemble_operator(flat, spec), ErrorCode::InvalidArgument);
  spec.degrees = {1, 1};
  EXPECT_HB_ERROR(assemble_operator(flat, spec), ErrorCode::InvalidArgument);
}

TEST(KernelProbe, PolynomialRuledGraphHasRuledKernelElements) {
  const Scenario sc = load_scenario("ruled-graph");
  const ChartPtr chart = build_chart(sc);
  DiscretizationSpec spec;
  spec.degrees = {5, 2, 1, 1};
  const auto op = assemble_operator(chart, spec);
  KernelReport rep = kernel_svd(op, spec);
  ASSERT_FALSE(rep.ambiguous);
  classify_kernel_elements(op, rep, tensor_grid(chart->domain(), {3, 2, 2, 2}));
  EXPECT_EQ(rep.nontrivial_count, rep.kernel_dim - 15);
  EXPECT_GE(rep.nontrivial_count, 1);
  for (const auto& el : rep.elements) {
    if (el.trivial) continue;
    EXPECT_GT(el.fit_residual, 1e-2);
    EXPECT_LT(el.shape_residual, 1e-3);
    EXPECT_LT(el.nullity_residual, 1e-5);
  }
}
