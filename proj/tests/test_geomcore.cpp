#include "support.hpp"

#include "chart.hpp"
#include "geometry.hpp"

#include <cmath>

using namespace hyperbend;
using hbtest::vec;

namespace {

Expr sq(int i) { return Expr::mul({Expr::var(i), Expr::var(i)}); }

ChartPtr paraboloid() { return make_paraboloid_chart(4, Box::cube(4, -1, 1)); }

ChartPtr mixed_graph() {
  return make_graph_chart(4, Expr::add({sq(0), Expr::mul({Expr::var(1), Expr::var(2)}), Expr::mul({sq(3), Expr::var(3)})}),
                          Box::cube(4, -1, 1));
}

}  // namespace

TEST(Geomcore, ParaboloidMatchesClosedForm) {
  const auto chart = paraboloid();
  const Vec x = vec({0.3, -0.2, 0.5, 0.1});
  const GeometryState s = evaluate_geometry(*chart, x);
  // graph of |x|^2: g = I + 4 x x^T, h = 2 I / w, N = (-2x, 1) / w with w = sqrt(1 + 4|x|^2)
  const double w = std::sqrt(1.0 + 4.0 * x.squaredNorm());
  const Mat g = Mat::Identity(4, 4) + 4.0 * x * x.transpose();
  const Mat A = g.inverse() * (2.0 / w) * Mat::Identity(4, 4);
  Vec N(5);
  N << -2.0 * x, 1.0;
  N /= w;
  EXPECT_LT((s.g - g).norm(), 1e-14);
  EXPECT_LT((s.shape - A).norm(), 1e-13);
  EXPECT_LT((s.normal - N).norm(), 1e-14);
  EXPECT_EQ(s.nullity_index, 0);
  EXPECT_EQ(s.rank(), 4);
}

TEST(Geomcore, ParaboloidAtOriginIsUmbilic) {
  const GeometryState s = evaluate_geometry(*paraboloid(), Vec::Zero(4));
  EXPECT_LT((s.shape - 2.0 * Mat::Identity(4, 4)).norm(), 1e-14);
  EXPECT_LT((s.principal - Vec::Constant(4, 2.0)).norm(), 1e-13);
}

TEST(Geomcore, FlatChartIsTotallyGeodesic) {
  const auto chart = make_flat_chart(4, Box::cube(4, -1, 1));
  const GeometryState s = evaluate_geometry(*chart, vec({0.1, 0.2, -0.3, 0.4}));
  EXPECT_EQ(s.shape.norm(), 0.0);
  EXPECT_EQ(s.nullity_index, 4);
  EXPECT_EQ(gauss_residual(s), 0.0);
  EXPECT_EQ(codazzi_residual(s), 0.0);
}

TEST(Geomcore, CylinderOverParabolaHasRankOne) {
  const auto chart = make_cylinder_chart(2, {Expr::var(0), sq(0)}, Box::cube(2, -1, 1));
  const Vec p = vec({0.0, 0.3});
  const GeometryState s = evaluate_geometry(*chart, p);
  EXPECT_EQ(s.nullity_index, 1);
  EXPECT_EQ(s.rank(), 1);
  // brute-force oracle: shape operator from finite-difference jets
  const ChartJet fd = finite_difference_jet(*chart, p);
  const GeometryState sf = geometry_from_jet(chart.get(), p, fd, chart->normal_sign(), GeometryOptions{});
  EXPECT_LT((s.shape - sf.shape).norm(), 1e-6);
  EXPECT_NEAR(std::abs(s.principal.cwiseAbs().maxCoeff()), 2.0, 1e-12);
}

TEST(Geomcore, RankDeficientAndOutOfDomain) {
  // (x, y) -> (x, 0, 0) is not an immersion
  const auto chart = std::make_shared<ExpressionChart>(
      "degenerate", std::vector<Expr>{Expr::var(0), Expr::constant(0), Expr::mul({Expr::constant(0), Expr::var(1)})},
      Box::cube(2, -1, 1));
  EXPECT_HB_ERROR(evaluate_geometry(*chart, vec({0.1, 0.1})), ErrorCode::RankDeficient);
  EXPECT_HB_ERROR(evaluate_geometry(*paraboloid(), vec({2.0, 0, 0, 0})), ErrorCode::OutOfDomain);
}

TEST(Geomcore, GaussCodazziHoldWithExactJets) {
  for (const auto& chart : {paraboloid(), mixed_graph(), ChartPtr(hbtest::r1())}) {
    const Vec p = chart->domain().center() + 0.1 * (chart->domain().hi - chart->domain().center());
    const GeometryState s = evaluate_geometry(*chart, p);
    EXPECT_LT(gauss_residual(s), 1e-9) << chart->name();
    EXPECT_LT(codazzi_residual(s), 1e-9) << chart->name();
    EXPECT_LT(std::abs(s.normal.norm() - 1.0), 1e-12);
    EXPECT_EQ((s.g - s.g.transpose()).norm(), 0.0);
    const Mat gA = s.g * s.shape;
    EXPECT_LT((gA - gA.transpose()).norm(), 1e-10);
    for (int i = 0; i < s.n; ++i) EXPECT_LT(std::abs(s.normal.dot(s.jet.d1.col(i))), 1e-12);
  }
}

TEST(Geomcore, CorruptedShapeOperatorBreaksGauss) {
  const GeometryState s = evaluate_geometry(*mixed_graph(), vec({0.2, 0.1, -0.3, 0.4}));
  Mat A = s.shape;
  A(0, 0) += 1.0;
  EXPECT_GT(gauss_residual_with(s, A), 0.1);
}

TEST(Geomcore, ExactJetsAgreeWithFiniteDifferences) {
  const auto chart = mixed_graph();
  const Vec p = vec({0.2, 0.1, -0.3, 0.4});
  const ChartJet exact = chart->jet(p, 3);
  const ChartJet fd = finite_difference_jet(*chart, p);
  EXPECT_LT((exact.d1 - fd.d1).norm() / exact.d1.norm(), 1e-6);
  for (int i = 0; i < 4; ++i) {
    EXPECT_LT((exact.d2[i] - fd.d2[i]).norm() / (1.0 + exact.d2[i].norm()), 1e-6);
    for (int j = 0; j < 4; ++j) EXPECT_LT((exact.d3[i][j] - fd.d3[i][j]).norm() / (1.0 + exact.d3[i][j].norm()), 1e-6);
  }
}

TEST(Geomcore, SplittingTensorVanishesOnCylinder) {
  const auto chart = make_cylinder_chart(4, {Expr::var(0), Expr::var(1), Expr::add({sq(0), sq(1)})}, Box::cube(4, -1, 1));
  const GeometryState s = evaluate_geometry(*chart, vec({0.2, -0.1, 0.3, 0.4}));
  ASSERT_EQ(s.nullity_index, 2);
  for (int k = 0; k < 2; ++k) {
    EXPECT_LT(splitting_tensor(s, s.nullity_basis.col(k)).C.norm(), 1e-9);
    EXPECT_LT(verify_codazzi_splitting(s, s.nullity_basis.col(k)), 1e-9);
  }
  EXPECT_EQ(estimate_C0_codimension(s), 0);
  const Vec X = s.complement_basis.col(0);
  EXPECT_LT(verify_CT_compatibility(s, s.nullity_basis.col(0), X, s.complement_basis.col(1)), 1e-6);
}

TEST(Geomcore, SplittingTensorOnRuledStrip) {
  const GeometryState s = evaluate_geometry(*hbtest::r1(), vec({0.0, 0.3, -0.4, 0.2}));
  ASSERT_EQ(s.nullity_index, 2);
  const Vec T1 = s.nullity_basis.col(0), T2 = s.nullity_basis.col(1);
  const Mat C1 = splitting_tensor(s, T1).C, C2 = splitting_tensor(s, T2).C;
  const Mat C12 = splitting_tensor(s, 0.7 * T1 - 1.3 * T2).C;
  EXPECT_LT((C12 - 0.7 * C1 + 1.3 * C2).norm(), 1e-10);
  EXPECT_LT(splitting_tensor(s, Vec::Zero(4)).C.norm(), 1e-14);
  // C_T = mu J with J nilpotent: C^2 = 0 and trace 0
  EXPECT_LT((C1 * C1).norm(), 1e-6 * (1.0 + C1.squaredNorm()));
  EXPECT_LT(std::abs(C1.trace()), 1e-6);
  // algebraic route A^+ (nabla_X A) T against the stencil route
  EXPECT_LT((splitting_tensor_algebraic(s, T1).C - C1).norm(), 1e-6);
  EXPECT_LT(verify_codazzi_splitting(s, T1), 1e-6);
  EXPECT_GT(verify_codazzi_splitting(s, T1, C1 + Mat::Identity(2, 2)), 0.1);
  EXPECT_EQ(estimate_C0_codimension(s), 1);
  const Vec X = s.complement_basis.col(0), Y = s.complement_basis.col(1);
  EXPECT_LT(verify_CT_compatibility(s, T1, X, Y), 1e-5);
  EXPECT_EQ(verify_CT_compatibility(s, T1, X, X), 0.0);
}

TEST(Geomcore, CodimensionNeedsRankTwo) {
  const auto chart = make_flat_chart(4, Box::cube(4, -1, 1));
  EXPECT_HB_ERROR(estimate_C0_codimension(evaluate_geometry(*chart, Vec::Zero(4))), ErrorCode::NullityJump);
}

TEST(Geomcore, AffineReparametrizationPreservesCurvatures) {
  const auto base = mixed_graph();
  Mat M(4, 4);
  M << 0.5, 0.1, 0, 0, 0, 0.4, 0, 0.1, 0, 0, 0.3, 0, 0.1, 0, 0, 0.5;
  const Vec b = vec({0.05, -0.05, 0.1, 0});
  const ReparametrizedChart re(base, M, b, Box::cube(4, -1, 1));
  const Vec q = vec({0.2, -0.3, 0.1, 0.4});
  const GeometryState s1 = evaluate_geometry(re, q);
  const GeometryState s0 = evaluate_geometry(*base, M * q + b);
  EXPECT_LT((s1.principal - s0.principal).norm(), 1e-11);
  EXPECT_LT(gauss_residual(s1), 1e-9);
}
