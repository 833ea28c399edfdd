#include "support.hpp"

#include "geometry.hpp"
#include "ruled.hpp"

#include <cmath>
#include <numbers>

using namespace hyperbend;
using hbtest::vec;

TEST(Ruled, ZeroDataGivesAHyperplane) {
  RuledSpec spec = default_ruled_spec(4);
  const auto chart = integrate_frame(spec);
  const Vec p = vec({0.4, 1.0, -2.0, 0.5});
  EXPECT_LT((chart->value(p) - vec({0.4, 1.0, -2.0, 0.5, 0.0})).norm(), 1e-14);
  Mat F;
  Vec c;
  chart->frame_at(0.9, F, c);
  EXPECT_LT((F - Mat::Identity(5, 5)).norm(), 1e-14);
}

TEST(Ruled, UnitCurvatureCurveCloses) {
  RuledSpec spec = default_ruled_spec(2);
  spec.s1 = 2.0 * std::numbers::pi;
  spec.theta = Function1D::constant(1.0);
  const auto chart = integrate_frame(spec);
  Mat F;
  Vec c0, c1, cq;
  chart->frame_at(0.0, F, c0);
  chart->frame_at(spec.s1, F, c1);
  EXPECT_LT((c1 - c0).norm(), 1e-8);
  // c(s) = sin(s) T0 + (1 - cos(s)) N for the identity initial frame
  chart->frame_at(0.5 * std::numbers::pi, F, cq);
  EXPECT_LT((cq - vec({1.0, 0.0, 1.0})).norm(), 1e-9);
}

TEST(Ruled, FrameStaysOrthonormalAndConverges) {
  const auto chart = hbtest::r1();
  EXPECT_LT(chart->max_orthonormality_drift(), 1e-9);
  RuledSpec fine = r1_spec();
  fine.steps = 2000;
  const auto half = integrate_frame(fine);
  EXPECT_LT((half->curve_end() - chart->curve_end()).norm(), 1e-10);
}

TEST(Ruled, ChartMatchesFrameFormula) {
  const auto chart = hbtest::r2();
  const RuledSpec& spec = chart->spec();
  for (double s : {0.1, 0.55, 0.9}) {
    const Vec u = vec({0.7, -1.2, 0.4});
    Vec p(4);
    p << s, u;
    Mat F;
    Vec c;
    chart->frame_at(s, F, c);
    EXPECT_LT((chart->value(vec({s, 0, 0, 0})) - c).norm(), 1e-12);
    double a = 1.0, b = 0.0;
    for (int i = 0; i < 3; ++i) {
      a += u(i) * spec.phi[i](s);
      b += u(i) * spec.beta[i](s);
    }
    const Vec expected = a * F.row(0).transpose() + b * F.row(4).transpose();
    EXPECT_LT((chart->jet(p, 1).d1.col(0) - expected).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Ruled, SingularWhereBothCoefficientsVanish) {
  RuledSpec spec = default_ruled_spec(4);
  spec.phi[0] = Function1D::constant(1.0);
  spec.beta[2] = Function1D::constant(1.0);
  const auto chart = integrate_frame(spec);
  EXPECT_HB_ERROR(chart->jet(vec({0.5, -1.0, 0.0, 0.0}), 1), ErrorCode::SingularPoint);
  EXPECT_NO_THROW(chart->jet(vec({0.5, -1.0, 0.0, 0.5}), 1));
}

TEST(Ruled, NullityInRulings) {
  RuledSpec spec = default_ruled_spec(4);
  spec.beta[0] = Function1D::constant(1.0);
  const Mat K = nullity_in_rulings(spec, 0.3);
  ASSERT_EQ(K.cols(), 2);
  EXPECT_LT(K.row(0).norm(), 1e-14);
  EXPECT_EQ(nullity_in_rulings(default_ruled_spec(4), 0.3).cols(), 3);

  const auto chart = hbtest::r1();
  const Mat Ku = nullity_in_rulings(chart->spec(), 0.5);
  const GeometryState st = evaluate_geometry(*chart, vec({0.5, 0, 0, 0}));
  Mat embedded = Mat::Zero(4, Ku.cols());
  embedded.bottomRows(3) = Ku;
  const Mat basis = gram_schmidt(embedded, st.g, 1e-12, 4);
  EXPECT_LT(subspace_sin_angle(basis, st.nullity_basis, st.g), 1e-6);
}

TEST(Ruled, RankTwoReports) {
  const auto chart = hbtest::r1();
  const auto grid = tensor_grid(chart->domain(), {3, 3, 3, 3});
  const RankReport r = check_rank2(*chart, grid);
  EXPECT_TRUE(r.ok());

  const auto flat = integrate_frame(default_ruled_spec(4));
  const RankReport rf = check_rank2(*flat, tensor_grid(flat->domain(), {2, 2, 2, 2}));
  EXPECT_FALSE(rf.ok());
  for (int r0 : rf.ranks) EXPECT_EQ(r0, 0);

  RuledSpec curved = default_ruled_spec(4);
  curved.theta = Function1D::constant(1.0);
  const auto c1 = integrate_frame(curved);
  const RankReport r1 = check_rank2(*c1, tensor_grid(c1->domain(), {2, 2, 2, 2}));
  for (int r0 : r1.ranks) EXPECT_EQ(r0, 1);
}

TEST(Ruled, SpecValidation) {
  RuledSpec spec = r1_spec();
  spec.initial_frame(0, 1) = 1e-6;
  EXPECT_HB_ERROR(spec.validate(), ErrorCode::ValidationError);
  spec = r1_spec();
  spec.steps = 10;
  EXPECT_HB_ERROR(spec.validate(), ErrorCode::ValidationError);
  spec = r1_spec();
  spec.beta.pop_back();
  EXPECT_HB_ERROR(spec.validate(), ErrorCode::ValidationError);
}
