#include "support.hpp"

#include "constructor.hpp"
#include "transport.hpp"

#include <cmath>

using namespace hyperbend;
using hbtest::vec;

namespace {

Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

const NullityGeodesic& r1_geodesic() {
  static const NullityGeodesic geo = [] {
    const Vec start = vec({0.3, 0.2, -0.7, 0.4});
    const GeometryState st = evaluate_geometry(*hbtest::r1(), start);
    return NullityGeodesic(hbtest::r1(), start, st.nullity_basis.col(0), 1.0);
  }();
  return geo;
}

}  // namespace

TEST(Transport, ClosedFormExamples) {
  const Mat I = Mat::Identity(2, 2);
  const Mat nil = mat2(0, 1, 0, 0);
  EXPECT_LT((splitting_closed_form(nil, 0.7, I) - nil).norm(), 1e-15);
  const Mat rot = mat2(0, 1, -1, 0);
  EXPECT_LT((splitting_closed_form(rot, 0.5, I) - mat2(-0.4, 0.8, -0.8, -0.4)).norm(), 1e-15);
  EXPECT_LT((splitting_closed_form(rot, 0.0, I) - rot).norm(), 1e-15);
  // conjugation by the transport map
  const Mat P = mat2(2, 1, 0, 1);
  EXPECT_LT((splitting_closed_form(rot, 0.5, P) - P * mat2(-0.4, 0.8, -0.8, -0.4) * P.inverse()).norm(), 1e-14);
  EXPECT_HB_ERROR(splitting_closed_form(mat2(2, 0, 0, -1), 0.5, I), ErrorCode::SingularResolvent);
}

TEST(Transport, RiccatiAgainstClosedForm) {
  const Mat I = Mat::Identity(2, 2);
  for (const Mat& C0 : {mat2(0, 1, 0, 0), mat2(0, 1, -1, 0), mat2(0.3, 1, -2, -0.3)}) {
    const RiccatiSolution rs = integrate_riccati(C0, 1.0, 1e-3);
    double err = 0.0;
    for (size_t k = 0; k < rs.s.size(); ++k) err = std::max(err, (rs.C[k] - splitting_closed_form(C0, rs.s[k], I)).norm());
    EXPECT_LT(err, 1e-8);
  }
  const RiccatiSolution nil = integrate_riccati(mat2(0, 1, 0, 0), 1.0, 1e-3);
  EXPECT_LT((nil.C.back() - mat2(0, 1, 0, 0)).norm(), 1e-10);
}

TEST(Transport, BlowUpBeforeReciprocalEigenvalue) {
  const Mat C0 = mat2(2, 0, 0, -1);
  EXPECT_HB_ERROR(integrate_riccati(C0, 1.0, 1e-3), ErrorCode::BlowUp);
  const RiccatiSolution rs = integrate_riccati(C0, 1.0, 1e-3, true);
  ASSERT_TRUE(rs.blew_up);
  EXPECT_LE(rs.blowup_s, 0.5 + 1e-12);
  EXPECT_NEAR(rs.blowup_s, 0.5, 0.01);
}

TEST(Transport, CylinderTransportIsParallel) {
  const auto chart = make_cylinder_chart(4, {Expr::var(0), Expr::mul({Expr::var(0), Expr::var(0)})}, Box::cube(4, -1, 1));
  const Vec start = vec({0.3, -0.5, 0.2, 0.1});
  const GeometryState st = evaluate_geometry(*chart, start);
  const NullityGeodesic geo(chart, start, st.nullity_basis.col(0), 0.5);
  EXPECT_LT(transport_A(geo).residual, 1e-9);
  EXPECT_LT(det_evolution(geo, nullptr).residual, 1e-9);
  EXPECT_LT(kernel_parallel_check(geo), 1e-12);
}

TEST(Transport, RuledStripGeodesic) {
  const NullityGeodesic& geo = r1_geodesic();
  EXPECT_LT(geo.acceleration_residual(), 1e-8);
  EXPECT_LT(geo.straightness(), 1e-8);
  const SplittingAlongGeodesic sp = integrate_splitting(geo);
  EXPECT_LT(sp.max_rk_vs_geo, 1e-6);
  EXPECT_LT(sp.max_rk_vs_closed, 1e-8);
  EXPECT_LT(sp.max_real_eigenvalue, 1e-6);
  EXPECT_LT(transport_A(geo).residual, 1e-6);
  EXPECT_GT(transport_A(geo, -1.0).residual, 1e-2);
  EXPECT_LT(det_evolution(geo, nullptr).residual, 1e-6);
  EXPECT_LT(kernel_parallel_check(geo), 1e-6);
}

TEST(Transport, ConstructedBendingTransports) {
  const BendingSeed seed = make_seed(hbtest::r1(), Function1D::constant(1.0));
  const auto cb = reconstruct_tau(seed, BTensorField(solve_theta(seed)));
  const NullityGeodesic& geo = r1_geodesic();
  EXPECT_LT(transport_B(geo, *cb, 1.0, 100).residual, 1e-6);
  EXPECT_LT(det_evolution(geo, cb.get(), 100).residual, 1e-6);
}

TEST(Transport, DeterminantSamples) {
  // M(s) = M0 (Id - s C)^-1 solves M' = M C(s) for the Riccati C; nilpotent C keeps det fixed
  const Mat C0 = mat2(0, 1, 0, 0);
  const Mat M0 = mat2(2, 1, 1, 3);
  std::vector<double> s, tr;
  std::vector<Mat> M;
  for (int k = 0; k <= 100; ++k) {
    s.push_back(0.01 * k);
    M.push_back(M0 * (Mat::Identity(2, 2) - s.back() * C0).inverse());
    tr.push_back(0.0);
  }
  EXPECT_LT(det_evolution_samples(s, M, tr).residual, 1e-9);
  std::vector<Mat> Z(M.size(), mat2(1, 2, 2, 4));
  const DetEvolution dz = det_evolution_samples(s, Z, tr);
  EXPECT_LT(dz.residual, 1e-9);
  for (double p : dz.predicted) EXPECT_EQ(p, 0.0);
}

TEST(Transport, KernelParallelOnMatrices) {
  std::vector<Mat> nil(5, mat2(0, 1, 0, 0));
  EXPECT_LT(kernel_parallel_check(nil), 1e-8);
  EXPECT_EQ(kernel_parallel_check(std::vector<Mat>{mat2(0, 1, 0, 0)}), 0.0);
  std::vector<Mat> zero(3, Mat::Zero(2, 2));
  EXPECT_EQ(kernel_parallel_check(zero), 0.0);
  EXPECT_HB_ERROR(kernel_parallel_check(std::vector<Mat>{mat2(0, 1, 0, 0), Mat::Identity(2, 2)}), ErrorCode::KernelJump);
}

TEST(Transport, GeodesicNeedsNullityDirection) {
  const Vec start = vec({0.3, 0.2, -0.7, 0.4});
  const GeometryState st = evaluate_geometry(*hbtest::r1(), start);
  EXPECT_HB_ERROR(NullityGeodesic(hbtest::r1(), start, st.complement_basis.col(0), 1.0), ErrorCode::InvalidArgument);
}
