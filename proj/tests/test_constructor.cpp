#include "support.hpp"

#include "bending.hpp"
#include "constructor.hpp"

#include <cmath>

using namespace hyperbend;
using hbtest::vec;

namespace {

std::vector<Vec> patch_grid() { return tensor_grid(hbtest::ruled_patch(), {2, 1, 1, 2}); }

struct Built {
  BendingSeed seed;
  ThetaField theta;
  BTensorField field;
  std::shared_ptr<ConstructedBending> bending;
};

Built build(std::shared_ptr<RuledChart> chart, const Function1D& theta0) {
  BendingSeed seed = make_seed(chart, theta0);
  ThetaField theta = solve_theta(seed);
  BTensorField field(theta);
  auto cb = reconstruct_tau(seed, field);
  return {seed, theta, field, cb};
}

const Built& r2_cos() {
  static const Built b = build(hbtest::r2(), Function1D::fourier({0.0, 1.0}, {}, 2.0 * M_PI));
  return b;
}

}  // namespace

TEST(Constructor, ZeroSeedGivesZeroFields) {
  const Built b = build(hbtest::r1(), Function1D::constant(0.0));
  for (const Vec& p : patch_grid()) {
    EXPECT_EQ(b.theta.value(p), 0.0);
    EXPECT_EQ(b.field.B(p).norm(), 0.0);
    EXPECT_LT(b.bending->jet(p, 0).value.norm(), 1e-14);
  }
}

TEST(Constructor, ThetaSolvesRulingOde) {
  const Built& b = r2_cos();
  for (const Vec& p : patch_grid()) {
    EXPECT_LT(theta_ode_residual(b.theta, p), 1e-8);
    Vec base = p;
    base.tail(3).setZero();
    EXPECT_NEAR(b.theta.value(base), std::cos(p(0)), 1e-14);
  }
}

TEST(Constructor, RelativeTensorIsCompatible) {
  const Built& b = r2_cos();
  const CompatibilityReport rep = b_field_residuals(b.field, patch_grid());
  EXPECT_LT(rep.b1, 1e-7);
  EXPECT_LT(rep.b2, 1e-7);
  EXPECT_LT(rep.shape, 1e-8);
}

TEST(Constructor, WrongOdeSignBreaksCodazzi) {
  const BendingSeed seed = make_seed(hbtest::r1(), Function1D::constant(1.0));
  const ThetaField wrong = solve_theta(seed, -1.0);
  EXPECT_GT(b_field_residuals(BTensorField(wrong), patch_grid()).b2, 1e-3);
  EXPECT_HB_ERROR(assemble_B(seed, wrong, patch_grid()), ErrorCode::CompatibilityFailure);
}

TEST(Constructor, ReconstructionMatchesFrameRotation) {
  const Built& b = r2_cos();
  const FrameRotationBending oracle(hbtest::r2(), Function1D::fourier({0.0, 1.0}, {}, 2.0 * M_PI), b.seed.basepoint(0));
  for (const Vec& p : patch_grid()) {
    const Vec ref = oracle.jet(p, 0).value;
    EXPECT_LT((b.bending->jet(p, 0).value - ref).norm() / std::max(1.0, ref.norm()), 1e-9);
  }
  EXPECT_LT(bending_residual(oracle, patch_grid()), 1e-9);
}

TEST(Constructor, ReconstructionIsPathIndependent) {
  const Built& b = r2_cos();
  const Vec p = vec({0.3, 0.4, -0.2, 0.5});
  EXPECT_LT(b.bending->loop_residual(p, 0, 1, 0.1, 0.25), 1e-6);
  EXPECT_LT(b.bending->loop_residual(p, 2, 3, -0.25, 0.25), 1e-6);
  EXPECT_LT(bending_residual(*b.bending, patch_grid()), 1e-7);
  EXPECT_LT(b.bending->jet(b.seed.basepoint, 0).value.norm(), 1e-14);
}

TEST(Constructor, ConstructedBendingIsNotTrivial) {
  const Built& b = r2_cos();
  EXPECT_GT(fit_trivial(*b.bending, tensor_grid(hbtest::ruled_patch(), {3, 3, 2, 2})).residual, 1e-2);
}

TEST(Constructor, DecompositionOfKnownTensors) {
  const GeometryState s = evaluate_geometry(*hbtest::r1(), vec({0.4, 0.3, -0.5, 0.6}), GeometryOptions{.order = 2});
  const Decomposition a = decompose_relative_tensor(s, s.shape);
  EXPECT_NEAR(a.phi1, 1.0, 1e-10);
  EXPECT_NEAR(a.phi2, 0.0, 1e-10);
  const Decomposition z = decompose_relative_tensor(s, Mat::Zero(4, 4));
  EXPECT_EQ(z.phi1, 0.0);
  EXPECT_EQ(z.phi2, 0.0);
  // A J = nu Y (x) Y
  const RuledFrame fr = ruled_frame(s);
  const Mat AJ = fr.nu * fr.Y * fr.Y.transpose() * s.g;
  const Decomposition j = decompose_relative_tensor(s, AJ);
  EXPECT_NEAR(j.phi1, 0.0, 1e-10);
  EXPECT_NEAR(j.phi2, 1.0, 1e-10);
}

TEST(Constructor, FrameNeedsRulings) {
  const auto graph = make_graph_chart(4, Expr::mul({Expr::var(0), Expr::var(0)}), Box::cube(4, -1, 1));
  const GeometryState s = evaluate_geometry(*graph, vec({0.1, 0.2, 0.3, 0.4}), GeometryOptions{.order = 2});
  EXPECT_HB_ERROR(ruled_frame(s), ErrorCode::ValidationError);
}

TEST(Constructor, FamilyStaysHypersurface) {
  const Built& b = r2_cos();
  const auto B_at = [&](const Vec& x) { return b.field.B(x); };
  const auto t0 = gauss_codazzi_family_check(*hbtest::r2(), B_at, {0.0}, patch_grid());
  EXPECT_LT(t0[0].gauss, 1e-9);
  EXPECT_LT(t0[0].codazzi, 1e-6);
  for (const auto& f : gauss_codazzi_family_check(*hbtest::r2(), B_at, default_t_list(1.0), patch_grid())) {
    EXPECT_LT(f.gauss, 1e-6) << "t=" << f.t;
    EXPECT_LT(f.codazzi, 1e-6) << "t=" << f.t;
  }
  // scaling B by a function varying along a ruling breaks the Codazzi equation
  const auto bad = [&](const Vec& x) { return Mat((1.0 + x(1)) * b.field.B(x)); };
  double worst = 0.0;
  for (const auto& f : gauss_codazzi_family_check(*hbtest::r2(), bad, {0.5}, patch_grid())) worst = std::max(worst, f.codazzi);
  EXPECT_GT(worst, 1e-3);
}

TEST(Constructor, LinearInSeed) {
  const Function1D fa = Function1D::constant(1.0), fb = Function1D::poly({0.0, 1.0});
  const Built a = build(hbtest::r1(), fa), b = build(hbtest::r1(), fb);
  const Built c = build(hbtest::r1(), Function1D::sum(Function1D::scaled(0.7, fa), Function1D::scaled(-1.3, fb)));
  for (const Vec& p : patch_grid()) {
    const Vec d = c.bending->jet(p, 0).value - 0.7 * a.bending->jet(p, 0).value + 1.3 * b.bending->jet(p, 0).value;
    EXPECT_LT(d.cwiseAbs().maxCoeff(), 1e-9);
  }
}
