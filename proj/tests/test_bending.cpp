#include "support.hpp"

#include "bending.hpp"
#include "constructor.hpp"

#include <cmath>

using namespace hyperbend;
using hbtest::vec;

namespace {

Expr sq(int i) { return Expr::mul({Expr::var(i), Expr::var(i)}); }

ChartPtr graph() {
  return make_graph_chart(4, Expr::add({sq(0), Expr::mul({Expr::var(1), Expr::var(2)}), Expr::mul({sq(3), Expr::var(3)})}),
                          Box::cube(4, -1, 1));
}

Mat skew5() {
  Mat D = Mat::Zero(5, 5);
  D(0, 1) = 0.3, D(0, 4) = -0.7, D(1, 3) = 0.2, D(2, 4) = 0.9, D(3, 4) = -0.4, D(1, 2) = 0.5;
  return D - D.transpose();
}

std::vector<Vec> grid(const ChartImmersion& c) { return tensor_grid(c.domain(), {2, 2, 2, 2}); }

// tau = phi(x) e_5 on the flat chart, phi = x0 x1 + x2^3
BendingPtr normal_bump(ChartPtr flat) {
  std::vector<Expr> comps(4, Expr::constant(0));
  comps.push_back(Expr::add({Expr::mul({Expr::var(0), Expr::var(1)}), Expr::mul({sq(2), Expr::var(2)})}));
  return std::make_shared<ExpressionBending>(flat, comps);
}

const std::shared_ptr<ConstructedBending>& r1_bending() {
  static auto cb = [] {
    const BendingSeed seed = make_seed(hbtest::r1(), Function1D::constant(1.0));
    return reconstruct_tau(seed, BTensorField(solve_theta(seed)));
  }();
  return cb;
}

}  // namespace

TEST(Bending, TrivialMotionIsABending) {
  const auto chart = graph();
  const auto bf = std::make_shared<AffineBending>(chart, skew5(), vec({1, 2, 3, 4, 5}));
  const auto g = grid(*chart);
  EXPECT_LT(bending_residual(*bf, g), 1e-12);
  EXPECT_LT(metric_deviation(*bf, 1.0, g), 1e-12);
  EXPECT_EQ(metric_deviation(*bf, 0.0, g), 0.0);
  EXPECT_LT(metric_symmetry(*bf, 0.1, g), 1e-12);
}

TEST(Bending, RadialFieldHasResidualTwo) {
  const auto chart = graph();
  const AffineBending radial(chart, Mat::Identity(5, 5), Vec::Zero(5));
  EXPECT_NEAR(bending_residual(radial, grid(*chart)), 2.0, 1e-12);
}

TEST(Bending, TrivialAssociatedTensorVanishes) {
  const auto chart = graph();
  const auto bf = std::make_shared<AffineBending>(chart, skew5(), vec({1, 0, 0, 0, 2}));
  const Vec p = vec({0.2, -0.3, 0.1, 0.5});
  const AssociatedTensors at = compute_associated(*bf, p);
  EXPECT_LT(at.B.norm(), 1e-10);
  EXPECT_LT(xi_normal_residual(at), 1e-12);
  EXPECT_LT(xi_tangent_residual(at), 1e-12);
  EXPECT_LT(compute_B_fd(*bf, p, 1e-4).norm(), 1e-6);
  EXPECT_LT(verify_L_derivative(*bf, p), 1e-10);
  EXPECT_LT(verify_xi_derivative(*bf, p), 1e-8);
  EXPECT_LT(verify_normal_evolution(*bf, p, 0.1), 1e-10);
  EXPECT_EQ(verify_normal_evolution(*bf, p, 0.0), 0.0);

  const AffineBending constant(chart, Mat::Zero(5, 5), vec({1, 2, 3, 4, 5}));
  const AssociatedTensors ac = compute_associated(constant, p);
  EXPECT_EQ(ac.L.norm(), 0.0);
  EXPECT_EQ(ac.xi.norm(), 0.0);
  EXPECT_EQ(ac.B.norm(), 0.0);
}

TEST(Bending, NormalVariationOfFlatChart) {
  const auto flat = make_flat_chart(4, Box::cube(4, -1, 1));
  const auto bf = normal_bump(flat);
  const Vec p = vec({0.3, -0.2, 0.4, 0.1});
  EXPECT_EQ(bending_residual(*bf, {p}), 0.0);
  // B is the Hessian of phi for the flat chart
  Mat H = Mat::Zero(4, 4);
  H(0, 1) = H(1, 0) = 1.0;
  H(2, 2) = 6.0 * p(2);
  const AssociatedTensors at = compute_associated(*bf, p);
  EXPECT_LT((at.B - H).norm(), 1e-12);
  EXPECT_LT(verify_B2(*bf, p), 1e-8);
  EXPECT_LT(metric_symmetry(*bf, 1.0, {p}), 1e-12);
}

TEST(Bending, FiniteDifferenceBConvergesAtSecondOrder) {
  const auto flat = make_flat_chart(4, Box::cube(4, -1, 1));
  const auto bf = normal_bump(flat);
  const Vec p = vec({0.3, -0.2, 0.4, 0.1});
  const Mat B = compute_associated(*bf, p).B;
  const double e1 = (compute_B_fd(*bf, p, 1e-2, false) - B).norm();
  const double e2 = (compute_B_fd(*bf, p, 5e-3, false) - B).norm();
  EXPECT_NEAR(e1 / e2, 4.0, 0.3);
  EXPECT_LT((compute_B_fd(*bf, p, 1e-4, true) - B).norm() / B.norm(), 1e-4);
}

TEST(Bending, ConstructedBendingOnRuledStrip) {
  const auto& cb = r1_bending();
  const Vec p = vec({0.4, 0.3, -0.5, 0.6});
  EXPECT_LT(bending_residual(*cb, {p}), 1e-7);
  EXPECT_LT(metric_deviation(*cb, 0.3, {p}), 1e-9);
  const AssociatedTensors at = compute_associated(*cb, p);
  EXPECT_GT(at.B.norm(), 0.1);
  EXPECT_LT((compute_B_fd(*cb, p, 1e-4) - at.B).norm(), 1e-5);
  EXPECT_LT(verify_L_derivative(*cb, p, DerivativeRoute::Stencil), 1e-6);
  EXPECT_LT(verify_xi_derivative(*cb, p), 1e-6);
  EXPECT_LT(verify_B1(at), 1e-6);
  EXPECT_LT(verify_B2(*cb, p), 1e-6);
  EXPECT_LT(nullity_kernel_residual(at), 1e-7);
  EXPECT_LT(verify_normal_evolution(*cb, p, 0.1), 1e-7);
  // with B zeroed the L-derivative residual is of the size of B
  const Mat zero = Mat::Zero(4, 4);
  const double corrupted = verify_L_derivative(*cb, p, DerivativeRoute::Jet, &zero);
  EXPECT_GT(corrupted, 0.1 * at.B.norm());
  EXPECT_LT(corrupted, 10.0 * at.B.norm());
}

TEST(Bending, WedgeIdentityDetectsFullRankB) {
  const GeometryState s = evaluate_geometry(*hbtest::r1(), vec({0.4, 0.3, -0.5, 0.6}));
  EXPECT_EQ(verify_B1(s, Mat::Zero(4, 4)), 0.0);
  EXPECT_GT(verify_B1(s, s.shape), 1e-3);
}

TEST(Bending, FitTrivialRecoversRigidMotion) {
  const auto chart = graph();
  const Mat D = skew5();
  const Vec w = vec({0.5, -1, 2, 0, 1});
  const auto g = tensor_grid(chart->domain(), {3, 2, 2, 2});
  const TrivialFit fit = fit_trivial(AffineBending(chart, D, w), g);
  EXPECT_LT(fit.residual, 1e-10);
  EXPECT_LT((fit.D - D).norm(), 1e-9);
  EXPECT_LT((fit.w - w).norm(), 1e-9);
  EXPECT_TRUE(fit.is_trivial);

  const TrivialFit zero = fit_trivial(AffineBending(chart, Mat::Zero(5, 5), Vec::Zero(5)), g);
  EXPECT_LT(zero.D.norm(), 1e-14);
  EXPECT_LT(zero.w.norm(), 1e-14);

  const auto rg = tensor_grid(hbtest::ruled_patch(), {3, 2, 2, 2});
  const TrivialFit nontrivial = fit_trivial(*r1_bending(), rg);
  EXPECT_GT(nontrivial.residual, 1e-2);
  EXPECT_FALSE(nontrivial.is_trivial);
  EXPECT_HB_ERROR(fit_trivial(AffineBending(chart, D, w), {g[0], g[1]}), ErrorCode::DegenerateSamples);
}

TEST(Bending, VariationImmersionIsFPlusTTau) {
  const auto chart = graph();
  const auto bf = std::make_shared<AffineBending>(chart, skew5(), vec({1, 2, 3, 4, 5}));
  const auto ft = variation_immersion(bf, 0.5);
  const Vec p = vec({0.1, 0.2, 0.3, 0.4});
  EXPECT_LT((ft->value(p) - chart->value(p) - 0.5 * bf->jet(p, 0).value).norm(), 1e-14);
}
