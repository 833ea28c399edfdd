#pragma once

#include "bending.hpp"
#include "functions.hpp"
#include "geometry.hpp"
#include "ruled.hpp"

#include <Eigen/Dense>
#include <map>
#include <mutex>
#include <vector>

namespace hyperbend {

// Chart coordinates are (s, u) with rulings along the u axes.
struct BendingSeed {
  ChartPtr ruled;
  Function1D theta0;
  Vec basepoint;
};

// Default seed: basepoint at the middle of the s interval with u = 0.
BendingSeed make_seed(ChartPtr ruled, Function1D theta0);

// Orthonormal frame {Y, X} of the nullity complement: Y orthogonal to the rulings, X in the rulings,
// oriented so that nu = <AX, Y> > 0. c = <nabla_Y Y, X>.
struct RuledFrame {
  Vec Y;
  Vec X;
  double c = 0.0;
  double lambda = 0.0;
  double nu = 0.0;
};
RuledFrame ruled_frame(const GeometryState& s);
// (|B_XX| + |B_XY| + |B_YX| + sum |B v| over nullity v) / |B|; 0 when B = 0.
double shape_residual(const GeometryState& s, const RuledFrame& fr, const Mat& B);

// theta(s, u) = theta0(s) exp(sign * int_0^1 <u, X> c dr) along the segment from (s, 0) to (s, u).
class ThetaField {
 public:
  ThetaField(ChartPtr chart, Function1D theta0, double sign = 1.0, int nodes = 24);

  double value(const Vec& p) const;
  double sign() const { return sign_; }
  const Function1D& theta0() const { return theta0_; }
  const ChartImmersion& chart() const { return *chart_; }

 private:
  ChartPtr chart_;
  Function1D theta0_;
  double sign_;
  std::vector<double> nodes_, weights_;
};

ThetaField solve_theta(const BendingSeed& seed, double sign = 1.0);
// |X(theta) - c theta| / (1 + |theta|) with X(theta) from a 5-point stencil along X.
double theta_ode_residual(const ThetaField& theta, const Vec& p);

// B = theta Y (x) Y as an endomorphism field.
class BTensorField {
 public:
  explicit BTensorField(ThetaField theta) : theta_(std::move(theta)) {}
  Mat B(const Vec& p) const;
  Mat B(const GeometryState& s, const RuledFrame& fr, double theta) const;
  const ThetaField& theta() const { return theta_; }
  const ChartImmersion& chart() const { return theta_.chart(); }

 private:
  ThetaField theta_;
};

struct CompatibilityReport {
  double b1 = 0.0;
  double b2 = 0.0;
  double shape = 0.0;  // |B_XX| + |B_XY| + |B restricted to the nullity|, relative
};
CompatibilityReport b_field_residuals(const BTensorField& field, const std::vector<Vec>& grid);
// Throws CompatibilityFailure when residuals exceed 10x tol.
BTensorField assemble_B(const BendingSeed& seed, const ThetaField& theta, const std::vector<Vec>& grid,
                        double tol = 1e-7);

struct ReconstructOptions {
  int steps = 64;            // RK4 steps per path leg
  double fd_rel = 1e-3;      // stencil spacing for second derivatives, relative to chart scale
  bool project = true;       // remove the symmetric tangential part of L
};

// Solution of the total linear system for (tau, L, xi), gauged to zero at the basepoint.
class ConstructedBending : public BendingField {
 public:
  struct State {
    Vec tau;
    Mat L;  // m x n
    Vec xi;
  };

  ConstructedBending(BendingSeed seed, BTensorField field, ReconstructOptions opts = {});

  int jet_order() const override { return 2; }
  std::string name() const override { return "constructed"; }
  ChartJet compute(const Vec& p, int order) const override;

  State state_at(const Vec& p) const;
  // Re-integrate around the rectangle p -> p + da e_a -> p + da e_a + db e_b -> p + db e_b -> p.
  double loop_residual(const Vec& p, int a, int b, double da, double db) const;
  const BTensorField& field() const { return field_; }
  const BendingSeed& seed() const { return seed_; }

 private:
  using Packed = Eigen::VectorXd;
  Packed pack(const State& s) const;
  State unpack(const Packed& v) const;
  // Integrate along the segment; joint_theta integrates theta with the state (ruling legs only).
  Packed integrate(Packed y, const Vec& from, const Vec& to, bool joint_theta) const;
  Packed rhs(const Packed& y, const Vec& x, const Vec& d, bool joint_theta) const;
  Packed base_line(double s) const;

  BendingSeed seed_;
  BTensorField field_;
  ReconstructOptions opts_;
  int n_, m_;
  mutable std::mutex cache_mutex_;
  mutable std::map<double, Packed> cache_;
};

std::shared_ptr<ConstructedBending> reconstruct_tau(const BendingSeed& seed, const BTensorField& field,
                                                    ReconstructOptions opts = {});

struct FamilyResidual {
  double t = 0.0;
  double gauss = 0.0;
  double codazzi = 0.0;
};
// Gauss and Codazzi residuals of A + tB; Codazzi uses nabla A from jets and nabla B on a stencil.
std::vector<FamilyResidual> gauss_codazzi_family_check(const ChartImmersion& chart,
                                                       const std::function<Mat(const Vec&)>& B_at,
                                                       const std::vector<double>& t_list,
                                                       const std::vector<Vec>& grid);
std::vector<double> default_t_list(double B_norm);

// B restricted to the complement = phi1 A + phi2 A J with JY = X, JX = 0.
struct Decomposition {
  double phi1 = 0.0;
  double phi2 = 0.0;
  double residual = 0.0;
};
Decomposition decompose_relative_tensor(const GeometryState& s, const Mat& B);

// tau = Omega(s) f + w(s) with Omega' = theta0 (N T0^t - T0 N^t), w' = -Omega' c, zero at s = s_b.
// Exact bending of a ruled chart from the frame alone; reference for the constructor.
class FrameRotationBending : public BendingField {
 public:
  FrameRotationBending(std::shared_ptr<const RuledChart> chart, Function1D theta0, double s_base, int nodes = 40);
  int jet_order() const override { return 2; }
  std::string name() const override { return "frame-rotation"; }
  ChartJet compute(const Vec& p, int order) const override;

 private:
  Mat omega_prime(double s) const;
  void omega_w(double s, Mat& omega, Vec& w) const;

  std::shared_ptr<const RuledChart> ruled_;
  Function1D theta0_;
  double s_base_;
  std::vector<double> nodes_, weights_;
};

}  // namespace hyperbend
