#pragma once

#include "bending.hpp"
#include "geometry.hpp"

#include <vector>

namespace hyperbend {

// C(s) = P C0 (Id - s C0)^-1 P^-1
Mat splitting_closed_form(const Mat& C0, double s, const Mat& P);

struct RiccatiSolution {
  std::vector<double> s;
  std::vector<Mat> C;
  bool blew_up = false;
  double blowup_s = 0.0;
};

// RK4 for dC/ds = C^2 on [0, s_max]; throws BlowUp unless allow_blowup, in which case the
// solution stops at the blow-up location.
RiccatiSolution integrate_riccati(const Mat& C0, double s_max, double step, bool allow_blowup = false);

struct GeodesicOptions {
  double step = 1e-3;
  GeometryOptions geometry;
};

class NullityGeodesic {
 public:
  NullityGeodesic(ChartPtr chart, Vec start, Vec direction, double s_max, GeodesicOptions opts = {});

  const ChartImmersion& chart() const { return *chart_; }
  int nodes() const { return static_cast<int>(s_.size()); }
  double s(int k) const { return s_[k]; }
  const Vec& x(int k) const { return x_[k]; }
  const Vec& velocity(int k) const { return v_[k]; }
  // parallel transport from the start: columns are transported coordinate basis vectors
  const Mat& transport(int k) const { return P_[k]; }
  // parallel frame of the nullity complement at node k (columns, coordinates)
  Mat complement_frame(int k) const { return P_[k] * frame0_; }
  double step() const { return step_; }

  // |nabla_{gamma'} gamma'| from the node velocities.
  double acceleration_residual() const;
  // max distance of f(gamma(s)) from the chord between its endpoints.
  double straightness() const;

 private:
  ChartPtr chart_;
  GeodesicOptions opts_;
  double step_;
  Mat frame0_;
  std::vector<double> s_;
  std::vector<Vec> x_;
  std::vector<Vec> v_;
  std::vector<Mat> P_;
};

struct SplittingAlongGeodesic {
  std::vector<double> s;
  std::vector<Mat> C_rk;      // Riccati solution in the parallel frame
  std::vector<Mat> C_geo;     // direct geometric evaluation in the parallel frame
  std::vector<Mat> C_closed;  // closed form
  double max_rk_vs_geo = 0.0;
  double max_rk_vs_closed = 0.0;
  double max_real_eigenvalue = 0.0;
};

// Splitting tensor C_{gamma'} at node k in the parallel frame.
Mat geometric_splitting(const NullityGeodesic& geo, int k);
SplittingAlongGeodesic integrate_splitting(const NullityGeodesic& geo);

// Largest |lambda| over real eigenvalues (imaginary part below tol * scale).
double max_real_eigenvalue(const Mat& C, double tol = 1e-6);

struct TransportResult {
  double residual = 0.0;
  std::vector<double> s;
  std::vector<double> pointwise;
};

// Transport dM/ds = sign * M C with C from the Riccati solution; compare against geometric M
// at every stride-th node and at the last one.
TransportResult transport_A(const NullityGeodesic& geo, double sign = 1.0, int stride = 1);
TransportResult transport_B(const NullityGeodesic& geo, const BendingField& bf, double sign = 1.0, int stride = 1);

// Geometric restriction of A (or B when bf is given) to the parallel frame at node k.
Mat restricted_shape(const NullityGeodesic& geo, int k);
Mat restricted_B(const NullityGeodesic& geo, const BendingField& bf, int k);

struct DetEvolution {
  double residual = 0.0;
  std::vector<double> s;
  std::vector<double> det;
  std::vector<double> predicted;
};

// |det M(s) - exp(int_0^s tr C) det M(0)| at even nodes, with composite Simpson for the integral.
DetEvolution det_evolution_samples(const std::vector<double>& s, const std::vector<Mat>& M,
                                   const std::vector<double>& trace_C);
// M sampled every stride-th node (stride even); the trace integral uses all nodes.
DetEvolution det_evolution(const NullityGeodesic& geo, const BendingField* bf, int stride = 2);

double kernel_parallel_check(const NullityGeodesic& geo, double tol = 1e-7);
// Same check on given matrices in a common parallel frame.
double kernel_parallel_check(const std::vector<Mat>& C, double tol = 1e-7);

}  // namespace hyperbend
