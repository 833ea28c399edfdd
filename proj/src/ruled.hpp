#pragma once

#include "chart.hpp"
#include "functions.hpp"

#include <vector>

namespace hyperbend {

struct RuledSpec {
  int n = 0;
  double s0 = 0.0;
  double s1 = 1.0;
  Function1D theta;
  std::vector<Function1D> phi;   // n-1 entries
  std::vector<Function1D> beta;  // n-1 entries
  Mat initial_frame;             // rows T0, T1, ..., T_{n-1}, N
  Vec base_point;
  Box u_box;
  int steps = 1000;

  void validate() const;
};

// f(s, u) = c(s) + sum u_i T_i(s) from the integrated frame.
class RuledChart : public ChartImmersion {
 public:
  explicit RuledChart(RuledSpec spec, std::string name = "ruled");

  int dim() const override { return spec_.n; }
  const Box& domain() const override { return box_; }
  std::string name() const override { return name_; }
  ChartJet compute_jet(const Vec& p, int order) const override;
  std::optional<Mat> ruling_directions(const Vec& p) const override;

  const RuledSpec& spec() const { return spec_; }
  // Frame rows and base curve at s; derivs[k] is the k-th s-derivative of the frame (k <= 3).
  void frame_at(double s, Mat& frame, Vec& curve) const;
  std::array<Mat, 4> frame_derivatives(double s, Vec& curve) const;
  Mat K(double s, int deriv) const;

  double max_orthonormality_drift() const { return max_drift_; }
  int steps() const { return static_cast<int>(frames_.size()) - 1; }
  Vec curve_end() const { return curves_.back(); }

 private:
  void integrate();
  void rk4_step(double s, double h, Mat& F, Vec& c) const;

  RuledSpec spec_;
  std::string name_;
  Box box_;
  double step_ = 0.0;
  std::vector<Mat> frames_;
  std::vector<Vec> curves_;
  double max_drift_ = 0.0;
};

std::shared_ptr<RuledChart> integrate_frame(const RuledSpec& spec, const std::string& name = "ruled");

// Orthonormal basis (ruling coordinates) of {u : sum u_i beta_i(s) = 0}.
Mat nullity_in_rulings(const RuledSpec& spec, double s);

struct RankReport {
  std::vector<int> ranks;
  std::vector<std::vector<double>> violations;
  int expected = 2;
  bool ok() const { return violations.empty(); }
};
RankReport check_rank2(const ChartImmersion& chart, const std::vector<Vec>& grid, int expected = 2);

RuledSpec default_ruled_spec(int n);
// Built-in rank-2 strips.
RuledSpec r1_spec();
RuledSpec r2_spec();

}  // namespace hyperbend
