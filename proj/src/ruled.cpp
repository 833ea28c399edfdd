#include "ruled.hpp"

#include "errors.hpp"
#include "geometry.hpp"

#include <cmath>
#include <numbers>

namespace hyperbend {

void RuledSpec::validate() const {
  if (n < 2 || n > kMaxDim) fail(ErrorCode::ValidationError, "ruled", "n must be in 2..6");
  if (!(s1 > s0)) fail(ErrorCode::ValidationError, "ruled", "s_interval must have s0 < s1");
  if (static_cast<int>(phi.size()) != n - 1 || static_cast<int>(beta.size()) != n - 1) {
    fail(ErrorCode::ValidationError, "ruled", "phi and beta need n-1 functions each");
  }
  if (initial_frame.rows() != n + 1 || initial_frame.cols() != n + 1) {
    fail(ErrorCode::ValidationError, "ruled", "initial_frame must be (n+1)x(n+1)");
  }
  const double dev = (initial_frame * initial_frame.transpose() - Mat::Identity(n + 1, n + 1)).cwiseAbs().maxCoeff();
  if (dev > 1e-12) fail(ErrorCode::ValidationError, "ruled", "initial_frame is not orthonormal to 1e-12");
  if (base_point.size() != n + 1) fail(ErrorCode::ValidationError, "ruled", "base_point must have n+1 entries");
  if (u_box.dim() != n - 1) fail(ErrorCode::ValidationError, "ruled", "u_box must have dimension n-1");
  if (steps < 1000) fail(ErrorCode::ValidationError, "ruled", "steps must be at least 1000");
}

namespace {

Box chart_box(const RuledSpec& spec) {
  Vec lo(spec.n), hi(spec.n);
  lo(0) = spec.s0;
  hi(0) = spec.s1;
  lo.tail(spec.n - 1) = spec.u_box.lo;
  hi.tail(spec.n - 1) = spec.u_box.hi;
  return Box(lo, hi);
}

Mat polar(const Mat& F) {
  Eigen::JacobiSVD<Mat> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace

RuledChart::RuledChart(RuledSpec spec, std::string name)
    : spec_(std::move(spec)), name_(std::move(name)) {
  spec_.validate();
  box_ = chart_box(spec_);
  integrate();
}

Mat RuledChart::K(double s, int d) const {
  const int n = spec_.n;
  Mat k = Mat::Zero(n + 1, n + 1);
  const double th = spec_.theta.derivative(d, s);
  k(0, n) = th;
  k(n, 0) = -th;
  for (int i = 1; i < n; ++i) {
    const double ph = spec_.phi[i - 1].derivative(d, s);
    const double be = spec_.beta[i - 1].derivative(d, s);
    k(0, i) = -ph;
    k(i, 0) = ph;
    k(i, n) = be;
    k(n, i) = -be;
  }
  return k;
}

void RuledChart::rk4_step(double s, double h, Mat& F, Vec& c) const {
  const Mat k0 = K(s, 0), km = K(s + 0.5 * h, 0), k1 = K(s + h, 0);
  const Mat a1 = k0 * F;
  const Vec b1 = F.row(0).transpose();
  const Mat f2 = F + 0.5 * h * a1;
  const Mat a2 = km * f2;
  const Vec b2 = f2.row(0).transpose();
  const Mat f3 = F + 0.5 * h * a2;
  const Mat a3 = km * f3;
  const Vec b3 = f3.row(0).transpose();
  const Mat f4 = F + h * a3;
  const Mat a4 = k1 * f4;
  const Vec b4 = f4.row(0).transpose();
  F += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
  c += (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
}

void RuledChart::integrate() {
  const int steps = spec_.steps;
  step_ = (spec_.s1 - spec_.s0) / steps;
  Mat F = spec_.initial_frame;
  Vec c = spec_.base_point;
  frames_.reserve(steps + 1);
  curves_.reserve(steps + 1);
  frames_.push_back(F);
  curves_.push_back(c);
  const int m = spec_.n + 1;
  for (int k = 0; k < steps; ++k) {
    const double s = spec_.s0 + k * step_;
    rk4_step(s, step_, F, c);
    if (!F.allFinite() || !c.allFinite()) {
      fail(ErrorCode::StepFailure, "ruled", "non-finite frame during integration", {s});
    }
    if ((k + 1) % 100 == 0) {
      max_drift_ = std::max(max_drift_, (F * F.transpose() - Mat::Identity(m, m)).cwiseAbs().maxCoeff());
      F = polar(F);
    }
    frames_.push_back(F);
    curves_.push_back(c);
  }
  max_drift_ = std::max(max_drift_, (F * F.transpose() - Mat::Identity(m, m)).cwiseAbs().maxCoeff());
}

void RuledChart::frame_at(double s, Mat& frame, Vec& curve) const {
  const double slack = 1e-12 * (spec_.s1 - spec_.s0);
  if (!std::isfinite(s) || s < spec_.s0 - slack || s > spec_.s1 + slack) {
    fail(ErrorCode::OutOfDomain, "ruled", "s outside the integrated interval", {s});
  }
  long k = std::lround((s - spec_.s0) / step_);
  k = std::clamp<long>(k, 0, static_cast<long>(frames_.size()) - 1);
  frame = frames_[k];
  curve = curves_[k];
  const double sk = spec_.s0 + k * step_;
  if (s != sk) rk4_step(sk, s - sk, frame, curve);
}

std::array<Mat, 4> RuledChart::frame_derivatives(double s, Vec& curve) const {
  std::array<Mat, 4> F;
  frame_at(s, F[0], curve);
  const Mat k0 = K(s, 0), k1 = K(s, 1), k2 = K(s, 2);
  F[1] = k0 * F[0];
  F[2] = k1 * F[0] + k0 * F[1];
  F[3] = k2 * F[0] + 2.0 * k1 * F[1] + k0 * F[2];
  return F;
}

ChartJet RuledChart::compute_jet(const Vec& p, int order) const {
  const int n = spec_.n;
  const int m = n + 1;
  const double s = p(0);
  const Vec u = p.tail(n - 1);
  if (order >= 1) {
    double a = 1.0, b = 0.0;
    for (int i = 0; i < n - 1; ++i) {
      a += u(i) * spec_.phi[i](s);
      b += u(i) * spec_.beta[i](s);
    }
    if (a * a + b * b < 1e-20) fail(ErrorCode::SingularPoint, "ruled", "ruled chart is singular here", to_std(p));
  }
  Vec c;
  const std::array<Mat, 4> F = frame_derivatives(s, c);
  // s-derivatives of f along the ruling point: row combination T0-derivative for c, u-weighted rows
  auto along = [&](int k) -> Vec {
    Vec v = Vec::Zero(m);
    for (int i = 0; i < n - 1; ++i) v += u(i) * F[k].row(i + 1).transpose();
    return v;
  };
  ChartJet out;
  out.resize(n, m, order);
  out.value = c + along(0);
  if (order >= 1) {
    out.d1.col(0) = F[0].row(0).transpose() + along(1);
    for (int i = 1; i < n; ++i) out.d1.col(i) = F[0].row(i).transpose();
  }
  if (order >= 2) {
    out.d2[0].col(0) = F[1].row(0).transpose() + along(2);
    for (int i = 1; i < n; ++i) {
      out.d2[0].col(i) = F[1].row(i).transpose();
      out.d2[i].col(0) = F[1].row(i).transpose();
    }
  }
  if (order >= 3) {
    out.d3[0][0].col(0) = F[2].row(0).transpose() + along(3);
    for (int i = 1; i < n; ++i) {
      const Vec t = F[2].row(i).transpose();
      out.d3[0][0].col(i) = t;
      out.d3[0][i].col(0) = t;
      out.d3[i][0].col(0) = t;
    }
  }
  return out;
}

std::optional<Mat> RuledChart::ruling_directions(const Vec&) const {
  const int n = spec_.n;
  Mat r = Mat::Zero(n, n - 1);
  for (int i = 1; i < n; ++i) r(i, i - 1) = 1.0;
  return r;
}

std::shared_ptr<RuledChart> integrate_frame(const RuledSpec& spec, const std::string& name) {
  return std::make_shared<RuledChart>(spec, name);
}

Mat nullity_in_rulings(const RuledSpec& spec, double s) {
  const int k = spec.n - 1;
  Vec beta(k);
  for (int i = 0; i < k; ++i) beta(i) = spec.beta[i](s);
  const double bn = beta.norm();
  Mat proj = Mat::Identity(k, k);
  int dim = k;
  if (bn > 0.0) {
    const Vec b = beta / bn;
    proj -= b * b.transpose();
    dim = k - 1;
  }
  return gram_schmidt(proj, Mat::Identity(k, k), 1e-8, dim);
}

RankReport check_rank2(const ChartImmersion& chart, const std::vector<Vec>& grid, int expected) {
  RankReport rep;
  rep.expected = expected;
  GeometryOptions o;
  o.order = 2;
  for (const auto& p : grid) {
    const GeometryState s = evaluate_geometry(chart, p, o);
    rep.ranks.push_back(s.rank());
    if (s.rank() != expected) rep.violations.push_back(to_std(p));
  }
  return rep;
}

RuledSpec default_ruled_spec(int n) {
  RuledSpec spec;
  spec.n = n;
  spec.s0 = 0.0;
  spec.s1 = 1.0;
  spec.phi.assign(n - 1, Function1D());
  spec.beta.assign(n - 1, Function1D());
  spec.initial_frame = Mat::Identity(n + 1, n + 1);
  spec.base_point = Vec::Zero(n + 1);
  spec.u_box = Box::cube(n - 1, -5.0, 5.0);
  return spec;
}

namespace {

// beta(s) = (cos s, sin s cos s, sin^2 s), a unit vector turning out of every fixed plane
std::vector<Function1D> turning_beta() {
  const double p = 2.0 * std::numbers::pi;
  return {Function1D::fourier({0.0, 1.0}, {}, p), Function1D::fourier({}, {0.0, 0.5}, p),
          Function1D::fourier({0.5, 0.0, -0.5}, {}, p)};
}

}  // namespace

RuledSpec r1_spec() {
  RuledSpec spec = default_ruled_spec(4);
  spec.theta = Function1D::fourier({0.0, 1.0}, {}, 2.0 * std::numbers::pi);
  spec.beta = turning_beta();
  return spec;
}

RuledSpec r2_spec() {
  RuledSpec spec = default_ruled_spec(4);
  spec.theta = Function1D::poly({1.0, 0.2});
  spec.beta = turning_beta();
  spec.phi.clear();
  for (const auto& b : spec.beta) spec.phi.push_back(Function1D::scaled(0.5, b));
  return spec;
}

}  // namespace hyperbend
