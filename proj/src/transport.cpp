#include "transport.hpp"

#include "errors.hpp"

#include <cmath>
#include <functional>

namespace hyperbend {

Mat splitting_closed_form(const Mat& C0, double s, const Mat& P) {
  const int r = static_cast<int>(C0.rows());
  const Mat R = Mat::Identity(r, r) - s * C0;
  Eigen::JacobiSVD<Mat> svd(R);
  const auto& sv = svd.singularValues();
  if (!(sv(r - 1) > 1e-12 * sv(0))) {
    fail(ErrorCode::SingularResolvent, "transport", "Id - s C0 is singular (real eigenvalue 1/s)", {s});
  }
  return P * C0 * R.inverse() * P.inverse();
}

RiccatiSolution integrate_riccati(const Mat& C0, double s_max, double step, bool allow_blowup) {
  RiccatiSolution sol;
  const int steps = std::max(1, static_cast<int>(std::ceil(s_max / step - 1e-9)));
  const double h = s_max / steps;
  const double limit = 1e8 * std::max(1.0, C0.cwiseAbs().maxCoeff());
  Mat C = C0;
  sol.s.push_back(0.0);
  sol.C.push_back(C);
  for (int k = 0; k < steps; ++k) {
    const Mat k1 = C * C;
    const Mat c2 = C + 0.5 * h * k1;
    const Mat k2 = c2 * c2;
    const Mat c3 = C + 0.5 * h * k2;
    const Mat k3 = c3 * c3;
    const Mat c4 = C + h * k3;
    const Mat k4 = c4 * c4;
    C += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double s = (k + 1) * h;
    if (!C.allFinite() || C.cwiseAbs().maxCoeff() > limit) {
      sol.blew_up = true;
      sol.blowup_s = k * h;  // last finite node, before the pole
      if (!allow_blowup) fail(ErrorCode::BlowUp, "transport", "splitting tensor blows up (real eigenvalue reached)", {s});
      return sol;
    }
    sol.s.push_back(s);
    sol.C.push_back(C);
  }
  return sol;
}

namespace {

GeometryState geo_state(const ChartImmersion& chart, const Vec& x, const GeometryOptions& base, int order) {
  GeometryOptions o = base;
  o.order = order;
  return evaluate_geometry(chart, x, o);
}

// Gamma(x)(a, b) as a coordinate vector
Vec gamma_ab(const GeometryState& s, const Vec& a, const Vec& b) {
  Vec out = Vec::Zero(s.n);
  for (int k = 0; k < s.n; ++k) {
    double v = 0.0;
    for (int i = 0; i < s.n; ++i)
      for (int j = 0; j < s.n; ++j) v += s.christoffel(k, i, j) * a(i) * b(j);
    out(k) = v;
  }
  return out;
}

}  // namespace

NullityGeodesic::NullityGeodesic(ChartPtr chart, Vec start, Vec direction, double s_max, GeodesicOptions opts)
    : chart_(std::move(chart)), opts_(opts) {
  if (!(s_max > 0.0)) fail(ErrorCode::InvalidArgument, "transport", "s_max must be positive");
  const GeometryState s0 = geo_state(*chart_, start, opts_.geometry, 2);
  const Vec off = s0.complement_projector() * direction;
  const double dn = std::sqrt(std::max(0.0, direction.dot(s0.g * direction)));
  if (!(dn > 0.0) || std::sqrt(std::max(0.0, off.dot(s0.g * off))) > 1e-6 * dn) {
    fail(ErrorCode::InvalidArgument, "transport", "direction must be a nonzero vector in the relative nullity",
         to_std(start));
  }
  frame0_ = s0.complement_basis;
  const int n = s0.n;
  const int steps = std::max(1, static_cast<int>(std::ceil(s_max / opts_.step - 1e-9)));
  step_ = s_max / steps;
  Vec x = start;
  Vec v = direction / dn;
  Mat P = Mat::Identity(n, n);
  s_.push_back(0.0);
  x_.push_back(x);
  v_.push_back(v);
  P_.push_back(P);
  struct D {
    Vec dx, dv;
    Mat dP;
  };
  auto rhs = [&](const Vec& xx, const Vec& vv, const Mat& PP) {
    const GeometryState st = geo_state(*chart_, xx, opts_.geometry, 2);
    D d;
    d.dx = vv;
    d.dv = -gamma_ab(st, vv, vv);
    d.dP = Mat(n, n);
    for (int c = 0; c < n; ++c) d.dP.col(c) = -gamma_ab(st, vv, PP.col(c));
    return d;
  };
  const double h = step_;
  for (int k = 0; k < steps; ++k) {
    const D k1 = rhs(x, v, P);
    const D k2 = rhs(x + 0.5 * h * k1.dx, v + 0.5 * h * k1.dv, P + 0.5 * h * k1.dP);
    const D k3 = rhs(x + 0.5 * h * k2.dx, v + 0.5 * h * k2.dv, P + 0.5 * h * k2.dP);
    const D k4 = rhs(x + h * k3.dx, v + h * k3.dv, P + h * k3.dP);
    x += (h / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    v += (h / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    P += (h / 6.0) * (k1.dP + 2.0 * k2.dP + 2.0 * k3.dP + k4.dP);
    if (!x.allFinite() || !v.allFinite() || !P.allFinite()) {
      fail(ErrorCode::StepFailure, "transport", "non-finite geodesic state", to_std(x));
    }
    s_.push_back((k + 1) * h);
    x_.push_back(x);
    v_.push_back(v);
    P_.push_back(P);
  }
}

double NullityGeodesic::acceleration_residual() const {
  const int N = nodes();
  double worst = 0.0;
  for (int k = 2; k + 2 < N; ++k) {
    const GeometryState st = geo_state(*chart_, x_[k], opts_.geometry, 2);
    const Vec acc = (-v_[k + 2] + 8.0 * v_[k + 1] - 8.0 * v_[k - 1] + v_[k - 2]) / (12.0 * step_) +
                    gamma_ab(st, v_[k], v_[k]);
    worst = std::max(worst, std::sqrt(std::max(0.0, acc.dot(st.g * acc))));
  }
  return worst;
}

double NullityGeodesic::straightness() const {
  const Vec f0 = chart_->value(x_.front());
  const Vec f1 = chart_->value(x_.back());
  const Vec d = (f1 - f0).normalized();
  double worst = 0.0;
  for (const auto& x : x_) {
    const Vec r = chart_->value(x) - f0;
    worst = std::max(worst, (r - r.dot(d) * d).norm());
  }
  return worst;
}

Mat geometric_splitting(const NullityGeodesic& geo, int k) {
  const GeometryState st = geo_state(geo.chart(), geo.x(k), GeometryOptions{}, 2);
  if (st.nullity_index != geo.chart().dim() - static_cast<int>(geo.complement_frame(0).cols())) {
    fail(ErrorCode::NullityJump, "transport", "rank changes along the geodesic", to_std(geo.x(k)));
  }
  const SplittingSample cs = splitting_tensor(st, geo.velocity(k));
  const Mat E = geo.complement_frame(k);
  const Mat R = E.transpose() * st.g * cs.basis;
  return R * cs.C * R.transpose();
}

double max_real_eigenvalue(const Mat& C, double tol) {
  if (C.rows() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(C);
  const double scale = std::max(1.0, C.cwiseAbs().maxCoeff());
  double worst = 0.0;
  for (int k = 0; k < C.rows(); ++k) {
    const auto lam = es.eigenvalues()(k);
    if (std::abs(lam.imag()) <= tol * scale) worst = std::max(worst, std::abs(lam.real()));
  }
  return worst;
}

SplittingAlongGeodesic integrate_splitting(const NullityGeodesic& geo) {
  SplittingAlongGeodesic out;
  const Mat C0 = geometric_splitting(geo, 0);
  const double s_max = geo.s(geo.nodes() - 1);
  const RiccatiSolution rs = integrate_riccati(C0, s_max, geo.step());
  const int r = static_cast<int>(C0.rows());
  for (int k = 0; k < geo.nodes(); ++k) {
    const Mat cg = geometric_splitting(geo, k);
    const Mat cc = splitting_closed_form(C0, geo.s(k), Mat::Identity(r, r));
    out.s.push_back(geo.s(k));
    out.C_rk.push_back(rs.C[k]);
    out.C_geo.push_back(cg);
    out.C_closed.push_back(cc);
    out.max_rk_vs_geo = std::max(out.max_rk_vs_geo, (rs.C[k] - cg).cwiseAbs().maxCoeff());
    out.max_rk_vs_closed = std::max(out.max_rk_vs_closed, (rs.C[k] - cc).cwiseAbs().maxCoeff());
    out.max_real_eigenvalue = std::max(out.max_real_eigenvalue, max_real_eigenvalue(cg));
  }
  return out;
}

Mat restricted_shape(const NullityGeodesic& geo, int k) {
  const GeometryState st = geo_state(geo.chart(), geo.x(k), GeometryOptions{}, 2);
  const Mat E = geo.complement_frame(k);
  return E.transpose() * st.h * E;
}

Mat restricted_B(const NullityGeodesic& geo, const BendingField& bf, int k) {
  GeometryOptions o;
  o.order = 2;
  const AssociatedTensors at = compute_associated(bf, geo.x(k), o);
  const Mat E = geo.complement_frame(k);
  return E.transpose() * at.b * E;
}

namespace {

TransportResult transport_impl(const NullityGeodesic& geo, double sign, int stride,
                               const std::function<Mat(int)>& geometric) {
  if (stride < 1) fail(ErrorCode::InvalidArgument, "transport", "stride must be positive");
  TransportResult out;
  const Mat C0 = geometric_splitting(geo, 0);
  Mat C = C0;
  Mat M = geometric(0);
  const double h = geo.step();
  out.s.push_back(0.0);
  out.pointwise.push_back(0.0);
  for (int k = 0; k + 1 < geo.nodes(); ++k) {
    auto fC = [](const Mat& c) { return Mat(c * c); };
    auto fM = [&](const Mat& m, const Mat& c) { return Mat(sign * m * c); };
    const Mat a1 = fC(C), b1 = fM(M, C);
    const Mat c2 = C + 0.5 * h * a1, m2 = M + 0.5 * h * b1;
    const Mat a2 = fC(c2), b2 = fM(m2, c2);
    const Mat c3 = C + 0.5 * h * a2, m3 = M + 0.5 * h * b2;
    const Mat a3 = fC(c3), b3 = fM(m3, c3);
    const Mat c4 = C + h * a3, m4 = M + h * b3;
    const Mat a4 = fC(c4), b4 = fM(m4, c4);
    C += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    M += (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    if (!C.allFinite() || C.cwiseAbs().maxCoeff() > 1e8 * std::max(1.0, C0.cwiseAbs().maxCoeff())) {
      fail(ErrorCode::BlowUp, "transport", "splitting tensor blows up along the geodesic", to_std(geo.x(k + 1)));
    }
    if ((k + 1) % stride != 0 && k + 2 != geo.nodes()) continue;
    const double d = (M - geometric(k + 1)).cwiseAbs().maxCoeff();
    out.s.push_back(geo.s(k + 1));
    out.pointwise.push_back(d);
    out.residual = std::max(out.residual, d);
  }
  return out;
}

}  // namespace

TransportResult transport_A(const NullityGeodesic& geo, double sign, int stride) {
  return transport_impl(geo, sign, stride, [&](int k) { return restricted_shape(geo, k); });
}

TransportResult transport_B(const NullityGeodesic& geo, const BendingField& bf, double sign, int stride) {
  return transport_impl(geo, sign, stride, [&](int k) { return restricted_B(geo, bf, k); });
}

DetEvolution det_evolution_samples(const std::vector<double>& s, const std::vector<Mat>& M,
                                   const std::vector<double>& trace_C) {
  DetEvolution out;
  if (s.empty()) return out;
  const double det0 = M[0].determinant();
  double integral = 0.0;
  for (size_t k = 0; k < s.size(); k += 2) {
    if (k > 0) {
      const double h = 0.5 * (s[k] - s[k - 2]);
      integral += h / 3.0 * (trace_C[k - 2] + 4.0 * trace_C[k - 1] + trace_C[k]);
    }
    const double det = M[k].determinant();
    const double pred = std::exp(integral) * det0;
    out.s.push_back(s[k]);
    out.det.push_back(det);
    out.predicted.push_back(pred);
    out.residual = std::max(out.residual, std::abs(det - pred));
    if (k + 2 >= s.size()) break;
  }
  return out;
}

DetEvolution det_evolution(const NullityGeodesic& geo, const BendingField* bf, int stride) {
  if (stride < 2 || stride % 2 != 0) fail(ErrorCode::InvalidArgument, "transport", "stride must be even");
  const Mat C0 = geometric_splitting(geo, 0);
  const RiccatiSolution rs = integrate_riccati(C0, geo.s(geo.nodes() - 1), geo.step());
  DetEvolution out;
  const double det0 = (bf ? restricted_B(geo, *bf, 0) : restricted_shape(geo, 0)).determinant();
  double integral = 0.0;
  for (int k = 0; k < geo.nodes(); k += 2) {
    if (k > 0) {
      const double h = 0.5 * (geo.s(k) - geo.s(k - 2));
      integral += h / 3.0 * (rs.C[k - 2].trace() + 4.0 * rs.C[k - 1].trace() + rs.C[k].trace());
    }
    if (k % stride != 0 && k + 2 < geo.nodes()) continue;
    const double det = (bf ? restricted_B(geo, *bf, k) : restricted_shape(geo, k)).determinant();
    const double pred = std::exp(integral) * det0;
    out.s.push_back(geo.s(k));
    out.det.push_back(det);
    out.predicted.push_back(pred);
    out.residual = std::max(out.residual, std::abs(det - pred));
  }
  return out;
}

double kernel_parallel_check(const std::vector<Mat>& C, double tol) {
  if (C.empty()) return 0.0;
  const double scale = std::max(1.0, C[0].cwiseAbs().maxCoeff());
  auto kernel = [&](const Mat& c) {
    Eigen::JacobiSVD<Mat> svd(c, Eigen::ComputeFullV);
    int rank = 0;
    for (int k = 0; k < svd.singularValues().size(); ++k)
      if (svd.singularValues()(k) > tol * scale) ++rank;
    return Mat(svd.matrixV().rightCols(c.cols() - rank));
  };
  const Mat k0 = kernel(C[0]);
  double worst = 0.0;
  for (size_t k = 1; k < C.size(); ++k) {
    const Mat kk = kernel(C[k]);
    if (kk.cols() != k0.cols()) fail(ErrorCode::KernelJump, "transport", "dim ker C changes along the geodesic");
    if (k0.cols() == 0 || k0.cols() == C[0].cols()) continue;
    const Mat resid = k0 - kk * (kk.transpose() * k0);
    Eigen::JacobiSVD<Mat> svd(resid);
    worst = std::max(worst, svd.singularValues()(0));
  }
  return worst;
}

double kernel_parallel_check(const NullityGeodesic& geo, double tol) {
  std::vector<Mat> C;
  for (int k = 0; k < geo.nodes(); ++k) C.push_back(geometric_splitting(geo, k));
  return kernel_parallel_check(C, tol);
}

}  // namespace hyperbend
