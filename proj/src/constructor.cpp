#include "constructor.hpp"

#include "errors.hpp"

#include <algorithm>
#include <cmath>

namespace hyperbend {

namespace {

const int kOffs[4] = {2, 1, -1, -2};
const double kWts[4] = {-1.0, 8.0, -8.0, 1.0};

GeometryState geometry2(const ChartImmersion& chart, const Vec& x) {
  GeometryOptions o;
  o.order = 2;
  return evaluate_geometry(chart, x, o);
}

double g_dot(const Mat& g, const Vec& a, const Vec& b) { return a.dot(g * b); }

// nabla_k B by a 5-point stencil plus Christoffel terms, as (k, i, j) = (nabla_k B)^i_j.
Tensor3 stencil_nabla(const ChartImmersion& chart, const GeometryState& s, const Mat& B,
                      const std::function<Mat(const Vec&)>& B_at) {
  const int n = s.n;
  const double h = stencil_spacing(chart);
  Tensor3 nb(n);
  for (int k = 0; k < n; ++k) {
    Mat acc = Mat::Zero(n, n);
    for (int q = 0; q < 4; ++q) {
      Vec x = s.point;
      x(k) += kOffs[q] * h;
      acc += kWts[q] * B_at(x);
    }
    const Mat dB = acc / (12.0 * h);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = dB(i, j);
        for (int l = 0; l < n; ++l) v += s.christoffel(i, k, l) * B(l, j) - s.christoffel(l, k, j) * B(i, l);
        nb(k, i, j) = v;
      }
  }
  return nb;
}

}  // namespace

BendingSeed make_seed(ChartPtr ruled, Function1D theta0) {
  BendingSeed seed;
  const Box& box = ruled->domain();
  seed.basepoint = Vec::Zero(ruled->dim());
  seed.basepoint(0) = 0.5 * (box.lo(0) + box.hi(0));
  for (int i = 1; i < ruled->dim(); ++i) seed.basepoint(i) = std::clamp(0.0, box.lo(i), box.hi(i));
  seed.ruled = std::move(ruled);
  seed.theta0 = std::move(theta0);
  return seed;
}

RuledFrame ruled_frame(const GeometryState& s) {
  const int n = s.n;
  if (s.order < 2) fail(ErrorCode::InvalidArgument, "constructor", "ruled frame needs a second-order state");
  const auto rulings = s.chart->ruling_directions(s.point);
  if (!rulings) fail(ErrorCode::ValidationError, "constructor", "chart has no rulings", to_std(s.point));
  if (rulings->row(0).cwiseAbs().maxCoeff() > 1e-12) {
    fail(ErrorCode::ValidationError, "constructor", "rulings must be the coordinate axes u_1..u_{n-1}",
         to_std(s.point));
  }
  if (s.nullity_index != n - 2) {
    fail(ErrorCode::FrameDegenerate, "constructor", "rank is not 2", to_std(s.point));
  }
  RuledFrame fr;
  const Vec w = s.g_inv.col(0);
  const double w0 = w(0);
  fr.Y = w / std::sqrt(w0);
  Vec nyy = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    Mat dgi(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) dgi(a, b) = s.dg(i, a, b);
    const Vec dw = -s.g_inv * (dgi * w);
    const Vec dY = dw / std::sqrt(w0) - 0.5 * w * dw(0) / (w0 * std::sqrt(w0));
    nyy += fr.Y(i) * dY;
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) nyy(k) += s.christoffel(k, i, j) * fr.Y(i) * fr.Y(j);

  const Mat& Q = s.complement_basis;
  const Vec yc = Q * (Q.transpose() * s.g * fr.Y);
  const Vec off = fr.Y - yc;
  if (std::sqrt(std::max(0.0, g_dot(s.g, off, off))) > 1e-6) {
    fail(ErrorCode::FrameDegenerate, "constructor", "rulings do not contain the relative nullity", to_std(s.point));
  }
  Vec best;
  double best_norm = -1.0;
  for (int a = 0; a < Q.cols(); ++a) {
    const Vec r = Q.col(a) - g_dot(s.g, Q.col(a), fr.Y) * fr.Y;
    const double nr = std::sqrt(std::max(0.0, g_dot(s.g, r, r)));
    if (nr > best_norm) {
      best_norm = nr;
      best = r;
    }
  }
  if (!(best_norm > 1e-8)) fail(ErrorCode::FrameDegenerate, "constructor", "no ruling direction in the complement", to_std(s.point));
  fr.X = best / best_norm;
  fr.nu = fr.X.dot(s.h * fr.Y);
  if (std::abs(fr.nu) <= 1e-12 * std::max(1.0, s.shape_norm)) {
    fail(ErrorCode::FrameDegenerate, "constructor", "<AX, Y> vanishes", to_std(s.point));
  }
  if (fr.nu < 0.0) {
    fr.X = -fr.X;
    fr.nu = -fr.nu;
  }
  fr.lambda = fr.Y.dot(s.h * fr.Y);
  fr.c = g_dot(s.g, nyy, fr.X);
  return fr;
}

double shape_residual(const GeometryState& s, const RuledFrame& fr, const Mat& B) {
  const double bn = std::sqrt(std::max(0.0, (B.transpose() * s.g * B * s.g_inv).trace()));
  if (!(bn > 0.0)) return 0.0;
  double off = std::abs(g_dot(s.g, fr.X, B * fr.X)) + std::abs(g_dot(s.g, fr.X, B * fr.Y)) +
               std::abs(g_dot(s.g, fr.Y, B * fr.X));
  for (int a = 0; a < s.nullity_index; ++a) {
    const Vec bv = B * s.nullity_basis.col(a);
    off += std::sqrt(std::max(0.0, g_dot(s.g, bv, bv)));
  }
  return off / bn;
}

ThetaField::ThetaField(ChartPtr chart, Function1D theta0, double sign, int nodes)
    : chart_(std::move(chart)), theta0_(std::move(theta0)), sign_(sign) {
  gauss_legendre(nodes, nodes_, weights_);
}

double ThetaField::value(const Vec& p) const {
  const double base = theta0_.derivative(0, p(0));
  if (base == 0.0) return 0.0;
  Vec u = p;
  u(0) = 0.0;
  if (u.cwiseAbs().maxCoeff() == 0.0) return base;
  double integral = 0.0;
  for (size_t k = 0; k < nodes_.size(); ++k) {
    const double r = 0.5 * (nodes_[k] + 1.0);
    Vec x = r * u;
    x(0) = p(0);
    const GeometryState st = geometry2(*chart_, x);
    const RuledFrame fr = ruled_frame(st);
    integral += 0.5 * weights_[k] * g_dot(st.g, u, fr.X) * fr.c;
  }
  return base * std::exp(sign_ * integral);
}

ThetaField solve_theta(const BendingSeed& seed, double sign) {
  ThetaField theta(seed.ruled, seed.theta0, sign);
  // the frame must exist at the basepoint and along its s-line
  ruled_frame(geometry2(*seed.ruled, seed.basepoint));
  return theta;
}

double theta_ode_residual(const ThetaField& theta, const Vec& p) {
  const GeometryState st = geometry2(theta.chart(), p);
  const RuledFrame fr = ruled_frame(st);
  const double h = stencil_spacing(theta.chart());
  double acc = 0.0;
  for (int q = 0; q < 4; ++q) acc += kWts[q] * theta.value(p + kOffs[q] * h * fr.X);
  const double xtheta = acc / (12.0 * h);
  const double th = theta.value(p);
  return std::abs(xtheta - theta.sign() * fr.c * th) / (1.0 + std::abs(th));
}

Mat BTensorField::B(const GeometryState& s, const RuledFrame& fr, double theta) const {
  return theta * fr.Y * (s.g * fr.Y).transpose();
}

Mat BTensorField::B(const Vec& p) const {
  const GeometryState st = geometry2(chart(), p);
  const double th = theta_.value(p);
  if (th == 0.0) return Mat::Zero(st.n, st.n);
  return B(st, ruled_frame(st), th);
}

CompatibilityReport b_field_residuals(const BTensorField& field, const std::vector<Vec>& grid) {
  CompatibilityReport rep;
  auto B_at = [&](const Vec& x) { return field.B(x); };
  for (const auto& p : grid) {
    const GeometryState st = geometry2(field.chart(), p);
    const RuledFrame fr = ruled_frame(st);
    const Mat B = field.B(st, fr, field.theta().value(p));
    rep.b1 = std::max(rep.b1, verify_B1(st, B));
    rep.b2 = std::max(rep.b2, verify_B2_field(field.chart(), p, B_at));
    rep.shape = std::max(rep.shape, shape_residual(st, fr, B));
  }
  return rep;
}

BTensorField assemble_B(const BendingSeed& seed, const ThetaField& theta, const std::vector<Vec>& grid, double tol) {
  (void)seed;
  BTensorField field(theta);
  const CompatibilityReport rep = b_field_residuals(field, grid);
  if (rep.b1 > 10.0 * tol || rep.b2 > 10.0 * tol) {
    fail(ErrorCode::CompatibilityFailure, "constructor",
         "B violates its compatibility equations (B1 " + std::to_string(rep.b1) + ", B2 " + std::to_string(rep.b2) + ")");
  }
  return field;
}

ConstructedBending::ConstructedBending(BendingSeed seed, BTensorField field, ReconstructOptions opts)
    : BendingField(seed.ruled), seed_(std::move(seed)), field_(std::move(field)), opts_(opts) {
  n_ = chart().dim();
  m_ = n_ + 1;
  if (opts_.steps < 1) fail(ErrorCode::InvalidArgument, "constructor", "steps must be positive");
}

ConstructedBending::Packed ConstructedBending::pack(const State& s) const {
  Packed v(m_ * (n_ + 2) + 1);
  v.segment(0, m_) = s.tau;
  for (int j = 0; j < n_; ++j) v.segment(m_ * (1 + j), m_) = s.L.col(j);
  v.segment(m_ * (n_ + 1), m_) = s.xi;
  v(m_ * (n_ + 2)) = 0.0;
  return v;
}

ConstructedBending::State ConstructedBending::unpack(const Packed& v) const {
  State s;
  s.tau = v.segment(0, m_);
  s.L = Mat(m_, n_);
  for (int j = 0; j < n_; ++j) s.L.col(j) = v.segment(m_ * (1 + j), m_);
  s.xi = v.segment(m_ * (n_ + 1), m_);
  return s;
}

ConstructedBending::Packed ConstructedBending::rhs(const Packed& y, const Vec& x, const Vec& d,
                                                   bool joint_theta) const {
  const GeometryState st = geometry2(chart(), x);
  const RuledFrame fr = ruled_frame(st);
  const double th = joint_theta ? y(m_ * (n_ + 2)) : field_.theta().value(x);
  const Mat B = field_.B(st, fr, th);
  const Mat b = st.g * B;
  const State s = unpack(y);
  const Mat& F = st.jet.d1;
  Packed out(y.size());
  out.segment(0, m_) = s.L * d;
  for (int j = 0; j < n_; ++j) {
    Vec dl = Vec::Zero(m_);
    for (int i = 0; i < n_; ++i) {
      if (d(i) == 0.0) continue;
      Vec t = b(i, j) * st.normal + st.h(i, j) * s.xi;
      for (int k = 0; k < n_; ++k) t += st.christoffel(k, i, j) * s.L.col(k);
      dl += d(i) * t;
    }
    out.segment(m_ * (1 + j), m_) = dl;
  }
  out.segment(m_ * (n_ + 1), m_) = -(F * (B * d) + s.L * (st.shape * d));
  out(m_ * (n_ + 2)) = joint_theta ? field_.theta().sign() * g_dot(st.g, d, fr.X) * fr.c * th : 0.0;
  return out;
}

ConstructedBending::Packed ConstructedBending::integrate(Packed y, const Vec& from, const Vec& to,
                                                        bool joint_theta) const {
  const Vec d = to - from;
  if (d.cwiseAbs().maxCoeff() == 0.0) return y;
  const double h = 1.0 / opts_.steps;
  for (int k = 0; k < opts_.steps; ++k) {
    const double r = k * h;
    const Vec x0 = from + r * d, xm = from + (r + 0.5 * h) * d, x1 = (k + 1 == opts_.steps) ? to : Vec(from + (r + h) * d);
    const Packed k1 = rhs(y, x0, d, joint_theta);
    const Packed k2 = rhs(y + 0.5 * h * k1, xm, d, joint_theta);
    const Packed k3 = rhs(y + 0.5 * h * k2, xm, d, joint_theta);
    const Packed k4 = rhs(y + h * k3, x1, d, joint_theta);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!y.allFinite()) fail(ErrorCode::StepFailure, "constructor", "non-finite state during reconstruction", to_std(to));
  return y;
}

ConstructedBending::Packed ConstructedBending::base_line(double s) const {
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    const auto it = cache_.find(s);
    if (it != cache_.end()) return it->second;
  }
  State zero{Vec::Zero(m_), Mat::Zero(m_, n_), Vec::Zero(m_)};
  Vec to = seed_.basepoint;
  to(0) = s;
  const Packed y = integrate(pack(zero), seed_.basepoint, to, false);
  std::lock_guard<std::mutex> lock(cache_mutex_);
  if (cache_.size() > 4096) cache_.clear();
  cache_.emplace(s, y);
  return y;
}

ConstructedBending::State ConstructedBending::state_at(const Vec& p) const {
  Packed y = base_line(p(0));
  Vec from = seed_.basepoint;
  from(0) = p(0);
  y(m_ * (n_ + 2)) = field_.theta().value(from);
  return unpack(integrate(y, from, p, true));
}

ChartJet ConstructedBending::compute(const Vec& p, int order) const {
  ChartJet out;
  out.resize(n_, m_, order);
  auto projected_L = [&](const Vec& x, State* st_out) {
    State st = state_at(x);
    if (opts_.project) {
      const ChartJet f = chart().jet(x, 1);
      const Mat g = f.d1.transpose() * f.d1;
      const Mat S = f.d1.transpose() * st.L;
      const Mat sym = 0.5 * (S + S.transpose());
      st.L -= f.d1 * g.ldlt().solve(sym);
    }
    if (st_out) *st_out = st;
    return st.L;
  };
  State st;
  const Mat L = projected_L(p, &st);
  out.value = st.tau;
  if (order >= 1) out.d1 = L;
  if (order >= 2) {
    const Box& box = chart().domain();
    const double h = opts_.fd_rel * chart().scale();
    std::array<Mat, kMaxDim> dL;
    for (int k = 0; k < n_; ++k) {
      Mat acc = Mat::Zero(m_, n_);
      if (p(k) - 2 * h >= box.lo(k) && p(k) + 2 * h <= box.hi(k)) {
        for (int q = 0; q < 4; ++q) {
          Vec x = p;
          x(k) += kOffs[q] * h;
          acc += kWts[q] * projected_L(x, nullptr);
        }
        dL[k] = acc / (12.0 * h);
      } else {
        // one-sided fourth-order stencil pointing into the box
        const double dir = (p(k) - 2 * h < box.lo(k)) ? 1.0 : -1.0;
        const double w[5] = {-25.0, 48.0, -36.0, 16.0, -3.0};
        acc = w[0] * L;
        for (int q = 1; q < 5; ++q) {
          Vec x = p;
          x(k) += dir * q * h;
          acc += w[q] * projected_L(x, nullptr);
        }
        dL[k] = dir * acc / (12.0 * h);
      }
    }
    for (int i = 0; i < n_; ++i) {
      out.d2[i] = Mat(m_, n_);
      for (int j = 0; j < n_; ++j) out.d2[i].col(j) = 0.5 * (dL[i].col(j) + dL[j].col(i));
    }
  }
  return out;
}

double ConstructedBending::loop_residual(const Vec& p, int a, int b, double da, double db) const {
  const State s0 = state_at(p);
  Packed y = pack(s0);
  Vec c0 = p, c1 = p, c2 = p, c3 = p;
  c1(a) += da;
  c2(a) += da;
  c2(b) += db;
  c3(b) += db;
  y = integrate(y, c0, c1, false);
  y = integrate(y, c1, c2, false);
  y = integrate(y, c2, c3, false);
  y = integrate(y, c3, c0, false);
  const Packed start = pack(s0);
  const int len = m_ * (n_ + 2);
  return (y.head(len) - start.head(len)).cwiseAbs().maxCoeff();
}

std::shared_ptr<ConstructedBending> reconstruct_tau(const BendingSeed& seed, const BTensorField& field,
                                                    ReconstructOptions opts) {
  return std::make_shared<ConstructedBending>(seed, field, opts);
}

std::vector<FamilyResidual> gauss_codazzi_family_check(const ChartImmersion& chart,
                                                       const std::function<Mat(const Vec&)>& B_at,
                                                       const std::vector<double>& t_list,
                                                       const std::vector<Vec>& grid) {
  std::vector<FamilyResidual> out;
  for (double t : t_list) out.push_back({t, 0.0, 0.0});
  for (const auto& p : grid) {
    GeometryOptions o;
    o.order = 3;
    const GeometryState st = evaluate_geometry(chart, p, o);
    const Mat B = B_at(p);
    const Tensor3 nb = stencil_nabla(chart, st, B, B_at);
    const int n = st.n;
    for (auto& r : out) {
      Tensor3 sum(n);
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) sum(k, i, j) = st.nabla_A(k, i, j) + r.t * nb(k, i, j);
      r.gauss = std::max(r.gauss, gauss_residual_with(st, st.shape + r.t * B));
      r.codazzi = std::max(r.codazzi, codazzi_residual_with(st, sum));
    }
  }
  return out;
}

std::vector<double> default_t_list(double B_norm) {
  const double s = B_norm > 0.0 ? 1.0 / B_norm : 1.0;
  return {-1.0 * s, -0.5 * s, -0.1 * s, 0.1 * s, 0.5 * s, 1.0 * s};
}

Decomposition decompose_relative_tensor(const GeometryState& s, const Mat& B) {
  const RuledFrame fr = ruled_frame(s);
  Mat E(s.n, 2);
  E.col(0) = fr.Y;
  E.col(1) = fr.X;
  const Mat Ar = E.transpose() * s.h * E;
  const Mat Br = E.transpose() * s.g * B * E;
  Eigen::JacobiSVD<Mat> svd(Ar);
  const auto& sv = svd.singularValues();
  if (!(sv(1) > 0.0) || sv(0) / sv(1) > 1e10) {
    fail(ErrorCode::IllConditioned, "constructor", "A restricted to the complement is ill-conditioned",
         to_std(s.point));
  }
  Mat J = Mat::Zero(2, 2);
  J(1, 0) = 1.0;
  const Mat M2 = Ar * J;
  Eigen::Matrix<double, 4, 2> sys;
  Eigen::Vector4d rhs;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      sys(2 * a + b, 0) = Ar(a, b);
      sys(2 * a + b, 1) = M2(a, b);
      rhs(2 * a + b) = Br(a, b);
    }
  const Eigen::Vector2d phi = sys.colPivHouseholderQr().solve(rhs);
  Decomposition d;
  d.phi1 = phi(0);
  d.phi2 = phi(1);
  d.residual = (sys * phi - rhs).norm();
  return d;
}

FrameRotationBending::FrameRotationBending(std::shared_ptr<const RuledChart> chart, Function1D theta0, double s_base,
                                           int nodes)
    : BendingField(chart), ruled_(std::move(chart)), theta0_(std::move(theta0)), s_base_(s_base) {
  gauss_legendre(nodes, nodes_, weights_);
}

Mat FrameRotationBending::omega_prime(double s) const {
  Mat F;
  Vec c;
  ruled_->frame_at(s, F, c);
  const int n = ruled_->dim();
  const Vec T0 = F.row(0).transpose(), N = F.row(n).transpose();
  return theta0_.derivative(0, s) * (N * T0.transpose() - T0 * N.transpose());
}

void FrameRotationBending::omega_w(double s, Mat& omega, Vec& w) const {
  const int m = ruled_->dim() + 1;
  omega = Mat::Zero(m, m);
  w = Vec::Zero(m);
  const double half = 0.5 * (s - s_base_), mid = 0.5 * (s + s_base_);
  if (half == 0.0) return;
  for (size_t k = 0; k < nodes_.size(); ++k) {
    const double r = mid + half * nodes_[k];
    Mat F;
    Vec c;
    ruled_->frame_at(r, F, c);
    const Mat op = omega_prime(r);
    omega += half * weights_[k] * op;
    w -= half * weights_[k] * (op * c);
  }
}

ChartJet FrameRotationBending::compute(const Vec& p, int order) const {
  const ChartJet f = chart().jet(p, order);
  Mat omega;
  Vec w;
  omega_w(p(0), omega, w);
  ChartJet out;
  out.resize(f.n, f.m, order);
  out.value = omega * f.value + w;
  if (order >= 1) out.d1 = omega * f.d1;
  if (order >= 2) {
    const Mat op = omega_prime(p(0));
    for (int i = 0; i < f.n; ++i) out.d2[i] = omega * f.d2[i];
    out.d2[0].col(0) += op * f.d1.col(0);
  }
  return out;
}

}  // namespace hyperbend
