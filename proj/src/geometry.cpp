#include "geometry.hpp"

#include "errors.hpp"

#include <cmath>

namespace hyperbend {

GeometryState evaluate_geometry(const ChartImmersion& chart, const Vec& p, const GeometryOptions& opts) {
  const int order = std::min(opts.order, chart.jet_order());
  return geometry_from_jet(&chart, p, chart.jet(p, order), chart.normal_sign(), opts);
}

GeometryState geometry_from_jet(const ChartImmersion* chart, const Vec& p, ChartJet jet, double normal_sign,
                                const GeometryOptions& opts) {
  GeometryState s;
  s.chart = chart;
  s.options = opts;
  s.point = p;
  s.n = jet.n;
  s.order = std::min(jet.order, opts.order);
  s.jet = std::move(jet);
  const int n = s.n;
  const ChartJet& J = s.jet;

  Eigen::JacobiSVD<Mat> jsvd(J.d1);
  const auto& sv = jsvd.singularValues();
  if (!(sv.allFinite()) || sv(n - 1) <= opts.rank_tol * sv(0)) {
    fail(ErrorCode::RankDeficient, "geomcore", "Jacobian rank below n", to_std(p));
  }
  s.g = J.d1.transpose() * J.d1;
  s.g = 0.5 * (s.g + s.g.transpose()).eval();
  s.g_inv = s.g.ldlt().solve(Mat::Identity(n, n));
  s.normal = generalized_cross(J.d1);
  s.normal *= normal_sign / s.normal.norm();
  s.ortho = gram_schmidt(Mat::Identity(n, n), s.g, 0.0, n);

  s.dg = Tensor3(n);
  s.christoffel = Tensor3(n);
  s.nabla_A = Tensor3(n);
  if (s.order < 2) return s;

  // Gamma_{ij,l} = <f_ij, f_l>
  Tensor3 gl(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) gl(i, j, l) = J.d2[i].col(j).dot(J.d1.col(l));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s.dg(k, i, j) = gl(k, i, j) + gl(k, j, i);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int l = 0; l < n; ++l) acc += s.g_inv(k, l) * gl(i, j, l);
        s.christoffel(k, i, j) = acc;
      }
  s.h = Mat(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s.h(i, j) = J.d2[i].col(j).dot(s.normal);
  s.h = 0.5 * (s.h + s.h.transpose()).eval();
  s.shape = s.g_inv * s.h;

  const Mat ah = s.ortho.transpose() * s.h * s.ortho;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (ah + ah.transpose()));
  s.principal = es.eigenvalues();
  s.shape_norm = s.principal.cwiseAbs().maxCoeff();
  Mat null_vecs(n, 0);
  for (int k = 0; k < n; ++k) {
    if (std::abs(s.principal(k)) <= opts.nullity_tol * s.shape_norm) {
      null_vecs.conservativeResize(n, null_vecs.cols() + 1);
      null_vecs.col(null_vecs.cols() - 1) = s.ortho * es.eigenvectors().col(k);
    }
  }
  s.nullity_index = static_cast<int>(null_vecs.cols());
  const Mat pd = projector(null_vecs, s.g);
  const Mat pc = Mat::Identity(n, n) - pd;
  const double gtol = 1e-8 * std::sqrt(s.g.diagonal().maxCoeff());
  s.nullity_basis = gram_schmidt(pd, s.g, gtol, s.nullity_index);
  if (s.nullity_basis.cols() < s.nullity_index) s.nullity_basis = null_vecs;
  s.complement_basis = gram_schmidt(pc, s.g, gtol, n - s.nullity_index);

  if (s.order < 3) return s;

  // nabla h, then nabla A = g^-1 nabla h
  for (int k = 0; k < n; ++k) {
    Mat dh(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = J.d3[i][j].col(k).dot(s.normal);
        for (int l = 0; l < n; ++l) v -= s.shape(l, k) * gl(i, j, l);
        dh(i, j) = v;
      }
    Mat nh(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = dh(i, j);
        for (int l = 0; l < n; ++l) v -= s.christoffel(l, k, i) * s.h(l, j) + s.christoffel(l, k, j) * s.h(i, l);
        nh(i, j) = v;
      }
    const Mat na = s.g_inv * nh;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s.nabla_A(k, i, j) = na(i, j);
  }

  // d_m Gamma^k_ij
  Tensor4 dgam(n);  // (m, k, i, j)
  for (int m = 0; m < n; ++m) {
    Mat dginv(n, n);
    Mat dgm(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) dgm(a, b) = s.dg(m, a, b);
    dginv = -s.g_inv * dgm * s.g_inv;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Vec dgl(n);
        for (int l = 0; l < n; ++l) dgl(l) = J.d3[i][j].col(m).dot(J.d1.col(l)) + J.d2[i].col(j).dot(J.d2[l].col(m));
        for (int k = 0; k < n; ++k) {
          double v = 0.0;
          for (int l = 0; l < n; ++l) v += dginv(k, l) * gl(i, j, l) + s.g_inv(k, l) * dgl(l);
          dgam(m, k, i, j) = v;
        }
      }
  }
  s.riemann = Tensor4(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double v = dgam(i, l, j, k) - dgam(j, l, i, k);
          for (int m = 0; m < n; ++m)
            v += s.christoffel(m, j, k) * s.christoffel(l, i, m) - s.christoffel(m, i, k) * s.christoffel(l, j, m);
          s.riemann(i, j, k, l) = v;
        }
  return s;
}

double gauss_residual_with(const GeometryState& s, const Mat& shape) {
  if (s.order < 3) fail(ErrorCode::InvalidArgument, "geomcore", "gauss residual needs third-order jets");
  const int n = s.n;
  const Mat hb = s.g * shape;  // bilinear form of the candidate shape operator
  Tensor4 res(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          res(i, j, k, l) = s.riemann(i, j, k, l) - (hb(j, k) * shape(l, i) - hb(i, k) * shape(l, j));
  const Mat& E = s.ortho;
  const Mat W = E.transpose() * s.g;
  // contract each slot with the orthonormal frame
  Tensor4 t1(n), t2(n);
  for (int a = 0; a < n; ++a)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double v = 0.0;
          for (int i = 0; i < n; ++i) v += E(i, a) * res(i, j, k, l);
          t1(a, j, k, l) = v;
        }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double v = 0.0;
          for (int j = 0; j < n; ++j) v += E(j, b) * t1(a, j, k, l);
          t2(a, b, k, l) = v;
        }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int l = 0; l < n; ++l) {
          double v = 0.0;
          for (int k = 0; k < n; ++k) v += E(k, c) * t2(a, b, k, l);
          t1(a, b, c, l) = v;
        }
  double worst = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double v = 0.0;
          for (int l = 0; l < n; ++l) v += W(d, l) * t1(a, b, c, l);
          worst = std::max(worst, std::abs(v));
        }
  return worst;
}

double gauss_residual(const GeometryState& s) { return gauss_residual_with(s, s.shape); }

double codazzi_residual_with(const GeometryState& s, const Tensor3& nabla_shape) {
  const int n = s.n;
  const Mat& E = s.ortho;
  const Mat W = E.transpose() * s.g;
  double worst = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      Vec r = Vec::Zero(n);
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) {
          const double w = E(k, a) * E(j, b);
          if (w == 0.0) continue;
          for (int i = 0; i < n; ++i) r(i) += w * (nabla_shape(k, i, j) - nabla_shape(j, i, k));
        }
      worst = std::max(worst, (W * r).cwiseAbs().maxCoeff());
    }
  return worst;
}

double codazzi_residual(const GeometryState& s) {
  if (s.order < 3) fail(ErrorCode::InvalidArgument, "geomcore", "codazzi residual needs third-order jets");
  return codazzi_residual_with(s, s.nabla_A);
}

namespace {

GeometryOptions with_order(GeometryOptions o, int order) {
  o.order = order;
  return o;
}

double stencil_step(const GeometryState& s) { return s.options.stencil_rel * s.chart->scale(); }

// Fourth-order first-derivative stencil along one axis (weights over 12h); one-sided near the domain edge.
struct AxisStencil {
  int count = 4;
  int offs[5] = {2, 1, -1, -2, 0};
  double wts[5] = {-1.0, 8.0, -8.0, 1.0, 0.0};
};

AxisStencil axis_stencil(const GeometryState& s, int axis, double h) {
  AxisStencil st;
  const Box& dom = s.chart->domain();
  const double x = s.point(axis);
  const int dir = x - 2.0 * h < dom.lo(axis) ? 1 : (x + 2.0 * h > dom.hi(axis) ? -1 : 0);
  if (dir == 0) return st;
  const double fwd[5] = {-25.0, 48.0, -36.0, 16.0, -3.0};
  st.count = 5;
  for (int k = 0; k < 5; ++k) {
    st.offs[k] = dir * k;
    st.wts[k] = dir * fwd[k];
  }
  return st;
}

}  // namespace

ProjectorStencil projector_stencil(const GeometryState& s) {
  if (!s.chart) fail(ErrorCode::InvalidArgument, "geomcore", "state has no chart for stencil evaluation");
  const int n = s.n;
  const double h = stencil_step(s);
  const GeometryOptions o2 = with_order(s.options, 2);
  ProjectorStencil st;
  st.n = n;
  for (int i = 0; i < n; ++i) {
    const AxisStencil ax = axis_stencil(s, i, h);
    Mat acc = Mat::Zero(n, n);
    for (int k = 0; k < ax.count; ++k) {
      Vec q = s.point;
      q(i) += ax.offs[k] * h;
      const GeometryState sq = evaluate_geometry(*s.chart, q, o2);
      if (sq.nullity_index != s.nullity_index) {
        fail(ErrorCode::NullityJump, "geomcore", "nullity index not constant on stencil", to_std(s.point));
      }
      acc += ax.wts[k] * sq.nullity_projector();
    }
    st.dP[i] = acc / (12.0 * h);
  }
  return st;
}

namespace {

void check_in_nullity(const GeometryState& s, const Vec& T) {
  const double tn = std::sqrt(std::max(0.0, T.dot(s.g * T)));
  const Vec off = s.complement_projector() * T;
  const double on = std::sqrt(std::max(0.0, off.dot(s.g * off)));
  if (on > 1e-6 * tn) fail(ErrorCode::InvalidArgument, "geomcore", "T is not in the relative nullity", to_std(s.point));
}

// M v = (nabla_v T) for the field x |-> P(x) T, as a coordinate matrix.
Mat nabla_field(const GeometryState& s, const ProjectorStencil& st, const Vec& T) {
  const int n = s.n;
  Mat M(n, n);
  for (int i = 0; i < n; ++i) {
    Vec col = st.dP[i] * T;
    for (int l = 0; l < n; ++l) {
      double v = 0.0;
      for (int j = 0; j < n; ++j) v += s.christoffel(l, i, j) * T(j);
      col(l) += v;
    }
    M.col(i) = col;
  }
  return M;
}

}  // namespace

SplittingSample splitting_tensor(const GeometryState& s, const ProjectorStencil& st, const Vec& T) {
  check_in_nullity(s, T);
  const Mat& X = s.complement_basis;
  const Mat M = nabla_field(s, st, T);
  const Mat ct = -(s.complement_projector() * M * X);
  SplittingSample out;
  out.T = T;
  out.basis = X;
  out.C = X.transpose() * s.g * ct;
  return out;
}

SplittingSample splitting_tensor(const GeometryState& s, const Vec& T) {
  return splitting_tensor(s, projector_stencil(s), T);
}

SplittingSample splitting_tensor_algebraic(const GeometryState& s, const Vec& T) {
  check_in_nullity(s, T);
  const int n = s.n;
  const Mat& X = s.complement_basis;
  const int r = static_cast<int>(X.cols());
  const Mat abar = restrict_to_complement(s, s.shape);
  Mat w(r, r);
  for (int b = 0; b < r; ++b) {
    Vec v = Vec::Zero(n);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) v(i) += X(k, b) * s.nabla_A(k, i, j) * T(j);
    w.col(b) = X.transpose() * s.g * v;
  }
  SplittingSample out;
  out.T = T;
  out.basis = X;
  out.C = abar.fullPivLu().solve(w);
  return out;
}

Mat restrict_to_complement(const GeometryState& s, const Mat& endo) {
  return s.complement_basis.transpose() * s.g * endo * s.complement_basis;
}

double verify_codazzi_splitting(const GeometryState& s, const Vec& T, const Mat& C) {
  const int n = s.n;
  Mat nat = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) nat(i, j) += T(k) * s.nabla_A(k, i, j);
  const Mat lhs = restrict_to_complement(s, nat);
  const Mat abar = restrict_to_complement(s, s.shape);
  const Mat ac = abar * C;
  const Mat cta = C.transpose() * abar;
  return std::max((lhs - ac).cwiseAbs().maxCoeff(), (ac - cta).cwiseAbs().maxCoeff());
}

double verify_codazzi_splitting(const GeometryState& s, const Vec& T) {
  return verify_codazzi_splitting(s, T, splitting_tensor(s, T).C);
}

namespace {

// C_{T(x)} o P_perp(x) as a coordinate matrix
Mat chat_of(const GeometryState& s, const ProjectorStencil& st, const Vec& T) {
  const Mat pc = s.complement_projector();
  return -(pc * nabla_field(s, st, T) * pc);
}

}  // namespace

double verify_CT_compatibility(const GeometryState& s, const Vec& T, const Vec& X, const Vec& Y) {
  check_in_nullity(s, T);
  const int n = s.n;
  const Mat pc = s.complement_projector();
  auto off_complement = [&](const Vec& v) {
    const Vec d = v - pc * v;
    return std::sqrt(std::max(0.0, d.dot(s.g * d))) > 1e-6 * std::sqrt(std::max(1e-300, v.dot(s.g * v)));
  };
  if (off_complement(X) || off_complement(Y)) {
    fail(ErrorCode::InvalidArgument, "geomcore", "X and Y must lie in the nullity complement", to_std(s.point));
  }
  const ProjectorStencil st0 = projector_stencil(s);
  const double h = stencil_step(s);
  const GeometryOptions o3 = with_order(s.options, 3);

  // derivative of the coordinate matrix chat along each axis
  std::array<Mat, kMaxDim> dchat;
  for (int k = 0; k < n; ++k) {
    const AxisStencil ax = axis_stencil(s, k, h);
    Mat acc = Mat::Zero(n, n);
    for (int q = 0; q < ax.count; ++q) {
      Vec x = s.point;
      x(k) += ax.offs[q] * h;
      const GeometryState sx = evaluate_geometry(*s.chart, x, o3);
      if (sx.nullity_index != s.nullity_index) {
        fail(ErrorCode::NullityJump, "geomcore", "nullity index not constant on stencil", to_std(s.point));
      }
      const ProjectorStencil stx = projector_stencil(sx);
      const Vec tx = sx.nullity_projector() * T;
      acc += ax.wts[q] * chat_of(sx, stx, tx);
    }
    dchat[k] = acc / (12.0 * h);
  }
  const Mat chat0 = chat_of(s, st0, T);
  const Mat m0 = nabla_field(s, st0, T);
  const Mat pd = s.nullity_projector();

  auto term = [&](const Vec& a, const Vec& b) -> Vec {
    Mat cov = Mat::Zero(n, n);
    for (int k = 0; k < n; ++k) {
      if (a(k) == 0.0) continue;
      Mat ck = dchat[k];
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double v = 0.0;
          for (int l = 0; l < n; ++l) v += s.christoffel(i, k, l) * chat0(l, j) - s.christoffel(l, k, j) * chat0(i, l);
          ck(i, j) += v;
        }
      cov += a(k) * ck;
    }
    const Vec v = pd * (m0 * a);  // (nabla_a T)_Delta
    const Mat cv = chat_of(s, st0, v);
    return pc * (cov * b) - cv * b;
  };
  const Vec r = term(X, Y) - term(Y, X);
  return std::sqrt(std::max(0.0, r.dot(s.g * r)));
}

int estimate_C0_codimension(const GeometryState& s, double tol) {
  if (s.rank() != 2) {
    fail(ErrorCode::NullityJump, "geomcore", "C0 codimension needs a rank-2 state", to_std(s.point));
  }
  const ProjectorStencil st = projector_stencil(s);
  const int nu = s.nullity_index;
  Eigen::MatrixXd cols(4, nu);
  for (int a = 0; a < nu; ++a) {
    const Mat c = splitting_tensor(s, st, s.nullity_basis.col(a)).C;
    for (int k = 0; k < 4; ++k) cols(k, a) = c(k % 2, k / 2);
  }
  if (nu == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cols);
  const double scale = std::max(s.shape_norm, 1.0);
  int rank = 0;
  for (int k = 0; k < svd.singularValues().size(); ++k)
    if (svd.singularValues()(k) > tol * scale) ++rank;
  return rank;
}

}  // namespace hyperbend
