#include "bending.hpp"

#include "errors.hpp"

#include <cmath>

namespace hyperbend {

ChartJet BendingField::jet(const Vec& p, int order) const {
  if (!chart().domain().contains(p)) {
    fail(ErrorCode::OutOfDomain, "bending", "point outside chart domain", to_std(p));
  }
  if (order > jet_order()) fail(ErrorCode::InvalidArgument, "bending", "requested jet order exceeds bending jet_order");
  return compute(p, order);
}

AffineBending::AffineBending(ChartPtr chart, Mat D, Vec w)
    : BendingField(std::move(chart)), D_(std::move(D)), w_(std::move(w)) {
  const int m = this->chart().ambient_dim();
  if (D_.rows() != m || D_.cols() != m || w_.size() != m) {
    fail(ErrorCode::ValidationError, "bending", "affine bending needs an (n+1)x(n+1) map and an (n+1)-vector");
  }
}

ChartJet AffineBending::compute(const Vec& p, int order) const {
  ChartJet f = chart().compute_jet(p, order);
  f.value = D_ * f.value + w_;
  if (order >= 1) f.d1 = D_ * f.d1;
  if (order >= 2)
    for (int i = 0; i < f.n; ++i) f.d2[i] = D_ * f.d2[i];
  if (order >= 3)
    for (int i = 0; i < f.n; ++i)
      for (int j = 0; j < f.n; ++j) f.d3[i][j] = D_ * f.d3[i][j];
  return f;
}

ExpressionBending::ExpressionBending(ChartPtr chart, std::vector<Expr> components)
    : BendingField(std::move(chart)), components_(std::move(components)) {
  if (static_cast<int>(components_.size()) != this->chart().ambient_dim()) {
    fail(ErrorCode::ValidationError, "bending", "expression bending needs n+1 components");
  }
  for (const auto& c : components_) {
    if (c.max_var() >= this->chart().dim()) fail(ErrorCode::ValidationError, "bending", "expression uses a variable beyond n");
  }
}

ChartJet ExpressionBending::compute(const Vec& p, int order) const {
  const int n = chart().dim();
  const int m = n + 1;
  ChartJet out;
  out.resize(n, m, order);
  for (int c = 0; c < m; ++c) {
    const Jet3 j = components_[c].eval_jet(p);
    out.value(c) = j.v;
    if (order >= 1)
      for (int i = 0; i < n; ++i) out.d1(c, i) = j.d1[i];
    if (order >= 2)
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) out.d2[i](c, k) = j.h(i, k);
    if (order >= 3)
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) out.d3[i][k](c, l) = j.t(i, k, l);
  }
  return out;
}

CombinationBending::CombinationBending(std::vector<double> coeffs, std::vector<BendingPtr> parts)
    : BendingField(parts.empty() ? nullptr : parts.front()->chart_ptr()),
      coeffs_(std::move(coeffs)),
      parts_(std::move(parts)) {
  if (parts_.empty() || coeffs_.size() != parts_.size()) {
    fail(ErrorCode::InvalidArgument, "bending", "combination needs matching coefficients and parts");
  }
}

int CombinationBending::jet_order() const {
  int o = 3;
  for (const auto& p : parts_) o = std::min(o, p->jet_order());
  return o;
}

ChartJet CombinationBending::compute(const Vec& p, int order) const {
  ChartJet acc = parts_[0]->compute(p, order);
  auto scale_into = [&](ChartJet& dst, const ChartJet& src, double c, bool first) {
    auto upd = [&](auto& d, const auto& s) {
      if (first) d = c * s;
      else d += c * s;
    };
    upd(dst.value, src.value);
    if (order >= 1) upd(dst.d1, src.d1);
    if (order >= 2)
      for (int i = 0; i < dst.n; ++i) upd(dst.d2[i], src.d2[i]);
    if (order >= 3)
      for (int i = 0; i < dst.n; ++i)
        for (int j = 0; j < dst.n; ++j) upd(dst.d3[i][j], src.d3[i][j]);
  };
  scale_into(acc, ChartJet(acc), coeffs_[0], true);
  for (size_t k = 1; k < parts_.size(); ++k) scale_into(acc, parts_[k]->compute(p, order), coeffs_[k], false);
  return acc;
}

VariationChart::VariationChart(BendingPtr bf, double t) : bf_(std::move(bf)), t_(t) {}

ChartJet VariationChart::compute_jet(const Vec& p, int order) const {
  ChartJet f = bf_->chart().compute_jet(p, order);
  const ChartJet tau = bf_->compute(p, order);
  f.value += t_ * tau.value;
  if (order >= 1) f.d1 += t_ * tau.d1;
  if (order >= 2)
    for (int i = 0; i < f.n; ++i) f.d2[i] += t_ * tau.d2[i];
  if (order >= 3)
    for (int i = 0; i < f.n; ++i)
      for (int j = 0; j < f.n; ++j) f.d3[i][j] += t_ * tau.d3[i][j];
  return f;
}

std::shared_ptr<VariationChart> variation_immersion(BendingPtr bf, double t) {
  return std::make_shared<VariationChart>(std::move(bf), t);
}

double stencil_spacing(const ChartImmersion& chart) { return 1e-3 * chart.scale(); }

namespace {

AssociatedTensors associated_impl(const BendingField& bf, const Vec& p, const GeometryOptions& opts, bool need_B) {
  AssociatedTensors at;
  GeometryOptions o = opts;
  if (need_B) o.order = std::max(o.order, 2);
  at.state = evaluate_geometry(bf.chart(), p, o);
  const GeometryState& s = at.state;
  at.tau = bf.jet(p, need_B ? 2 : 1);
  at.L = at.tau.d1;
  at.L0 = s.g_inv * (s.jet.d1.transpose() * at.L);
  at.xi_coords = -(s.g_inv * (at.L.transpose() * s.normal));
  at.xi = s.jet.d1 * at.xi_coords;
  const int n = s.n;
  at.b = Mat::Zero(n, n);
  at.B = Mat::Zero(n, n);
  if (!need_B) return at;
  const Vec ln = at.L.transpose() * s.normal;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = at.tau.d2[i].col(j).dot(s.normal);
      for (int k = 0; k < n; ++k) v -= s.christoffel(k, i, j) * ln(k);
      at.b(i, j) = v;
    }
  at.b = 0.5 * (at.b + at.b.transpose()).eval();
  at.B = s.g_inv * at.b;
  return at;
}

const int kOffs[4] = {2, 1, -1, -2};
const double kWts[4] = {-1.0, 8.0, -8.0, 1.0};

}  // namespace

AssociatedTensors compute_associated(const BendingField& bf, const Vec& p, const GeometryOptions& opts) {
  return associated_impl(bf, p, opts, true);
}

double bending_residual(const BendingField& bf, const std::vector<Vec>& grid) {
  double worst = 0.0;
  for (const auto& p : grid) {
    const ChartJet f = bf.chart().jet(p, 1);
    const ChartJet t = bf.jet(p, 1);
    const int n = f.n;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double v = t.d1.col(i).dot(f.d1.col(j)) + t.d1.col(j).dot(f.d1.col(i));
        worst = std::max(worst, std::abs(v) / (f.d1.col(i).norm() * f.d1.col(j).norm()));
      }
  }
  return worst;
}

double metric_deviation(const BendingField& bf, double t, const std::vector<Vec>& grid) {
  double worst = 0.0;
  for (const auto& p : grid) {
    const ChartJet f = bf.chart().jet(p, 1);
    const ChartJet tau = bf.jet(p, 1);
    const Mat ft = f.d1 + t * tau.d1;
    const Mat gt = ft.transpose() * ft;
    const Mat g = f.d1.transpose() * f.d1;
    const Mat tt = tau.d1.transpose() * tau.d1;
    worst = std::max(worst, (gt - g - (t * t) * tt).cwiseAbs().maxCoeff());
  }
  return worst;
}

double metric_symmetry(const BendingField& bf, double t, const std::vector<Vec>& grid) {
  double worst = 0.0;
  for (const auto& p : grid) {
    const ChartJet f = bf.chart().jet(p, 1);
    const ChartJet tau = bf.jet(p, 1);
    const Mat fp = f.d1 + t * tau.d1;
    const Mat fm = f.d1 - t * tau.d1;
    worst = std::max(worst, (fp.transpose() * fp - fm.transpose() * fm).cwiseAbs().maxCoeff());
  }
  return worst;
}

double xi_normal_residual(const AssociatedTensors& at) { return std::abs(at.xi.dot(at.state.normal)); }

double xi_tangent_residual(const AssociatedTensors& at) {
  const GeometryState& s = at.state;
  double worst = 0.0;
  for (int i = 0; i < s.n; ++i) {
    worst = std::max(worst, std::abs(at.xi.dot(s.jet.d1.col(i)) + s.normal.dot(at.L.col(i))) /
                                s.jet.d1.col(i).norm());
  }
  return worst;
}

namespace {

Mat shape_of_variation(const BendingField& bf, const Vec& p, double t, const GeometryState& base) {
  ChartJet f = bf.chart().jet(p, 2);
  const ChartJet tau = bf.jet(p, 2);
  f.d1 += t * tau.d1;
  for (int i = 0; i < f.n; ++i) f.d2[i] += t * tau.d2[i];
  GeometryOptions o = base.options;
  o.order = 2;
  GeometryState st = geometry_from_jet(&bf.chart(), p, f, 1.0, o);
  double sgn = st.normal.dot(base.normal) < 0 ? -1.0 : 1.0;
  return sgn * st.shape;
}

}  // namespace

Mat compute_B_fd(const BendingField& bf, const Vec& p, double h, bool richardson) {
  GeometryOptions o;
  o.order = 2;
  const GeometryState base = evaluate_geometry(bf.chart(), p, o);
  auto d = [&](double step) -> Mat {
    return (shape_of_variation(bf, p, step, base) - shape_of_variation(bf, p, -step, base)) / (2.0 * step);
  };
  if (!richardson) return d(h);
  return (4.0 * d(h / 2) - d(h)) / 3.0;
}

double verify_L_derivative(const BendingField& bf, const Vec& p, DerivativeRoute route, const Mat* B_override) {
  GeometryOptions o;
  o.order = 2;
  const AssociatedTensors at = compute_associated(bf, p, o);
  const GeometryState& s = at.state;
  const int n = s.n;
  const Mat b = B_override ? Mat(s.g * (*B_override)) : at.b;
  std::array<Mat, kMaxDim> dL;  // dL[i].col(j) = d_i L_j
  if (route == DerivativeRoute::Jet && bf.jet_order() >= 2) {
    for (int i = 0; i < n; ++i) dL[i] = at.tau.d2[i];
  } else {
    const double h = stencil_spacing(bf.chart());
    for (int i = 0; i < n; ++i) {
      Mat acc = Mat::Zero(s.jet.m, n);
      for (int k = 0; k < 4; ++k) {
        Vec q = p;
        q(i) += kOffs[k] * h;
        acc += kWts[k] * bf.jet(q, 1).d1;
      }
      dL[i] = acc / (12.0 * h);
    }
  }
  // r_ij = d_i L_j - Gamma^k_ij L_k - b_ij N - h_ij xi
  std::vector<Vec> r(static_cast<size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec v = dL[i].col(j) - b(i, j) * s.normal - s.h(i, j) * at.xi;
      for (int k = 0; k < n; ++k) v -= s.christoffel(k, i, j) * at.L.col(k);
      r[i * n + j] = v;
    }
  const Mat& E = s.ortho;
  double worst = 0.0;
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) {
      Vec v = Vec::Zero(s.jet.m);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) v += E(i, a) * E(j, c) * r[i * n + j];
      worst = std::max(worst, v.norm());
    }
  return worst;
}

double verify_xi_derivative(const BendingField& bf, const Vec& p, const Mat* B_override) {
  GeometryOptions o;
  o.order = 2;
  const AssociatedTensors at = compute_associated(bf, p, o);
  const GeometryState& s = at.state;
  const int n = s.n;
  const Mat B = B_override ? *B_override : at.B;
  const double h = stencil_spacing(bf.chart());
  GeometryOptions o1;
  o1.order = 1;
  Mat r(s.jet.m, n);
  for (int i = 0; i < n; ++i) {
    Vec acc = Vec::Zero(s.jet.m);
    for (int k = 0; k < 4; ++k) {
      Vec q = p;
      q(i) += kOffs[k] * h;
      acc += kWts[k] * associated_impl(bf, q, o1, false).xi;
    }
    r.col(i) = acc / (12.0 * h) + s.jet.d1 * B.col(i) + at.L * s.shape.col(i);
  }
  const Mat fr = r * s.ortho;
  double worst = 0.0;
  for (int a = 0; a < n; ++a) worst = std::max(worst, fr.col(a).norm());
  return worst;
}

double verify_B1(const GeometryState& s, const Mat& B) {
  const int n = s.n;
  const Mat W = s.ortho.transpose() * s.g;
  const Mat Bf = W * B * s.ortho;       // B in the orthonormal frame
  const Mat Af = W * s.shape * s.ortho;
  double worst = 0.0;
  for (int a = 0; a < n; ++a)
    for (int c = a + 1; c < n; ++c) {
      const Vec bx = Bf.col(a), by = Bf.col(c), ax = Af.col(a), ay = Af.col(c);
      const Mat w = bx * ay.transpose() - ay * bx.transpose() - by * ax.transpose() + ax * by.transpose();
      worst = std::max(worst, w.cwiseAbs().maxCoeff());
    }
  return worst;
}

double verify_B1(const AssociatedTensors& at) { return verify_B1(at.state, at.B); }

double verify_B2_field(const ChartImmersion& chart, const Vec& p, const std::function<Mat(const Vec&)>& B_at) {
  GeometryOptions o;
  o.order = 2;
  const GeometryState s = evaluate_geometry(chart, p, o);
  const Mat B = B_at(p);
  const int n = s.n;
  const double h = stencil_spacing(chart);
  Tensor3 nb(n);
  for (int k = 0; k < n; ++k) {
    Mat acc = Mat::Zero(n, n);
    for (int q = 0; q < 4; ++q) {
      Vec x = p;
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
  return codazzi_residual_with(s, nb);
}

double verify_B2(const BendingField& bf, const Vec& p) {
  GeometryOptions o;
  o.order = 2;
  return verify_B2_field(bf.chart(), p, [&](const Vec& x) { return compute_associated(bf, x, o).B; });
}

double nullity_kernel_residual(const AssociatedTensors& at) {
  const GeometryState& s = at.state;
  double worst = 0.0;
  for (int a = 0; a < s.nullity_index; ++a) {
    const Vec bv = at.B * s.nullity_basis.col(a);
    worst = std::max(worst, std::sqrt(std::max(0.0, bv.dot(s.g * bv))));
  }
  return worst;
}

TrivialFit fit_trivial(const BendingField& bf, const std::vector<Vec>& grid) {
  const int m = bf.chart().ambient_dim();
  const int npairs = m * (m - 1) / 2;
  const int nparams = npairs + m;
  if (static_cast<int>(grid.size()) < nparams) {
    fail(ErrorCode::DegenerateSamples, "bending", "fit_trivial needs at least (n+1)(n+2)/2 samples");
  }
  std::vector<Vec> fs, ts;
  Vec mean = Vec::Zero(m);
  for (const auto& p : grid) {
    fs.push_back(bf.chart().jet(p, 0).value);
    ts.push_back(bf.jet(p, 0).value);
    mean += fs.back();
  }
  mean /= static_cast<double>(grid.size());
  const int rows = m * static_cast<int>(grid.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, nparams);
  Eigen::VectorXd rhs(rows);
  for (size_t k = 0; k < grid.size(); ++k) {
    const Vec f = fs[k] - mean;
    int col = 0;
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b, ++col) {
        A(static_cast<int>(k) * m + a, col) += f(b);
        A(static_cast<int>(k) * m + b, col) -= f(a);
      }
    for (int c = 0; c < m; ++c) {
      A(static_cast<int>(k) * m + c, npairs + c) = 1.0;
      rhs(static_cast<int>(k) * m + c) = ts[k](c);
    }
  }
  Eigen::VectorXd colscale = A.colwise().norm().transpose();
  for (int c = 0; c < nparams; ++c) {
    if (colscale(c) == 0.0) fail(ErrorCode::DegenerateSamples, "bending", "samples do not determine a rigid motion");
    A.col(c) /= colscale(c);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond = sv(0) / sv(sv.size() - 1);
  if (!std::isfinite(cond) || cond * cond > 1e12) {
    fail(ErrorCode::DegenerateSamples, "bending", "normal matrix condition exceeds 1e12");
  }
  Eigen::VectorXd x = svd.solve(rhs);
  x = x.cwiseQuotient(colscale);
  TrivialFit out;
  out.D = Mat::Zero(m, m);
  int col = 0;
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b, ++col) {
      out.D(a, b) = x(col);
      out.D(b, a) = -x(col);
    }
  Vec w0(m);
  for (int c = 0; c < m; ++c) w0(c) = x(npairs + c);
  out.w = w0 - out.D * mean;
  double tau_inf = 0.0;
  Vec lo = fs[0], hi = fs[0];
  for (size_t k = 0; k < grid.size(); ++k) {
    const Vec miss = ts[k] - out.D * fs[k] - out.w;
    out.residual = std::max(out.residual, miss.cwiseAbs().maxCoeff());
    tau_inf = std::max(tau_inf, ts[k].cwiseAbs().maxCoeff());
    lo = lo.cwiseMin(fs[k]);
    hi = hi.cwiseMax(fs[k]);
  }
  out.tolerance = 1e-8 * (hi - lo).norm() * (tau_inf + 1.0);
  out.is_trivial = out.residual < out.tolerance;
  return out;
}

double verify_normal_evolution(const BendingField& bf, const Vec& p, double t) {
  if (t == 0.0) return 0.0;  // Z(0) = 0 and the right side vanishes
  GeometryOptions o;
  o.order = 2;
  const AssociatedTensors at = compute_associated(bf, p, o);
  const GeometryState& s = at.state;
  const int n = s.n;
  const Mat S = Mat::Identity(n, n) - t * at.L0;
  Eigen::JacobiSVD<Mat> svd(S);
  const auto& sv = svd.singularValues();
  if (!(sv(n - 1) > 1e-12 * sv(0))) fail(ErrorCode::SingularS, "bending", "Id - t L0 is not invertible", to_std(p));
  const Mat ft = s.jet.d1 + t * at.L;
  Vec nt = generalized_cross(ft);
  nt /= nt.norm();
  if (nt.dot(s.normal) < 0) nt = -nt;
  const double b = nt.dot(s.normal);
  const Vec z = nt - b * s.normal;
  const Vec rhs = s.jet.d1 * (t * b * S.fullPivLu().solve(at.xi_coords));
  return (z - rhs).norm();
}

}  // namespace hyperbend
