#include "kernelprobe.hpp"

#include "constructor.hpp"
#include "errors.hpp"
#include "linalg.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace hyperbend {

namespace {

struct Cheb {
  std::vector<double> t, d, dd;
};

Cheb chebyshev(double x, double scale, int deg) {
  Cheb c;
  c.t.assign(deg + 1, 0.0);
  c.d.assign(deg + 1, 0.0);
  c.dd.assign(deg + 1, 0.0);
  c.t[0] = 1.0;
  if (deg >= 1) {
    c.t[1] = x;
    c.d[1] = 1.0;
  }
  for (int k = 1; k < deg; ++k) {
    c.t[k + 1] = 2.0 * x * c.t[k] - c.t[k - 1];
    c.d[k + 1] = 2.0 * c.t[k] + 2.0 * x * c.d[k] - c.d[k - 1];
    c.dd[k + 1] = 4.0 * c.d[k] + 2.0 * x * c.dd[k] - c.dd[k - 1];
  }
  for (int k = 0; k <= deg; ++k) {
    c.d[k] *= scale;
    c.dd[k] *= scale * scale;
  }
  return c;
}

// D_ab v = e_a v_b - e_b v_a
inline void rigid_apply(int a, int b, const Vec& v, Vec& out) {
  out.setZero(v.size());
  out(a) = v(b);
  out(b) = -v(a);
}

// (D + D^t)^+ style pseudo-inverse pieces of a symmetric PSD matrix
void psd_factor(const Eigen::MatrixXd& G, double drop, Eigen::MatrixXd& inv_sqrt, Eigen::MatrixXd& pinv) {
  if (G.rows() == 0) {
    inv_sqrt.resize(0, 0);
    pinv.resize(0, 0);
    return;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double cut = drop * std::max(lam.maxCoeff(), 0.0);
  std::vector<int> keep;
  // descending order for a stable column layout
  for (int k = static_cast<int>(lam.size()) - 1; k >= 0; --k)
    if (lam(k) > cut) keep.push_back(k);
  inv_sqrt.resize(G.rows(), static_cast<int>(keep.size()));
  pinv = Eigen::MatrixXd::Zero(G.rows(), G.rows());
  for (size_t c = 0; c < keep.size(); ++c) {
    const Eigen::VectorXd v = es.eigenvectors().col(keep[c]);
    inv_sqrt.col(static_cast<int>(c)) = v / std::sqrt(lam(keep[c]));
    pinv += v * v.transpose() / lam(keep[c]);
  }
}

}  // namespace

TrialSpace::TrialSpace(ChartPtr chart, const DiscretizationSpec& spec) : chart_(std::move(chart)) {
  n_ = chart_->dim();
  m_ = n_ + 1;
  box_ = spec.box ? *spec.box : chart_->domain();
  if (static_cast<int>(spec.degrees.size()) != n_) {
    fail(ErrorCode::InvalidArgument, "kernelprobe", "one basis degree per chart axis is required");
  }
  degrees_ = spec.degrees;
  for (int d : degrees_)
    if (d < 0) fail(ErrorCode::InvalidArgument, "kernelprobe", "basis degrees must be non-negative");
  std::vector<int> idx(n_, 0);
  while (true) {
    int total = 0;
    for (int v : idx) total += v;
    if (spec.total_degree < 0 || total <= spec.total_degree) multi_.push_back(idx);
    int a = n_ - 1;
    while (a >= 0 && idx[a] == degrees_[a]) {
      idx[a] = 0;
      --a;
    }
    if (a < 0) break;
    ++idx[a];
  }
  if (spec.rigid)
    for (int a = 0; a < m_; ++a)
      for (int b = a + 1; b < m_; ++b) pairs_.emplace_back(a, b);
}

void TrialSpace::polynomials(const Vec& p, int order, Eigen::VectorXd& val, Eigen::MatrixXd& grad,
                             std::vector<Eigen::MatrixXd>* hess) const {
  std::vector<Cheb> tab(n_);
  for (int a = 0; a < n_; ++a) {
    const double lo = box_.lo(a), hi = box_.hi(a);
    tab[a] = chebyshev((2.0 * p(a) - lo - hi) / (hi - lo), 2.0 / (hi - lo), degrees_[a]);
  }
  const int na = static_cast<int>(multi_.size());
  val.resize(na);
  if (order >= 1) grad.resize(n_, na);
  if (order >= 2 && hess) hess->assign(n_, Eigen::MatrixXd(n_, na));
  for (int k = 0; k < na; ++k) {
    const auto& al = multi_[k];
    double v = 1.0;
    for (int a = 0; a < n_; ++a) v *= tab[a].t[al[a]];
    val(k) = v;
    if (order >= 1) {
      for (int i = 0; i < n_; ++i) {
        double g = tab[i].d[al[i]];
        for (int a = 0; a < n_; ++a)
          if (a != i) g *= tab[a].t[al[a]];
        grad(i, k) = g;
      }
    }
    if (order >= 2 && hess) {
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) {
          double h = 1.0;
          for (int a = 0; a < n_; ++a) {
            if (a == i && a == j) h *= tab[a].dd[al[a]];
            else if (a == i || a == j) h *= tab[a].d[al[a]];
            else h *= tab[a].t[al[a]];
          }
          (*hess)[i](j, k) = h;
        }
    }
  }
}

ChartJet TrialSpace::field_jet(const Eigen::VectorXd& r, const Vec& p, int order) const {
  const ChartJet f = chart_->jet(p, order);
  ChartJet out;
  out.resize(n_, m_, order);
  out.value = Vec::Zero(m_);
  if (order >= 1) out.d1 = Mat::Zero(m_, n_);
  if (order >= 2)
    for (int i = 0; i < n_; ++i) out.d2[i] = Mat::Zero(m_, n_);
  Vec tmp;
  const int R = rigid_count();
  for (int k = 0; k < R; ++k) {
    const double c = r(k);
    if (c == 0.0) continue;
    const auto [a, b] = pairs_[k];
    rigid_apply(a, b, f.value, tmp);
    out.value += c * tmp;
    for (int i = 0; order >= 1 && i < n_; ++i) {
      rigid_apply(a, b, f.d1.col(i), tmp);
      out.d1.col(i) += c * tmp;
      for (int j = 0; order >= 2 && j < n_; ++j) {
        rigid_apply(a, b, f.d2[i].col(j), tmp);
        out.d2[i].col(j) += c * tmp;
      }
    }
  }
  Eigen::VectorXd val;
  Eigen::MatrixXd grad;
  std::vector<Eigen::MatrixXd> hess;
  polynomials(p, order, val, grad, &hess);
  const int na = static_cast<int>(multi_.size());
  for (int k = 0; k < na; ++k)
    for (int c = 0; c < m_; ++c) {
      const double coef = r(R + k * m_ + c);
      if (coef == 0.0) continue;
      out.value(c) += coef * val(k);
      for (int i = 0; order >= 1 && i < n_; ++i) {
        out.d1(c, i) += coef * grad(i, k);
        for (int j = 0; order >= 2 && j < n_; ++j) out.d2[i](c, j) += coef * hess[i](j, k);
      }
    }
  return out;
}

AssembledOperator assemble_operator(ChartPtr chart, const DiscretizationSpec& spec) {
  AssembledOperator op;
  auto space = std::make_shared<TrialSpace>(chart, spec);
  op.space = space;
  const int n = chart->dim(), m = n + 1;
  const int R = space->rigid_count();
  const int na = static_cast<int>(space->multi_indices().size());
  const int raw = space->raw_size();
  op.raw_columns = raw;
  const int pairs = n * (n + 1) / 2;

  std::vector<int> q = spec.quad_points;
  const bool auto_q = q.empty();
  if (auto_q)
    for (int d : spec.degrees) q.push_back(std::max(2, d + 1));
  if (static_cast<int>(q.size()) != n) fail(ErrorCode::InvalidArgument, "kernelprobe", "one quadrature count per axis");
  auto count_points = [&]() {
    long long c = 1;
    for (int v : q) c *= std::max(0, v);
    return c;
  };
  if (count_points() == 0) fail(ErrorCode::InvalidArgument, "kernelprobe", "empty quadrature grid");
  while (pairs * count_points() < 2LL * raw) {
    if (!auto_q) fail(ErrorCode::InvalidArgument, "kernelprobe", "fewer than 2x collocation rows per unknown");
    for (int& v : q) ++v;
  }

  // tensor Gauss-Legendre grid
  const Box& box = space->box();
  std::vector<std::vector<double>> nodes(n), wts(n);
  for (int a = 0; a < n; ++a) {
    gauss_legendre(q[a], nodes[a], wts[a]);
    const double half = 0.5 * (box.hi(a) - box.lo(a)), mid = 0.5 * (box.hi(a) + box.lo(a));
    for (int k = 0; k < q[a]; ++k) {
      nodes[a][k] = mid + half * nodes[a][k];
      wts[a][k] *= half;
    }
  }
  std::vector<int> idx(n, 0);
  while (true) {
    Vec p(n);
    double w = 1.0;
    for (int a = 0; a < n; ++a) {
      p(a) = nodes[a][idx[a]];
      w *= wts[a][idx[a]];
    }
    op.grid.push_back(p);
    op.weights.push_back(w);
    int a = n - 1;
    while (a >= 0 && idx[a] == q[a] - 1) {
      idx[a] = 0;
      --a;
    }
    if (a < 0) break;
    ++idx[a];
  }
  const int npts = static_cast<int>(op.grid.size());

  // chart data and Gram blocks
  std::vector<Mat> F(npts);
  std::vector<Vec> fv(npts);
  std::vector<Eigen::VectorXd> vals(npts);
  std::vector<Eigen::MatrixXd> grads(npts);
  Eigen::MatrixXd Gphi = Eigen::MatrixXd::Zero(na, na);
  Eigen::MatrixXd GRR = Eigen::MatrixXd::Zero(R, R);
  Eigen::MatrixXd GRP = Eigen::MatrixXd::Zero(R, na * m);
  Vec tmp;
  for (int k = 0; k < npts; ++k) {
    const ChartJet f = chart->jet(op.grid[k], 1);
    Eigen::JacobiSVD<Mat> svd(f.d1);
    const auto& sv = svd.singularValues();
    if (!(sv(n - 1) > 1e-9 * sv(0))) {
      fail(ErrorCode::RankDeficient, "kernelprobe", "chart is not immersive on the quadrature grid", to_std(op.grid[k]));
    }
    F[k] = f.d1;
    fv[k] = f.value;
    space->polynomials(op.grid[k], 1, vals[k], grads[k], nullptr);
    const double w = op.weights[k];
    Gphi.noalias() += w * vals[k] * vals[k].transpose();
    Eigen::MatrixXd rv(m, R);
    for (int r = 0; r < R; ++r) {
      rigid_apply(space->rigid_pairs()[r].first, space->rigid_pairs()[r].second, f.value, tmp);
      rv.col(r) = tmp;
    }
    GRR.noalias() += w * rv.transpose() * rv;
    for (int a = 0; a < na; ++a)
      for (int c = 0; c < m; ++c) GRP.col(a * m + c) += (w * vals[k](a)) * rv.row(c).transpose();
  }
  op.G = Eigen::MatrixXd::Zero(raw, raw);
  op.G.topLeftCorner(R, R) = GRR;
  op.G.topRightCorner(R, na * m) = GRP;
  op.G.bottomLeftCorner(na * m, R) = GRP.transpose();
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < na; ++b)
      for (int c = 0; c < m; ++c) op.G(R + a * m + c, R + b * m + c) = Gphi(a, b);

  // orthonormal trial basis: rigid block, then polynomials with the rigid span projected out
  Eigen::MatrixXd TR, GRRinv;
  psd_factor(GRR, spec.drop_tol, TR, GRRinv);
  const Eigen::MatrixXd S = op.G.bottomRightCorner(na * m, na * m) - GRP.transpose() * GRRinv * GRP;
  Eigen::MatrixXd TP, unused;
  psd_factor(0.5 * (S + S.transpose()), spec.drop_tol, TP, unused);
  const int cols = static_cast<int>(TR.cols() + TP.cols());
  op.T = Eigen::MatrixXd::Zero(raw, cols);
  op.T.topLeftCorner(R, TR.cols()) = TR;
  if (R > 0) op.T.topRightCorner(R, TP.cols()) = -GRRinv * GRP * TP;
  op.T.bottomRightCorner(na * m, TP.cols()) = TP;

  // rows in blocks of points
  op.M.resize(static_cast<Eigen::Index>(npts) * pairs, cols);
  const int block = 256;
  for (int start = 0; start < npts; start += block) {
    const int stop = std::min(npts, start + block);
    Eigen::MatrixXd Mr = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(stop - start) * pairs, raw);
    for (int k = start; k < stop; ++k) {
      const Mat& f = F[k];
      const double sw = std::sqrt(op.weights[k]);
      int row = (k - start) * pairs;
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j, ++row) {
          const double s = sw / (f.col(i).norm() * f.col(j).norm());
          for (int r = 0; r < R; ++r) {
            const auto [a, b] = space->rigid_pairs()[r];
            Vec di, dj;
            rigid_apply(a, b, f.col(i), di);
            rigid_apply(a, b, f.col(j), dj);
            Mr(row, r) = s * (di.dot(f.col(j)) + dj.dot(f.col(i)));
          }
          for (int a = 0; a < na; ++a) {
            const double gi = grads[k](i, a), gj = grads[k](j, a);
            for (int c = 0; c < m; ++c) Mr(row, R + a * m + c) = s * (gi * f(c, j) + gj * f(c, i));
          }
        }
    }
    op.M.middleRows(static_cast<Eigen::Index>(start) * pairs, Mr.rows()).noalias() = Mr * op.T;
  }
  return op;
}

void detect_gap(KernelReport& rep, double gap_threshold, double floor) {
  const auto& s = rep.singular_values;
  const int c = static_cast<int>(s.size());
  rep.ambiguous = false;
  rep.kernel_dim = -1;
  rep.gap_ratio = 0.0;
  if (c == 0) {
    rep.kernel_dim = 0;
    return;
  }
  if (!(s[0] > 0.0)) {
    rep.kernel_dim = c;
    rep.gap_ratio = std::numeric_limits<double>::infinity();
    return;
  }
  int best = -1;
  double best_ratio = 0.0;
  for (int k = 0; k < c; ++k) {
    const double hi = std::max(s[k], floor);
    const double lo = (k + 1 < c) ? std::max(s[k + 1], floor) : floor;
    const double ratio = hi / lo;
    if (ratio >= gap_threshold && ratio > best_ratio) {
      best_ratio = ratio;
      best = k;
    }
  }
  if (best < 0) {
    rep.ambiguous = true;
    double worst = 0.0;
    for (int k = 0; k < c; ++k) {
      const double lo = (k + 1 < c) ? std::max(s[k + 1], floor) : floor;
      worst = std::max(worst, std::max(s[k], floor) / lo);
    }
    rep.gap_ratio = worst;
    return;
  }
  rep.gap_ratio = best_ratio;
  rep.kernel_dim = c - 1 - best;
}

KernelReport kernel_svd(const Eigen::MatrixXd& M0, const DiscretizationSpec& spec, int trivial_dim) {
  KernelReport rep;
  rep.trivial_dim = trivial_dim;
  rep.rows = static_cast<int>(M0.rows());
  rep.columns = static_cast<int>(M0.cols());
  if (M0.cols() == 0) {
    rep.kernel_dim = 0;
    return rep;
  }
  Eigen::MatrixXd sketched;
  const Eigen::MatrixXd* M = &M0;
  if (M0.cols() > spec.sketch_columns && M0.rows() > 2 * M0.cols()) {
    // Gaussian row sketch: kernel preserved, singular values distorted by a bounded factor
    const Eigen::Index k = 2 * M0.cols();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd S(k, M0.rows());
    for (Eigen::Index j = 0; j < S.cols(); ++j)
      for (Eigen::Index i = 0; i < k; ++i) S(i, j) = nd(rng);
    sketched = (S * M0) / std::sqrt(static_cast<double>(k));
    M = &sketched;
    rep.sketched = true;
  }
  Eigen::MatrixXd R;
  if (M->rows() > M->cols()) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(*M);
    R = qr.matrixQR().topRows(M->cols()).triangularView<Eigen::Upper>();
  } else {
    R = *M;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const int c = static_cast<int>(M0.cols());
  rep.singular_values.assign(c, 0.0);
  for (int k = 0; k < sv.size(); ++k) rep.singular_values[k] = sv(k);
  const double eps = std::numeric_limits<double>::epsilon();
  const double floor = std::max(M0.rows(), M0.cols()) * eps * rep.singular_values[0];
  detect_gap(rep, spec.gap_threshold, floor);
  if (!rep.ambiguous && rep.kernel_dim > 0) rep.kernel_basis = svd.matrixV().rightCols(rep.kernel_dim);
  return rep;
}

KernelReport kernel_svd(const AssembledOperator& op, const DiscretizationSpec& spec) {
  const int m = op.space->chart().dim() + 1;
  return kernel_svd(op.M, spec, m * (m + 1) / 2);
}

void require_gap(const KernelReport& rep) {
  if (rep.ambiguous) {
    fail(ErrorCode::NoGap, "kernelprobe",
         "no singular-value gap above threshold (largest ratio " + std::to_string(rep.gap_ratio) + ")");
  }
}

KernelField::KernelField(std::shared_ptr<const TrialSpace> space, Eigen::VectorXd raw)
    : BendingField(space->chart_ptr()), space_(std::move(space)), raw_(std::move(raw)) {}

ChartJet KernelField::compute(const Vec& p, int order) const { return space_->field_jet(raw_, p, order); }

std::shared_ptr<KernelField> kernel_field(const AssembledOperator& op, const Eigen::VectorXd& coeffs) {
  return std::make_shared<KernelField>(op.space, op.T * coeffs);
}

Eigen::MatrixXd trivial_coordinates(const AssembledOperator& op) {
  const TrialSpace& sp = *op.space;
  const int n = sp.chart().dim(), m = n + 1;
  const int R = sp.rigid_count();
  const int na = static_cast<int>(sp.multi_indices().size());
  const int ntriv = m * (m - 1) / 2 + m;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(sp.raw_size(), ntriv);
  Vec tmp;
  for (size_t k = 0; k < op.grid.size(); ++k) {
    const Vec f = sp.chart().jet(op.grid[k], 0).value;
    Eigen::VectorXd val;
    Eigen::MatrixXd grad;
    sp.polynomials(op.grid[k], 0, val, grad, nullptr);
    // trivial fields at this point, columns
    Eigen::MatrixXd tv = Eigen::MatrixXd::Zero(m, ntriv);
    int t = 0;
    for (int a = 0; a < m; ++a)
      for (int c = a + 1; c < m; ++c, ++t) {
        rigid_apply(a, c, f, tmp);
        tv.col(t) = tmp;
      }
    for (int c = 0; c < m; ++c, ++t) tv(c, t) = 1.0;
    Eigen::MatrixXd rv(m, sp.raw_size());
    for (int r = 0; r < R; ++r) {
      rigid_apply(sp.rigid_pairs()[r].first, sp.rigid_pairs()[r].second, f, tmp);
      rv.col(r) = tmp;
    }
    for (int a = 0; a < na; ++a)
      for (int c = 0; c < m; ++c) {
        rv.col(R + a * m + c).setZero();
        rv(c, R + a * m + c) = val(a);
      }
    b.noalias() += op.weights[k] * rv.transpose() * tv;
  }
  return op.T.transpose() * b;
}

double operator_residual(const AssembledOperator& op, const Eigen::VectorXd& coeffs) {
  // power iteration for |M|_2
  Eigen::VectorXd v = Eigen::VectorXd::Ones(op.M.cols()).normalized();
  double norm = 0.0;
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd w = op.M.transpose() * (op.M * v);
    const double nw = w.norm();
    if (nw == 0.0) break;
    norm = std::sqrt(nw);
    v = w / nw;
  }
  if (norm == 0.0) return 0.0;
  return (op.M * coeffs).norm() / (norm * std::max(coeffs.norm(), 1e-300));
}

void classify_kernel_elements(const AssembledOperator& op, KernelReport& rep, const std::vector<Vec>& verify_grid) {
  rep.elements.clear();
  rep.nontrivial_count = 0;
  if (rep.ambiguous || rep.kernel_dim <= 0) return;
  const Eigen::MatrixXd tc = trivial_coordinates(op);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(tc);
  const Eigen::MatrixXd Qt = qr.householderQ() * Eigen::MatrixXd::Identity(tc.rows(), std::min(tc.rows(), tc.cols()));
  const Eigen::MatrixXd& K = rep.kernel_basis;
  const Eigen::MatrixXd C = Qt.transpose() * K;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
  const int kd = static_cast<int>(K.cols());
  const int n = op.space->chart().dim();
  GeometryOptions o;
  o.order = 2;
  for (int e = 0; e < kd; ++e) {
    KernelElement el;
    el.trivial_cosine = e < svd.singularValues().size() ? svd.singularValues()(e) : 0.0;
    Eigen::VectorXd v = K * svd.matrixV().col(e);
    const auto raw_field = kernel_field(op, v);
    const TrivialFit fit = fit_trivial(*raw_field, verify_grid);
    el.fit_residual = fit.residual;
    el.trivial = fit.is_trivial;
    if (!el.trivial) {
      v -= Qt * (Qt.transpose() * v);
      v.normalize();
    }
    el.coeffs = v;
    const auto field = kernel_field(op, v);
    double bmax = 0.0, shape_abs = 0.0, null_abs = 0.0;
    bool ruled = true;
    for (const auto& p : verify_grid) {
      const AssociatedTensors at = compute_associated(*field, p, o);
      const GeometryState& s = at.state;
      const double bn = std::sqrt(std::max(0.0, (at.B.transpose() * s.g * at.B * s.g_inv).trace()));
      bmax = std::max(bmax, bn);
      if (s.nullity_index == n - 2 && s.chart->ruling_directions(p) && n >= 3) {
        const RuledFrame fr = ruled_frame(s);
        shape_abs = std::max(shape_abs, shape_residual(s, fr, at.B) * bn);
        null_abs = std::max(null_abs, nullity_kernel_residual(at));
      } else {
        ruled = false;
      }
    }
    el.B_norm = bmax;
    if (ruled && bmax > 0.0) {
      el.shape_residual = shape_abs / bmax;
      el.nullity_residual = null_abs / bmax;
    }
    if (!el.trivial) ++rep.nontrivial_count;
    rep.elements.push_back(el);
  }
}

std::vector<SweepRow> resolution_sweep(ChartPtr chart, const DiscretizationSpec& base, const std::vector<int>& degrees,
                                       SweepMode mode) {
  for (size_t k = 1; k < degrees.size(); ++k)
    if (degrees[k] <= degrees[k - 1]) fail(ErrorCode::InvalidArgument, "kernelprobe", "sweep degrees must increase");
  std::vector<SweepRow> rows;
  for (int d : degrees) {
    DiscretizationSpec spec = base;
    if (mode == SweepMode::Uniform) {
      spec.degrees.assign(chart->dim(), d);
      spec.total_degree = d;
    } else {
      if (spec.degrees.empty()) spec.degrees.assign(chart->dim(), 1);
      spec.degrees[0] = d;
    }
    spec.quad_points.clear();
    const AssembledOperator op = assemble_operator(chart, spec);
    const KernelReport rep = kernel_svd(op, spec);
    SweepRow row;
    row.degree = d;
    row.kernel_dim = rep.kernel_dim;
    row.ambiguous = rep.ambiguous;
    row.gap_ratio = rep.gap_ratio;
    row.columns = rep.columns;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hyperbend
