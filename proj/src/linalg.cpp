#include "linalg.hpp"

#include <cmath>

namespace hyperbend {

Mat gram_schmidt(const Mat& candidates, const Mat& g, double tol, int max_count) {
  const int n = static_cast<int>(candidates.rows());
  Mat out(n, 0);
  for (int c = 0; c < candidates.cols() && out.cols() < max_count; ++c) {
    Vec v = candidates.col(c);
    // two passes for stability
    for (int pass = 0; pass < 2; ++pass) {
      for (int k = 0; k < out.cols(); ++k) {
        const double proj = out.col(k).dot(g * v);
        v -= proj * out.col(k);
      }
    }
    const double nrm = std::sqrt(std::max(0.0, v.dot(g * v)));
    if (nrm <= tol) continue;
    out.conservativeResize(n, out.cols() + 1);
    out.col(out.cols() - 1) = v / nrm;
  }
  return out;
}

Mat projector(const Mat& basis, const Mat& g) {
  const int n = static_cast<int>(g.rows());
  if (basis.cols() == 0) return Mat::Zero(n, n);
  return basis * (basis.transpose() * g);
}

double subspace_sin_angle(const Mat& a, const Mat& b, const Mat& g) {
  if (a.cols() != b.cols()) return 1.0;
  if (a.cols() == 0) return 0.0;
  const Mat pb = projector(b, g);
  const Mat resid = a - pb * a;
  // g-norm of the residual operator: singular values of L^T resid with g = L L^T
  Eigen::LLT<Mat> llt(g);
  const Mat lr = llt.matrixU() * resid;
  Eigen::JacobiSVD<Mat> svd(lr);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

Vec generalized_cross(const Mat& frame) {
  const int m = static_cast<int>(frame.rows());
  Vec out(m);
  Mat minor(m - 1, m - 1);
  for (int c = 0; c < m; ++c) {
    int r = 0;
    for (int i = 0; i < m; ++i) {
      if (i == c) continue;
      minor.row(r++) = frame.row(i);
    }
    const double sign = ((c + m - 1) % 2 == 0) ? 1.0 : -1.0;
    out(c) = sign * minor.determinant();
  }
  return out;
}

void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights) {
  // Golub-Welsch
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(count, count);
  for (int k = 1; k < count; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jac(k, k - 1) = b;
    jac(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  nodes.resize(count);
  weights.resize(count);
  for (int k = 0; k < count; ++k) {
    nodes[k] = es.eigenvalues()(k);
    const double v0 = es.eigenvectors()(0, k);
    weights[k] = 2.0 * v0 * v0;
  }
}

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out(static_cast<int>(i)) = v[i];
  return out;
}

std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace hyperbend
