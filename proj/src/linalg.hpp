#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace hyperbend {

constexpr int kMaxDim = 6;
constexpr int kMaxAmbient = kMaxDim + 1;

// Small fixed-capacity types keep per-point geometry off the heap.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;

struct Tensor3 {
  int n = 0;
  std::array<double, kMaxDim * kMaxDim * kMaxDim> a{};
  explicit Tensor3(int dim = 0) : n(dim) {}
  double& operator()(int i, int j, int k) { return a[(i * kMaxDim + j) * kMaxDim + k]; }
  double operator()(int i, int j, int k) const { return a[(i * kMaxDim + j) * kMaxDim + k]; }
};

struct Tensor4 {
  int n = 0;
  std::vector<double> a;
  explicit Tensor4(int dim = 0) : n(dim), a(static_cast<size_t>(dim) * dim * dim * dim, 0.0) {}
  double& operator()(int i, int j, int k, int l) { return a[((i * n + j) * n + k) * n + l]; }
  double operator()(int i, int j, int k, int l) const { return a[((i * n + j) * n + k) * n + l]; }
};

// Columns of `candidates` are orthonormalized in the metric g (in order); vectors whose
// projected norm falls below tol are skipped. At most max_count columns are returned.
Mat gram_schmidt(const Mat& candidates, const Mat& g, double tol, int max_count);

// g-orthogonal projector onto the span of g-orthonormal columns.
Mat projector(const Mat& basis, const Mat& g);

// Sine of the largest principal angle between two column spans (g-orthonormal bases).
double subspace_sin_angle(const Mat& a, const Mat& b, const Mat& g);

// Unit vector orthogonal to the columns of frame (m x (m-1)), by cofactor expansion.
Vec generalized_cross(const Mat& frame);

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights);

Vec to_vec(const std::vector<double>& v);
std::vector<double> to_std(const Vec& v);
std::vector<double> to_std(const Eigen::VectorXd& v);

}  // namespace hyperbend
