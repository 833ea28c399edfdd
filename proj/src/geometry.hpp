#pragma once

#include "chart.hpp"

namespace hyperbend {

struct GeometryOptions {
  double nullity_tol = 1e-8;   // |lambda| < nullity_tol * ||A|| counts as nullity
  double rank_tol = 1e-9;      // sigma_min / sigma_max of the Jacobian
  double stencil_rel = 1e-3;   // stencil spacing relative to the chart scale
  int order = 3;               // 2 skips nabla_A and the curvature tensor
};

struct GeometryState {
  const ChartImmersion* chart = nullptr;
  GeometryOptions options;
  Vec point;
  int n = 0;
  int order = 0;
  ChartJet jet;
  Mat g;
  Mat g_inv;
  Tensor3 dg;           // (k, i, j) = d_k g_ij
  Tensor3 christoffel;  // (k, i, j) = Gamma^k_ij
  Vec normal;
  Mat h;                // second fundamental form <f_ij, N>
  Mat shape;            // A = g^-1 h
  Tensor3 nabla_A;      // (k, i, j) = (nabla_k A)^i_j
  Tensor4 riemann;      // (i, j, k, l) = l-th component of R(d_i, d_j) d_k
  Mat ortho;            // g-orthonormal frame from the coordinate frame
  Vec principal;        // eigenvalues of A, ascending
  double shape_norm = 0.0;
  int nullity_index = 0;
  Mat nullity_basis;     // g-orthonormal basis of ker A (coordinate components)
  Mat complement_basis;  // g-orthonormal basis of the orthogonal complement

  int rank() const { return n - nullity_index; }
  Mat nullity_projector() const { return projector(nullity_basis, g); }
  Mat complement_projector() const { return projector(complement_basis, g); }
  // Ambient image f_* v of a coordinate vector.
  Vec push(const Vec& v) const { return jet.d1 * v; }
};

GeometryState evaluate_geometry(const ChartImmersion& chart, const Vec& p, const GeometryOptions& opts = {});

// Geometry of a precomputed jet (used for variations f + t tau).
GeometryState geometry_from_jet(const ChartImmersion* chart, const Vec& p, ChartJet jet, double normal_sign,
                                const GeometryOptions& opts);

double gauss_residual(const GeometryState& s);
double codazzi_residual(const GeometryState& s);
// Same residuals with the shape operator replaced by `shape` (and its covariant derivative).
double gauss_residual_with(const GeometryState& s, const Mat& shape);
double codazzi_residual_with(const GeometryState& s, const Tensor3& nabla_shape);

// Derivatives d_i P of the nullity projector from a 5-point stencil.
struct ProjectorStencil {
  int n = 0;
  std::array<Mat, kMaxDim> dP;
};
ProjectorStencil projector_stencil(const GeometryState& s);

struct SplittingSample {
  Vec T;
  Mat C;      // matrix of C_T on complement_basis
  Mat basis;  // the complement basis used
};

SplittingSample splitting_tensor(const GeometryState& s, const Vec& T);
SplittingSample splitting_tensor(const GeometryState& s, const ProjectorStencil& st, const Vec& T);
// C_T X = A^+ (nabla_X A) T, from the exact jets; a cross-check of the stencil route.
SplittingSample splitting_tensor_algebraic(const GeometryState& s, const Vec& T);

// max(||nabla_T A - A C_T||, ||A C_T - C_T' A||) on the complement.
double verify_codazzi_splitting(const GeometryState& s, const Vec& T);
double verify_codazzi_splitting(const GeometryState& s, const Vec& T, const Mat& C);

double verify_CT_compatibility(const GeometryState& s, const Vec& T, const Vec& X, const Vec& Y);

int estimate_C0_codimension(const GeometryState& s, double tol = 1e-6);

// Shape operator restricted to the complement basis, as a symmetric matrix.
Mat restrict_to_complement(const GeometryState& s, const Mat& endo);

}  // namespace hyperbend
