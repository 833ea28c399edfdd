#pragma once

#include "linalg.hpp"

#include <array>

namespace hyperbend {

// Forward-mode jet up to third order in n <= kMaxDim variables.
struct Jet3 {
  int n = 0;
  double v = 0.0;
  std::array<double, kMaxDim> d1{};
  std::array<double, kMaxDim * kMaxDim> d2{};
  std::array<double, kMaxDim * kMaxDim * kMaxDim> d3{};

  static Jet3 constant(int n, double c) {
    Jet3 j;
    j.n = n;
    j.v = c;
    return j;
  }
  static Jet3 variable(int n, int index, double value) {
    Jet3 j = constant(n, value);
    j.d1[index] = 1.0;
    return j;
  }

  double& h(int i, int j) { return d2[i * kMaxDim + j]; }
  double h(int i, int j) const { return d2[i * kMaxDim + j]; }
  double& t(int i, int j, int k) { return d3[(i * kMaxDim + j) * kMaxDim + k]; }
  double t(int i, int j, int k) const { return d3[(i * kMaxDim + j) * kMaxDim + k]; }

  Jet3& operator+=(const Jet3& o) {
    v += o.v;
    for (int i = 0; i < n; ++i) d1[i] += o.d1[i];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) h(i, j) += o.h(i, j);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) t(i, j, k) += o.t(i, j, k);
    return *this;
  }

  Jet3& scale(double c) {
    v *= c;
    for (auto& x : d1) x *= c;
    for (auto& x : d2) x *= c;
    for (auto& x : d3) x *= c;
    return *this;
  }
};

inline Jet3 operator+(Jet3 a, const Jet3& b) { return a += b; }

inline Jet3 operator*(const Jet3& f, const Jet3& g) {
  const int n = f.n;
  Jet3 r = Jet3::constant(n, f.v * g.v);
  for (int i = 0; i < n; ++i) r.d1[i] = f.d1[i] * g.v + f.v * g.d1[i];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      r.h(i, j) = f.h(i, j) * g.v + f.d1[i] * g.d1[j] + f.d1[j] * g.d1[i] + f.v * g.h(i, j);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        r.t(i, j, k) = f.t(i, j, k) * g.v + f.h(i, j) * g.d1[k] + f.h(i, k) * g.d1[j] +
                       f.h(j, k) * g.d1[i] + f.d1[i] * g.h(j, k) + f.d1[j] * g.h(i, k) +
                       f.d1[k] * g.h(i, j) + f.v * g.t(i, j, k);
  return r;
}

// h = phi(u) given phi and its first three derivatives at u.v
inline Jet3 compose(const Jet3& u, double p0, double p1, double p2, double p3) {
  const int n = u.n;
  Jet3 r = Jet3::constant(n, p0);
  for (int i = 0; i < n; ++i) r.d1[i] = p1 * u.d1[i];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r.h(i, j) = p2 * u.d1[i] * u.d1[j] + p1 * u.h(i, j);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        r.t(i, j, k) = p3 * u.d1[i] * u.d1[j] * u.d1[k] +
                       p2 * (u.h(i, j) * u.d1[k] + u.h(i, k) * u.d1[j] + u.h(j, k) * u.d1[i]) +
                       p1 * u.t(i, j, k);
  return r;
}

}  // namespace hyperbend
