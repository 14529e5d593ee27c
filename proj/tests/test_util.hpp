#ifndef WILDEULER_TEST_UTIL_HPP
#define WILDEULER_TEST_UTIL_HPP

#include <random>

#include "wildeuler/state_algebra.hpp"

namespace wildeuler::testutil {

inline std::mt19937_64 rng(unsigned long long seed = 0x5eed1234ull) {
  return std::mt19937_64(seed);
}

inline double uni(std::mt19937_64& g, double lo = -1.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline SmallVec random_vec(std::mt19937_64& g, int n, double scale = 1.0) {
  SmallVec v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * uni(g);
  return v;
}

inline SmallVec random_unit(std::mt19937_64& g, int n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  SmallVec v(n);
  do {
    for (int i = 0; i < n; ++i) v(i) = nd(g);
  } while (v.norm() < 1e-8);
  return v / v.norm();
}

// random symmetric trace-free n x n
inline SmallMat random_s0(std::mt19937_64& g, int n, double scale = 1.0) {
  SmallMat r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = uni(g);
  SmallMat u = scale * 0.5 * (r + r.transpose());
  u -= (u.trace() / n) * SmallMat::Identity(n, n);
  return u;
}

inline StateTriple random_state(std::mt19937_64& g, int n, double scale = 1.0) {
  return StateTriple(random_vec(g, n, scale), random_s0(g, n, scale),
                     scale * uni(g));
}

// Random state on a dyadic lattice: every entry a multiple of 2^-20, the
// trace cancelled exactly. All sums in the U embedding are then exact in
// double precision, so the roundtrip through to_matrix is bitwise.
inline StateTriple random_state_dyadic(std::mt19937_64& g, int n,
                                       double scale = 2.0) {
  auto snap = [](double x) { return std::ldexp(std::nearbyint(std::ldexp(x, 20)), -20); };
  SmallVec v(n);
  for (int i = 0; i < n; ++i) v(i) = snap(scale * uni(g));
  SmallMat u = SmallMat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) u(i, j) = u(j, i) = snap(scale * uni(g));
  double head = 0;
  for (int i = 0; i + 1 < n; ++i) {
    u(i, i) = snap(scale * uni(g));
    head += u(i, i);  // exact: dyadic grid, bounded range
  }
  u(n - 1, n - 1) = -head;
  return StateTriple(v, u, snap(scale * uni(g)));
}

inline SmallMat random_matrix_m(std::mt19937_64& g, int n, double scale = 1.0) {
  return to_matrix(random_state(g, n, scale));
}

inline SmallMat random_galilean(std::mt19937_64& g, int n) {
  const int d = n + 1;
  SmallMat a(d, d);
  do {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a(i, j) = uni(g);
    a.col(d - 1).setZero();
    a(d - 1, d - 1) = 1.0;
  } while (std::abs(a.determinant()) < 0.05);
  return a;
}

}  // namespace wildeuler::testutil

#endif
