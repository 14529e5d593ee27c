#ifndef WILDEULER_STATE_ALGEBRA_HPP
#define WILDEULER_STATE_ALGEBRA_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>

namespace wildeuler {

// All dense objects in the hot paths are at most (n+1)x(n+1) with n in {2,3},
// so we give Eigen a fixed upper bound and avoid heap traffic.
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

/// State of the Euler differential inclusion at a point:
/// velocity v in R^n, trace-free symmetric Reynolds-type tensor u,
/// modified pressure q = p + |v|^2/n.
struct StateTriple {
  SmallVec v;
  SmallMat u;
  double q = 0.0;

  int n() const { return static_cast<int>(v.size()); }

  StateTriple() = default;
  StateTriple(SmallVec v_, SmallMat u_, double q_)
      : v(std::move(v_)), u(std::move(u_)), q(q_) {}

  static StateTriple zero(int n) {
    return StateTriple(SmallVec::Zero(n), SmallMat::Zero(n, n), 0.0);
  }

  // Euclidean norm on R^n x S^n_0 x R (u in Frobenius norm).
  double norm() const { return std::sqrt(v.squaredNorm() + u.squaredNorm() + q * q); }

  StateTriple operator+(const StateTriple& o) const { return {v + o.v, u + o.u, q + o.q}; }
  StateTriple operator-(const StateTriple& o) const { return {v - o.v, u - o.u, q - o.q}; }
  StateTriple operator*(double s) const { return {s * v, s * u, s * q}; }
};

/// Symmetric (n+1)x(n+1) matrix with vanishing bottom-right corner.
/// Wrapper only validates; the raw matrix is what circulates.
struct MatrixM {
  SmallMat m;
  explicit MatrixM(SmallMat mat, double tol = 1e-12);
};

/// Element of the Galilean group: invertible, fixes e_{n+1}.
struct GalileanMatrix {
  SmallMat a;
  explicit GalileanMatrix(SmallMat mat, double tol = 1e-12);
};

// Validation helpers (throw std::invalid_argument on violation).
void check_state(const StateTriple& z, double tol = 1e-10);
bool is_matrix_m(const SmallMat& u, double tol = 1e-12);
bool is_galilean(const SmallMat& a, double tol = 1e-12);

/// (v,u,q) -> U = [u + q I_n, v; v^T, 0]. Linear isomorphism onto M.
SmallMat to_matrix(const StateTriple& z);

/// Exact inverse of to_matrix: q = tr(block)/n, u = block - q I, v = last column head.
StateTriple from_matrix(const SmallMat& U);

/// Lift a velocity/pressure pair into the inclusion variables,
/// u = v (x) v - |v|^2/n I, q = p + |v|^2/n. Satisfies the pointwise constraint.
StateTriple euler_embed(const SmallVec& v, double p);

/// Inverse lift: p = q - |v|^2/n.
std::pair<SmallVec, double> euler_extract(const StateTriple& z);

/// Wave-cone membership: |det U| <= tol * ||U||_F^{n+1}.
/// The normalization makes the test scale-invariant (det is homogeneous
/// of degree n+1); z = 0 counts as a cone element.
bool in_wave_cone(const StateTriple& z, double tol);

/// Scale-invariant |det(to_matrix(z))| / ||U||_F^{n+1}; 0 for z = 0.
double cone_defect(const StateTriple& z);

/// Given v != 0 and trace-free symmetric u, return q with (v,u,q) in the cone:
/// q = -lambda_min of the quadratic form xi -> xi.u xi restricted to v^perp.
double q_for_cone(const SmallVec& v, const SmallMat& u);

/// Basis completion: invertible A with A e_1 = f, A e_{n+1} = e_{n+1}.
/// Middle columns via Gram-Schmidt over the standard vectors, fixed order.
SmallMat galilean_matrix(const SmallVec& f);

/// A^t U A for A Galilean, U in M; the corner stays zero.
SmallMat conjugate_matrix(const SmallMat& A, const SmallMat& U);

}  // namespace wildeuler

#endif
