#ifndef WILDEULER_CONVEX_GEOMETRY_HPP
#define WILDEULER_CONVEX_GEOMETRY_HPP

#include <optional>
#include <vector>

#include "wildeuler/state_algebra.hpp"

namespace wildeuler {

/// Discrete stand-in for the Haar measure on S^{n-1}: unit points with
/// positive weights summing to one. The rules used here integrate all
/// polynomials of degree <= 4 exactly, which is what the T-map needs.
struct SphereQuadrature {
  int n = 0;
  std::vector<SmallVec> points;
  std::vector<double> weights;

  // Moments of the measure, computed from the rule itself:
  // beta1 = int v1^2, beta2 = int v1^2 v2^2, beta3 = int (v1^2 - 1/n)^2.
  double beta1 = 0, beta2 = 0, beta3 = 0;

  // Lipschitz constant of the certificate density w.r.t. the (v,u)
  // state perturbation (Frobenius on u); used for tube budgeting.
  double cert_lipschitz = 0;

  static SphereQuadrature circle(int m);                  // n = 2
  static SphereQuadrature sphere(int gl_order, int mphi); // n = 3
  static SphereQuadrature standard(int n);                // defaults per n
};

/// Convex decomposition of a hull point into at most N+2 points of K,
/// N = n(n+3)/2 - 1.
struct KDecomposition {
  std::vector<double> lambda;
  std::vector<SmallVec> atoms;  // unit vectors; u_i = v_i (x) v_i - I/n implied
  SmallVec target_v;
  SmallMat target_u;
};

/// Admissible oscillation direction: (vbar, ubar, 0) lies in the wave cone.
struct SegmentDirection {
  SmallVec vbar;
  SmallMat ubar;
};

/// Certificate that a state lies in U = int(K^co x [-1,1]): a strictly
/// positive density on the quadrature reproducing (v,u) under the T-map,
/// together with the realized margin min(min phi, 1 - |q|).
struct Certificate {
  double margin = -1.0;
  Eigen::VectorXd phi;
};

inline int hull_dimension(int n) { return n * (n + 3) / 2 - 1; }

/// K point above a unit velocity: u = v (x) v - I/n.
SmallMat k_point(const SmallVec& v);

/// Euclidean distance of (v,u) to K, by dense sphere sampling plus local
/// refinement. Diagnostic accuracy, not exact.
double dist_to_K(const SmallVec& v, const SmallMat& u);

/// Discrete T-map: sum_i w_i phi_i (v_i, v_i (x) v_i - I/n).
std::pair<SmallVec, SmallMat> tmap(const SphereQuadrature& q,
                                   const Eigen::VectorXd& density);

/// Density ansatz phi = 1 + psi with psi in the span of {v_i, v_i v_j, v_i^2 - 1/n}
/// solved from the beta moments so that T(phi) = (v,u). Returns the density
/// and its realized margin; membership is not decided here.
Certificate certificate_margin(const SphereQuadrature& q, const StateTriple& z);

/// Returns the certificate iff it realizes at least the requested margin.
std::optional<Certificate> interior_certificate(const SphereQuadrature& q,
                                                const StateTriple& z,
                                                double margin);

/// Carathéodory decomposition into <= N+2 atoms reproducing (v,u) within
/// tol. Throws if no certificate exists. A fixed spread frame of N+2 atoms
/// is tried first (balanced weights), with pivot reduction of the
/// certificate density as fallback.
KDecomposition caratheodory_decompose(const SphereQuadrature& q,
                                      const SmallVec& v, const SmallMat& u,
                                      double tol);

/// The fallback path of caratheodory_decompose, exposed for testing:
/// treat (w_i phi_i) as an over-complete convex combination and drop atoms
/// along moment-matrix null directions until at most N+2 remain.
KDecomposition caratheodory_reduce_pivots(const SphereQuadrature& q,
                                          const SmallVec& v, const SmallMat& u,
                                          double tol, const Certificate& cert);

/// Oscillation direction of the one-step lemma: decompose, order by weight,
/// take (vbar,ubar) = lambda_j (z_j - z_1) / 2 with j maximizing
/// lambda_j |v_j - v_1|. Guarantees |vbar| >= (1-|v|^2)/(4N) - tol and
/// (vbar, ubar, 0) in the wave cone.
SegmentDirection segment_direction(const SphereQuadrature& q, const StateTriple& z);

/// |det| of the bordered difference matrix built from two unit vectors;
/// identically zero in exact arithmetic (the cone is large).
double lambda_check_difference(const SmallVec& a, const SmallVec& b);

}  // namespace wildeuler

#endif
