#include "wildeuler/state_algebra.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace wildeuler {

void check_state(const StateTriple& z, double tol) {
  const int n = z.n();
  if (n < 2) throw std::invalid_argument("StateTriple: n >= 2 required");
  if (z.u.rows() != n || z.u.cols() != n)
    throw std::invalid_argument("StateTriple: u must be n x n");
  const double scale = std::max(1.0, z.u.cwiseAbs().maxCoeff());
  if ((z.u - z.u.transpose()).cwiseAbs().maxCoeff() > tol * scale)
    throw std::invalid_argument("StateTriple: u not symmetric");
  if (std::abs(z.u.trace()) > tol * static_cast<double>(n) * scale)
    throw std::invalid_argument("StateTriple: u not trace-free");
}

bool is_matrix_m(const SmallMat& u, double tol) {
  if (u.rows() != u.cols() || u.rows() < 3) return false;
  const double scale = std::max(1.0, u.cwiseAbs().maxCoeff());
  if ((u - u.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
  const int d = static_cast<int>(u.rows());
  return std::abs(u(d - 1, d - 1)) <= tol * scale;
}

bool is_galilean(const SmallMat& a, double tol) {
  if (a.rows() != a.cols() || a.rows() < 3) return false;
  const int d = static_cast<int>(a.rows());
  SmallVec last = a.col(d - 1);
  for (int i = 0; i < d; ++i) {
    const double want = (i == d - 1) ? 1.0 : 0.0;
    if (std::abs(last(i) - want) > tol) return false;
  }
  return std::abs(a.determinant()) > tol;
}

MatrixM::MatrixM(SmallMat mat, double tol) : m(std::move(mat)) {
  if (!is_matrix_m(m, tol)) throw std::invalid_argument("MatrixM: invalid matrix");
}

GalileanMatrix::GalileanMatrix(SmallMat mat, double tol) : a(std::move(mat)) {
  if (!is_galilean(a, tol)) throw std::invalid_argument("GalileanMatrix: invalid matrix");
}

SmallMat to_matrix(const StateTriple& z) {
  check_state(z);
  const int n = z.n();
  SmallMat U = SmallMat::Zero(n + 1, n + 1);
  U.topLeftCorner(n, n) = z.u + z.q * SmallMat::Identity(n, n);
  U.col(n).head(n) = z.v;
  U.row(n).head(n) = z.v.transpose();
  U(n, n) = 0.0;
  return U;
}

StateTriple from_matrix(const SmallMat& U) {
  if (!is_matrix_m(U)) throw std::invalid_argument("from_matrix: matrix not in M");
  const int n = static_cast<int>(U.rows()) - 1;
  StateTriple z;
  // Extended-precision trace keeps the roundtrip within one rounding
  // of the embedding (exact when the embedding itself was exact).
  long double tr = 0.0L;
  for (int i = 0; i < n; ++i) tr += static_cast<long double>(U(i, i));
  z.q = static_cast<double>(tr / n);
  z.u = U.topLeftCorner(n, n) - z.q * SmallMat::Identity(n, n);
  z.v = U.col(n).head(n);
  return z;
}

StateTriple euler_embed(const SmallVec& v, double p) {
  const int n = static_cast<int>(v.size());
  const double v2 = v.squaredNorm();
  StateTriple z;
  z.v = v;
  z.u = v * v.transpose() - (v2 / n) * SmallMat::Identity(n, n);
  z.q = p + v2 / n;
  return z;
}

std::pair<SmallVec, double> euler_extract(const StateTriple& z) {
  return {z.v, z.q - z.v.squaredNorm() / z.n()};
}

double cone_defect(const StateTriple& z) {
  const SmallMat U = to_matrix(z);
  const double nf = U.norm();
  if (nf == 0.0) return 0.0;
  return std::abs(U.determinant()) / std::pow(nf, static_cast<double>(z.n() + 1));
}

bool in_wave_cone(const StateTriple& z, double tol) {
  if (tol <= 0) throw std::invalid_argument("in_wave_cone: tol > 0 required");
  return cone_defect(z) <= tol;
}

double q_for_cone(const SmallVec& v, const SmallMat& u) {
  const int n = static_cast<int>(v.size());
  const double vn = v.norm();
  if (vn == 0.0) throw std::invalid_argument("q_for_cone: v must be nonzero");

  // Orthonormal basis of v^perp: full householder QR of [v], last n-1 columns.
  SmallMat q = Eigen::HouseholderQR<SmallMat>(SmallMat(v / vn)).householderQ();
  SmallMat W = q.rightCols(n - 1);  // columns span v^perp

  SmallMat restricted = W.transpose() * u * W;
  Eigen::SelfAdjointEigenSolver<SmallMat> es(restricted);
  // Any eigenvalue works; the smallest is the deterministic pick.
  return -es.eigenvalues()(0);
}

SmallMat galilean_matrix(const SmallVec& f) {
  const int d = static_cast<int>(f.size());  // d = n+1
  const int n = d - 1;
  if (f.norm() == 0.0) throw std::invalid_argument("galilean_matrix: f = 0");
  SmallVec en1 = SmallVec::Zero(d);
  en1(d - 1) = 1.0;
  // {f, e_{n+1}} must be linearly independent.
  SmallVec fp = f - f.dot(en1) * en1;
  if (fp.norm() <= 1e-12 * f.norm())
    throw std::invalid_argument("galilean_matrix: f parallel to e_{n+1}");

  SmallMat A = SmallMat::Zero(d, d);
  A.col(0) = f;
  A.col(d - 1) = en1;

  // Middle columns: Gram-Schmidt over the standard basis, skipping
  // candidates that are (numerically) dependent on what we already have.
  // Orthonormalize against an orthonormal basis of span{f, e_{n+1}}.
  SmallVec fhat = f / f.norm();
  SmallVec ghat = en1 - en1.dot(fhat) * fhat;
  ghat /= ghat.norm();
  int filled = 1;
  for (int cand = 0; cand < d && filled < n; ++cand) {
    SmallVec w = SmallVec::Zero(d);
    w(cand) = 1.0;
    w -= w.dot(fhat) * fhat;
    w -= w.dot(ghat) * ghat;
    for (int j = 1; j < filled; ++j) w -= w.dot(A.col(j)) * A.col(j);
    if (w.norm() > 1e-8) {
      A.col(filled) = w / w.norm();
      ++filled;
    }
  }
  if (filled != n) throw std::runtime_error("galilean_matrix: basis completion failed");
  return A;
}

SmallMat conjugate_matrix(const SmallMat& A, const SmallMat& U) {
  return A.transpose() * U * A;
}

}  // namespace wildeuler
