#include "wildeuler/convex_geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace wildeuler {

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration.
void gauss_legendre(int m, std::vector<double>& x, std::vector<double>& w) {
  x.assign(m, 0.0);
  w.assign(m, 0.0);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double p0 = 0, p1 = 0;
    for (int it = 0; it < 100; ++it) {
      p0 = 1.0;
      p1 = 0.0;
      for (int j = 0; j < m; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * t * p1 - j * p2) / (j + 1.0);
      }
      const double dp = m * (t * p0 - p1) / (t * t - 1.0);
      const double dt = p0 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    p0 = 1.0;
    p1 = 0.0;
    for (int j = 0; j < m; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j + 1.0) * t * p1 - j * p2) / (j + 1.0);
    }
    const double dp = m * (t * p0 - p1) / (t * t - 1.0);
    x[i] = -t;
    x[m - 1 - i] = t;
    w[i] = w[m - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

void finalize(SphereQuadrature& q) {
  const int n = q.n;
  q.beta1 = q.beta2 = q.beta3 = 0;
  for (std::size_t i = 0; i < q.points.size(); ++i) {
    const SmallVec& v = q.points[i];
    const double w = q.weights[i];
    q.beta1 += w * v(0) * v(0);
    q.beta2 += w * v(0) * v(0) * v(1) * v(1);
    const double d = v(0) * v(0) - 1.0 / n;
    q.beta3 += w * d * d;
  }
  // Dual norm of the density functional at each node, w.r.t. the Euclidean
  // norm on (v,u) with u in Frobenius coordinates.
  double lip = 0;
  for (const SmallVec& v : q.points) {
    double s = 0;
    for (int i = 0; i < n; ++i) s += (v(i) / q.beta1) * (v(i) / q.beta1);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double c = v(i) * v(j) / q.beta2;
        s += c * c / 2.0;
      }
    for (int i = 0; i < n; ++i) {
      const double c = (n - 1) * (v(i) * v(i) - 1.0 / n) / (n * q.beta3);
      s += c * c;
    }
    lip = std::max(lip, std::sqrt(s));
  }
  q.cert_lipschitz = lip;
}

}  // namespace

SphereQuadrature SphereQuadrature::circle(int m) {
  SphereQuadrature q;
  q.n = 2;
  q.points.reserve(m);
  q.weights.assign(m, 1.0 / m);
  for (int k = 0; k < m; ++k) {
    const double th = 2.0 * std::numbers::pi * k / m;
    SmallVec v(2);
    v << std::cos(th), std::sin(th);
    q.points.push_back(v);
  }
  finalize(q);
  return q;
}

SphereQuadrature SphereQuadrature::sphere(int gl_order, int mphi) {
  SphereQuadrature q;
  q.n = 3;
  std::vector<double> xz, wz;
  gauss_legendre(gl_order, xz, wz);
  for (int iz = 0; iz < gl_order; ++iz) {
    const double z = xz[iz];
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    for (int j = 0; j < mphi; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / mphi;
      SmallVec v(3);
      v << r * std::cos(phi), r * std::sin(phi), z;
      q.points.push_back(v);
      q.weights.push_back(wz[iz] / 2.0 / mphi);
    }
  }
  finalize(q);
  return q;
}

SphereQuadrature SphereQuadrature::standard(int n) {
  if (n == 2) return circle(48);
  if (n == 3) return sphere(8, 16);
  throw std::invalid_argument("SphereQuadrature: n must be 2 or 3");
}

SmallMat k_point(const SmallVec& v) {
  const int n = static_cast<int>(v.size());
  if (std::abs(v.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("k_point: |v| = 1 required");
  return v * v.transpose() - SmallMat::Identity(n, n) / n;
}

namespace {

double k_objective(const SmallVec& v, const SmallMat& u, const SmallVec& w) {
  const int n = static_cast<int>(v.size());
  const SmallMat ku = w * w.transpose() - SmallMat::Identity(n, n) / n;
  return std::sqrt((v - w).squaredNorm() + (u - ku).squaredNorm());
}

}  // namespace

double dist_to_K(const SmallVec& v, const SmallMat& u) {
  const int n = static_cast<int>(v.size());
  if (n == 2) {
    // 1-D angular sweep plus golden-section refinement.
    auto f = [&](double th) {
      SmallVec w(2);
      w << std::cos(th), std::sin(th);
      return k_objective(v, u, w);
    };
    const int m = 256;
    double best_th = 0, best = std::numeric_limits<double>::max();
    for (int k = 0; k < m; ++k) {
      const double th = 2.0 * std::numbers::pi * k / m;
      const double val = f(th);
      if (val < best) {
        best = val;
        best_th = th;
      }
    }
    double a = best_th - 2.0 * std::numbers::pi / m;
    double b = best_th + 2.0 * std::numbers::pi / m;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    for (int it = 0; it < 80; ++it) {
      if (f(c) < f(d)) b = d; else a = c;
      c = b - gr * (b - a);
      d = a + gr * (b - a);
    }
    return f(0.5 * (a + b));
  }
  // n = 3: Fibonacci sphere sweep, then shrinking local pattern search.
  const int m = 2048;
  SmallVec best_w(3);
  double best = std::numeric_limits<double>::max();
  const double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < m; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / m;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    SmallVec w(3);
    w << r * std::cos(ga * k), r * std::sin(ga * k), z;
    const double val = k_objective(v, u, w);
    if (val < best) {
      best = val;
      best_w = w;
    }
  }
  auto cross = [](const SmallVec& a, const SmallVec& b) {
    SmallVec c(3);
    c << a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2),
        a(0) * b(1) - a(1) * b(0);
    return c;
  };
  double step = 2.0 / std::sqrt(static_cast<double>(m));
  for (int it = 0; it < 60; ++it) {
    bool improved = false;
    // tangent frame at best_w
    SmallVec ez(3);
    ez << 0, 0, 1;
    SmallVec ex(3);
    ex << 1, 0, 0;
    SmallVec t1 = cross(best_w, ez);
    if (t1.norm() < 1e-8) t1 = cross(best_w, ex);
    t1 /= t1.norm();
    SmallVec t2 = cross(best_w, t1);
    t2 /= t2.norm();
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b) {
        if (a == 0 && b == 0) continue;
        SmallVec w = best_w + step * (a * t1 + b * t2);
        w /= w.norm();
        const double val = k_objective(v, u, w);
        if (val < best - 1e-16) {
          best = val;
          best_w = w;
          improved = true;
        }
      }
    if (!improved) step *= 0.5;
    if (step < 1e-10) break;
  }
  return best;
}

std::pair<SmallVec, SmallMat> tmap(const SphereQuadrature& q,
                                   const Eigen::VectorXd& density) {
  const int n = q.n;
  SmallVec tv = SmallVec::Zero(n);
  SmallMat tu = SmallMat::Zero(n, n);
  for (std::size_t i = 0; i < q.points.size(); ++i) {
    const double c = q.weights[i] * density(static_cast<Eigen::Index>(i));
    tv += c * q.points[i];
    tu += c * (q.points[i] * q.points[i].transpose() -
               SmallMat::Identity(n, n) / n);
  }
  return {tv, tu};
}

Certificate certificate_margin(const SphereQuadrature& q, const StateTriple& z) {
  check_state(z);
  const int n = z.n();
  Certificate cert;
  cert.phi.resize(static_cast<Eigen::Index>(q.points.size()));

  double min_phi = std::numeric_limits<double>::max();
  for (std::size_t k = 0; k < q.points.size(); ++k) {
    const SmallVec& w = q.points[k];
    double psi = 0;
    for (int i = 0; i < n; ++i) psi += z.v(i) * w(i) / q.beta1;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) psi += z.u(i, j) * w(i) * w(j) / q.beta2;
    for (int i = 0; i < n; ++i) {
      const double ci = (n - 1) * z.u(i, i) / (n * q.beta3);
      psi += ci * (w(i) * w(i) - 1.0 / n);
    }
    const double phi = 1.0 + psi;
    cert.phi(static_cast<Eigen::Index>(k)) = phi;
    min_phi = std::min(min_phi, phi);
  }
  cert.margin = std::min(min_phi, 1.0 - std::abs(z.q));
  return cert;
}

std::optional<Certificate> interior_certificate(const SphereQuadrature& q,
                                                const StateTriple& z,
                                                double margin) {
  if (margin <= 0) throw std::invalid_argument("interior_certificate: margin > 0");
  Certificate cert = certificate_margin(q, z);
  if (cert.margin < margin) return std::nullopt;
  // The ansatz reproduces (v,u) exactly for degree-4-exact rules; re-check.
  auto [tv, tu] = tmap(q, cert.phi);
  const double scale = std::max(1.0, z.norm());
  if ((tv - z.v).norm() + (tu - z.u).norm() > 1e-9 * scale) return std::nullopt;
  return cert;
}

namespace {

// Moment coordinates of a K atom: (1, v, u offdiag, u diag head).
Eigen::VectorXd atom_moment(const SmallVec& w, int n) {
  Eigen::VectorXd mv(hull_dimension(n) + 1);
  int r = 0;
  mv(r++) = 1.0;
  for (int i = 0; i < n; ++i) mv(r++) = w(i);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) mv(r++) = w(i) * w(j);
  for (int i = 0; i + 1 < n; ++i) mv(r++) = w(i) * w(i) - 1.0 / n;
  return mv;
}

Eigen::VectorXd target_moment(const SmallVec& v, const SmallMat& u, int n) {
  Eigen::VectorXd mv(hull_dimension(n) + 1);
  int r = 0;
  mv(r++) = 1.0;
  for (int i = 0; i < n; ++i) mv(r++) = v(i);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) mv(r++) = u(i, j);
  for (int i = 0; i + 1 < n; ++i) mv(r++) = u(i, i);
  return mv;
}

// Fixed well-spread frame of N+2 unit atoms.
std::vector<SmallVec> frame_atoms(int n) {
  const int count = hull_dimension(n) + 2;
  std::vector<SmallVec> atoms;
  if (n == 2) {
    for (int k = 0; k < count; ++k) {  // hexagon
      const double th = 2.0 * std::numbers::pi * k / count;
      SmallVec w(2);
      w << std::cos(th), std::sin(th);
      atoms.push_back(w);
    }
  } else {
    const double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {  // Fibonacci points
      const double z = 1.0 - 2.0 * (k + 0.5) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      SmallVec w(3);
      w << r * std::cos(ga * k), r * std::sin(ga * k), z;
      atoms.push_back(w);
    }
  }
  return atoms;
}

// Solve for weights on the frame: the moment system is underdetermined by
// one, pick the solution maximizing the smallest weight (concave 1-D search).
std::optional<std::vector<double>> frame_solve(const std::vector<SmallVec>& atoms,
                                               const SmallVec& v,
                                               const SmallMat& u, int n,
                                               double floor_weight) {
  const int rows = hull_dimension(n) + 1;
  const int m = static_cast<int>(atoms.size());
  Eigen::MatrixXd M(rows, m);
  for (int j = 0; j < m; ++j) M.col(j) = atom_moment(atoms[j], n);
  Eigen::VectorXd t = target_moment(v, u, n);

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
  if (cod.rank() < rows) return std::nullopt;
  Eigen::VectorXd l0 = cod.solve(t);
  if ((M * l0 - t).norm() > 1e-11 * std::max(1.0, t.norm())) return std::nullopt;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  lu.setThreshold(1e-10);
  Eigen::MatrixXd ker = lu.kernel();
  if (ker.cols() >= 1 && ker.col(0).norm() > 1e-12) {
    Eigen::VectorXd k = ker.col(0).normalized();
    auto minw = [&](double s) { return (l0 + s * k).minCoeff(); };
    double lo = -2.0, hi = 2.0;
    for (int it = 0; it < 120; ++it) {
      const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      if (minw(m1) < minw(m2)) lo = m1; else hi = m2;
    }
    l0 += 0.5 * (lo + hi) * k;
  }
  if (l0.minCoeff() < floor_weight) return std::nullopt;
  std::vector<double> lambda(l0.data(), l0.data() + m);
  return lambda;
}

}  // namespace

// Pivot reduction from an over-complete convex combination, dropping atoms
// along null-space directions until at most N+2 remain.
KDecomposition caratheodory_reduce_pivots(const SphereQuadrature& q,
                                          const SmallVec& v, const SmallMat& u,
                                          double tol, const Certificate& cert) {
  const int n = q.n;
  std::vector<double> lambda;
  std::vector<SmallVec> atoms;
  for (std::size_t i = 0; i < q.points.size(); ++i) {
    lambda.push_back(q.weights[i] * cert.phi(static_cast<Eigen::Index>(i)));
    atoms.push_back(q.points[i]);
  }

  const int rows = hull_dimension(n) + 1;
  auto moment = [&](const SmallVec& w) { return atom_moment(w, n); };

  const int max_atoms = hull_dimension(n) + 2;
  while (static_cast<int>(atoms.size()) > rows) {  // rows = N+1
    const int m = static_cast<int>(atoms.size());
    Eigen::MatrixXd M(rows, m);
    for (int j = 0; j < m; ++j) M.col(j) = moment(atoms[j]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    lu.setThreshold(1e-10);
    Eigen::MatrixXd ker = lu.kernel();
    if (ker.cols() == 0 || ker.col(0).norm() < 1e-12) {
      // Degenerate pivot: accept N+2 atoms, else give up.
      if (m <= max_atoms) break;
      throw std::runtime_error("caratheodory_decompose: reduction stalled");
    }
    Eigen::VectorXd mu = ker.col(0);
    // Move along +mu until some coefficient vanishes; flip if needed.
    double tpos = std::numeric_limits<double>::max();
    double tneg = std::numeric_limits<double>::max();
    for (int j = 0; j < m; ++j) {
      if (mu(j) < -1e-14) tpos = std::min(tpos, lambda[j] / (-mu(j)));
      if (mu(j) > 1e-14) tneg = std::min(tneg, lambda[j] / mu(j));
    }
    const double t = (tpos <= tneg) ? tpos : -tneg;
    if (!std::isfinite(tpos) && !std::isfinite(tneg))
      throw std::runtime_error("caratheodory_decompose: null direction unusable");
    std::vector<double> nl;
    std::vector<SmallVec> na;
    for (int j = 0; j < m; ++j) {
      const double lj = lambda[j] + t * mu(j);
      if (lj > 1e-13) {
        nl.push_back(lj);
        na.push_back(atoms[j]);
      }
    }
    if (static_cast<int>(na.size()) >= m) break;  // no progress
    lambda.swap(nl);
    atoms.swap(na);
  }

  if (static_cast<int>(atoms.size()) > max_atoms)
    throw std::runtime_error("caratheodory_decompose: too many atoms");

  // Renormalize and verify reproduction.
  double s = 0;
  for (double l : lambda) s += l;
  for (double& l : lambda) l /= s;
  SmallVec rv = SmallVec::Zero(n);
  SmallMat ru = SmallMat::Zero(n, n);
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    rv += lambda[j] * atoms[j];
    ru += lambda[j] * (atoms[j] * atoms[j].transpose() - SmallMat::Identity(n, n) / n);
  }
  if ((rv - v).norm() + (ru - u).norm() > tol)
    throw std::runtime_error("caratheodory_decompose: reproduction outside tol");

  KDecomposition d;
  d.lambda = std::move(lambda);
  d.atoms = std::move(atoms);
  d.target_v = v;
  d.target_u = u;
  return d;
}

KDecomposition caratheodory_decompose(const SphereQuadrature& q,
                                      const SmallVec& v, const SmallMat& u,
                                      double tol) {
  const int n = q.n;
  StateTriple z(v, u, 0.0);
  Certificate cert = certificate_margin(q, z);
  if (cert.margin <= 0)
    throw std::runtime_error("caratheodory_decompose: no interior certificate");

  // Prefer the fixed spread frame: balanced weights keep the oscillation
  // directions mild, which the perturbation step depends on. Fall back to
  // pivot reduction of the certificate density when the frame solve has no
  // positive weights.
  auto lf = frame_solve(frame_atoms(n), v, u, n, 1e-6);
  if (lf.has_value()) {
    KDecomposition d;
    d.atoms = frame_atoms(n);
    d.lambda = *lf;
    d.target_v = v;
    d.target_u = u;
    // verify reproduction
    SmallVec rv = SmallVec::Zero(n);
    SmallMat ru = SmallMat::Zero(n, n);
    double s = 0;
    for (std::size_t j = 0; j < d.atoms.size(); ++j) {
      s += d.lambda[j];
      rv += d.lambda[j] * d.atoms[j];
      ru += d.lambda[j] * (d.atoms[j] * d.atoms[j].transpose() -
                           SmallMat::Identity(n, n) / n);
    }
    if (std::abs(s - 1.0) < tol && (rv - v).norm() + (ru - u).norm() < tol)
      return d;
  }
  return caratheodory_reduce_pivots(q, v, u, tol, cert);
}

SegmentDirection segment_direction(const SphereQuadrature& q, const StateTriple& z) {
  KDecomposition d = caratheodory_decompose(q, z.v, z.u, 1e-8);
  const int n = q.n;

  // Order so the heaviest atom is first.
  std::size_t i1 = 0;
  for (std::size_t i = 1; i < d.lambda.size(); ++i)
    if (d.lambda[i] > d.lambda[i1]) i1 = i;

  std::size_t jbest = i1;
  double best = -1.0;
  for (std::size_t j = 0; j < d.lambda.size(); ++j) {
    if (j == i1) continue;
    const double val = d.lambda[j] * (d.atoms[j] - d.atoms[i1]).norm();
    if (val > best) {
      best = val;
      jbest = j;
    }
  }
  if (jbest == i1)
    throw std::runtime_error("segment_direction: decomposition has a single atom");

  const SmallVec& v1 = d.atoms[i1];
  const SmallVec& vj = d.atoms[jbest];
  SegmentDirection s;
  s.vbar = 0.5 * d.lambda[jbest] * (vj - v1);
  s.ubar = 0.5 * d.lambda[jbest] *
           (vj * vj.transpose() - v1 * v1.transpose());
  // (vbar, ubar, 0) is a scaled difference of two bordered K matrices,
  // hence in the wave cone; guard numerically anyway.
  StateTriple dir(s.vbar, s.ubar, 0.0);
  if (s.vbar.norm() > 0 && !in_wave_cone(dir, 1e-8))
    throw std::runtime_error("segment_direction: direction left the wave cone");
  return s;
}

double lambda_check_difference(const SmallVec& a, const SmallVec& b) {
  const int n = static_cast<int>(a.size());
  if (std::abs(a.norm() - 1.0) > 1e-10 || std::abs(b.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("lambda_check_difference: unit vectors required");
  SmallMat D = SmallMat::Zero(n + 1, n + 1);
  D.topLeftCorner(n, n) = a * a.transpose() - b * b.transpose();
  D.col(n).head(n) = a - b;
  D.row(n).head(n) = (a - b).transpose();
  return std::abs(D.determinant());
}

}  // namespace wildeuler
