#include "wildeuler/wave_forge.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <numbers>
#include <sstream>
#include <random>
#include <unordered_map>

namespace wildeuler {

double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

double SkewPotential::entry(int k, int l, int i, int j, const SmallVec& y) const {
  double s = 0;
  for (const Mode& m : modes) s += m.coeff.at(k, l, i, j) * m.g.value(y);
  return s;
}

void SkewPotential::check_invariants() const {
  const int d = n + 1;
  for (const Mode& m : modes) {
    double scale = 0;
    for (double c : m.coeff.c) scale = std::max(scale, std::abs(c));
    const double tol = 1e-12 * std::max(1.0, scale);
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            if (std::abs(m.coeff.at(k, l, i, j) + m.coeff.at(l, k, i, j)) > tol ||
                std::abs(m.coeff.at(k, l, i, j) + m.coeff.at(k, l, j, i)) > tol)
              throw std::runtime_error("SkewPotential: skew symmetry violated");
            const bool upper_last = (k == d - 1 || l == d - 1);
            const bool lower_last = (i == d - 1 || j == d - 1);
            if (upper_last && lower_last && std::abs(m.coeff.at(k, l, i, j)) > tol)
              throw std::runtime_error("SkewPotential: (n+1)-block condition violated");
          }
  }
}

SkewPotential build_E_canonical(const SmallMat& Ubar, double freq) {
  if (!is_matrix_m(Ubar)) throw std::invalid_argument("build_E_canonical: Ubar not in M");
  if (freq <= 0) throw std::invalid_argument("build_E_canonical: freq > 0 required");
  const int d = static_cast<int>(Ubar.rows());
  const double scale = std::max(1.0, Ubar.cwiseAbs().maxCoeff());
  if (Ubar.col(0).norm() > 1e-9 * scale)
    throw std::invalid_argument("build_E_canonical: Ubar e_1 != 0");

  SkewPotential e;
  e.n = d - 1;
  Tensor4 c(d);
  for (int i = 1; i < d; ++i)
    for (int j = 1; j < d; ++j) {
      const double v = Ubar(i, j);
      if (v == 0.0) continue;
      c.at(j, 0, i, 0) += v;
      c.at(0, j, i, 0) -= v;
      c.at(j, 0, 0, i) -= v;
      c.at(0, j, 0, i) += v;
    }
  SmallVec k = SmallVec::Zero(d);
  k(0) = freq;
  e.modes.push_back({c, ScalarMode::trig(d, 1.0 / (freq * freq), k, 0.0)});
  return e;
}

PotentialField::PotentialField(const SkewPotential& e,
                               std::optional<CutoffProfile> cutoff)
    : d_(e.n + 1), cutoff_(cutoff) {
  for (const auto& m : e.modes) {
    Tensor4 b(d_);  // b.at(i,j,k,l) = C(i,l,k,j) + C(j,l,k,i)
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j)
        for (int k = 0; k < d_; ++k)
          for (int l = 0; l < d_; ++l)
            b.at(i, j, k, l) = m.coeff.at(i, l, k, j) + m.coeff.at(j, l, k, i);
    bsum_.push_back(b);
    g_.push_back(m.g);
  }
}

SmallMat PotentialField::eval(const SmallVec& y) const {
  SmallMat U = SmallMat::Zero(d_, d_);
  double phiv = 1.0;
  SmallVec phig;
  SmallMat phih;
  if (cutoff_) {
    const double s = y.squaredNorm();
    if (s >= cutoff_->outer * cutoff_->outer) return U;  // exact zero outside
    phiv = cutoff_->value(y);
    phig = cutoff_->gradient(y);
    phih = cutoff_->hessian(y);
  }
  for (std::size_t m = 0; m < g_.size(); ++m) {
    SmallMat H;
    if (cutoff_) {
      const double gv = g_[m].value(y);
      const SmallVec gg = g_[m].gradient(y);
      H = phiv * g_[m].hessian(y) + phig * gg.transpose() +
          gg * phig.transpose() + gv * phih;
    } else {
      H = g_[m].hessian(y);
    }
    const Tensor4& b = bsum_[m];
    for (int i = 0; i < d_; ++i)
      for (int j = i; j < d_; ++j) {
        double s = 0;
        for (int k = 0; k < d_; ++k)
          for (int l = 0; l < d_; ++l) s += H(k, l) * b.at(i, j, k, l);
        U(i, j) += 0.5 * s;
        if (i != j) U(j, i) += 0.5 * s;
      }
  }
  return U;
}

PotentialField apply_L(const SkewPotential& e) { return PotentialField(e, std::nullopt); }

PotentialField apply_L(const SkewPotential& e, const CutoffProfile& cutoff) {
  return PotentialField(e, cutoff);
}

N2PotentialField::N2PotentialField(std::array<std::vector<ScalarMode>, 3> w)
    : w_(std::move(w)) {
  // reject w that is not divergence-free (sampled; derivatives are analytic)
  for (int s = 0; s < 64; ++s) {
    SmallVec y(3);
    y << std::fmod(0.37 * s, 2.0) - 1.0, std::fmod(0.59 * s, 2.0) - 1.0,
        std::fmod(0.83 * s, 2.0) - 1.0;
    double div = 0, scale = 1e-30;
    for (int i = 0; i < 3; ++i)
      for (const ScalarMode& m : w_[static_cast<std::size_t>(i)]) {
        const SmallVec g = m.gradient(y);
        div += g(i);
        scale = std::max(scale, g.cwiseAbs().maxCoeff());
      }
    if (std::abs(div) > 1e-9 * std::max(1.0, scale))
      throw std::invalid_argument("n2_potential: w is not divergence-free");
  }
}

SmallMat N2PotentialField::eval(const SmallVec& y) const {
  SmallVec d0 = SmallVec::Zero(3), d1 = SmallVec::Zero(3);  // d0 = d/dy1, d1 = d/dy2
  for (int i = 0; i < 3; ++i)
    for (const ScalarMode& m : w_[static_cast<std::size_t>(i)]) {
      const SmallVec g = m.gradient(y);
      d0(i) += g(0);
      d1(i) += g(1);
    }
  SmallMat U(3, 3);
  U << d1(0), 0.5 * (d1(1) - d0(0)), 0.5 * d1(2),
       0.5 * (d1(1) - d0(0)), -d0(1), -0.5 * d0(2),
       0.5 * d1(2), -0.5 * d0(2), 0.0;
  return U;
}

N2PotentialField n2_potential(const std::array<std::vector<ScalarMode>, 3>& w) {
  return N2PotentialField(w);
}

void WaveTerm::finalize() {
  At = A.transpose();
  Ainv = A.inverse();
  AinvT = Ainv.transpose();
  det_A = A.determinant();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(AinvT)};
  bound_radius = scale * svd.singularValues()(0) * cutoff.outer;
  field = PotentialField(build_E_canonical(Vbar, freq), cutoff);
}

bool WaveTerm::in_support(const SmallVec& y) const {
  const SmallVec w = At * (y - center) / scale;
  return w.squaredNorm() < cutoff.outer * cutoff.outer;
}

SmallMat WaveTerm::eval(const SmallVec& y) const {
  const SmallVec w = At * (y - center) / scale;
  if (w.squaredNorm() >= cutoff.outer * cutoff.outer)
    return SmallMat::Zero(n + 1, n + 1);
  return AinvT * field.eval(w) * Ainv;
}

double WaveTerm::min_wavelength() const {
  return 2.0 * std::numbers::pi * scale / (freq * A.col(0).norm());
}

SmallMat WaveSum::eval(int n, const SmallVec& y) const {
  SmallMat U = SmallMat::Zero(n + 1, n + 1);
  for (const WaveTerm& t : terms) {
    if ((y - t.center).squaredNorm() > t.bound_radius * t.bound_radius) continue;
    U += t.eval(y);
  }
  return U;
}

StateTriple WaveSum::eval_state(int n, const SmallVec& y) const {
  return from_matrix(eval(n, y));
}

namespace {

// Deviation |L(phi E) - phi Ubar sin(N y1)|_F sampled over the transition
// shell (the difference vanishes identically on the inner ball and outside).
double sample_deviation(const PotentialField& field, const CutoffProfile& cutoff,
                        const SmallMat& Ubar, double freq,
                        const CanonicalWaveParams& p) {
  const int d = static_cast<int>(Ubar.rows());
  const int m1 = std::min(40000, std::max(64, static_cast<int>(
                     p.axis_samples_per_period * freq / std::numbers::pi) + 1));
  const int mc = p.cross_samples;
  double dev = 0;
  SmallVec y(d);
  std::vector<int> idx(static_cast<std::size_t>(d - 1), 0);
  const double inner2 = cutoff.inner * cutoff.inner;
  const double outer2 = cutoff.outer * cutoff.outer;
  while (true) {
    double cross2 = 0;
    for (int a = 1; a < d; ++a) {
      y(a) = -1.0 + 2.0 * (idx[static_cast<std::size_t>(a - 1)] + 0.5) / mc;
      cross2 += y(a) * y(a);
    }
    if (cross2 < outer2) {
      for (int i1 = 0; i1 < m1; ++i1) {
        y(0) = -1.0 + 2.0 * (i1 + 0.5) / m1;
        const double r2 = cross2 + y(0) * y(0);
        if (r2 <= inner2 * 0.999 || r2 >= outer2) continue;
        const SmallMat diff =
            field.eval(y) - cutoff.value(y) * std::sin(freq * y(0)) * Ubar;
        dev = std::max(dev, diff.norm());
      }
    }
    int a = 0;
    for (; a < d - 1; ++a) {
      if (++idx[static_cast<std::size_t>(a)] < mc) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
    if (a == d - 1) break;
  }
  return dev;
}

// integral over B_1 of |M(w) V(w) e_{n+1}| on a midpoint grid, dense along
// the oscillation axis. M = identity for the canonical mass.
double mass_integral(const PotentialField& field, const SmallMat& Mfac,
                     double freq, int per_period, int cross) {
  const int d = field.dim();
  const int m1 = std::min(60000, std::max(96, static_cast<int>(
                     per_period * freq / std::numbers::pi) + 1));
  const double cell1 = 2.0 / m1;
  const double cellc = 2.0 / cross;
  double total = 0;
  SmallVec y(d);
  std::vector<int> idx(static_cast<std::size_t>(d - 1), 0);
  while (true) {
    double cross2 = 0;
    for (int a = 1; a < d; ++a) {
      y(a) = -1.0 + 2.0 * (idx[static_cast<std::size_t>(a - 1)] + 0.5) / cross;
      cross2 += y(a) * y(a);
    }
    if (cross2 < 1.0) {
      for (int i1 = 0; i1 < m1; ++i1) {
        y(0) = -1.0 + 2.0 * (i1 + 0.5) / m1;
        if (cross2 + y(0) * y(0) >= 1.0) continue;
        total += (Mfac * (field.eval(y).col(d - 1))).norm();
      }
    }
    int a = 0;
    for (; a < d - 1; ++a) {
      if (++idx[static_cast<std::size_t>(a)] < cross) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
    if (a == d - 1) break;
  }
  double cellvol = cell1;
  for (int a = 1; a < d; ++a) cellvol *= cellc;
  return total * cellvol;
}

}  // namespace

std::pair<WaveTerm, WaveMetrics> canonical_wave(const SmallMat& Ubar, double eps,
                                                const CanonicalWaveParams& p) {
  if (eps <= 0) throw std::invalid_argument("canonical_wave: eps > 0 required");
  const int d = static_cast<int>(Ubar.rows());
  const double unorm = Ubar.norm();
  if (Ubar.col(d - 1).norm() <= 1e-14 * std::max(1.0, unorm))
    throw std::invalid_argument("canonical_wave: Ubar e_{n+1} = 0");

  CutoffProfile cutoff;
  double freq = p.freq0;
  double dev = 0;
  PotentialField field;
  bool ok = false;
  while (freq <= p.freq_cap) {
    field = PotentialField(build_E_canonical(Ubar, freq), cutoff);
    dev = sample_deviation(field, cutoff, Ubar, freq, p);
    if (2.0 * dev < eps) {
      ok = true;
      break;
    }
    freq *= 2.0;
  }
  if (!ok) {
    std::ostringstream msg;
    msg << "canonical_wave: frequency cap " << p.freq_cap
        << " too small for eps=" << eps << "; projected N ~ "
        << (p.freq_cap * (2.0 * dev / eps));
    throw std::runtime_error(msg.str());
  }

  WaveTerm t;
  t.n = d - 1;
  t.Vbar = Ubar;
  t.freq = freq;
  t.A = SmallMat::Identity(d, d);
  t.center = SmallVec::Zero(d);
  t.scale = 1.0;
  t.cutoff = cutoff;
  t.finalize();

  WaveMetrics met;
  met.freq = freq;
  met.deviation = 2.0 * dev;
  met.mass = mass_integral(t.field, SmallMat::Identity(d, d), freq,
                           p.axis_samples_per_period, 2 * p.cross_samples + 1);
  met.alpha_raw = met.mass / Ubar.col(d - 1).norm();
  met.alpha = met.alpha_raw / unit_ball_volume(d);
  return {t, met};
}

WaveTerm conjugate_wave(const SmallMat& A, const WaveTerm& wt) {
  if (!is_galilean(A, 1e-10))
    throw std::invalid_argument("conjugate_wave: A not in the Galilean group");
  WaveTerm t = wt;
  t.A = A * wt.A;
  t.center = A.transpose().inverse() * wt.center;
  t.finalize();
  return t;
}

namespace {

// one spatial hash per packing level; same-level lattice points are
// separated by construction, so candidates only query coarser levels
struct LevelHash {
  double cell = 1.0;
  double radius = 0.0;
  std::unordered_map<long long, std::vector<SmallVec>> cells;

  long long key_of(const SmallVec& z) const {
    long long h = 1469598103934665603LL;
    for (int i = 0; i < z.size(); ++i) {
      const long long c = static_cast<long long>(std::floor(z(i) / cell)) + (1 << 20);
      h = h * 1099511628211LL + c;
    }
    return h;
  }

  void insert(const SmallVec& z) { cells[key_of(z)].push_back(z); }

  bool collides(const SmallVec& z, double r) const {
    const int d = static_cast<int>(z.size());
    const int reach = static_cast<int>(std::ceil((r + radius) / cell)) + 1;
    std::vector<int> idx(static_cast<std::size_t>(d), -reach);
    while (true) {
      SmallVec probe(d);
      for (int a = 0; a < d; ++a)
        probe(a) = z(a) + cell * idx[static_cast<std::size_t>(a)];
      auto it = cells.find(key_of(probe));
      if (it != cells.end())
        for (const SmallVec& zc : it->second)
          if ((zc - z).norm() < r + radius + 1e-12) return true;
      int a = 0;
      for (; a < d; ++a) {
        if (++idx[static_cast<std::size_t>(a)] <= reach) break;
        idx[static_cast<std::size_t>(a)] = -reach;
      }
      if (a == d) break;
    }
    return false;
  }
};

// exact max of |c_hat + diag(sigma) w| over |w| <= r (trust-region style
// secular solve; the hard case spills the leftover budget onto the top
// singular direction)
double ball_image_max(const Eigen::VectorXd& c_hat, const Eigen::VectorXd& sigma,
                      double r) {
  const int d = static_cast<int>(c_hat.size());
  const double smax = sigma.maxCoeff();
  const double smax2 = smax * smax;
  auto wnorm2 = [&](double lam) {
    double s = 0;
    for (int i = 0; i < d; ++i) {
      const double wi = sigma(i) * c_hat(i) / (lam - sigma(i) * sigma(i));
      s += wi * wi;
    }
    return s;
  };
  double lo = smax2 * (1.0 + 1e-12) + 1e-300;
  if (wnorm2(lo) <= r * r) {
    // hard case: the regular solution never exhausts the radius
    double q2 = 0, used2 = 0;
    for (int i = 0; i < d; ++i) {
      const double wi = sigma(i) * c_hat(i) / (lo - sigma(i) * sigma(i));
      used2 += wi * wi;
      const double vi = c_hat(i) + sigma(i) * wi;
      q2 += vi * vi;
    }
    return std::sqrt(q2 + std::max(0.0, r * r - used2) * smax2);
  }
  double hi = smax2 + smax * c_hat.norm() / r + 1e-12;
  while (wnorm2(hi) > r * r) hi = smax2 + 2.0 * (hi - smax2);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (wnorm2(mid) > r * r) lo = mid; else hi = mid;
    if (hi - lo < 1e-14 * hi) break;
  }
  const double lam = hi;  // w slightly inside the ball: safe side
  double q2 = 0;
  for (int i = 0; i < d; ++i) {
    const double wi = sigma(i) * c_hat(i) / (lam - sigma(i) * sigma(i));
    const double vi = c_hat(i) + sigma(i) * wi;
    q2 += vi * vi;
  }
  return std::sqrt(q2);
}

}  // namespace

Packing ellipsoid_packing(const SmallMat& A, const PackingParams& p) {
  const int d = static_cast<int>(A.rows());
  if (std::abs(A.determinant()) < 1e-12)
    throw std::invalid_argument("ellipsoid_packing: A singular");
  const SmallMat AinvT = A.inverse().transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_it{Eigen::MatrixXd(AinvT)};
  const double sig_invT = svd_it.singularValues()(0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_at{Eigen::MatrixXd(A.transpose())};
  const double sig_at = svd_at.singularValues()(0);
  const double det_abs = std::abs(A.determinant());

  Packing pk;

  // One centered ellipsoid first: A^{-t} B_r is inside B_1 exactly when
  // r <= 1/sigma_max(A^{-t}).
  const double r_full = 1.0 / sig_invT;
  const double cov_full = std::pow(r_full, d) / det_abs;
  if (cov_full >= p.target_coverage) {
    pk.pieces.emplace_back(SmallVec::Zero(d), r_full);
    pk.coverage = cov_full;
    return pk;
  }

  // Multi-level D-lattice packing of balls B_r(z) inside the ellipsoid
  // A^t(B_1); mapping back by A^{-t} gives the disjoint ellipsoid family.
  // The exact-fit centered ball is always the best single piece, keep it.
  Eigen::JacobiSVD<Eigen::MatrixXd> msvd{Eigen::MatrixXd(AinvT), Eigen::ComputeFullU};
  const Eigen::VectorXd sigma = msvd.singularValues();
  const Eigen::MatrixXd proj = msvd.matrixU().transpose() * Eigen::MatrixXd(AinvT);

  std::vector<LevelHash> levels;
  if (r_full >= p.r_min) {
    pk.pieces.emplace_back(SmallVec::Zero(d), r_full);
    levels.push_back({2.0 * r_full, r_full, {}});
    levels.back().insert(SmallVec::Zero(d));
    pk.coverage = cov_full;
  }

  (void)sig_at;
  for (double r = p.r0; r >= p.r_min && pk.coverage < p.target_coverage;
       r *= p.shrink) {
    const double coverage_before = pk.coverage;
    const double s_lat = 2.0 * r * (1.0 + 1e-9) / std::sqrt(2.0);
    LevelHash level{2.0 * r, r, {}};
    // axis-aligned bounding box of A^t(B_1): half-width |A col a| per axis
    std::vector<int> range(static_cast<std::size_t>(d));
    double cand = 1;
    for (int a = 0; a < d; ++a) {
      range[static_cast<std::size_t>(a)] =
          static_cast<int>(std::ceil(A.col(a).norm() / s_lat)) + 1;
      cand *= 2.0 * range[static_cast<std::size_t>(a)] + 1;
    }
    // skip absurdly large enumerations; finer levels cannot help much
    if (cand > 3e7) break;

    // a few deterministic lattice offsets per level reach holes that the
    // aligned lattice misses
    std::vector<SmallVec> offsets;
    offsets.push_back(SmallVec::Zero(d));
    {
      SmallVec half = SmallVec::Constant(d, 0.5 * s_lat);
      offsets.push_back(half);
      SmallVec ax = SmallVec::Zero(d);
      ax(0) = 0.5 * s_lat;
      offsets.push_back(ax);
      SmallVec ax2 = SmallVec::Zero(d);
      ax2(d - 1) = 0.5 * s_lat;
      offsets.push_back(ax2);
    }

    for (const SmallVec& off : offsets) {
      std::vector<int> x(static_cast<std::size_t>(d));
      for (int a = 0; a < d; ++a)
        x[static_cast<std::size_t>(a)] = -range[static_cast<std::size_t>(a)];
      while (true) {
        int parity = 0;
        for (int a = 0; a < d; ++a) parity += x[static_cast<std::size_t>(a)];
        if ((parity & 1) == 0) {
          SmallVec z(d);
          for (int a = 0; a < d; ++a)
            z(a) = s_lat * x[static_cast<std::size_t>(a)] + off(a);
          // exact containment of A^{-t} B_r(z) in B_1 (secular solve in the
          // singular basis), then disjointness against everything accepted
          const Eigen::VectorXd c_hat = proj * Eigen::VectorXd(z);
          if (ball_image_max(c_hat, sigma, r) <= 1.0 - 1e-9) {
            bool clash = level.collides(z, r);
            if (!clash)
              for (const LevelHash& lh : levels)
                if (lh.collides(z, r)) {
                  clash = true;
                  break;
                }
            if (!clash) {
              pk.pieces.emplace_back(z, r);
              level.insert(z);
              pk.coverage += std::pow(r, d) / det_abs;
              if (static_cast<int>(pk.pieces.size()) >= p.max_pieces) break;
            }
          }
        }
        int a = 0;
        for (; a < d; ++a) {
          if (++x[static_cast<std::size_t>(a)] <= range[static_cast<std::size_t>(a)]) break;
          x[static_cast<std::size_t>(a)] = -range[static_cast<std::size_t>(a)];
        }
        if (a == d) break;
      }
      if (static_cast<int>(pk.pieces.size()) >= p.max_pieces) break;
    }

    // pocket pass: seeded uniform candidates catch gaps that no aligned
    // lattice position reaches (Vitali-style greedy)
    if (pk.coverage < p.target_coverage &&
        static_cast<int>(pk.pieces.size()) < p.max_pieces) {
      std::mt19937_64 rng(0xC0FFEEull ^ static_cast<unsigned long long>(
                                            1000.0 * r));
      std::uniform_real_distribution<double> u01(-1.0, 1.0);
      for (int s = 0; s < p.mc_samples; ++s) {
        SmallVec z(d);
        for (int a = 0; a < d; ++a) z(a) = u01(rng) * A.col(a).norm();
        const Eigen::VectorXd c_hat = proj * Eigen::VectorXd(z);
        if (ball_image_max(c_hat, sigma, r) > 1.0 - 1e-9) continue;
        bool clash = level.collides(z, r);
        if (!clash)
          for (const LevelHash& lh : levels)
            if (lh.collides(z, r)) {
              clash = true;
              break;
            }
        if (!clash) {
          pk.pieces.emplace_back(z, r);
          level.insert(z);
          pk.coverage += std::pow(r, d) / det_abs;
          if (pk.coverage >= p.target_coverage ||
              static_cast<int>(pk.pieces.size()) >= p.max_pieces)
            break;
        }
      }
    }
    if (!level.cells.empty()) levels.push_back(std::move(level));
    if (static_cast<int>(pk.pieces.size()) >= p.max_pieces) break;
    // finer levels cannot help once a whole level adds almost nothing
    if (pk.coverage >= 0.5 && pk.coverage - coverage_before < 0.003) break;
  }

  if (pk.coverage < 0.5) {
    std::ostringstream msg;
    msg << "ellipsoid_packing: coverage " << pk.coverage
        << " below 1/2 at r_min=" << p.r_min << " (cond(A) too large)";
    throw std::runtime_error(msg.str());
  }
  return pk;
}

std::pair<WaveSum, WaveMetrics> localized_wave(const StateTriple& a, double eps,
                                               const LocalizedWaveParams& p) {
  const int n = a.n();
  const int d = n + 1;
  if (!in_wave_cone(a, p.cone_tol))
    throw std::invalid_argument("localized_wave: state not in the wave cone");
  if (a.v.norm() == 0.0)
    throw std::invalid_argument("localized_wave: velocity component vanishes");

  const SmallMat Ubar = to_matrix(a);

  // kernel direction with {f, e_{n+1}} independent
  Eigen::JacobiSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(Ubar), Eigen::ComputeFullV};
  SmallVec f;
  bool found = false;
  for (int k = d - 1; k >= 0 && !found; --k) {
    SmallVec cand = svd.matrixV().col(k);
    double tail = cand(d - 1);
    SmallVec planar = cand;
    planar(d - 1) = 0;
    if (planar.norm() > 1e-6) {
      // singular value must actually be small relative to the top one
      if (svd.singularValues()(k) <=
          1e-6 * std::max(svd.singularValues()(0), 1e-30) ||
          k == d - 1) {
        f = cand;
        found = true;
      }
    }
    (void)tail;
  }
  if (!found)
    throw std::runtime_error("localized_wave: no admissible kernel direction");
  // deterministic sign
  for (int i = 0; i < d; ++i) {
    if (std::abs(f(i)) > 1e-12) {
      if (f(i) < 0) f = -f;
      break;
    }
  }

  const SmallMat A = galilean_matrix(f);
  const SmallMat Ainv = A.inverse();
  const SmallMat AinvT = Ainv.transpose();

  SmallMat Vraw = A.transpose() * Ubar * A;
  SmallMat Vbar = Vraw;
  Vbar.row(0).setZero();
  Vbar.col(0).setZero();
  const double tnorm = conjugation_norm(A);
  const double err0 = (AinvT * (Vraw - Vbar) * Ainv).norm();
  if (err0 > 0.1 * eps)
    throw std::runtime_error(
        "localized_wave: kernel residual too large for requested eps "
        "(state only marginally in the cone)");

  const double eps_c = 0.98 * (eps - err0) / tnorm;
  auto [canon, met_c] = canonical_wave(Vbar, eps_c, p.wave);

  Packing pk = ellipsoid_packing(A, p.packing);

  WaveSum sum;
  double scale_sum = 0;
  for (const auto& [z, r] : pk.pieces) {
    WaveTerm t = canon;
    t.A = A;
    t.center = AinvT * z;
    t.scale = r;
    t.finalize();
    sum.terms.push_back(std::move(t));
    scale_sum += std::pow(r, d);
  }

  // mass in physical coordinates: per piece r^d/|det A| times the canonical
  // integral of |A^{-t} V(w) e_{n+1}|
  const double ia = mass_integral(canon.field, SmallMat(AinvT), canon.freq,
                                  p.mass_axis_samples_per_period,
                                  p.mass_cross_samples);
  WaveMetrics met;
  met.freq = canon.freq;
  met.deviation = met_c.deviation * tnorm + err0;
  met.mass = ia * scale_sum / std::abs(A.determinant());
  met.alpha_raw = met.mass / a.v.norm();
  met.alpha = met.alpha_raw / unit_ball_volume(d);
  met.coverage = pk.coverage;
  met.conj_norm = tnorm;
  return {sum, met};
}

double conjugation_norm(const SmallMat& A) {
  const int d = static_cast<int>(A.rows());
  const SmallMat Ainv = A.inverse();
  const SmallMat AinvT = Ainv.transpose();
  // power iteration on T* T over symmetric matrices
  SmallMat X(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = std::sin(1.0 + i + 2.0 * j);
  X = 0.5 * (X + X.transpose());
  X /= X.norm();
  double lam = 1.0;
  for (int it = 0; it < 60; ++it) {
    SmallMat Y = AinvT * X * Ainv;   // T
    SmallMat Z = Ainv * Y * AinvT;   // T*
    lam = Z.norm();
    X = Z / lam;
  }
  return std::sqrt(lam);
}

}  // namespace wildeuler
