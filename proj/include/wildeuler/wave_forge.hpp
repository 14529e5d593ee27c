#ifndef WILDEULER_WAVE_FORGE_HPP
#define WILDEULER_WAVE_FORGE_HPP

#include <optional>
#include <vector>

#include "wildeuler/profiles.hpp"
#include "wildeuler/state_algebra.hpp"

namespace wildeuler {

/// Rank-4 coefficient tensor over R^{n+1}, upper pair (k,l), lower pair (i,j).
struct Tensor4 {
  int d = 0;
  std::vector<double> c;

  explicit Tensor4(int dim) : d(dim), c(static_cast<std::size_t>(dim * dim * dim * dim), 0.0) {}
  double& at(int k, int l, int i, int j) {
    return c[static_cast<std::size_t>(((k * d + l) * d + i) * d + j)];
  }
  double at(int k, int l, int i, int j) const {
    return c[static_cast<std::size_t>(((k * d + l) * d + i) * d + j)];
  }
};

/// Skew-symmetric potential: E^{kl}_{ij}(y) = sum_m C_m(k,l,i,j) g_m(y) with
/// closed-form profiles. Skew in (k,l) and in (i,j); entries with n+1 in both
/// index pairs vanish, so L(E) lands in M.
struct SkewPotential {
  int n = 0;  // spatial dimension; tensors live on R^{n+1}
  struct Mode {
    Tensor4 coeff;
    ScalarMode g;
  };
  std::vector<Mode> modes;

  double entry(int k, int l, int i, int j, const SmallVec& y) const;
  /// verify the two tensor invariants on the coefficients (throws)
  void check_invariants() const;
};

/// Canonical potential of a wave state with Ubar e_1 = 0:
/// E^{j1}_{i1} = Ubar_ij sin(N y_1)/N^2 and sign-symmetric companions.
SkewPotential build_E_canonical(const SmallMat& Ubar, double freq);

/// The operator L: U_ij = 1/2 sum_kl d^2_kl (P^{il}_{kj} + P^{jl}_{ki}) with
/// P = phi E (or P = E when no cutoff). Symmetric, M-valued, divergence-free.
/// Evaluation contracts the precomputed coefficient sums against the Hessian
/// of phi*g per mode, so everything stays closed-form.
class PotentialField {
 public:
  PotentialField() = default;
  PotentialField(const SkewPotential& e, std::optional<CutoffProfile> cutoff);
  SmallMat eval(const SmallVec& y) const;
  int dim() const { return d_; }

 private:
  int d_ = 0;
  std::vector<Tensor4> bsum_;        // B(i,j,k,l) = C(i,l,k,j) + C(j,l,k,i)
  std::vector<ScalarMode> g_;
  std::optional<CutoffProfile> cutoff_;
};

PotentialField apply_L(const SkewPotential& e);
PotentialField apply_L(const SkewPotential& e, const CutoffProfile& cutoff);

/// n=2 shortcut: the explicit 3x3 potential built from first derivatives of
/// a divergence-free w: R^3 -> R^3 (components given as closed-form modes).
class N2PotentialField {
 public:
  explicit N2PotentialField(std::array<std::vector<ScalarMode>, 3> w);
  SmallMat eval(const SmallVec& y) const;

 private:
  std::array<std::vector<ScalarMode>, 3> w_;
};

N2PotentialField n2_potential(const std::array<std::vector<ScalarMode>, 3>& w);

/// One localized plane wave: evaluation
///   U(y) = (A^{-1})^t V(A^t (y - center)/scale) A^{-1},
/// V = L(phi E_canonical(Vbar, N)); exactly zero outside the support
/// ellipsoid center + scale * A^{-t}(B_outer).
struct WaveTerm {
  int n = 0;
  SmallMat Vbar;   // canonical wave state, Vbar e_1 = 0
  double freq = 0; // N
  SmallMat A;      // Galilean factor; identity for canonical waves
  SmallVec center;
  double scale = 1.0;
  CutoffProfile cutoff;
  int generation = 0;

  // derived (finalize())
  SmallMat At, Ainv, AinvT;
  double bound_radius = 0;  // scale * sigma_max(A^{-t})
  double det_A = 1.0;
  PotentialField field;

  void finalize();
  bool in_support(const SmallVec& y) const;
  SmallMat eval(const SmallVec& y) const;
  /// shortest oscillation wavelength in physical coordinates
  double min_wavelength() const;
};

/// Pointwise sum of wave terms.
struct WaveSum {
  std::vector<WaveTerm> terms;

  SmallMat eval(int n, const SmallVec& y) const;
  StateTriple eval_state(int n, const SmallVec& y) const;
};

struct CanonicalWaveParams {
  double freq0 = 64.0;
  double freq_cap = 65536.0;
  int axis_samples_per_period = 8;
  int cross_samples = 15;  // per transverse axis
};

struct WaveMetrics {
  double freq = 0;            // chosen N
  double deviation = 0;       // measured sup |U - phi Ubar sin(N y1)|_F (x2 safety inside)
  double mass = 0;            // integral of |U e_{n+1}| over the support
  double alpha_raw = 0;       // mass / |Ubar e_{n+1}|   (canonical) or mass/|vbar|
  double alpha = 0;           // alpha_raw / vol(B_1)    (paper-normalized)
  double coverage = 0;        // packing volume fraction (localized waves)
  double conj_norm = 1.0;     // ||T|| of X -> (A^{-1})^t X A^{-1}
};

/// Step 1 of the construction: canonical localized wave for Ubar with
/// Ubar e_1 = 0, Ubar e_{n+1} != 0. N is doubled from freq0 until twice the
/// sampled sup of |U - phi Utilde| drops below eps. Throws when freq_cap is
/// hit (the message carries the projected N).
std::pair<WaveTerm, WaveMetrics> canonical_wave(const SmallMat& Ubar, double eps,
                                                const CanonicalWaveParams& p = {});

/// Conjugate a wave term by A in the Galilean group; evaluation becomes
/// (A^{-1})^t wt(A^t y) A^{-1}.
WaveTerm conjugate_wave(const SmallMat& A, const WaveTerm& wt);

struct PackingParams {
  double r0 = 0.45;
  double shrink = 0.45;   // next level fits the interstitial holes
  double r_min = 0.015;
  double target_coverage = 0.60;
  int max_pieces = 60000;
  int mc_samples = 120000;  // per-level pocket-filling candidates
};

struct Packing {
  // centers in the pre-image coordinates z = A^t y and common-per-level radii
  std::vector<std::pair<SmallVec, double>> pieces;
  double coverage = 0;
};

/// Disjoint family A^{-t}(B_{r_k}(z_k)) inside B_1 with total volume at least
/// half of |B_1| (more when the target is reachable). Multi-level D-lattice
/// packing, deterministic. Throws if even 1/2 cannot be reached at r_min.
Packing ellipsoid_packing(const SmallMat& A, const PackingParams& p = {});

struct LocalizedWaveParams {
  CanonicalWaveParams wave;
  PackingParams packing;
  double cone_tol = 1e-8;
  int mass_axis_samples_per_period = 8;
  int mass_cross_samples = 31;
};

/// Full localized plane wave for a wave-cone state a with nonzero velocity
/// component: reduce to canonical form by a Galilean conjugation, build the
/// cutoff wave, conjugate back, and replicate over an ellipsoid packing.
/// Support inside B_1, image within eps of the segment [-a, a].
std::pair<WaveSum, WaveMetrics> localized_wave(const StateTriple& a, double eps,
                                               const LocalizedWaveParams& p = {});

/// volume of the unit ball in R^d
double unit_ball_volume(int d);

/// operator norm of X -> (A^{-1})^t X A^{-1} on symmetric matrices
double conjugation_norm(const SmallMat& A);

}  // namespace wildeuler

#endif
