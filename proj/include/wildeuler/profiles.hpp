#ifndef WILDEULER_PROFILES_HPP
#define WILDEULER_PROFILES_HPP

#include <array>

#include "wildeuler/state_algebra.hpp"

namespace wildeuler {

/// Closed-form scalar building block on R^{n+1} with derivatives to order 3:
/// either amp * sin(k.y + phase) or amp * prod_i y_i^{e_i}.
struct ScalarMode {
  enum class Kind { Trig, Monomial };
  Kind kind = Kind::Trig;
  int dim = 0;
  double amp = 1.0;
  SmallVec wavevec;            // Trig
  double phase = 0.0;          // Trig
  std::array<int, 4> expo{};   // Monomial

  static ScalarMode trig(int dim, double amp, const SmallVec& k, double phase);
  static ScalarMode monomial(int dim, double amp, const std::array<int, 4>& e);

  double value(const SmallVec& y) const;
  SmallVec gradient(const SmallVec& y) const;
  SmallMat hessian(const SmallVec& y) const;
  /// third derivative contracted against nothing: d3(a,b,c) entry
  double third(const SmallVec& y, int a, int b, int c) const;
};

/// Smooth radial bump phi(y) = rho(|y|^2): identically 1 on B_inner,
/// identically 0 outside B_outer, exp-type transition in between.
/// Value, gradient and Hessian are closed-form. Smaller sharpness gives a
/// flatter transition with tamer high derivatives (the transition is
/// t -> 1/(1 + exp(c (1/t - 1/(1-t)))), c = sharpness).
struct CutoffProfile {
  double inner = 0.5;
  double outer = 1.0;
  double sharpness = 0.35;

  double value(const SmallVec& y) const;
  SmallVec gradient(const SmallVec& y) const;
  SmallMat hessian(const SmallVec& y) const;

  /// radial profile in s = |y|^2 with first and second derivatives
  void radial(double s, double& r, double& dr, double& ddr) const;
};

}  // namespace wildeuler

#endif
