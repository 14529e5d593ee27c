#include "wildeuler/profiles.hpp"

#include <cmath>

namespace wildeuler {

ScalarMode ScalarMode::trig(int dim, double amp, const SmallVec& k, double phase) {
  ScalarMode m;
  m.kind = Kind::Trig;
  m.dim = dim;
  m.amp = amp;
  m.wavevec = k;
  m.phase = phase;
  return m;
}

ScalarMode ScalarMode::monomial(int dim, double amp, const std::array<int, 4>& e) {
  ScalarMode m;
  m.kind = Kind::Monomial;
  m.dim = dim;
  m.amp = amp;
  m.expo = e;
  return m;
}

namespace {

double mono_partial(const ScalarMode& m, const SmallVec& y,
                    const std::array<int, 4>& d) {
  // derivative of amp * prod y^e with per-axis orders d
  double c = m.amp;
  double val = 1.0;
  for (int ax = 0; ax < m.dim; ++ax) {
    int e = m.expo[static_cast<std::size_t>(ax)];
    const int k = d[static_cast<std::size_t>(ax)];
    if (k > e) return 0.0;
    for (int j = 0; j < k; ++j) c *= static_cast<double>(e - j);
    e -= k;
    for (int j = 0; j < e; ++j) val *= y(ax);
  }
  return c * val;
}

}  // namespace

double ScalarMode::value(const SmallVec& y) const {
  if (kind == Kind::Trig) return amp * std::sin(wavevec.dot(y) + phase);
  return mono_partial(*this, y, {0, 0, 0, 0});
}

SmallVec ScalarMode::gradient(const SmallVec& y) const {
  SmallVec g(dim);
  if (kind == Kind::Trig) {
    const double c = amp * std::cos(wavevec.dot(y) + phase);
    for (int i = 0; i < dim; ++i) g(i) = c * wavevec(i);
    return g;
  }
  for (int i = 0; i < dim; ++i) {
    std::array<int, 4> d{};
    d[static_cast<std::size_t>(i)] = 1;
    g(i) = mono_partial(*this, y, d);
  }
  return g;
}

SmallMat ScalarMode::hessian(const SmallVec& y) const {
  SmallMat h(dim, dim);
  if (kind == Kind::Trig) {
    const double s = -amp * std::sin(wavevec.dot(y) + phase);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) h(i, j) = s * wavevec(i) * wavevec(j);
    return h;
  }
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      std::array<int, 4> d{};
      d[static_cast<std::size_t>(i)] += 1;
      d[static_cast<std::size_t>(j)] += 1;
      h(i, j) = h(j, i) = mono_partial(*this, y, d);
    }
  return h;
}

double ScalarMode::third(const SmallVec& y, int a, int b, int c) const {
  if (kind == Kind::Trig) {
    const double s = -amp * std::cos(wavevec.dot(y) + phase);
    return s * wavevec(a) * wavevec(b) * wavevec(c);
  }
  std::array<int, 4> d{};
  d[static_cast<std::size_t>(a)] += 1;
  d[static_cast<std::size_t>(b)] += 1;
  d[static_cast<std::size_t>(c)] += 1;
  return mono_partial(*this, y, d);
}

namespace {

// Smooth unit transition T: [0,1] -> [0,1] built from exp(-c/t),
// with first and second derivatives.
void transition(double t, double c, double& T, double& dT, double& ddT) {
  if (t <= 1e-9) {
    T = dT = ddT = 0.0;
    return;
  }
  if (t >= 1.0 - 1e-9) {
    T = 1.0;
    dT = ddT = 0.0;
    return;
  }
  const double a = std::exp(-c / t);
  const double b = std::exp(-c / (1.0 - t));
  const double t2 = t * t, s = 1.0 - t, s2 = s * s;
  const double da = a * c / t2;
  const double db = -b * c / s2;
  const double dda = a * c * (c - 2.0 * t) / (t2 * t2);
  const double ddb = b * c * (c - 2.0 * s) / (s2 * s2);
  const double den = a + b;
  T = a / den;
  dT = (da * b - a * db) / (den * den);
  ddT = ((dda * b - a * ddb) * den - 2.0 * (da * b - a * db) * (da + db)) /
        (den * den * den);
}

}  // namespace

void CutoffProfile::radial(double s, double& r, double& dr, double& ddr) const {
  const double si = inner * inner, so = outer * outer;
  if (s <= si) {
    r = 1.0;
    dr = ddr = 0.0;
    return;
  }
  if (s >= so) {
    r = dr = ddr = 0.0;
    return;
  }
  const double w = so - si;
  double T, dT, ddT;
  transition((so - s) / w, sharpness, T, dT, ddT);
  r = T;
  dr = -dT / w;
  ddr = ddT / (w * w);
}

double CutoffProfile::value(const SmallVec& y) const {
  double r, dr, ddr;
  radial(y.squaredNorm(), r, dr, ddr);
  return r;
}

SmallVec CutoffProfile::gradient(const SmallVec& y) const {
  double r, dr, ddr;
  radial(y.squaredNorm(), r, dr, ddr);
  return 2.0 * dr * y;
}

SmallMat CutoffProfile::hessian(const SmallVec& y) const {
  const int d = static_cast<int>(y.size());
  double r, dr, ddr;
  radial(y.squaredNorm(), r, dr, ddr);
  return 2.0 * dr * SmallMat::Identity(d, d) +
         4.0 * ddr * (y * y.transpose());
}

}  // namespace wildeuler
