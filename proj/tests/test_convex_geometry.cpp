#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "test_util.hpp"
#include "wildeuler/convex_geometry.hpp"

using namespace wildeuler;
namespace tu = wildeuler::testutil;

namespace {

// Independent oracle: brute-force minimization over dense sphere samples.
double dist_to_K_bruteforce(const SmallVec& v, const SmallMat& u, int samples) {
  const int n = static_cast<int>(v.size());
  double best = std::numeric_limits<double>::max();
  auto eval = [&](const SmallVec& w) {
    const SmallMat ku = w * w.transpose() - SmallMat::Identity(n, n) / n;
    return std::sqrt((v - w).squaredNorm() + (u - ku).squaredNorm());
  };
  if (n == 2) {
    for (int k = 0; k < samples; ++k) {
      const double th = 2.0 * std::numbers::pi * k / samples;
      SmallVec w(2);
      w << std::cos(th), std::sin(th);
      best = std::min(best, eval(w));
    }
  } else {
    const double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < samples; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / samples;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      SmallVec w(3);
      w << r * std::cos(ga * k), r * std::sin(ga * k), z;
      best = std::min(best, eval(w));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("quadrature moments match the analytic sphere values") {
  SphereQuadrature q2 = SphereQuadrature::standard(2);
  CHECK(q2.beta1 == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(q2.beta2 == doctest::Approx(1.0 / 8.0).epsilon(1e-13));
  CHECK(q2.beta3 == doctest::Approx(1.0 / 8.0).epsilon(1e-13));
  double wsum = 0;
  for (std::size_t i = 0; i < q2.points.size(); ++i) {
    CHECK(std::abs(q2.points[i].norm() - 1.0) < 1e-14);
    wsum += q2.weights[i];
  }
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));

  SphereQuadrature q3 = SphereQuadrature::standard(3);
  CHECK(q3.beta1 == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(q3.beta2 == doctest::Approx(1.0 / 15.0).epsilon(1e-13));
  CHECK(q3.beta3 == doctest::Approx(4.0 / 45.0).epsilon(1e-13));
}

TEST_CASE("k_point") {
  SmallVec e1(2);
  e1 << 1, 0;
  SmallMat u = k_point(e1);
  CHECK(u(0, 0) == doctest::Approx(0.5));
  CHECK(u(1, 1) == doctest::Approx(-0.5));
  CHECK(std::abs(u.trace()) < 1e-15);

  SmallVec e3(3);
  e3 << 0, 0, 1;
  SmallMat u3 = k_point(e3);
  CHECK(u3(0, 0) == doctest::Approx(-1.0 / 3.0));
  CHECK(u3(2, 2) == doctest::Approx(2.0 / 3.0));

  SmallVec d(2);
  d << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  SmallMat ud = k_point(d);
  CHECK(ud(0, 0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(ud(0, 1) == doctest::Approx(0.5));

  SmallVec bad(2);
  bad << 1.5, 0;
  CHECK_THROWS(k_point(bad));
}

TEST_CASE("dist_to_K against the brute-force oracle") {
  SmallVec e1(2);
  e1 << 1, 0;
  CHECK(dist_to_K(e1, k_point(e1)) <= 1e-8);

  // origin of R^2 x S^2_0: the distance is sqrt(3/2) for every sphere point
  const double d0 = dist_to_K(SmallVec::Zero(2), SmallMat::Zero(2, 2));
  CHECK(d0 == doctest::Approx(std::sqrt(1.5)).epsilon(1e-10));
  CHECK(dist_to_K_bruteforce(SmallVec::Zero(2), SmallMat::Zero(2, 2), 1000000) ==
        doctest::Approx(std::sqrt(1.5)).epsilon(1e-10));

  // midpoint of two K points is strictly off K; compare to brute force
  SmallVec e2(2);
  e2 << 0, 1;
  SmallVec vm = 0.5 * (e1 + e2);
  SmallMat um = 0.5 * (k_point(e1) + k_point(e2));
  const double dm = dist_to_K(vm, um);
  CHECK(dm > 1e-3);
  CHECK(dm == doctest::Approx(dist_to_K_bruteforce(vm, um, 1000000)).epsilon(1e-6));

  auto g = tu::rng(31);
  for (int it = 0; it < 50; ++it) {
    const int n = (it % 2) ? 2 : 3;
    SmallVec v = tu::random_unit(g, n);
    CHECK(dist_to_K(v, k_point(v)) <= 1e-8);
  }

  // random targets: refined result never worse than a coarse brute force
  for (int it = 0; it < 20; ++it) {
    const int n = (it % 2) ? 2 : 3;
    SmallVec v = tu::random_vec(g, n);
    SmallMat u = tu::random_s0(g, n);
    const double fine = dist_to_K(v, u);
    const double brute = dist_to_K_bruteforce(v, u, n == 2 ? 100000 : 200000);
    CHECK(fine <= brute + 1e-9);
    CHECK(fine == doctest::Approx(brute).epsilon(1e-3));
  }
}

TEST_CASE("tmap reproduces the moment structure") {
  for (int n : {2, 3}) {
    SphereQuadrature q = SphereQuadrature::standard(n);
    const auto m = static_cast<Eigen::Index>(q.points.size());

    auto [v0, u0] = tmap(q, Eigen::VectorXd::Ones(m));
    CHECK(v0.norm() < 1e-13);
    CHECK(u0.norm() < 1e-13);

    Eigen::VectorXd d1(m), d12(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      d1(i) = q.points[static_cast<std::size_t>(i)](0);
      d12(i) = q.points[static_cast<std::size_t>(i)](0) *
               q.points[static_cast<std::size_t>(i)](1);
    }
    auto [v1, u1] = tmap(q, d1);
    CHECK((v1 - q.beta1 * SmallVec::Unit(n, 0)).norm() < 1e-13);
    CHECK(u1.norm() < 1e-13);

    auto [v2, u2] = tmap(q, d12);
    CHECK(v2.norm() < 1e-13);
    SmallMat want = SmallMat::Zero(n, n);
    want(0, 1) = want(1, 0) = q.beta2;
    CHECK((u2 - want).norm() < 1e-13);
  }

  // quadrature error of T(1) decreases (to exactness) under refinement
  double prev = 1.0;
  for (int m : {5, 8, 16}) {
    SphereQuadrature q = SphereQuadrature::circle(m);
    auto [v, u] = tmap(q, Eigen::VectorXd::Ones(m));
    const double err = v.norm() + u.norm();
    CHECK(err <= prev + 1e-12);
    prev = err;
  }
}

TEST_CASE("interior certificate") {
  SphereQuadrature q = SphereQuadrature::standard(2);

  auto c0 = interior_certificate(q, StateTriple::zero(2), 0.5);
  REQUIRE(c0.has_value());
  CHECK((c0->phi.array() - 1.0).abs().maxCoeff() < 1e-13);  // phi == 1 works

  StateTriple zq = StateTriple::zero(2);
  zq.q = 1.0;
  CHECK(!interior_certificate(q, zq, 1e-9).has_value());

  SmallVec e1(2);
  e1 << 1, 0;
  StateTriple zk(e1, k_point(e1), 0.0);
  CHECK(!interior_certificate(q, zk, 1e-9).has_value());  // extremal, not interior
}

TEST_CASE("caratheodory decomposition") {
  SphereQuadrature q = SphereQuadrature::standard(2);
  const int cap = hull_dimension(2) + 2;  // 6

  KDecomposition d = caratheodory_decompose(q, SmallVec::Zero(2),
                                            SmallMat::Zero(2, 2), 1e-9);
  CHECK(static_cast<int>(d.atoms.size()) <= cap);
  double s = 0;
  SmallVec rv = SmallVec::Zero(2);
  for (std::size_t i = 0; i < d.atoms.size(); ++i) {
    CHECK(d.lambda[i] > 0);
    s += d.lambda[i];
    rv += d.lambda[i] * d.atoms[i];
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(rv.norm() < 1e-9);

  // a certifiable point near the k_point direction keeps a dominant atom there
  SmallVec e1(2);
  e1 << 1, 0;
  KDecomposition dk =
      caratheodory_decompose(q, 0.4 * e1, SmallMat(0.4 * k_point(e1)), 1e-8);
  CHECK(static_cast<int>(dk.atoms.size()) <= cap);
  std::size_t heavy = 0;
  for (std::size_t i = 1; i < dk.lambda.size(); ++i)
    if (dk.lambda[i] > dk.lambda[heavy]) heavy = i;
  CHECK(dk.atoms[heavy].dot(e1) > 0.5);  // within 60 degrees of e1

  // beyond the certificate region the reduction must refuse
  CHECK_THROWS(caratheodory_decompose(q, 0.99 * e1, SmallMat(0.99 * k_point(e1)), 1e-8));
}

TEST_CASE("caratheodory reproduces random certified targets") {
  auto g = tu::rng(41);
  for (int n : {2, 3}) {
    SphereQuadrature q = SphereQuadrature::standard(n);
    const int cap = hull_dimension(n) + 2;
    int done = 0;
    while (done < 40) {
      StateTriple z = tu::random_state(g, n, 0.3);
      z.q = 0.0;
      if (certificate_margin(q, z).margin < 0.05) continue;
      ++done;
      KDecomposition d = caratheodory_decompose(q, z.v, z.u, 1e-8);
      CHECK(static_cast<int>(d.atoms.size()) <= cap);
      SmallVec rv = SmallVec::Zero(n);
      SmallMat ru = SmallMat::Zero(n, n);
      double s = 0;
      for (std::size_t i = 0; i < d.atoms.size(); ++i) {
        s += d.lambda[i];
        rv += d.lambda[i] * d.atoms[i];
        ru += d.lambda[i] * (d.atoms[i] * d.atoms[i].transpose() -
                             SmallMat::Identity(n, n) / n);
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
      CHECK((rv - z.v).norm() + (ru - z.u).norm() < 1e-8);
    }
  }
}

TEST_CASE("segment_direction from the origin") {
  SphereQuadrature q = SphereQuadrature::standard(2);
  SegmentDirection s = segment_direction(q, StateTriple::zero(2));
  // |vbar| >= (1 - |v|^2)/(4N) - tol with N = 4
  CHECK(s.vbar.norm() >= 1.0 / 16.0 - 1e-6);
  StateTriple dir(s.vbar, s.ubar, 0.0);
  CHECK(in_wave_cone(dir, 1e-8));
  // both endpoints certified
  CHECK(interior_certificate(q, dir, 1e-6).has_value());
  CHECK(interior_certificate(q, dir * -1.0, 1e-6).has_value());
}

TEST_CASE("segment_direction property over random certified states") {
  auto g = tu::rng(43);
  for (int n : {2, 3}) {
    SphereQuadrature q = SphereQuadrature::standard(n);
    const double N = hull_dimension(n);
    int done = 0;
    while (done < 500) {
      StateTriple z = tu::random_state(g, n, 0.35);
      z.q = 0.5 * z.q;
      Certificate c = certificate_margin(q, z);
      if (c.margin < 0.05) continue;
      ++done;
      SegmentDirection s = segment_direction(q, z);
      // lower bound of the one-step lemma (reduction may keep N+2 atoms,
      // the slack for that sits in the tolerance)
      CHECK(s.vbar.norm() >= (1.0 - z.v.squaredNorm()) / (4.0 * N) - 1e-6);
      StateTriple dir(s.vbar, s.ubar, 0.0);
      CHECK(in_wave_cone(dir, 1e-8));

      // Certificate linearity: endpoints lose at most L * |dir| of margin.
      // Wherever that leaves headroom the endpoints must certify.
      const double budget =
          c.margin - q.cert_lipschitz * std::sqrt(dir.v.squaredNorm() +
                                                  dir.u.squaredNorm());
      const double mp = certificate_margin(q, z + dir).margin;
      const double mm = certificate_margin(q, z - dir).margin;
      CHECK(mp >= budget - 1e-12);
      CHECK(mm >= budget - 1e-12);
    }
  }
}

TEST_CASE("segment_direction endpoints certify near the origin") {
  // Deep inside the certificate region the full paper direction keeps both
  // endpoints strictly certified; the engine relies on this start regime.
  auto g = tu::rng(44);
  for (int n : {2, 3}) {
    SphereQuadrature q = SphereQuadrature::standard(n);
    int done = 0;
    while (done < 100) {
      StateTriple z = tu::random_state(g, n, 0.08);
      z.q = 0.25 * z.q;
      if (certificate_margin(q, z).margin < 0.5) continue;
      ++done;
      SegmentDirection s = segment_direction(q, z);
      StateTriple dir(s.vbar, s.ubar, 0.0);
      CHECK(certificate_margin(q, z + dir).margin > 0);
      CHECK(certificate_margin(q, z - dir).margin > 0);
    }
  }
}

TEST_CASE("lambda_check_difference vanishes") {
  SmallVec e1(2), e2(2);
  e1 << 1, 0;
  e2 << 0, 1;
  CHECK(lambda_check_difference(e1, e2) < 1e-14);  // kernel e1+e2-e3
  CHECK(lambda_check_difference(e1, e1) == 0.0);

  auto g = tu::rng(47);
  for (int it = 0; it < 10000; ++it) {
    const int n = (it % 2) ? 2 : 3;
    SmallVec a = tu::random_unit(g, n);
    SmallVec b = tu::random_unit(g, n);
    CHECK(lambda_check_difference(a, b) <= 1e-10);
  }
}
