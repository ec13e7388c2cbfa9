#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "hcv/hopf.hpp"
#include "hcv/scenarios.hpp"
#include "oracles.hpp"

using namespace hcv;

namespace {

const ModelParams kT2 = preset(Preset::table2);
const TherapyEfficacies kHopfCase(0.5, 0.7, 0.81);

struct Critical {
  CharCoefficients cc;
  double omega;
  double tau;
};

Critical critical(const ModelParams& p, const TherapyEfficacies& e) {
  const auto cc = char_coefficients(p, e);
  const double w = *omega_analysis(cc).omega0;
  return {cc, w, critical_delays(cc, w, 0)[0]};
}

using CV = Eigen::Vector4cd;
using CM = Eigen::Matrix4cd;

CV to_eigen(const CVec4& v) { return CV(v[0], v[1], v[2], v[3]); }

struct Blocks {
  Eigen::Matrix4d now, lag;
};

Blocks oracle_blocks(const ModelParams& p, const TherapyEfficacies& e) {
  const auto q = oracle::rates(p, e);
  const auto J = oracle::fd_jacobians(oracle::endemic(q), q);
  Blocks b;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      b.now(i, j) = static_cast<double>(J.now[i][j]);
      b.lag(i, j) = static_cast<double>(J.lag[i][j]);
    }
  return b;
}

// Second-order Taylor tensor of the field in the 8 variables (x, x_lag).
struct Hessian {
  oracle::ld h[4][8][8];
};

Hessian oracle_hessian(const ModelParams& p, const TherapyEfficacies& e) {
  const auto q = oracle::rates(p, e);
  const auto x0 = oracle::endemic(q);
  auto f = [&](const std::array<oracle::ld, 8>& z) {
    return oracle::field({z[0], z[1], z[2], z[3]}, {z[4], z[5], z[6], z[7]}, q);
  };
  std::array<oracle::ld, 8> base{};
  for (int i = 0; i < 4; ++i) base[i] = base[i + 4] = x0[i];
  Hessian H{};
  for (int j = 0; j < 8; ++j)
    for (int k = 0; k < 8; ++k) {
      const oracle::ld hj = 1e-2L * base[j], hk = 1e-2L * base[k];
      auto zjk = base, zj = base, zk = base;
      zjk[j] += hj;
      zjk[k] += hk;
      zj[j] += hj;
      zk[k] += hk;
      const auto a = f(zjk), b = f(zj), c = f(zk), d = f(base);
      for (int i = 0; i < 4; ++i) H.h[i][j][k] = (a[i] - b[i] - c[i] + d[i]) / (hj * hk);
    }
  return H;
}

// Symmetric bilinear B with f(x0 + u) = f(x0) + J u + B(u, u).
CV oracle_b(const Hessian& H, const CV& u_now, const CV& u_lag, const CV& v_now, const CV& v_lag) {
  std::array<std::complex<double>, 8> u, v;
  for (int i = 0; i < 4; ++i) {
    u[i] = u_now[i];
    u[i + 4] = u_lag[i];
    v[i] = v_now[i];
    v[i + 4] = v_lag[i];
  }
  CV out = CV::Zero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 8; ++j)
      for (int k = 0; k < 8; ++k) out[i] += 0.5 * static_cast<double>(H.h[i][j][k]) * u[j] * v[k];
  return out;
}

double crel(cdouble a, cdouble b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace

TEST_CASE("linearization matches finite-difference Jacobians") {
  const auto lin = linearize_endemic(kT2, kHopfCase);
  const auto ob = oracle_blocks(kT2, kHopfCase);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double sc = ob.now.row(i).cwiseAbs().sum() + ob.lag.row(i).cwiseAbs().sum();
      CHECK(std::abs(lin.now[i][j] - ob.now(i, j)) < 1e-10 * sc);
      CHECK(std::abs(lin.delayed[i][j] - ob.lag(i, j)) < 1e-10 * sc);
    }
}

TEST_CASE("quadratic form matches the Taylor oracle") {
  const auto H = oracle_hessian(kT2, kHopfCase);
  const CVec4 a{cdouble(1.0, 2.0), cdouble(-3.0, 0.5), cdouble(0.2, 0.1), cdouble(4.0, -1.0)};
  const CVec4 b{cdouble(0.5, -2.0), cdouble(1.0, 1.0), cdouble(-0.7, 0.0), cdouble(0.3, 0.3)};
  const CVec4 c{cdouble(2.0, 0.0), cdouble(0.0, -1.5), cdouble(1.2, 0.4), cdouble(0.0, 0.0)};
  const CVec4 d{cdouble(-1.0, 0.3), cdouble(0.6, 0.2), cdouble(0.1, -0.9), cdouble(2.0, 1.0)};
  const CVec4 got = quadratic_form(kT2, kHopfCase, a, b, c, d);
  const CV want = oracle_b(H, to_eigen(a), to_eigen(b), to_eigen(c), to_eigen(d));
  for (int i = 0; i < 4; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-6 * want.norm());
}

TEST_CASE("eigenvectors and normalization") {
  const auto cr = critical(kT2, kHopfCase);
  const auto ed = eigen_data(kT2, kHopfCase, cr.omega, cr.tau);
  CHECK(std::abs(ed.bilinear - 1.0) < 1e-10);
  CHECK(ed.eigen_residual < 1e-9);
  CHECK(ed.adjoint_residual < 1e-9);

  const auto ob = oracle_blocks(kT2, kHopfCase);
  const cdouble iw(0.0, cr.omega);
  const CM m = iw * CM::Identity() - ob.now.cast<cdouble>() - std::exp(-iw * cr.tau) * ob.lag.cast<cdouble>();
  const CV q = to_eigen(ed.q());
  CHECK((m * q).norm() < 1e-9 * m.norm() * q.norm());
  const CV qs = to_eigen(ed.q_star()).conjugate();
  CHECK((qs.transpose() * m).norm() < 1e-9 * m.norm() * qs.norm());

  const double nf = kHopfCase.noninfectious_fraction();
  CHECK(crel(ed.c1 / ed.b, cdouble(nf / (1.0 - nf), 0.0)) < 1e-12);
}

TEST_CASE("quadratic normal-form coefficients match the Taylor oracle") {
  const auto cr = critical(kT2, kHopfCase);
  const auto ed = eigen_data(kT2, kHopfCase, cr.omega, cr.tau);
  const auto cm = g_coefficients(ed, kT2, kHopfCase, cr.omega, cr.tau);
  const auto H = oracle_hessian(kT2, kHopfCase);

  const cdouble lag = std::exp(cdouble(0.0, -cr.omega * cr.tau));
  const CV q = to_eigen(ed.q());
  const CV qb = q.conjugate();
  const CV ql = q * lag, qbl = qb * std::conj(lag);
  const CV qs = to_eigen(ed.q_star()).conjugate();
  const double tau = cr.tau;

  const cdouble g20 = 2.0 * tau * (qs.transpose() * oracle_b(H, q, ql, q, ql))(0);
  const cdouble g11 = 2.0 * tau * (qs.transpose() * oracle_b(H, q, ql, qb, qbl))(0);
  const cdouble g02 = 2.0 * tau * (qs.transpose() * oracle_b(H, qb, qbl, qb, qbl))(0);
  CHECK(crel(cm.g20, g20) < 1e-6);
  CHECK(crel(cm.g11, g11) < 1e-6);
  CHECK(crel(cm.g02, g02) < 1e-6);
}

TEST_CASE("center-manifold constant vectors") {
  const auto cr = critical(kT2, kHopfCase);
  const auto ed = eigen_data(kT2, kHopfCase, cr.omega, cr.tau);
  const auto cm = g_coefficients(ed, kT2, kHopfCase, cr.omega, cr.tau);
  CHECK(cm.e1_residual < 1e-10);
  CHECK(cm.e2_residual < 1e-10);
  CHECK(std::isfinite(cm.e1_condition));
  CHECK(std::isfinite(cm.e2_condition));

  const auto ob = oracle_blocks(kT2, kHopfCase);
  const auto H = oracle_hessian(kT2, kHopfCase);
  const cdouble lag = std::exp(cdouble(0.0, -cr.omega * cr.tau));
  const CV q = to_eigen(ed.q());
  const CV ql = q * lag;
  const CV qb = q.conjugate(), qbl = ql.conjugate();

  const cdouble i2w(0.0, 2.0 * cr.omega);
  const CM m1 = i2w * CM::Identity() - ob.now.cast<cdouble>() -
                std::exp(-i2w * cr.tau) * ob.lag.cast<cdouble>();
  const CV e1 = m1.fullPivLu().solve(2.0 * oracle_b(H, q, ql, q, ql));
  const Eigen::Matrix4d m2 = -(ob.now + ob.lag);
  const CV e2 = m2.cast<cdouble>().fullPivLu().solve(2.0 * oracle_b(H, q, ql, qb, qbl));
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(cm.e1_vec[i] - e1[i]) < 1e-6 * e1.norm());
    CHECK(std::abs(cm.e2_vec[i] - e2[i].real()) < 1e-6 * e2.norm());
    CHECK(std::abs(e2[i].imag()) < 1e-9 * e2.norm());
  }
}

TEST_CASE("constant vectors are insensitive to small omega perturbations") {
  const auto cr = critical(kT2, kHopfCase);
  const auto base = g_coefficients(eigen_data(kT2, kHopfCase, cr.omega, cr.tau), kT2, kHopfCase, cr.omega, cr.tau);
  const double w = cr.omega * (1.0 + 1e-9);
  const auto pert = g_coefficients(eigen_data(kT2, kHopfCase, w, cr.tau), kT2, kHopfCase, w, cr.tau);
  double n = 0.0, d = 0.0;
  for (int i = 0; i < 4; ++i) {
    n += std::norm(pert.e1_vec[i] - base.e1_vec[i]);
    d += std::norm(base.e1_vec[i]);
  }
  CHECK(std::sqrt(n / d) < 1e-4);
}

TEST_CASE("lambda prime against root tracking") {
  const auto cr = critical(kT2, kHopfCase);
  const cdouble lp = lambda_prime(cr.cc, cr.omega, cr.tau);
  CHECK(lp.real() > 0.0);
  CHECK(transversality(cr.cc, cr.omega).sign == CrossingSign::positive);

  const oracle::Rates q = oracle::rates(kT2, kHopfCase);
  const auto J = oracle::fd_jacobians(oracle::endemic(q), q);
  const oracle::ld h = 1e-3L * cr.tau;
  const auto up = oracle::track_root(J, {0.0L, cr.omega}, cr.tau + h);
  const auto dn = oracle::track_root(J, {0.0L, cr.omega}, cr.tau - h);
  const double fd = static_cast<double>((up.real() - dn.real()) / (2.0L * h));
  CHECK(std::abs(fd - lp.real()) < 0.05 * std::abs(lp.real()));
}

TEST_CASE("summary identities") {
  const auto cr = critical(kT2, kHopfCase);
  const auto an = analyze_hopf(kT2, kHopfCase, cr.omega, cr.tau);
  const auto& s = an.summary;
  CHECK(s.beta2 == 2.0 * s.c11_0.real());
  CHECK(s.mu2 == -s.c11_0.real() / s.lambda_prime.real());
  const auto sgn = [](double x) { return (x > 0) - (x < 0); };
  CHECK(sgn(s.mu2) * sgn(s.lambda_prime.real()) == -sgn(s.c11_0.real()));
  CHECK(s.beta2 < 0.0);
  CHECK(s.mu2 > 0.0);
  CHECK(s.direction == HopfDirection::forward);
  CHECK(s.cycle == CycleStability::stable);

  CenterManifoldCoefficients cm = an.manifold;
  cm.g21 = 0.0;
  const auto z = hopf_summary(cm, s.lambda_prime, cr.omega, cr.tau);
  const cdouble expect = cdouble(0.0, 1.0) / (2.0 * cr.omega * cr.tau) *
                         (cm.g20 * cm.g11 - 2.0 * std::norm(cm.g11) - std::norm(cm.g02) / 3.0);
  CHECK(crel(z.c11_0, expect) < 1e-14);
}

TEST_CASE("off-critical input shows up in the residuals") {
  const auto cr = critical(kT2, kHopfCase);
  CHECK_THROWS_AS(eigen_data(kT2, kHopfCase, -cr.omega, cr.tau), InvalidInput);
  const auto ed = eigen_data(kT2, kHopfCase, 3.0 * cr.omega, cr.tau);
  CHECK(ed.eigen_residual > 1e-6);
}
