#include <gtest/gtest.h>

#include <random>

#include "vvlab/background_flow.hpp"

using namespace vvlab;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Mat diag(std::initializer_list<double> xs) { return vec(xs).asDiagonal(); }

BackgroundFlow bumped(double amplitude, Perturbation kind = Perturbation::sine_bump) {
  InitialVelocity u = InitialVelocity::identity(1);
  u.perturbation = kind;
  u.amplitude = amplitude;
  return BackgroundFlow(u);
}

}  // namespace

TEST(BackgroundFlow, LinearBurgers) {
  BackgroundFlow f(InitialVelocity::identity(1));
  for (double t : {0.0, 0.3, 2.0, 10.0})
    for (double x : {-3.0, 0.0, 1.5}) EXPECT_NEAR(f.eval(t, vec({x}))[0], x / (1 + t), 1e-15);
}

TEST(BackgroundFlow, DiagonalAffine3D) {
  BackgroundFlow f(InitialVelocity::affine(diag({1, 2, 1}), Vec::Zero(3)));
  const Vec x = vec({0.7, -1.3, 2.1});
  for (double t : {0.0, 0.5, 1.0, 4.0}) {
    const Vec u = f.eval(t, x);
    EXPECT_NEAR(u[0], x[0] / (1 + t), 1e-14);
    EXPECT_NEAR(u[1], 2 * x[1] / (1 + 2 * t), 1e-14);
    EXPECT_NEAR(u[2], x[2] / (1 + t), 1e-14);
  }
  const Mat G = f.grad(1.0, x);
  EXPECT_NEAR(G(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(G(1, 1), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(G(2, 2), 0.5, 1e-15);
  EXPECT_NEAR(G(0, 1), 0.0, 1e-15);
}

TEST(BackgroundFlow, GradAtTimeZeroIsInitialMatrix) {
  Mat A(2, 2);
  A << 1.0, 0.3, -0.2, 2.0;
  BackgroundFlow f(InitialVelocity::affine(A, vec({0.5, -1.0})));
  EXPECT_EQ(f.grad(0.0, vec({0.2, 0.1})), A);
}

TEST(BackgroundFlow, IdentityHasVanishingK) {
  BackgroundFlow f(InitialVelocity::identity(3));
  const auto pts = sample_box(3, 5, 3.0);
  const auto ts = sample_times(10.0, 21);
  EXPECT_EQ(k_matrix_bound(f, ts, pts), 0.0);
  EXPECT_TRUE(f.grad(2.0, vec({1, 2, 3})).isApprox(Mat::Identity(3, 3) / 3.0, 1e-15));
}

TEST(BackgroundFlow, DiagonalKBound) {
  BackgroundFlow f(InitialVelocity::affine(diag({1, 2, 1}), Vec::Zero(3)));
  const auto pts = sample_box(3, 3, 2.0);
  const std::vector<double> t1{1.0};
  EXPECT_NEAR(k_matrix_bound(f, t1, pts), 4.0 * (2.0 / 3.0 - 0.5), 1e-14);
  // (1+t)^2 (2/(1+2t) - 1/(1+t)) = (1+t)/(1+2t), largest at the smallest sampled time
  const std::vector<double> ts{0.5, 1.0, 3.0};
  EXPECT_NEAR(k_matrix_bound(f, ts, pts), 1.5 / 2.0, 1e-14);
}

TEST(BackgroundFlow, PerturbedKBoundSaturates) {
  const auto f = bumped(0.1);
  const auto pts = sample_box(1, 81, 5.0);
  const double b10 = k_matrix_bound(f, sample_times(10.0, 101), pts);
  const double b20 = k_matrix_bound(f, sample_times(20.0, 201), pts);
  EXPECT_GT(b10, 0.0);
  EXPECT_TRUE(std::isfinite(b10));
  EXPECT_LT(std::abs(b20 - b10) / b10, 0.05);
}

TEST(BackgroundFlow, TransportResidualOfPerturbedData) {
  const auto f = bumped(0.1);
  const double t = 1.0, x = 0.5, h = 1e-4;
  auto u = [&](double tt, double xx) { return f.eval(tt, vec({xx}))[0]; };
  const double ut = (u(t + h, x) - u(t - h, x)) / (2 * h);
  const double ux = (u(t, x + h) - u(t, x - h)) / (2 * h);
  EXPECT_LT(std::abs(ut + u(t, x) * ux), 1e-6);
}

TEST(BackgroundFlow, ConstantAlongCharacteristics) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> T(0.0, 10.0), X(-3.0, 3.0);
  InitialVelocity u0 = InitialVelocity::affine(diag({1.0, 1.5}), vec({0.2, -0.1}));
  u0.perturbation = Perturbation::gaussian;
  u0.amplitude = 0.1;
  BackgroundFlow f(u0);
  for (int i = 0; i < 200; ++i) {
    const double t = T(rng);
    const Vec x0 = vec({X(rng), X(rng)});
    const Vec x = x0 + t * u0.value(x0);
    EXPECT_LT((f.eval(t, x) - u0.value(x0)).norm(), 1e-10 * std::max(1.0, x.norm()));
  }
}

TEST(BackgroundFlow, AffineSemigroup) {
  Mat A(2, 2);
  A << 1.0, 0.4, 0.0, 2.0;
  const Vec b = vec({0.3, -0.7});
  BackgroundFlow f(InitialVelocity::affine(A, b));
  const double t1 = 0.8;
  // u_hat(t1, x) = G1 (x - t1 b) + b is again affine
  const Mat G1 = f.grad(t1, Vec::Zero(2));
  BackgroundFlow g(InitialVelocity::affine(G1, b - t1 * G1 * b));
  for (double s : {0.0, 0.5, 3.0})
    for (const Vec& x : sample_box(2, 4, 2.0))
      EXPECT_LT((g.eval(s, x) - f.eval(t1 + s, x)).norm(), 1e-10);
}

TEST(BackgroundFlow, GradientMatchesFiniteDifferencesAtSecondOrder) {
  InitialVelocity u0 = InitialVelocity::affine(diag({1.0, 1.2}), Vec::Zero(2));
  u0.perturbation = Perturbation::sine_bump;
  u0.amplitude = 0.15;
  BackgroundFlow f(u0);
  const double t = 1.3;
  const Vec x = vec({0.4, -0.6});
  auto err = [&](double h) {
    Mat fd(2, 2);
    for (int j = 0; j < 2; ++j) {
      Vec e = Vec::Zero(2);
      e[j] = h;
      fd.col(j) = (f.eval(t, x + e) - f.eval(t, x - e)) / (2 * h);
    }
    return (fd - f.grad(t, x)).norm();
  };
  const double e1 = err(2e-2), e2 = err(1e-2);
  EXPECT_LT(e1, 1e-3);
  EXPECT_NEAR(e1 / e2, 4.0, 0.3);
}

TEST(BackgroundFlow, HessianMatchesFiniteDifferencesOfGrad) {
  InitialVelocity u0 = InitialVelocity::affine(diag({1.0, 1.2}), vec({0.1, 0.0}));
  u0.perturbation = Perturbation::sine_bump;
  u0.amplitude = 0.15;
  BackgroundFlow f(u0);
  const double t = 0.9, h = 1e-5;
  const Vec x = vec({-0.3, 0.8});
  const Hessian H = f.hessian(t, x);
  for (int k = 0; k < 2; ++k) {
    Vec e = Vec::Zero(2);
    e[k] = h;
    const Mat dG = (f.grad(t, x + e) - f.grad(t, x - e)) / (2 * h);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) EXPECT_NEAR(H[i](j, k), dG(i, j), 1e-8);
  }
}

TEST(BackgroundFlow, VelocityBoundedByGradientTimesRadius) {
  const auto f = bumped(0.2);
  const auto pts = sample_box(1, 1201, 6.0);
  for (double t : {0.0, 1.0, 5.0}) {
    double gmax = 0.0;
    for (const Vec& x : pts) gmax = std::max(gmax, std::abs(f.grad(t, x)(0, 0)));
    for (const Vec& x : pts) EXPECT_LE(std::abs(f.eval(t, x)[0]), 1.01 * gmax * std::abs(x[0]) + 1e-14);
  }
}

TEST(BackgroundFlow, SpectralGap) {
  const auto pts = sample_box(2, 5, 2.0);
  EXPECT_DOUBLE_EQ(spectral_gap(InitialVelocity::identity(2), pts), 1.0);
  Mat R(2, 2);
  R << 0.0, -1.0, 1.0, 0.0;  // eigenvalues +-i lie at distance 1 from the negative axis
  EXPECT_NEAR(spectral_gap(InitialVelocity::affine(R, Vec::Zero(2)), pts), 1.0, 1e-12);
  EXPECT_NEAR(spectral_gap(InitialVelocity::affine(-Mat::Identity(2, 2), Vec::Zero(2)), pts), 0.0, 1e-15);
}

TEST(BackgroundFlow, CompressiveDataIsRejected) {
  BackgroundFlow f(InitialVelocity::affine(-Mat::Identity(1, 1), Vec::Zero(1)));
  EXPECT_THROW(f.eval(1.0, vec({0.5})), NewtonError);
  EXPECT_THROW(f.eval(-1.0, vec({0.5})), PreconditionError);
}
