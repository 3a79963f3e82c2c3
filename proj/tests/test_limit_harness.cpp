#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "vvlab/limit_harness.hpp"

using namespace vvlab;

namespace {

SweepConfig qualitative_sweep(int nodes) {
  SweepConfig c;
  c.params.gamma = 2;
  c.params.delta = 3;
  c.params.alpha = 1;
  c.params.beta = -0.6;
  c.density.kind = DensityKind::bump;
  c.density.amplitude = 0.01;
  c.density.sigma = 3.5;
  c.density.radius = 1.5;
  c.grid = {1, nodes, 5.0, BoundaryMode::truncated};
  c.t_end = 1.0;
  c.ladder = {1e-2, 5e-3, 2.5e-3};
  return c;
}

const SweepResult& baseline() {
  static const SweepResult r = run_sweep(qualitative_sweep(256));
  return r;
}

EnvelopeValues w0() { return {2e-4, 3e-3, 5e-2}; }

}  // namespace

TEST(Envelope, IdentityAtTimeZero) {
  for (double iota : {1.1, 1.3, 1.6, 1.9}) {
    const auto e = gronwall_envelope(w0(), iota, 2.5, 0.01, 0.0);
    EXPECT_EQ(e.l2, w0().l2);
    EXPECT_EQ(e.d1, w0().d1);
    // the second-derivative bound carries an additive C eps that does not vanish at t = 0
    EXPECT_DOUBLE_EQ(e.d2, w0().d2 + 2.5 * 0.01);
    const auto z = gronwall_envelope(w0(), iota, 2.5, 0.0, 0.0);
    EXPECT_EQ(z.d2, w0().d2);
  }
}

TEST(Envelope, HomogeneousCaseVanishes) {
  for (double iota : {1.2, 1.25, 1.5, 1.75, 1.99})
    for (double t : {0.0, 0.7, 10.0}) {
      const auto e = gronwall_envelope({}, iota, 3.0, 0.0, t);
      EXPECT_EQ(e.l2, 0.0);
      EXPECT_EQ(e.d1, 0.0);
      EXPECT_EQ(e.d2, 0.0);
    }
}

TEST(Envelope, BranchContinuity) {
  const double t = 3.0, C = 1.7, eps = 0.01;
  for (double iota0 : {1.75, 1.25}) {
    const auto at = gronwall_envelope(w0(), iota0, C, eps, t);
    for (double s : {-1e-6, 1e-6}) {
      const auto near = gronwall_envelope(w0(), iota0 + s, C, eps, t);
      EXPECT_NEAR(near.l2, at.l2, 1e-4 * at.l2);
      EXPECT_NEAR(near.d1, at.d1, 1e-4 * at.d1);
      EXPECT_NEAR(near.d2, at.d2, 1e-4 * at.d2);
    }
  }
  // the normalized growth term reduces to ln(1+t) at the singular exponent
  EXPECT_NEAR(power_growth(7 - 4 * (1.75 + 1e-6), t), std::log(4.0), 1e-5);
}

TEST(Envelope, BranchFormulas) {
  const double t = 2.0, C = 0.8, eps = 0.05;
  const auto w = w0();
  const auto e = gronwall_envelope(w, 1.75, C, eps, t);
  EXPECT_NEAR(e.l2, std::pow(3.0, C) * (w.l2 + C * eps * eps * std::log(3.0)), 1e-15);
  const auto f = gronwall_envelope(w, 1.25, C, eps, t);
  EXPECT_NEAR(f.d1, std::pow(3.0, C) * (w.d1 + C * eps * eps * std::log(3.0)), 1e-15);
  const double iota = 1.8, q = 1 - 4 * iota + C;
  const auto g = gronwall_envelope(w, iota, C, eps, t);
  const double poly = (std::pow(3.0, q + 1) - 1) / (q + 1);
  EXPECT_NEAR(g.l2, std::pow(3.0, C) * (w.l2 + C * eps * eps * (std::pow(3.0, 7 - 4 * iota) - 1) / (7 - 4 * iota)), 1e-15);
  EXPECT_GE(g.d2, std::pow(3.0, C) * (w.d2 + C * w.d1 * poly + C * eps) - 1e-15);
}

TEST(Envelope, Monotonicity) {
  for (double iota : {1.05, 1.2, 1.25, 1.4, 1.5, 1.75, 1.9}) {
    for (double C : {0.1, 1.0, 4.0}) {
      EnvelopeValues prev{};
      for (double t = 0.0; t <= 20.0; t += 0.25) {
        const auto e = gronwall_envelope(w0(), iota, C, 0.02, t);
        EXPECT_GE(e.l2, prev.l2);
        EXPECT_GE(e.d1, prev.d1);
        EXPECT_GE(e.d2, prev.d2);
        prev = e;
      }
      for (double t : {0.5, 5.0}) {
        const auto a = gronwall_envelope(w0(), iota, C, 0.01, t);
        const auto b = gronwall_envelope(w0(), iota, C, 0.02, t);
        EXPECT_LE(a.l2, b.l2);
        EXPECT_LE(a.d1, b.d1);
        EXPECT_LE(a.d2, b.d2);
        auto bigger = w0();
        bigger.l2 *= 2;
        bigger.d1 *= 2;
        bigger.d2 *= 2;
        const auto c = gronwall_envelope(bigger, iota, C, 0.01, t);
        EXPECT_LE(a.l2, c.l2);
        EXPECT_LE(a.d1, c.d1);
        EXPECT_LE(a.d2, c.d2);
      }
    }
  }
}

TEST(Envelope, RejectsIotaOutsideRange) {
  EXPECT_THROW(gronwall_envelope(w0(), 1.0, 1.0, 0.1, 1.0), PreconditionError);
  EXPECT_THROW(gronwall_envelope(w0(), 2.0, 1.0, 0.1, 1.0), PreconditionError);
  EXPECT_THROW(gronwall_envelope(w0(), 1.5, 1.0, 0.1, -1.0), PreconditionError);
}

TEST(Fits, ScalingChangesInterceptOnly) {
  const std::vector<double> x{1e-2, 5e-3, 2.5e-3, 1.25e-3};
  const std::vector<double> y{3.1e-4, 1.4e-4, 7.9e-5, 3.6e-5};
  std::vector<double> z;
  for (double v : y) z.push_back(7.5 * v);
  const auto a = fit_loglog(x, y), b = fit_loglog(x, z);
  EXPECT_NEAR(a.slope, b.slope, 1e-12);
  EXPECT_NEAR(b.intercept - a.intercept, std::log(7.5), 1e-12);
}

TEST(Fits, BlownUpEntriesAreExcluded) {
  std::vector<LadderEntry> entries(4);
  const double eps[] = {1e-2, 5e-3, 2.5e-3, 1.25e-3};
  for (int i = 0; i < 4; ++i) {
    entries[i].epsilon = eps[i];
    entries[i].norms = {{0, 0, 0, 0, 0}, {1.0, eps[i] * eps[i], eps[i] * eps[i], eps[i], 0}};
  }
  entries[0].status = EntryStatus::blowup;
  const auto fits = fit_rates(entries, false);
  EXPECT_NEAR(fits[2].fit.slope, 1.0, 1e-12);  // H1
  EXPECT_NEAR(fits[3].fit.slope, 0.5, 1e-12);  // D2
  entries[1].status = EntryStatus::blowup;
  EXPECT_THROW(fit_rates(entries, false), FitError);
}

TEST(Sweep, EmptyOrShortLadderRejected) {
  auto c = qualitative_sweep(64);
  c.ladder = {};
  EXPECT_THROW(run_sweep(c), ConfigError);
  c.ladder = {1e-2, 5e-3};
  EXPECT_THROW(run_sweep(c), ConfigError);
}

TEST(Sweep, IdenticalInitialDataGivesZeroInitialDifference) {
  for (const auto& e : baseline().entries) {
    ASSERT_EQ(e.status, EntryStatus::ok);
    EXPECT_EQ(e.norms.front().t, 0.0);
    EXPECT_EQ(e.norms.front().l2, 0.0);
    EXPECT_EQ(e.norms.front().d1, 0.0);
    EXPECT_EQ(e.norms.front().d2, 0.0);
  }
}

TEST(Sweep, FirstOrderRateInH1) {
  const auto h1 = baseline().slope(NormKind::h1);
  ASSERT_TRUE(h1);
  EXPECT_GE(h1->slope, 0.8);
  EXPECT_LE(h1->slope, 1.2);
}

TEST(Sweep, NormsShrinkWithViscosity) {
  const auto& entries = baseline().entries;
  for (std::size_t k = 1; k < entries.front().norms.size(); ++k)
    for (std::size_t i = 1; i < entries.size(); ++i) {
      const auto& a = entries[i - 1].norms[k];
      const auto& b = entries[i].norms[k];
      EXPECT_LE(b.l2, 1.05 * 1.05 * a.l2);
      EXPECT_LE(b.d1, 1.05 * 1.05 * a.d1);
      EXPECT_LE(b.d2, 1.05 * 1.05 * a.d2);
    }
}

TEST(Sweep, ZeroViscosityEntryReproducesEuler) {
  auto c = qualitative_sweep(128);
  c.ladder = {1e-2, 5e-3, 2.5e-3, 0.0};
  const auto r = run_sweep(c);
  const auto& zero = r.entries.back();
  ASSERT_EQ(zero.epsilon, 0.0);
  for (const auto& n : zero.norms) {
    EXPECT_EQ(n.l2, 0.0);
    EXPECT_EQ(n.d1, 0.0);
    EXPECT_EQ(n.d2, 0.0);
  }
}

TEST(Sweep, RatesRobustUnderRefinement) {
  const auto fine = run_sweep(qualitative_sweep(512));
  for (NormKind k : {NormKind::l2, NormKind::d1, NormKind::h1, NormKind::d2})
    EXPECT_LT(std::abs(fine.slope(k)->slope - baseline().slope(k)->slope), 0.1) << to_string(k);
}

TEST(Sweep, DeterministicAcrossWorkerCounts) {
  auto c = qualitative_sweep(128);
  c.workers = 1;
  const auto a = run_sweep(c);
  c.workers = 4;
  const auto b = run_sweep(c);
  for (std::size_t i = 0; i < a.entries.size(); ++i)
    for (std::size_t k = 0; k < a.entries[i].norms.size(); ++k)
      EXPECT_EQ(std::memcmp(&a.entries[i].norms[k], &b.entries[i].norms[k], sizeof(DiffNorms)), 0);
}

TEST(Sweep, EnvelopeFitBoundsItsOwnRun) {
  SweepResult r = baseline();
  const auto checks = check_envelopes(r, 1.8);
  ASSERT_TRUE(r.envelope);
  EXPECT_EQ(r.envelope->fitted_epsilon, 2.5e-3);
  EXPECT_GT(r.envelope->C04, 0.0);
  const auto& smallest = r.entries.back();
  EXPECT_TRUE(envelope_covers(smallest, 1.8, r.envelope->C04));
  EXPECT_FALSE(envelope_covers(smallest, 1.8, 0.999 * r.envelope->C04));
  EXPECT_EQ(checks.size(), 2u);
}
