// Copyright 2026 The weakqubit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "weakqubit/correlation.hpp"
#include "weakqubit/oracles.hpp"

namespace wq = weakqubit;
using std::numbers::pi;

namespace {

wq::PhysicalConfig desk(double S0 = 10.0, double eta = 1.0) {
    wq::PhysicalConfig p;
    p.detector = {1.0, 2.0, S0, eta};
    p.qubit.omega = 1.0;
    return p;
}

wq::SignalRecord constant_record(double i0, double offset, std::size_t n, double dt) {
    wq::SignalRecord r;
    r.dt = dt;
    r.i0 = i0;
    r.samples.assign(n, i0 + offset);
    return r;
}

}  // namespace

TEST(AnalyticKI, FrozenDeskValue) {
    // Independent quadrature-grade evaluation at Omega = 1, Gamma = 0.1, deltaI = 2.
    EXPECT_NEAR(wq::analytic_kI(pi / 3, desk()), 0.51668237196053102, 1e-14);
}

TEST(AnalyticKI, ZeroLagIsSignalScaleAndEven) {
    const auto p = desk();
    EXPECT_DOUBLE_EQ(wq::analytic_kI(0.0, p), 1.0);
    for (double t : {0.3, 1.7, 8.0}) EXPECT_DOUBLE_EQ(wq::analytic_kI(t, p), wq::analytic_kI(-t, p));
}

TEST(AnalyticKI, WeakMeasurementLimitIsCosine) {
    const auto p = desk(1e9);
    for (double t : {0.5, 2.0, 5.0}) EXPECT_NEAR(wq::analytic_kI(t, p), std::cos(t), 1e-8);
}

TEST(AnalyticKI, DecaysAtHalfGamma) {
    const auto p = desk();
    // Envelope e^{-Gamma tau/2}: successive maxima one period apart shrink by e^{-pi Gamma / w}.
    const double w = *wq::derive_rates(p).omegaTilde;
    const double T = 2 * pi / w;
    const double t0 = 3 * T;
    EXPECT_NEAR(wq::analytic_kI(t0 + T, p) / wq::analytic_kI(t0, p), std::exp(-0.05 * T), 1e-12);
}

TEST(AnalyticKI, SplitsIntoSignalAndBackActionParts) {
    // K_I = (dI/2)^2 <QQ> + (dI/2) <xi Q> for tau > 0, whatever the stationary moments are.
    std::mt19937_64 g(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int k = 0; k < 200; ++k) {
        auto p = desk(2 + 20 * u(g), 0.3 + 0.7 * u(g));
        p.detector.deltaI = 0.5 + 2 * u(g);
        const double q2 = u(g), imq = u(g) - 0.5, t = 15 * u(g);
        const double h = 0.5 * p.detector.deltaI;
        EXPECT_NEAR(wq::analytic_kI(t, p), h * h * wq::analytic_qq(t, p, q2, imq) + h * wq::analytic_xiq(t, p, q2, imq),
                    1e-12);
    }
}

TEST(AnalyticKI, OverdampedIsOutsideValidity) {
    auto p = desk(0.5);  // Gamma = 2 > 2 omega
    EXPECT_THROW(wq::analytic_kI(1.0, p), wq::OutsideValidityError);
    EXPECT_THROW(wq::analytic_xiq(-1.0, p, 0.5, 0.0), wq::OutsideValidityError);
}

TEST(AnalyticXiQ, CausalAndExamples) {
    const auto p = desk();
    EXPECT_EQ(wq::analytic_xiq(-0.5, p, 0.5, 0.1), 0.0);
    // At tau = 0+ only the (1 - <Q^2>) term survives.
    EXPECT_NEAR(wq::analytic_xiq(0.0, p, 0.5, 0.1), 0.5, 1e-15);
    EXPECT_NEAR(wq::analytic_qq(0.0, p, 0.5, 0.1), 0.5, 1e-15);
}

TEST(LgCombination, Examples) {
    auto v = wq::lg_combination(1.0, 1.0, 0.5, 2.0, 0.1);
    EXPECT_DOUBLE_EQ(v.lhs, 1.5);
    EXPECT_DOUBLE_EQ(v.bound, 1.0);
    EXPECT_DOUBLE_EQ(v.margin, 0.5);
    EXPECT_TRUE(v.violated);
    EXPECT_FALSE(wq::lg_combination(1.0, 1.0, 0.5, 2.0, 0.2).violated);
    EXPECT_FALSE(wq::lg_combination(0.5, 0.5, 0.0, 2.0).violated);
    EXPECT_DOUBLE_EQ(wq::lg_combination(0.1, 0.1, 0.0, 4.0).bound, 4.0);
}

TEST(LgCombination, ClassicalCosineNeverViolates) {
    // A noiseless classical cosine of amplitude dI/2 gives K = (dI/2)^2 cos / 2.
    std::mt19937_64 g(2);
    std::uniform_real_distribution<double> u(0, 10);
    for (int k = 0; k < 5000; ++k) {
        const double a = u(g), b = u(g);
        const auto v = wq::lg_combination(0.5 * std::cos(a), 0.5 * std::cos(b), 0.5 * std::cos(a + b), 2.0);
        EXPECT_LE(v.lhs, 0.75 + 1e-12);
        EXPECT_FALSE(v.violated);
    }
}

TEST(LgEqualTau, MaximumAtPiOverThree) {
    const auto p = desk();
    EXPECT_NEAR(wq::lg_equal_tau_curve(pi / 3, p), 1.5, 1e-15);
    for (int k = 0; k <= 1000; ++k) EXPECT_LE(wq::lg_equal_tau_curve(2 * pi * k / 1000.0, p), 1.5 + 1e-15);
    EXPECT_NEAR(wq::lg_equal_tau_curve(0.0, p), 1.0, 1e-15);
}

TEST(ThreeTime, BruteForceMaximumIsOne) {
    const auto m = wq::brute_force_three_time_max(51);
    EXPECT_DOUBLE_EQ(m.value, 1.0);
    EXPECT_DOUBLE_EQ(wq::three_time_lhs(m.argmax[0], m.argmax[1], m.argmax[2]), 1.0);
    EXPECT_THROW(wq::brute_force_three_time_max(1), wq::ConfigError);
}

TEST(ThreeTime, BoundHoldsOnTheCube) {
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int k = 0; k < 100000; ++k) EXPECT_LE(wq::three_time_lhs(u(g), u(g), u(g)), 1.0);
    EXPECT_DOUBLE_EQ(wq::three_time_lhs(1, 1, 1), 1.0);
    EXPECT_DOUBLE_EQ(wq::three_time_lhs(1, -1, 1), -3.0);
}

TEST(Estimator, ConstantOffsetGivesFlatCorrelator) {
    const auto est = wq::estimate_correlator(constant_record(1.0, 0.5, 10000, 0.01), 1.0);
    ASSERT_EQ(est.kI.size(), 100u);
    EXPECT_NEAR(est.tauGrid.front(), 0.01, 1e-15);
    for (std::size_t m = 0; m < est.kI.size(); ++m) {
        EXPECT_NEAR(est.kI[m], 0.25, 1e-12);
        EXPECT_NEAR(est.kIStderr[m], 0.0, 1e-12);
    }
    EXPECT_FALSE(est.has_xiq());
}

TEST(Estimator, WhiteNoiseHasNoCorrelationAtNonzeroLag) {
    wq::SignalRecord r;
    r.dt = 0.01;
    r.i0 = 2.0;
    std::mt19937_64 g(4);
    std::normal_distribution<double> d(2.0, 3.0);
    r.samples.resize(400000);
    for (auto &x : r.samples) x = d(g);
    const auto est = wq::estimate_correlator(r, 2.0);
    int outside = 0;
    for (std::size_t m = 0; m < est.kI.size(); ++m) outside += std::abs(est.kI[m]) > 4 * 9.0 / std::sqrt(4e5);
    EXPECT_EQ(outside, 0);
    // Batch errors describe the scatter: sigma^2 / sqrt(N) per lag.
    EXPECT_NEAR(est.kIStderr[50], 9.0 / std::sqrt(4e5), 0.4 * 9.0 / std::sqrt(4e5));
}

TEST(Estimator, CosineSignalRecoversHalfCosine) {
    wq::OracleConfig c;
    c.kind = wq::OracleKind::CosinePhaseDiffusion;
    c.phaseDiffusion = 0.0;
    c.dt = 0.005;
    c.nSteps = 400000;
    wq::DetectorParams det;
    det.S0 = 1e-6;  // effectively noiseless
    const auto rec = wq::generate_oracle(c, det);
    const auto est = wq::estimate_correlator(rec, 10.0);
    for (std::size_t m = 99; m < est.kI.size(); m += 100)
        EXPECT_NEAR(est.kI[m], 0.5 * std::cos(est.tauGrid[m]), 2e-3) << est.tauGrid[m];
    ASSERT_TRUE(est.has_xiq());
}

TEST(Estimator, Errors) {
    const auto r = constant_record(0.0, 1.0, 1000, 0.01);
    EXPECT_THROW(wq::estimate_correlator(r, 1.0), wq::RecordTooShortError);  // 10 < 50 x 1
    EXPECT_THROW(wq::estimate_correlator(r, 0.0), wq::ConfigError);
    EXPECT_THROW(wq::estimate_correlator(r, 0.001), wq::ConfigError);
    wq::CorrelatorOptions o;
    o.firstSample = 1000;
    EXPECT_THROW(wq::estimate_correlator(r, 0.1, o), wq::RecordTooShortError);
    const auto est = wq::estimate_correlator(r, 0.1);
    EXPECT_THROW(wq::lag_window(est, 0.001, 0.0), wq::ConfigError);
    EXPECT_THROW(wq::lag_window(est, 0.2, 0.0), wq::ConfigError);
    EXPECT_THROW(wq::require_xiq(est), wq::MissingTruthError);
    wq::BinnedCorrelator b = wq::bin_correlator(est, 0.05);
    EXPECT_THROW(wq::compare_xiq(b, {}, desk()), wq::MissingTruthError);
}

TEST(LagWindow, ClampsAtGridEdges) {
    const auto est = wq::estimate_correlator(constant_record(0.0, 1.0, 10000, 0.01), 1.0);
    const auto w = wq::lag_window(est, 0.02, 0.1);
    EXPECT_EQ(w.lo, 1u);
    EXPECT_EQ(w.hi, 12u);
    EXPECT_NEAR(w.tau(), 0.02, 1e-15);
    const auto e = wq::lag_window(est, 1.0, 0.1);
    EXPECT_EQ(e.hi, 100u);
    EXPECT_EQ(e.lo, 90u);
    EXPECT_DOUBLE_EQ(wq::window_average(w, [](double t) { return t; }), 0.065);
}

TEST(Binning, CoversTheLagAxis) {
    const auto est = wq::estimate_correlator(constant_record(0.0, 1.0, 40000, 0.01), 4.0);
    const auto b = wq::bin_correlator(est, 0.5);
    ASSERT_EQ(b.bins.size(), 8u);
    EXPECT_EQ(b.bins.front().lo, 1u);
    EXPECT_EQ(b.bins.back().hi, 400u);
    for (std::size_t k = 1; k < b.bins.size(); ++k) EXPECT_EQ(b.bins[k].lo, b.bins[k - 1].hi + 1);
    for (double v : b.kI) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(TransientSamples, TenOverGamma) {
    const auto r = wq::derive_rates(desk());
    EXPECT_EQ(wq::transient_samples(r, 0.005), 20000u);
}

TEST(CosineOracle, NeverViolatesAtAnyPair) {
    wq::OracleConfig c;
    c.kind = wq::OracleKind::CosinePhaseDiffusion;
    c.phaseDiffusion = 0.01;
    c.dt = 0.005;
    c.nSteps = 4000000;
    c.seed = 11;
    const auto rec = wq::generate_oracle(c, desk().detector);
    const auto est = wq::estimate_correlator(rec, 10.0);
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> u(0.1, 4.9);
    for (int k = 0; k < 200; ++k) {
        const auto v = wq::lg_from_estimate(est, u(g), u(g), 2.0);
        EXPECT_FALSE(v.violated) << v.tau1 << " " << v.tau2 << " " << v.lhs;
        EXPECT_LT(v.lhs, 1.0 + 3 * v.uncertainty);
    }
}

TEST(Trajectory, MeasuredCorrelatorsFollowTheClosedForms) {
    const auto p = desk();
    wq::SimConfig s;
    s.dt = 0.005;
    s.nSteps = 4000000;
    s.seed = 21;
    const auto traj = wq::simulate(p, s);
    const std::size_t first = wq::transient_samples(traj.rates, s.dt);
    const auto est = wq::estimate_correlator(traj.signal, 10.0, {10, first});
    const auto binned = wq::bin_correlator(est, 0.5);
    int outside = 0;
    for (std::size_t b = 0; b < binned.bins.size(); ++b) {
        const double pred = wq::window_average(binned.bins[b], [&](double t) { return wq::analytic_kI(t, p); });
        outside += std::abs(binned.kI[b] - pred) > 3.5 * binned.kIStderr[b];
    }
    EXPECT_LE(outside, 1);

    const auto mom = wq::estimate_moments(traj, first, 10);
    EXPECT_NEAR(mom.qSquaredMean, 0.5, 5 * mom.qSquaredStderr + 0.01);
    const auto xq = wq::compare_xiq(binned, mom, p);
    int xOutside = 0;
    for (std::size_t b = 0; b < xq.tau.size(); ++b)
        xOutside += std::abs(xq.measured[b] - xq.predicted[b]) > 3.5 * xq.diffStderr[b];
    EXPECT_LE(xOutside, 1);

    const auto v = wq::lg_from_estimate(est, pi / 3, pi / 3, 2.0);
    EXPECT_NEAR(v.lhs, wq::analytic_lg_lhs(est, pi / 3, pi / 3, p), 4 * v.uncertainty);
}
