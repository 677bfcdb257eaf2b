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

#pragma once

// Time-averaged correlators of detector records, their closed forms for the
// measured qubit, and the weak-measurement Leggett-Garg combination
//
//   K_I(tau1) + K_I(tau2) - K_I(tau1 + tau2) <= (deltaI/2)^2.
//
// Error bars are batch means: the record is cut into contiguous batches, each
// statistic is evaluated per batch, and the spread of the batch values gives
// the standard error.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "weakqubit/dsp.hpp"
#include "weakqubit/error.hpp"
#include "weakqubit/model.hpp"
#include "weakqubit/trajectory.hpp"

namespace weakqubit {

struct CorrelatorOptions {
    std::size_t batches = 20;
    std::size_t firstSample = 0;  ///< samples before this index are discarded (transient)
    double minDurationFactor = 50.0;
};

/// Lag grid m = 1..maxLagIndex (tau = m dt); lag 0 is left out because the
/// white-noise delta spike sits there.
struct CorrelatorEstimate {
    double dt = 1.0;
    std::size_t maxLagIndex = 0;
    std::size_t firstSample = 0;
    std::size_t sampleCount = 0;
    std::vector<double> tauGrid;
    std::vector<double> kI;
    std::vector<double> kIStderr;
    std::vector<double> kXiQ;  ///< empty when the record lacks truth columns
    std::vector<double> kXiQStderr;
    dsp::BatchedCorrelation iiBatches;
    std::optional<dsp::BatchedCorrelation> xiqBatches;

    bool has_xiq() const { return xiqBatches.has_value(); }
    std::size_t batch_count() const { return iiBatches.batches.size(); }
    std::size_t snap(double tau) const { return static_cast<std::size_t>(std::llround(tau / dt)); }
};

namespace detail {
inline void fill_lag_series(const dsp::BatchedCorrelation &bc, std::size_t maxLag, std::vector<double> &mean,
                            std::vector<double> &sem) {
    mean.resize(maxLag);
    sem.resize(maxLag);
    std::vector<double> per(bc.sums.size());
    for (std::size_t m = 1; m <= maxLag; ++m) {
        for (std::size_t s = 0; s < per.size(); ++s) per[s] = bc.batch_mean(s, m);
        mean[m - 1] = bc.mean(m);
        sem[m - 1] = dsp::batch_mean_stderr(per).sem;
    }
}
}  // namespace detail

/// K_I(m dt) = 1/(N-m) sum_n (I_n - I0)(I_{n+m} - I0), and with truth columns
/// also K_xiQ(m dt) = 1/(N-m) sum_n xi_n Q_{n+m}.
inline CorrelatorEstimate estimate_correlator(const SignalRecord &rec, double maxLag,
                                              const CorrelatorOptions &opt = {}) {
    rec.validate();
    if (!(maxLag > 0.0)) throw ConfigError("correlator max_lag must be > 0");
    if (opt.batches < 2) throw ConfigError("correlator batches must be >= 2");
    const std::size_t M = static_cast<std::size_t>(std::llround(maxLag / rec.dt));
    if (M < 1) throw ConfigError("correlator max_lag is shorter than one sample");
    const std::size_t n = rec.size();
    if (opt.firstSample >= n) throw RecordTooShortError("transient discards the whole record");
    const double usable = static_cast<double>(n - opt.firstSample) * rec.dt;
    if (usable < opt.minDurationFactor * static_cast<double>(M) * rec.dt)
        throw RecordTooShortError("record of duration " + std::to_string(usable) + " is shorter than " +
                                  std::to_string(opt.minDurationFactor) + " x max_lag");
    if ((n - opt.firstSample) / opt.batches <= M) throw RecordTooShortError("batches shorter than max_lag");

    CorrelatorEstimate est;
    est.dt = rec.dt;
    est.maxLagIndex = M;
    est.firstSample = opt.firstSample;
    est.sampleCount = n;
    est.tauGrid.resize(M);
    for (std::size_t m = 1; m <= M; ++m) est.tauGrid[m - 1] = static_cast<double>(m) * rec.dt;
    est.iiBatches = dsp::batched_cross_correlation(rec.samples, rec.i0, rec.samples, rec.i0, M, opt.batches,
                                                   opt.firstSample);
    detail::fill_lag_series(est.iiBatches, M, est.kI, est.kIStderr);
    if (rec.has_xi() && rec.has_q()) {
        est.xiqBatches =
            dsp::batched_cross_correlation(rec.xiTruth, 0.0, rec.qTruth, 0.0, M, opt.batches, opt.firstSample);
        detail::fill_lag_series(*est.xiqBatches, M, est.kXiQ, est.kXiQStderr);
    }
    return est;
}

inline const dsp::BatchedCorrelation &require_xiq(const CorrelatorEstimate &est) {
    if (!est.has_xiq()) throw MissingTruthError("record has no xi/Q truth columns");
    return *est.xiqBatches;
}

/// Inclusive lag-index window [lo, hi], lag 0 excluded.
struct LagWindow {
    std::size_t lo = 1;
    std::size_t hi = 1;
    std::size_t center = 1;
    double dt = 1.0;

    double tau() const { return static_cast<double>(center) * dt; }
    std::size_t width() const { return hi - lo + 1; }
};

/// Window of +-halfWidth around tau snapped to the lag grid.
inline LagWindow lag_window(const CorrelatorEstimate &est, double tau, double halfWidth) {
    const std::size_t c = est.snap(tau);
    if (c < 1) throw ConfigError("lag " + std::to_string(tau) + " snaps to 0; smallest usable lag is dt");
    if (c > est.maxLagIndex) throw ConfigError("lag " + std::to_string(tau) + " exceeds max_lag");
    const std::size_t w = static_cast<std::size_t>(std::llround(std::max(0.0, halfWidth) / est.dt));
    LagWindow win;
    win.center = c;
    win.lo = c > w ? std::max<std::size_t>(1, c - w) : 1;
    win.hi = std::min(est.maxLagIndex, c + w);
    win.dt = est.dt;
    return win;
}

/// Pooled and per-batch averages of a correlation over a lag window.
struct WindowedValue {
    double value = 0.0;
    std::vector<double> perBatch;
};

inline WindowedValue windowed(const dsp::BatchedCorrelation &bc, const LagWindow &w) {
    WindowedValue out;
    out.perBatch.assign(bc.sums.size(), 0.0);
    const double inv = 1.0 / static_cast<double>(w.width());
    for (std::size_t m = w.lo; m <= w.hi; ++m) {
        out.value += bc.mean(m) * inv;
        for (std::size_t s = 0; s < out.perBatch.size(); ++s) out.perBatch[s] += bc.batch_mean(s, m) * inv;
    }
    return out;
}

/// Lag-binned view of an estimate: consecutive bins of `binLags` lags starting at lag 1.
struct BinnedCorrelator {
    std::vector<LagWindow> bins;
    std::vector<double> tau;  ///< bin centre
    std::vector<double> kI, kIStderr;
    std::vector<std::vector<double>> kIBatch;  ///< [bin][batch]
    std::vector<double> kXiQ, kXiQStderr;
    std::vector<std::vector<double>> kXiQBatch;
};

inline BinnedCorrelator bin_correlator(const CorrelatorEstimate &est, double binWidth) {
    const std::size_t w = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(binWidth / est.dt)));
    BinnedCorrelator out;
    for (std::size_t lo = 1; lo + w - 1 <= est.maxLagIndex; lo += w) {
        LagWindow b{lo, lo + w - 1, lo + (w - 1) / 2, est.dt};
        out.bins.push_back(b);
        out.tau.push_back(0.5 * static_cast<double>(b.lo + b.hi) * est.dt);
        WindowedValue v = windowed(est.iiBatches, b);
        out.kI.push_back(v.value);
        out.kIStderr.push_back(dsp::batch_mean_stderr(v.perBatch).sem);
        out.kIBatch.push_back(std::move(v.perBatch));
        if (est.has_xiq()) {
            WindowedValue x = windowed(*est.xiqBatches, b);
            out.kXiQ.push_back(x.value);
            out.kXiQStderr.push_back(dsp::batch_mean_stderr(x.perBatch).sem);
            out.kXiQBatch.push_back(std::move(x.perBatch));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Closed forms for the measured qubit (underdamped regime only).

namespace detail {
inline double require_omega_tilde(const DerivedRates &r) {
    if (!r.omegaTilde)
        throw OutsideValidityError("analytic correlators need omega > Gamma/2 (overdamped regime requested)");
    return *r.omegaTilde;
}

/// e^{-Gamma tau/2} (cos w tau + Gamma/(2w) sin w tau) and e^{-Gamma tau/2} (omega/w) sin w tau.
inline std::array<double, 2> damped_pair(double tau, const PhysicalConfig &cfg) {
    const DerivedRates r = derive_rates(cfg);
    const double w = require_omega_tilde(r);
    const double G = r.GammaTotal;
    const double e = std::exp(-0.5 * G * tau);
    const double c = std::cos(w * tau), s = std::sin(w * tau);
    return {e * (c + G / (2.0 * w) * s), e * (cfg.qubit.omega / w) * s};
}
}  // namespace detail

/// K_I(tau) = (deltaI/2)^2 e^{-Gamma|tau|/2}(cos w|tau| + Gamma/(2w) sin w|tau|), w = omegaTilde.
inline double analytic_kI(double tau, const PhysicalConfig &cfg) {
    return cfg.detector.signal_scale() * detail::damped_pair(std::abs(tau), cfg)[0];
}

/// <Q(t) Q(t+tau)> from the stationary moments <Q^2> and <2 Im rho12 Q>.
inline double analytic_qq(double tau, const PhysicalConfig &cfg, double qSquaredMean, double imRhoQMean) {
    const auto p = detail::damped_pair(std::abs(tau), cfg);
    return qSquaredMean * p[0] - imRhoQMean * p[1];
}

/// <xi(t) Q(t+tau)>; zero for tau < 0 because Q does not anticipate the noise.
inline double analytic_xiq(double tau, const PhysicalConfig &cfg, double qSquaredMean, double imRhoQMean) {
    if (tau < 0.0) {
        detail::require_omega_tilde(derive_rates(cfg));
        return 0.0;
    }
    const auto p = detail::damped_pair(tau, cfg);
    return 0.5 * cfg.detector.deltaI * ((1.0 - qSquaredMean) * p[0] + imRhoQMean * p[1]);
}

/// Average of f(m dt) over the lags of a window; matches what the windowed
/// estimator measures.
template <typename F>
double window_average(const LagWindow &w, F &&f) {
    double s = 0.0;
    for (std::size_t m = w.lo; m <= w.hi; ++m) s += f(static_cast<double>(m) * w.dt);
    return s / static_cast<double>(w.width());
}

/// Weak-coupling equal-lag curve (deltaI/2)^2 (1 + 2(cos omega tau - cos^2 omega tau)).
inline double lg_equal_tau_curve(double tau, const PhysicalConfig &cfg) {
    const double c = std::cos(cfg.qubit.omega * tau);
    return cfg.detector.signal_scale() * (1.0 + 2.0 * (c - c * c));
}

// ---------------------------------------------------------------------------
// Leggett-Garg verdicts.

struct LgVerdict {
    double tau1 = 0.0;
    double tau2 = 0.0;
    double lhs = 0.0;
    double bound = 0.0;
    double margin = 0.0;
    double uncertainty = 0.0;
    double significance = 3.0;
    bool violated = false;
};

/// lhs = k1 + k2 - k12 against (deltaI/2)^2; violated iff margin > significance * uncertainty.
inline LgVerdict lg_combination(double k1, double k2, double k12, double deltaI, double uncertainty = 0.0,
                                double significance = 3.0) {
    LgVerdict v;
    v.lhs = k1 + k2 - k12;
    v.bound = 0.25 * deltaI * deltaI;
    v.margin = v.lhs - v.bound;
    v.uncertainty = uncertainty;
    v.significance = significance;
    v.violated = v.margin > significance * uncertainty;
    return v;
}

struct LgOptions {
    double lagHalfWidth = 0.1;  ///< time units averaged on each side of every lag
    double significance = 3.0;
};

/// Verdict for one (tau1, tau2) pair from a correlator estimate. Lags are
/// snapped to the dt grid; each K_I is averaged over a small lag window and
/// the uncertainty is the batch-means standard error of the combination.
inline LgVerdict lg_from_estimate(const CorrelatorEstimate &est, double tau1, double tau2, double deltaI,
                                  const LgOptions &opt = {}) {
    const LagWindow w1 = lag_window(est, tau1, opt.lagHalfWidth);
    const LagWindow w2 = lag_window(est, tau2, opt.lagHalfWidth);
    const double t1 = w1.tau(), t2 = w2.tau();
    const LagWindow w12 = lag_window(est, t1 + t2, opt.lagHalfWidth);
    const WindowedValue a = windowed(est.iiBatches, w1);
    const WindowedValue b = windowed(est.iiBatches, w2);
    const WindowedValue c = windowed(est.iiBatches, w12);
    std::vector<double> lhs(a.perBatch.size());
    for (std::size_t s = 0; s < lhs.size(); ++s) lhs[s] = a.perBatch[s] + b.perBatch[s] - c.perBatch[s];
    LgVerdict v = lg_combination(a.value, b.value, c.value, deltaI, dsp::batch_mean_stderr(lhs).sem, opt.significance);
    v.tau1 = t1;
    v.tau2 = t2;
    return v;
}

/// Closed-form lhs with the same lag windows as lg_from_estimate.
inline double analytic_lg_lhs(const CorrelatorEstimate &est, double tau1, double tau2, const PhysicalConfig &cfg,
                              const LgOptions &opt = {}) {
    const LagWindow w1 = lag_window(est, tau1, opt.lagHalfWidth);
    const LagWindow w2 = lag_window(est, tau2, opt.lagHalfWidth);
    const LagWindow w12 = lag_window(est, w1.tau() + w2.tau(), opt.lagHalfWidth);
    auto k = [&](double t) { return analytic_kI(t, cfg); };
    return window_average(w1, k) + window_average(w2, k) - window_average(w12, k);
}

// ---------------------------------------------------------------------------
// Three-time bound.

struct ThreeTimeMax {
    double value = -1e300;
    std::array<double, 3> argmax{};
};

inline double three_time_lhs(double q1, double q2, double q3) { return q1 * q2 + q2 * q3 - q1 * q3; }

/// Maximum of q1 q2 + q2 q3 - q1 q3 over a uniform grid of [-1, 1]^3 (which
/// contains the 8 corners when gridPoints >= 2).
inline ThreeTimeMax brute_force_three_time_max(std::size_t gridPoints = 201) {
    if (gridPoints < 2) throw ConfigError("grid needs at least 2 points per axis");
    ThreeTimeMax best;
    const double h = 2.0 / static_cast<double>(gridPoints - 1);
    auto q = [&](std::size_t i) { return i + 1 == gridPoints ? 1.0 : -1.0 + h * static_cast<double>(i); };
    for (std::size_t i = 0; i < gridPoints; ++i)
        for (std::size_t j = 0; j < gridPoints; ++j)
            for (std::size_t k = 0; k < gridPoints; ++k) {
                const double v = three_time_lhs(q(i), q(j), q(k));
                if (v > best.value) best = {v, {q(i), q(j), q(k)}};
            }
    return best;
}

// ---------------------------------------------------------------------------
// Stationary moments of a simulated trajectory.

struct TrajectoryMoments {
    double qSquaredMean = 0.0;
    double qSquaredStderr = 0.0;
    double imRhoQMean = 0.0;  ///< <2 Im rho12 Q>
    double imRhoQStderr = 0.0;
    std::vector<double> qSquaredBatch;
    std::vector<double> imRhoQBatch;
    std::size_t firstSample = 0;
};

/// Batches coincide with those of estimate_correlator for equal (first, batches).
inline TrajectoryMoments estimate_moments(const TrajectoryRecord &rec, std::size_t firstSample,
                                          std::size_t batches = 20) {
    const std::size_t n = rec.size();
    if (firstSample >= n || (n - firstSample) < batches) throw RecordTooShortError("record too short for moments");
    TrajectoryMoments out;
    out.firstSample = firstSample;
    const auto ranges = dsp::split_batches(firstSample, n, batches);
    double q2all = 0.0, imqall = 0.0;
    for (const auto &r : ranges) {
        double q2 = 0.0, imq = 0.0;
        for (std::size_t i = r.begin; i < r.end; ++i) {
            const double q = rec.signal.qTruth[i];
            q2 += q * q;
            imq += 2.0 * rec.imRho12[i] * q;
        }
        q2all += q2;
        imqall += imq;
        out.qSquaredBatch.push_back(q2 / static_cast<double>(r.size()));
        out.imRhoQBatch.push_back(imq / static_cast<double>(r.size()));
    }
    const double total = static_cast<double>(n - firstSample);
    out.qSquaredMean = q2all / total;
    out.imRhoQMean = imqall / total;
    out.qSquaredStderr = dsp::batch_mean_stderr(out.qSquaredBatch).sem;
    out.imRhoQStderr = dsp::batch_mean_stderr(out.imRhoQBatch).sem;
    return out;
}

/// Samples spanning 10/Gamma, the transient discarded before stationary averages.
inline std::size_t transient_samples(const DerivedRates &rates, double dt) {
    if (!(rates.GammaTotal > 0.0)) return 0;
    return static_cast<std::size_t>(std::ceil(10.0 / rates.GammaTotal / dt));
}

/// Per-bin comparison of measured <xi Q(tau)> with the closed form evaluated at
/// the measured moments; the uncertainty is the batch spread of the difference.
struct XiQComparison {
    std::vector<double> tau, measured, predicted, diffStderr;
};

inline XiQComparison compare_xiq(const BinnedCorrelator &binned, const TrajectoryMoments &mom,
                                 const PhysicalConfig &cfg) {
    if (binned.kXiQBatch.empty()) throw MissingTruthError("record has no xi/Q truth columns");
    XiQComparison out;
    const std::size_t S = mom.qSquaredBatch.size();
    for (std::size_t b = 0; b < binned.bins.size(); ++b) {
        const LagWindow &w = binned.bins[b];
        auto pred = [&](double q2, double imq) {
            return window_average(w, [&](double t) { return analytic_xiq(t, cfg, q2, imq); });
        };
        std::vector<double> diff(S);
        for (std::size_t s = 0; s < S; ++s)
            diff[s] = binned.kXiQBatch[b][s] - pred(mom.qSquaredBatch[s], mom.imRhoQBatch[s]);
        out.tau.push_back(binned.tau[b]);
        out.measured.push_back(binned.kXiQ[b]);
        out.predicted.push_back(pred(mom.qSquaredMean, mom.imRhoQMean));
        out.diffStderr.push_back(dsp::batch_mean_stderr(diff).sem);
    }
    return out;
}

}  // namespace weakqubit
