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

// Power spectra in the convention S_I(w) = 2 int K_I(tau) e^{i w tau} dtau,
// for which white noise <xi xi'> = (S0/2) delta has the flat level S0, and
// Gaussian-window peak areas
//
//   (1/2pi) int (S_I(Omega + w) - S0) e^{-w^2/2Delta^2} dw
//     = (1/pi) < |J(Omega, t)|^2 >,
//   J(Omega, t) = int J(t + tau) e^{i Omega tau} g(tau) dtau,
//   g(tau) = sqrt(2) Delta e^{-tau^2 Delta^2},  J = (deltaI/2) Q.
//
// Macrorealistic records satisfy area < (8/pi^2)(deltaI/2)^2 for narrow peaks
// and area <= (2/3)(deltaI/2)^2 when the spectrum is a single Lorentzian-type
// peak; the measured qubit has area (deltaI/2)^2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "weakqubit/dsp.hpp"
#include "weakqubit/error.hpp"
#include "weakqubit/model.hpp"

namespace weakqubit {

struct SpectrumOptions {
    std::size_t segmentLength = std::size_t{1} << 14;
    double overlap = 0.5;
    std::size_t batches = 20;
    std::size_t firstSample = 0;
};

struct SpectrumEstimate {
    double dt = 1.0;
    std::size_t segmentLength = 0;
    std::size_t segmentCount = 0;
    std::vector<double> omegaGrid;  ///< k * 2 pi / (L dt), k = 0..L/2
    std::vector<double> sI;
    std::vector<double> sIStderr;
    double s0Estimate = 0.0;  ///< mean level over all bins except DC
    std::vector<std::vector<double>> batchSI;

    double resolution() const { return omegaGrid.size() > 1 ? omegaGrid[1] : 0.0; }
};

namespace detail {
inline double mean_level(std::span<const double> omega, std::span<const double> s, double center, double exclude) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 1; k < s.size(); ++k) {
        if (std::abs(omega[k] - center) <= exclude) continue;
        sum += s[k];
        ++count;
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}
}  // namespace detail

/// Hann-windowed averaged periodogram of scale * (x_n - offset).
inline SpectrumEstimate estimate_spectrum(std::span<const double> x, double dt, double offset, double scale,
                                          const SpectrumOptions &opt = {}) {
    const std::size_t L = opt.segmentLength;
    if (L < 8 || (L & (L - 1)) != 0) throw ConfigError("spectrum segment_length must be a power of two >= 8");
    if (!(opt.overlap >= 0.0 && opt.overlap < 1.0)) throw ConfigError("spectrum overlap must be in [0, 1)");
    if (opt.batches < 2) throw ConfigError("spectrum batches must be >= 2");
    const std::size_t hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(L * (1.0 - opt.overlap))));
    const std::size_t n = x.size();
    const std::size_t usable = n > opt.firstSample ? n - opt.firstSample : 0;
    const std::size_t segments = usable >= L ? (usable - L) / hop + 1 : 0;
    if (segments < 4) throw RecordTooShortError("record holds fewer than 4 spectrum segments");
    const std::size_t batches = std::min(opt.batches, segments);

    SpectrumEstimate est;
    est.dt = dt;
    est.segmentLength = L;
    est.segmentCount = segments;
    const std::size_t nb = L / 2 + 1;
    est.omegaGrid.resize(nb);
    for (std::size_t k = 0; k < nb; ++k)
        est.omegaGrid[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(L) * dt);
    est.batchSI.assign(batches, std::vector<double>(nb, 0.0));
    std::vector<std::size_t> perBatch(batches, 0);

    const std::vector<double> w = dsp::hann_window(L);
    double u = 0.0;
    for (double v : w) u += v * v;
    u /= static_cast<double>(L);
    // 2 dt |X_k|^2 / (L U): white noise of variance S0/(2 dt) maps to S0.
    const double norm = 2.0 * dt * scale * scale / (static_cast<double>(L) * u);

    dsp::RealFft fft(L);
    for (std::size_t s = 0; s < segments; ++s) {
        const std::size_t start = opt.firstSample + s * hop;
        double *in = fft.input();
        for (std::size_t i = 0; i < L; ++i) in[i] = (x[start + i] - offset) * w[i];
        fft.execute();
        const std::size_t b = s * batches / segments;
        auto &acc = est.batchSI[b];
        for (std::size_t k = 0; k < nb; ++k) acc[k] += std::norm(fft.bin(k)) * norm;
        ++perBatch[b];
    }
    est.sI.assign(nb, 0.0);
    est.sIStderr.assign(nb, 0.0);
    for (std::size_t b = 0; b < batches; ++b)
        for (std::size_t k = 0; k < nb; ++k) {
            est.sI[k] += est.batchSI[b][k];
            est.batchSI[b][k] /= static_cast<double>(perBatch[b]);
        }
    std::vector<double> col(batches);
    for (std::size_t k = 0; k < nb; ++k) {
        est.sI[k] /= static_cast<double>(segments);
        for (std::size_t b = 0; b < batches; ++b) col[b] = est.batchSI[b][k];
        est.sIStderr[k] = dsp::batch_mean_stderr(col).sem;
    }
    est.s0Estimate = detail::mean_level(est.omegaGrid, est.sI, 0.0, -1.0);
    return est;
}

/// Spectrum of the record samples I_n - I0.
inline SpectrumEstimate estimate_spectrum(const SignalRecord &rec, const SpectrumOptions &opt = {}) {
    rec.validate();
    return estimate_spectrum(rec.samples, rec.dt, rec.i0, 1.0, opt);
}

/// S_I(w) = S0 + (deltaI/2)^2 4 Omega^2 Gamma / ((w^2 - Omega^2)^2 + Gamma^2 w^2).
inline double analytic_spectrum(double omega, const PhysicalConfig &cfg) {
    const double O = cfg.qubit.omega;
    const double G = derive_rates(cfg).GammaTotal;
    const double w2 = omega * omega;
    const double d = w2 - O * O;
    return cfg.detector.S0 + cfg.detector.signal_scale() * 4.0 * O * O * G / (d * d + G * G * w2);
}

/// (1/2pi) int_0^inf (S_I(w) - S0) dw by composite Simpson after w = Omega tan(theta/2),
/// which maps the half line onto [0, pi) and keeps the integrand bounded.
inline double analytic_peak_area(const PhysicalConfig &cfg, std::size_t intervals = 400000) {
    intervals += intervals % 2;
    const double O = cfg.qubit.omega;
    const double S0 = cfg.detector.S0;
    const double h = std::numbers::pi / static_cast<double>(intervals);
    auto f = [&](double theta) {
        if (theta >= std::numbers::pi) return 0.0;
        const double t = std::tan(0.5 * theta);
        const double jac = 0.5 * O * (1.0 + t * t);
        return (analytic_spectrum(O * t, cfg) - S0) * jac;
    };
    double sum = f(0.0) + f(std::numbers::pi);
    for (std::size_t k = 1; k < intervals; ++k) sum += (k % 2 ? 4.0 : 2.0) * f(h * static_cast<double>(k));
    return sum * h / 3.0 / (2.0 * std::numbers::pi);
}

/// Tabulates f on a uniform grid [0, omegaMax] as a (noise-free) estimate.
template <typename F>
SpectrumEstimate tabulate_spectrum(F &&f, double omegaMax, std::size_t points, double pedestal) {
    SpectrumEstimate est;
    est.omegaGrid.resize(points);
    est.sI.resize(points);
    est.sIStderr.assign(points, 0.0);
    for (std::size_t k = 0; k < points; ++k) {
        est.omegaGrid[k] = omegaMax * static_cast<double>(k) / static_cast<double>(points - 1);
        est.sI[k] = f(est.omegaGrid[k]);
    }
    est.s0Estimate = pedestal;
    return est;
}

/// Linear interpolation of the estimate at w.
inline double spectrum_at(const SpectrumEstimate &est, double omega) {
    const auto &g = est.omegaGrid;
    if (omega <= g.front()) return est.sI.front();
    if (omega >= g.back()) return est.sI.back();
    const std::size_t k = static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), omega) - g.begin());
    const double f = (omega - g[k - 1]) / (g[k] - g[k - 1]);
    return est.sI[k - 1] + f * (est.sI[k] - est.sI[k - 1]);
}

/// Full width at half maximum of the highest peak within +-searchHalfWidth of center.
inline double fit_peak_width(std::span<const double> omega, std::span<const double> s, double pedestal, double center,
                             double searchHalfWidth) {
    std::size_t best = 0;
    bool found = false;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (std::abs(omega[k] - center) > searchHalfWidth) continue;
        if (!found || s[k] > s[best]) best = k;
        found = true;
    }
    if (!found || s[best] <= pedestal) return 0.0;
    const double half = pedestal + 0.5 * (s[best] - pedestal);
    std::size_t l = best, r = best;
    while (l > 0 && s[l] > half) --l;
    while (r + 1 < s.size() && s[r] > half) ++r;
    auto cross = [&](std::size_t a, std::size_t b) {
        const double t = (half - s[a]) / (s[b] - s[a]);
        return omega[a] + t * (omega[b] - omega[a]);
    };
    const double left = s[l] <= half ? cross(l, l + 1) : omega[l];
    const double right = s[r] <= half ? cross(r - 1, r) : omega[r];
    return right - left;
}

struct PeakAreaOptions {
    double maxWindowRatio = 0.4;  ///< Delta / Omega above this is outside the bound regime
    double maxWidthRatio = 0.2;   ///< W / Delta above this: window does not hold the whole peak
    double pedestalExclusion = 10.0;  ///< bins within this many W of Omega are left out of the pedestal
    std::optional<double> pedestal;   ///< fixed pedestal (e.g. 0 for a noise-free signal)
};

struct FilteredArea {
    double area = 0.0;
    double stderr_area = 0.0;
    double pedestal = 0.0;
    double fittedWidth = 0.0;
    bool windowRatioOk = true;
    bool narrowPeakOk = true;
    bool reliable() const { return windowRatioOk && narrowPeakOk; }
};

namespace detail {
/// (1/2pi) int (S(w) - S0)(f(w - Omega) + f(-w - Omega)) dw over w >= 0, trapezoidal.
inline double gaussian_window_area(std::span<const double> omega, std::span<const double> s, double pedestal,
                                   double center, double delta) {
    std::vector<double> integrand(s.size());
    const double inv2d2 = 1.0 / (2.0 * delta * delta);
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double a = omega[k] - center, b = omega[k] + center;
        integrand[k] = (s[k] - pedestal) * (std::exp(-a * a * inv2d2) + std::exp(-b * b * inv2d2));
    }
    return dsp::trapezoid(integrand, omega[1] - omega[0]) / (2.0 * std::numbers::pi);
}
}  // namespace detail

inline FilteredArea filtered_peak_area_frequency(const SpectrumEstimate &spec, double centerOmega, double windowDelta,
                                                 const PeakAreaOptions &opt = {}) {
    if (!(centerOmega > 0.0)) throw ConfigError("peak_area.center_omega must be > 0");
    if (!(windowDelta > 0.0)) throw ConfigError("peak_area.window_delta must be > 0");
    if (spec.omegaGrid.size() < 3) throw RecordTooShortError("spectrum has too few bins");
    FilteredArea out;
    out.windowRatioOk = windowDelta / centerOmega <= opt.maxWindowRatio;

    auto pedestal_of = [&](std::span<const double> s) {
        if (opt.pedestal) return std::pair{*opt.pedestal, fit_peak_width(spec.omegaGrid, s, *opt.pedestal, centerOmega, windowDelta)};
        double ped = detail::mean_level(spec.omegaGrid, s, 0.0, -1.0);
        const double W = fit_peak_width(spec.omegaGrid, s, ped, centerOmega, windowDelta);
        ped = detail::mean_level(spec.omegaGrid, s, centerOmega, opt.pedestalExclusion * std::max(W, spec.resolution()));
        return std::pair{ped, W};
    };

    const auto [ped, W] = pedestal_of(spec.sI);
    out.pedestal = ped;
    out.fittedWidth = W;
    out.narrowPeakOk = W <= opt.maxWidthRatio * windowDelta;
    out.area = detail::gaussian_window_area(spec.omegaGrid, spec.sI, ped, centerOmega, windowDelta);
    if (spec.batchSI.size() >= 2) {
        std::vector<double> areas;
        for (const auto &b : spec.batchSI) {
            const double bp = opt.pedestal ? *opt.pedestal : pedestal_of(b).first;
            areas.push_back(detail::gaussian_window_area(spec.omegaGrid, b, bp, centerOmega, windowDelta));
        }
        out.stderr_area = dsp::batch_mean_stderr(areas).sem;
    }
    return out;
}

struct TimeAreaOptions {
    std::size_t batches = 20;
    std::size_t firstSample = 0;
    double kernelCutoff = 5.0;  ///< kernel truncated at |tau| <= kernelCutoff / Delta
};

/// (1/pi) <|J(Omega, t)|^2> with J = (deltaI/2) Q from the truth column.
inline FilteredArea filtered_peak_area_time(const SignalRecord &rec, double deltaI, double centerOmega,
                                            double windowDelta, const TimeAreaOptions &opt = {}) {
    if (!rec.has_q()) throw MissingTruthError("time-side peak area needs the Q truth column");
    if (!(windowDelta > 0.0) || !(centerOmega > 0.0)) throw ConfigError("window_delta and center_omega must be > 0");
    const double dt = rec.dt;
    const std::size_t K = static_cast<std::size_t>(std::ceil(opt.kernelCutoff / (windowDelta * dt)));
    std::vector<double> kernel(2 * K + 1);
    for (std::size_t m = 0; m < kernel.size(); ++m) {
        const double tau = (static_cast<double>(m) - static_cast<double>(K)) * dt;
        kernel[m] = std::numbers::sqrt2 * windowDelta * std::exp(-tau * tau * windowDelta * windowDelta) * dt;
    }
    const std::size_t first = opt.firstSample;
    if (first >= rec.size() || rec.size() - first < kernel.size() + opt.batches)
        throw RecordTooShortError("record shorter than the Gaussian time window");
    const std::size_t outputs = rec.size() - first - kernel.size() + 1;
    const double half = 0.5 * deltaI;
    auto source = [&](std::size_t i) {
        const std::size_t n = first + i;
        return std::polar(half * rec.qTruth[n], centerOmega * static_cast<double>(n) * dt);
    };
    const auto ranges = dsp::split_batches(0, outputs, opt.batches);
    std::vector<double> sums(opt.batches, 0.0);
    double total = 0.0;
    std::size_t b = 0;
    dsp::stream_valid_correlation(rec.size() - first, source, kernel, [&](std::size_t j, std::complex<double> y) {
        while (j >= ranges[b].end) ++b;
        const double p = std::norm(y);
        sums[b] += p;
        total += p;
    });
    std::vector<double> perBatch(opt.batches);
    for (std::size_t s = 0; s < opt.batches; ++s)
        perBatch[s] = sums[s] / static_cast<double>(ranges[s].size()) / std::numbers::pi;
    FilteredArea out;
    out.area = total / static_cast<double>(outputs) / std::numbers::pi;
    out.stderr_area = dsp::batch_mean_stderr(perBatch).sem;
    out.windowRatioOk = windowDelta / centerOmega <= PeakAreaOptions{}.maxWindowRatio;
    return out;
}

struct LemmaCheck {
    double frequencySide = 0.0;
    double timeSide = 0.0;
    double discrepancy = 0.0;  ///< |frequency - time| / time
    bool regimeOk = true;      ///< Delta / Omega within the validity regime
    double tolerance = 0.02;
    bool holds() const { return discrepancy <= tolerance; }
};

/// Both sides of the filtering identity on the noise-free signal J = (deltaI/2) Q.
inline LemmaCheck verify_lemma(const SignalRecord &rec, double deltaI, double centerOmega, double windowDelta,
                               const SpectrumOptions &specOpt = {.segmentLength = std::size_t{1} << 16},
                               const TimeAreaOptions &timeOpt = {}) {
    if (!rec.has_q()) throw MissingTruthError("lemma check needs the Q truth column");
    const SpectrumEstimate spec = estimate_spectrum(rec.qTruth, rec.dt, 0.0, 0.5 * deltaI, specOpt);
    PeakAreaOptions po;
    po.pedestal = 0.0;
    LemmaCheck out;
    out.frequencySide = filtered_peak_area_frequency(spec, centerOmega, windowDelta, po).area;
    out.timeSide = filtered_peak_area_time(rec, deltaI, centerOmega, windowDelta, timeOpt).area;
    out.discrepancy = std::abs(out.frequencySide - out.timeSide) / std::abs(out.timeSide);
    out.regimeOk = windowDelta / centerOmega <= PeakAreaOptions{}.maxWindowRatio;
    return out;
}

enum class BoundStatus { Satisfied, Exceeded, Inconclusive };

inline const char *bound_status_name(BoundStatus s) {
    switch (s) {
        case BoundStatus::Satisfied: return "satisfied";
        case BoundStatus::Exceeded: return "exceeded";
        case BoundStatus::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct PeakAreaVerdict {
    double centerOmega = 0.0;
    double windowDelta = 0.0;
    double area = 0.0;
    double areaStderr = 0.0;
    double generalBound = 0.0;     ///< (8/pi^2)(deltaI/2)^2, strict
    double singlePeakBound = 0.0;  ///< (2/3)(deltaI/2)^2
    double quantumReference = 0.0;
    double significance = 3.0;
    bool singlePeakClaim = false;  ///< the single-peak bound binds only when this holds
    BoundStatus general = BoundStatus::Satisfied;
    BoundStatus singlePeak = BoundStatus::Satisfied;
    bool windowRatioOk = true;
    bool narrowPeakOk = true;

    bool exceeds_general() const { return general == BoundStatus::Exceeded; }
    bool exceeds_single_peak() const { return singlePeak == BoundStatus::Exceeded; }
};

inline constexpr double kGeneralPeakFraction = 8.0 / (std::numbers::pi * std::numbers::pi);
inline constexpr double kSinglePeakFraction = 2.0 / 3.0;

inline PeakAreaVerdict peak_bound_verdict(double area, double deltaI, bool singlePeakClaim, double areaStderr = 0.0,
                                          double significance = 3.0) {
    PeakAreaVerdict v;
    const double A = 0.25 * deltaI * deltaI;
    v.area = area;
    v.areaStderr = areaStderr;
    v.generalBound = kGeneralPeakFraction * A;
    v.singlePeakBound = kSinglePeakFraction * A;
    v.quantumReference = A;
    v.significance = significance;
    v.singlePeakClaim = singlePeakClaim;
    const double band = significance * areaStderr;
    // Strict bound: a tie within the band is inconclusive.
    const double dg = area - v.generalBound;
    v.general = dg > band ? BoundStatus::Exceeded : (-dg > band ? BoundStatus::Satisfied : BoundStatus::Inconclusive);
    const double ds = area - v.singlePeakBound;
    v.singlePeak = ds > band ? BoundStatus::Exceeded : (-ds >= band ? BoundStatus::Satisfied : BoundStatus::Inconclusive);
    return v;
}

inline PeakAreaVerdict peak_bound_verdict(const FilteredArea &fa, double centerOmega, double windowDelta, double deltaI,
                                          bool singlePeakClaim, double significance = 3.0) {
    PeakAreaVerdict v = peak_bound_verdict(fa.area, deltaI, singlePeakClaim, fa.stderr_area, significance);
    v.centerOmega = centerOmega;
    v.windowDelta = windowDelta;
    v.windowRatioOk = fa.windowRatioOk;
    v.narrowPeakOk = fa.narrowPeakOk;
    return v;
}

}  // namespace weakqubit
