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

// Conditional (Bayesian) evolution of a continuously measured qubit.
//
// For I_{1,2} = I0 +- deltaI/2 and H = (omega/2) sigma_x the Stratonovich
// equations read, with u = I(t) - I0 and Q = rho11 - rho22,
//
//   d rho11/dt = (2 deltaI/S0) rho11 rho22 u              - omega Im rho12
//   d rho12/dt = -(deltaI/S0) u Q rho12 - gamma rho12     + i (omega/2) Q
//
// The Hamiltonian part follows from -i[H, rho]: [H, rho]_11 = -i omega Im rho12
// and [H, rho]_12 = -(omega/2) Q. With this sign the averaged dynamics give
// Q(t+tau) = Q cos(omega tau) - 2 Im rho12 sin(omega tau), which is the sign
// structure of the Q-correlator <Q Q(tau)> = <Q^2> (...) - <2 Im rho12 Q> (...).
//
// The equivalent Ito form (xi = u - (deltaI/2) Q is the innovation) is
//
//   d rho11 = -omega Im rho12 dt + (2 deltaI/S0) rho11 rho22 xi dt
//   d rho12 = (-Gamma rho12 + i (omega/2) Q) dt - (deltaI/S0) (Q/2) rho12 xi dt
//
// The Ito correction removes the mean of the measurement term for rho11 and
// turns -2 Gamma_m Q^2 + Gamma_m (2Q^2 - 1) into the ensemble dephasing
// -Gamma_m for rho12, Gamma_m = deltaI^2 / 4 S0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "weakqubit/error.hpp"
#include "weakqubit/model.hpp"
#include "weakqubit/rng.hpp"

namespace weakqubit {

enum class Scheme { HeunStratonovich, ItoEuler };

inline const char *scheme_name(Scheme s) { return s == Scheme::HeunStratonovich ? "heun" : "ito_euler"; }

inline Scheme parse_scheme(const std::string &name) {
    if (name == "heun" || name == "heun_stratonovich") return Scheme::HeunStratonovich;
    if (name == "ito_euler" || name == "ito") return Scheme::ItoEuler;
    throw ConfigError("sim.scheme: unknown scheme '" + name + "'");
}

struct SimConfig {
    double dt = 0.005;
    std::uint64_t nSteps = 0;
    std::uint64_t seed = 1;
    Scheme scheme = Scheme::HeunStratonovich;
    DensityMatrix initialState = DensityMatrix::ground();
    std::uint64_t renormalizeEvery = 100;
    /// Escalate the accuracy-guard warnings to ConfigError.
    bool strictAccuracy = false;

    static constexpr double kMaxDtOmega = 0.05;
    static constexpr double kMaxDtGamma = 0.01;

    /// Validates and returns the accuracy-guard warnings (empty if none).
    std::vector<std::string> validate(const PhysicalConfig &phys) const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("sim.dt must be > 0");
        if (renormalizeEvery == 0) throw ConfigError("sim.renormalize_every must be >= 1");
        initialState.validate();
        std::vector<std::string> warnings;
        const DerivedRates rates = derive_rates(phys);
        if (dt * phys.qubit.omega > kMaxDtOmega)
            warnings.push_back("accuracy guard: dt*omega = " + std::to_string(dt * phys.qubit.omega) + " > 0.05");
        if (dt * rates.GammaTotal > kMaxDtGamma)
            warnings.push_back("accuracy guard: dt*Gamma = " + std::to_string(dt * rates.GammaTotal) + " > 0.01");
        if (strictAccuracy && !warnings.empty()) throw ConfigError("sim.dt: " + warnings.front());
        return warnings;
    }
};

/// Discrete white noise: N(0, S0/(2 dt)), the sampled form of <xi xi'> = (S0/2) delta.
inline double sample_noise(double S0, double dt, RandomStream &rng) { return std::sqrt(S0 / (2.0 * dt)) * rng.normal(); }

struct StateDerivative {
    double d11 = 0.0;
    double dRe = 0.0;
    double dIm = 0.0;
};

/// Right-hand side of the Stratonovich equations for a given record value I(t).
inline StateDerivative drift_eq6(const DensityMatrix &rho, double iValue, const PhysicalConfig &cfg,
                                 const DerivedRates &rates) {
    const auto &d = cfg.detector;
    const double u = iValue - d.I0;
    const double q = q_of(rho);
    const double k = d.deltaI / d.S0;
    const double omega = cfg.qubit.omega;
    const double coh = -k * u * q - rates.gamma;
    return {2.0 * k * rho.rho11 * rho.rho22() * u - omega * rho.imRho12, coh * rho.reRho12,
            coh * rho.imRho12 + 0.5 * omega * q};
}

inline StateDerivative drift_eq6(const DensityMatrix &rho, double iValue, const PhysicalConfig &cfg) {
    return drift_eq6(rho, iValue, cfg, derive_rates(cfg));
}

inline DensityMatrix advance(const DensityMatrix &rho, const StateDerivative &f, double h) {
    return {rho.rho11 + h * f.d11, rho.reRho12 + h * f.dRe, rho.imRho12 + h * f.dIm};
}

/// Pull the Bloch vector (2 Re rho12, -2 Im rho12, Q) radially back into the
/// unit ball. Keeps its direction, so a pure state stays on the sphere.
inline DensityMatrix repair_state(DensityMatrix rho) {
    const double q = q_of(rho);
    const double r2 = q * q + 4.0 * rho.coherence_sq();
    if (r2 > 1.0) {
        const double s = 1.0 / std::sqrt(r2);
        rho.rho11 = 0.5 * (1.0 + s * q);
        rho.reRho12 *= s;
        rho.imRho12 *= s;
    }
    return rho;
}

struct StepResult {
    DensityMatrix rho;  ///< state after the step
    double xi = 0.0;    ///< noise sample of this step
    double i = 0.0;     ///< record value I = I0 + (deltaI/2) Q(before) + xi
    bool repaired = false;
};

/// One integration step with an externally supplied noise sample.
inline DensityMatrix integrate_step(const DensityMatrix &rho, double xi, double iValue, const PhysicalConfig &cfg,
                                    const DerivedRates &rates, Scheme scheme, double dt) {
    if (scheme == Scheme::HeunStratonovich) {
        const StateDerivative f0 = drift_eq6(rho, iValue, cfg, rates);
        const DensityMatrix predicted = advance(rho, f0, dt);
        const StateDerivative f1 = drift_eq6(predicted, iValue, cfg, rates);
        return advance(rho, {0.5 * (f0.d11 + f1.d11), 0.5 * (f0.dRe + f1.dRe), 0.5 * (f0.dIm + f1.dIm)}, dt);
    }
    const auto &d = cfg.detector;
    const double q = q_of(rho);
    const double kick = 2.0 * d.deltaI / d.S0 * xi;
    const double omega = cfg.qubit.omega;
    const double G = rates.GammaTotal;
    return {rho.rho11 + dt * (-omega * rho.imRho12 + kick * rho.rho11 * rho.rho22()),
            rho.reRho12 + dt * (-G * rho.reRho12 - 0.5 * kick * q * rho.reRho12),
            rho.imRho12 + dt * (-G * rho.imRho12 + 0.5 * omega * q - 0.5 * kick * q * rho.imRho12)};
}

/// Draws xi, forms I, advances rho and projects any overshoot back into the
/// Bloch ball. `repaired` marks overshoots beyond the escape tolerance; a
/// state that cannot be projected (NaN, inf) throws StateEscapeError.
inline StepResult step(const DensityMatrix &rho, const PhysicalConfig &cfg, const DerivedRates &rates,
                       const SimConfig &sim, RandomStream &rng, std::size_t stepIndex = 0) {
    StepResult out;
    out.xi = sample_noise(cfg.detector.S0, sim.dt, rng);
    out.i = cfg.detector.I0 + 0.5 * cfg.detector.deltaI * q_of(rho) + out.xi;
    out.rho = integrate_step(rho, out.xi, out.i, cfg, rates, sim.scheme, sim.dt);
    constexpr double kEscapeTolerance = 1e-6;
    out.repaired = !out.rho.is_valid(kEscapeTolerance);
    out.rho = repair_state(out.rho);
    if (!out.rho.is_valid(kEscapeTolerance)) throw StateEscapeError("state left the physical region", stepIndex);
    return out;
}

inline StepResult step(const DensityMatrix &rho, const PhysicalConfig &cfg, const SimConfig &sim, RandomStream &rng) {
    return step(rho, cfg, derive_rates(cfg), sim, rng);
}

/// Samples n = 0..nSteps of one run. Row n holds rho(t_n) and the noise xi_n
/// that drives the step t_n -> t_{n+1}; I_n = I0 + (deltaI/2) Q_n + xi_n.
struct TrajectoryRecord {
    PhysicalConfig physical;
    SimConfig sim;
    DerivedRates rates;
    std::vector<double> rho11;
    std::vector<double> reRho12;
    std::vector<double> imRho12;
    SignalRecord signal;  ///< samples = I, qTruth = Q, xiTruth = xi
    std::uint64_t repairs = 0;
    std::vector<std::string> warnings;

    std::size_t size() const { return rho11.size(); }
    double t(std::size_t n) const { return static_cast<double>(n) * sim.dt; }
    DensityMatrix state(std::size_t n) const { return {rho11[n], reRho12[n], imRho12[n]}; }
};

class Integrator {
   public:
    Integrator(const PhysicalConfig &phys, const SimConfig &sim, std::uint64_t seed)
        : phys_(phys), sim_(sim), rates_(derive_rates(phys)), rng_(seed), rho_(sim.initialState) {}

    const DensityMatrix &state() const { return rho_; }
    std::uint64_t steps_taken() const { return n_; }
    std::uint64_t repairs() const { return repairs_; }

    /// Draws the noise for the current sample, then advances. Returns the row
    /// of the current sample (state before the step).
    StepResult advance_one() {
        StepResult r = step(rho_, phys_, rates_, sim_, rng_, n_);
        StepResult row{rho_, r.xi, r.i};
        if (r.repaired) ++repairs_;
        ++n_;
        rho_ = r.rho;
        if (n_ % sim_.renormalizeEvery == 0) {
            const DensityMatrix fixed = repair_state(rho_);
            if (fixed.rho11 != rho_.rho11 || fixed.reRho12 != rho_.reRho12 || fixed.imRho12 != rho_.imRho12) ++repairs_;
            rho_ = fixed;
        }
        return row;
    }

    /// The noise/record pair for the current sample without advancing.
    StepResult last_row() {
        StepResult row{rho_, sample_noise(phys_.detector.S0, sim_.dt, rng_), 0.0};
        row.i = phys_.detector.I0 + 0.5 * phys_.detector.deltaI * q_of(rho_) + row.xi;
        return row;
    }

   private:
    PhysicalConfig phys_;
    SimConfig sim_;
    DerivedRates rates_;
    RandomStream rng_;
    DensityMatrix rho_;
    std::uint64_t n_ = 0;
    std::uint64_t repairs_ = 0;
};

/// Seed of the detector-noise stream of a single run.
inline std::uint64_t trajectory_seed(std::uint64_t seed) { return derive_seed(seed, {streams::kDetectorNoise}); }

inline TrajectoryRecord simulate(const PhysicalConfig &phys, const SimConfig &sim) {
    phys.validate();
    TrajectoryRecord rec;
    rec.warnings = sim.validate(phys);
    rec.physical = phys;
    rec.sim = sim;
    rec.rates = derive_rates(phys);
    const std::size_t n = static_cast<std::size_t>(sim.nSteps) + 1;
    rec.rho11.reserve(n);
    rec.reRho12.reserve(n);
    rec.imRho12.reserve(n);
    auto &sig = rec.signal;
    sig.dt = sim.dt;
    sig.i0 = phys.detector.I0;
    sig.samples.reserve(n);
    sig.qTruth.reserve(n);
    sig.xiTruth.reserve(n);

    Integrator integ(phys, sim, trajectory_seed(sim.seed));
    auto push = [&](const StepResult &row) {
        rec.rho11.push_back(row.rho.rho11);
        rec.reRho12.push_back(row.rho.reRho12);
        rec.imRho12.push_back(row.rho.imRho12);
        sig.qTruth.push_back(q_of(row.rho));
        sig.xiTruth.push_back(row.xi);
        sig.samples.push_back(row.i);
    };
    for (std::uint64_t k = 0; k < sim.nSteps; ++k) push(integ.advance_one());
    push(integ.last_row());
    rec.repairs = integ.repairs();
    return rec;
}

/// Runs `count` independent trajectories and returns their final states.
/// Member i uses the substream derive_seed(sim.seed, {kEnsembleMember, i}), so
/// the result does not depend on `threads`.
inline std::vector<DensityMatrix> ensemble_final_states(const PhysicalConfig &phys, const SimConfig &sim,
                                                        std::size_t count, unsigned threads = 1) {
    phys.validate();
    sim.validate(phys);
    std::vector<DensityMatrix> out(count);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Integrator integ(phys, sim, derive_seed(sim.seed, {streams::kEnsembleMember, i}));
            for (std::uint64_t k = 0; k < sim.nSteps; ++k) integ.advance_one();
            out[i] = integ.state();
        }
    };
    threads = std::max(1u, threads);
    if (threads == 1 || count < 2) {
        work(0, count);
        return out;
    }
    {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (count + threads - 1) / threads;
        for (std::size_t b = 0; b < count; b += chunk) pool.emplace_back(work, b, std::min(count, b + chunk));
    }
    return out;
}

}  // namespace weakqubit
