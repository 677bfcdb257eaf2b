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

// Classical (macrorealistic) reference signals: a bounded |Q| <= 1 process
// read out by a detector whose noise is independent of Q.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "weakqubit/error.hpp"
#include "weakqubit/model.hpp"
#include "weakqubit/rng.hpp"
#include "weakqubit/trajectory.hpp"

namespace weakqubit {

enum class OracleKind { RectangularPhaseDiffusion, CosinePhaseDiffusion, RandomTelegraph };

inline const char *oracle_kind_name(OracleKind k) {
    switch (k) {
        case OracleKind::RectangularPhaseDiffusion: return "rectangular";
        case OracleKind::CosinePhaseDiffusion: return "cosine";
        case OracleKind::RandomTelegraph: return "telegraph";
    }
    return "?";
}

inline OracleKind parse_oracle_kind(const std::string &name) {
    if (name == "rectangular") return OracleKind::RectangularPhaseDiffusion;
    if (name == "cosine") return OracleKind::CosinePhaseDiffusion;
    if (name == "telegraph") return OracleKind::RandomTelegraph;
    throw ConfigError("oracle.kind: unknown kind '" + name + "'");
}

struct OracleConfig {
    OracleKind kind = OracleKind::CosinePhaseDiffusion;
    double omega = 1.0;
    double phaseDiffusion = 0.01;  ///< variance growth rate of the phase, rad^2/time
    double telegraphRate = 0.1;    ///< switching rate of the telegraph process
    double dt = 0.005;
    std::uint64_t nSteps = 0;
    std::uint64_t seed = 1;

    /// Phase diffusion above this fraction of omega is not "slow".
    static constexpr double kSlowPhaseFraction = 0.1;

    std::vector<std::string> validate() const {
        if (!(omega > 0.0) || !std::isfinite(omega)) throw ConfigError("oracle.omega must be > 0");
        if (!(phaseDiffusion >= 0.0) || !std::isfinite(phaseDiffusion))
            throw ConfigError("oracle.phase_diffusion must be >= 0");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("oracle.dt must be > 0");
        if (kind == OracleKind::RandomTelegraph && !(telegraphRate > 0.0))
            throw ConfigError("oracle.telegraph_rate must be > 0");
        std::vector<std::string> warnings;
        if (kind != OracleKind::RandomTelegraph && phaseDiffusion > kSlowPhaseFraction * omega)
            warnings.push_back("phase diffusion " + std::to_string(phaseDiffusion) + " is not small against omega");
        return warnings;
    }
};

/// Unit square wave: +1 on [2n pi, (2n+1) pi), -1 on [(2n+1) pi, 2(n+1) pi).
inline double rectangular_q(double theta) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(theta, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r -= two_pi;
    return r < std::numbers::pi ? 1.0 : -1.0;
}

/// Samples n = 0..nSteps. The process and the detector noise use separate
/// substreams of cfg.seed, so xi is independent of Q by construction.
inline SignalRecord generate_oracle(const OracleConfig &cfg, const DetectorParams &det) {
    cfg.validate();
    det.validate();
    const std::size_t n = static_cast<std::size_t>(cfg.nSteps) + 1;
    SignalRecord rec;
    rec.dt = cfg.dt;
    rec.i0 = det.I0;
    rec.samples.resize(n);
    rec.qTruth.resize(n);
    rec.xiTruth.resize(n);

    RandomStream process(derive_seed(cfg.seed, {streams::kOracleProcess}));
    RandomStream noise(derive_seed(cfg.seed, {streams::kOracleNoise}));

    if (cfg.kind == OracleKind::RandomTelegraph) {
        double level = process.uniform() < 0.5 ? 1.0 : -1.0;
        double next_switch = process.exponential(cfg.telegraphRate);
        for (std::size_t k = 0; k < n; ++k) {
            const double t = static_cast<double>(k) * cfg.dt;
            while (t >= next_switch) {
                level = -level;
                next_switch += process.exponential(cfg.telegraphRate);
            }
            rec.qTruth[k] = level;
        }
    } else {
        const bool rect = cfg.kind == OracleKind::RectangularPhaseDiffusion;
        const double kick = std::sqrt(cfg.phaseDiffusion * cfg.dt);
        double phase = 2.0 * std::numbers::pi * process.uniform();
        for (std::size_t k = 0; k < n; ++k) {
            const double theta = cfg.omega * static_cast<double>(k) * cfg.dt + phase;
            rec.qTruth[k] = rect ? rectangular_q(theta) : std::cos(theta);
            if (kick > 0.0) phase += kick * process.normal();
        }
    }

    const double half = 0.5 * det.deltaI;
    for (std::size_t k = 0; k < n; ++k) {
        rec.xiTruth[k] = sample_noise(det.S0, cfg.dt, noise);
        rec.samples[k] = det.I0 + half * rec.qTruth[k] + rec.xiTruth[k];
    }
    return rec;
}

}  // namespace weakqubit
