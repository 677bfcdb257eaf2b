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

// Physical parameters of the detector and the qubit, the derived decoherence
// rates, and the reduced qubit state. Units: hbar = 1, all rates are angular
// frequencies.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "weakqubit/error.hpp"

namespace weakqubit {

/// Linear detector: I(t) = I0 + (deltaI/2) Q(t) + xi(t), <xi xi'> = (S0/2) delta.
struct DetectorParams {
    double I0 = 0.0;
    double deltaI = 2.0;
    double S0 = 10.0;
    double eta = 1.0;

    void validate() const {
        if (!std::isfinite(I0)) throw ConfigError("physical.i0 must be finite");
        if (!(deltaI > 0.0) || !std::isfinite(deltaI)) throw ConfigError("physical.delta_i must be > 0");
        if (!(S0 > 0.0) || !std::isfinite(S0)) throw ConfigError("physical.s0 must be > 0");
        if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("physical.eta must be in (0, 1]");
    }

    /// (deltaI/2)^2, the scale of every inequality bound.
    double signal_scale() const { return 0.25 * deltaI * deltaI; }
};

/// H = (omega/2)(|1><2| + |2><1|).
struct QubitParams {
    double omega = 1.0;

    void validate() const {
        if (!(omega > 0.0) || !std::isfinite(omega)) throw ConfigError("physical.omega must be > 0");
    }
};

struct PhysicalConfig {
    DetectorParams detector;
    QubitParams qubit;

    void validate() const {
        detector.validate();
        qubit.validate();
    }
};

struct DerivedRates {
    double gamma = 0.0;       ///< extra dephasing from detector non-ideality
    double GammaTotal = 0.0;  ///< total coherence decay rate
    /// sqrt(omega^2 - Gamma^2/4); empty in the overdamped regime omega <= Gamma/2.
    std::optional<double> omegaTilde;

    bool underdamped() const { return omegaTilde.has_value(); }
};

inline DerivedRates derive_rates(const DetectorParams &d, const QubitParams &q) {
    DerivedRates r;
    const double measurement_rate = d.deltaI * d.deltaI / (4.0 * d.S0);
    r.gamma = (1.0 / d.eta - 1.0) * measurement_rate;
    r.GammaTotal = measurement_rate / d.eta;
    const double disc = q.omega * q.omega - 0.25 * r.GammaTotal * r.GammaTotal;
    if (disc > 0.0) r.omegaTilde = std::sqrt(disc);
    return r;
}

inline DerivedRates derive_rates(const PhysicalConfig &cfg) { return derive_rates(cfg.detector, cfg.qubit); }

/// Qubit density matrix with the trace eliminated: rho22 = 1 - rho11.
struct DensityMatrix {
    double rho11 = 1.0;
    double reRho12 = 0.0;
    double imRho12 = 0.0;

    static constexpr double kPositivityTolerance = 1e-9;

    double rho22() const { return 1.0 - rho11; }
    double coherence_sq() const { return reRho12 * reRho12 + imRho12 * imRho12; }

    /// rho11 rho22 - |rho12|^2, i.e. det(rho); nonnegative for physical states.
    double positivity() const { return rho11 * rho22() - coherence_sq(); }

    double purity() const { return rho11 * rho11 + rho22() * rho22() + 2.0 * coherence_sq(); }

    bool is_valid(double tol = kPositivityTolerance) const {
        return std::isfinite(rho11) && std::isfinite(reRho12) && std::isfinite(imRho12) && rho11 >= -tol &&
               rho11 <= 1.0 + tol && positivity() >= -tol && purity() <= 1.0 + tol;
    }

    void validate() const {
        if (!is_valid()) throw ConfigError("density matrix is not a physical state");
    }

    static DensityMatrix ground() { return {1.0, 0.0, 0.0}; }
    static DensityMatrix mixed() { return {0.5, 0.0, 0.0}; }
};

inline double q_of(const DensityMatrix &rho) { return 2.0 * rho.rho11 - 1.0; }

/// Uniformly sampled detector record. Truth columns are filled for simulated
/// and oracle data; external records usually carry only the samples.
struct SignalRecord {
    double dt = 1.0;
    double i0 = 0.0;
    std::vector<double> samples;
    std::vector<double> qTruth;   ///< empty when unknown
    std::vector<double> xiTruth;  ///< empty when unknown

    std::size_t size() const { return samples.size(); }
    bool has_q() const { return !qTruth.empty(); }
    bool has_xi() const { return !xiTruth.empty(); }
    double duration() const { return dt * static_cast<double>(samples.size()); }

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("record dt must be > 0");
        if (samples.size() < 2) throw ConfigError("record must contain at least 2 samples");
        if (has_q()) {
            if (qTruth.size() != samples.size()) throw ConfigError("qTruth length differs from samples");
            for (double q : qTruth)
                if (!(std::abs(q) <= 1.0 + DensityMatrix::kPositivityTolerance))
                    throw ConfigError("qTruth value outside [-1, 1]");
        }
        if (has_xi() && xiTruth.size() != samples.size()) throw ConfigError("xiTruth length differs from samples");
    }
};

}  // namespace weakqubit
