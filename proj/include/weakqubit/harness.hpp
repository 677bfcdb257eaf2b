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

// Experiment driver: config parsing, scenario pipeline, report assembly and
// parameter sweeps. The config dialect is JSON with a schema_version field;
// see README.md for the full schema.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "weakqubit/correlation.hpp"
#include "weakqubit/error.hpp"
#include "weakqubit/io.hpp"
#include "weakqubit/model.hpp"
#include "weakqubit/oracles.hpp"
#include "weakqubit/rng.hpp"
#include "weakqubit/spectral.hpp"
#include "weakqubit/trajectory.hpp"

namespace weakqubit::harness {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char *kToolVersion = "1.0.0";

enum class Scenario { QuantumSim, ClassicalOracle, ExternalRecord };

inline const char *scenario_name(Scenario s) {
    switch (s) {
        case Scenario::QuantumSim: return "quantum_sim";
        case Scenario::ClassicalOracle: return "classical_oracle";
        case Scenario::ExternalRecord: return "external_record";
    }
    return "?";
}

struct CorrelatorSpec {
    double maxLag = 20.0;
    std::size_t batches = 20;
    double binWidth = 0.5;
};

struct LgSpec {
    std::vector<std::pair<double, double>> pairs;
    std::size_t randomPairs = 0;
    double randomTauMin = 0.1;
    double randomTauMax = 9.5;
    double lagHalfWidth = 0.1;
    double significance = 3.0;
};

struct SpectrumSpec {
    std::size_t segmentLength = std::size_t{1} << 14;
    double overlap = 0.5;
    std::size_t batches = 20;
};

struct PeakAreaSpec {
    double windowDelta = 0.3;
    std::optional<double> centerOmega;
    bool singlePeak = false;
    std::size_t segmentLength = std::size_t{1} << 16;
    double significance = 3.0;
};

struct LemmaSpec {
    double windowDelta = 0.3;
    std::size_t segmentLength = std::size_t{1} << 16;
};

struct SchemeComparisonSpec {
    std::optional<Scheme> other;  ///< defaults to the scheme not used by sim
};

struct ThreeTimeSpec {
    std::size_t gridPoints = 201;
};

struct ExportSpec {
    std::string format = "csv";
    std::size_t stride = 1;
};

struct Analyses {
    std::optional<CorrelatorSpec> correlator;
    std::optional<LgSpec> lg;
    bool moments = false;
    std::optional<SpectrumSpec> spectrum;
    std::optional<PeakAreaSpec> peakArea;
    std::optional<LemmaSpec> lemma;
    std::optional<SchemeComparisonSpec> schemeComparison;
    std::optional<ThreeTimeSpec> threeTime;
    std::optional<ExportSpec> exportRecord;
};

struct InputSpec {
    std::filesystem::path path;
    std::string format = "csv";
    double dt = 0.0;
};

struct ExperimentConfig {
    int schemaVersion = kSchemaVersion;
    Scenario scenario = Scenario::QuantumSim;
    std::uint64_t seed = 1;
    PhysicalConfig physical;
    SimConfig sim;
    OracleConfig oracle;
    InputSpec input;
    Analyses analyses;
    std::string outputDir = "out";
    std::optional<double> transient;  ///< time discarded before stationary estimates
    json source;                      ///< the parsed document, echoed into the report

    void set_seed(std::uint64_t s) {
        seed = s;
        sim.seed = s;
        oracle.seed = s;
        source["seed"] = s;
    }
};

// ---------------------------------------------------------------------------
// Config parsing.

namespace detail {

/// Reads one JSON object, tracking the dotted path for error messages and
/// rejecting keys that were never asked for.
class Fields {
   public:
    Fields(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }

    bool has(const std::string &key) const { return j_.contains(key); }

    std::string name(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }

    template <typename T>
    T required(const std::string &key) {
        if (!j_.contains(key)) throw ConfigError(name(key) + " is required");
        return read<T>(key);
    }

    template <typename T>
    T get(const std::string &key, T fallback) {
        return j_.contains(key) ? read<T>(key) : fallback;
    }

    template <typename T>
    std::optional<T> optional(const std::string &key) {
        if (!j_.contains(key)) return std::nullopt;
        return read<T>(key);
    }

    Fields child(const std::string &key) {
        seen_.insert(key);
        return Fields(j_.at(key), name(key));
    }

    const json &raw(const std::string &key) {
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (const auto &item : j_.items())
            if (!seen_.count(item.key())) throw ConfigError(name(item.key()) + ": unknown field");
    }

   private:
    std::string where() const { return path_.empty() ? "config" : path_; }

    template <typename T>
    T read(const std::string &key) {
        seen_.insert(key);
        const json &v = j_.at(key);
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw ConfigError(name(key) + " must be a number");
                const double x = v.get<double>();
                if (!std::isfinite(x)) throw ConfigError(name(key) + " must be finite");
                return x;
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ConfigError(name(key) + " must be true or false");
                return v.get<bool>();
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ConfigError(name(key) + " must be a string");
                return v.get<std::string>();
            } else {
                if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
                    throw ConfigError(name(key) + " must be a non-negative integer");
                return v.get<T>();
            }
        } catch (const json::exception &e) {
            throw ConfigError(name(key) + ": " + e.what());
        }
    }

    const json &j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline std::uint64_t steps_from(Fields &f, double dt) {
    const bool hasDuration = f.has("duration"), hasSteps = f.has("n_steps");
    if (hasDuration == hasSteps) throw ConfigError(f.name("duration") + ": give exactly one of duration or n_steps");
    if (hasSteps) return f.required<std::uint64_t>("n_steps");
    const double T = f.required<double>("duration");
    if (!(T > 0.0)) throw ConfigError(f.name("duration") + " must be > 0");
    return static_cast<std::uint64_t>(std::llround(T / dt));
}

inline void positive(const std::string &name, double v) {
    if (!(v > 0.0)) throw ConfigError(name + " must be > 0");
}

}  // namespace detail

inline ExperimentConfig parse_config(const json &doc, const std::filesystem::path &baseDir = {}) {
    using detail::Fields;
    ExperimentConfig cfg;
    cfg.source = doc;
    Fields top(doc, "");

    cfg.schemaVersion = top.required<int>("schema_version");
    if (cfg.schemaVersion != kSchemaVersion)
        throw ConfigError("schema_version: expected " + std::to_string(kSchemaVersion) + ", got " +
                          std::to_string(cfg.schemaVersion));
    const std::string scenario = top.required<std::string>("scenario");
    if (scenario == "quantum_sim")
        cfg.scenario = Scenario::QuantumSim;
    else if (scenario == "classical_oracle")
        cfg.scenario = Scenario::ClassicalOracle;
    else if (scenario == "external_record")
        cfg.scenario = Scenario::ExternalRecord;
    else
        throw ConfigError("scenario: unknown scenario '" + scenario + "'");
    cfg.seed = top.get<std::uint64_t>("seed", 1);
    cfg.outputDir = top.get<std::string>("output_dir", "out");
    cfg.transient = top.optional<double>("transient");
    if (cfg.transient && *cfg.transient < 0.0) throw ConfigError("transient must be >= 0");

    if (!top.has("physical")) throw ConfigError("physical is required");
    {
        Fields p = top.child("physical");
        cfg.physical.qubit.omega = p.required<double>("omega");
        cfg.physical.detector.deltaI = p.required<double>("delta_i");
        cfg.physical.detector.S0 = p.required<double>("s0");
        cfg.physical.detector.I0 = p.get<double>("i0", 0.0);
        cfg.physical.detector.eta = p.get<double>("eta", 1.0);
        p.finish();
        cfg.physical.validate();
    }

    const char *blocks[] = {"sim", "oracle", "input"};
    const char *wanted = cfg.scenario == Scenario::QuantumSim        ? "sim"
                         : cfg.scenario == Scenario::ClassicalOracle ? "oracle"
                                                                     : "input";
    for (const char *b : blocks) {
        const bool present = top.has(b);
        if (present != (std::string(b) == wanted))
            throw ConfigError(std::string(b) + (present ? ": not allowed for scenario " : ": required for scenario ") +
                              scenario);
    }

    if (cfg.scenario == Scenario::QuantumSim) {
        Fields s = top.child("sim");
        cfg.sim.dt = s.required<double>("dt");
        detail::positive("sim.dt", cfg.sim.dt);
        cfg.sim.nSteps = detail::steps_from(s, cfg.sim.dt);
        if (auto name = s.optional<std::string>("scheme")) cfg.sim.scheme = parse_scheme(*name);
        cfg.sim.renormalizeEvery = s.get<std::uint64_t>("renormalize_every", cfg.sim.renormalizeEvery);
        if (cfg.sim.renormalizeEvery == 0) throw ConfigError("sim.renormalize_every must be >= 1");
        cfg.sim.strictAccuracy = s.get<bool>("strict_accuracy", false);
        if (s.has("initial_state")) {
            Fields r = s.child("initial_state");
            cfg.sim.initialState.rho11 = r.required<double>("rho11");
            cfg.sim.initialState.reRho12 = r.get<double>("re_rho12", 0.0);
            cfg.sim.initialState.imRho12 = r.get<double>("im_rho12", 0.0);
            r.finish();
        }
        s.finish();
        cfg.sim.seed = cfg.seed;
        cfg.sim.validate(cfg.physical);
    } else if (cfg.scenario == Scenario::ClassicalOracle) {
        Fields o = top.child("oracle");
        cfg.oracle.kind = parse_oracle_kind(o.required<std::string>("kind"));
        cfg.oracle.omega = cfg.physical.qubit.omega;
        cfg.oracle.dt = o.required<double>("dt");
        detail::positive("oracle.dt", cfg.oracle.dt);
        cfg.oracle.nSteps = detail::steps_from(o, cfg.oracle.dt);
        cfg.oracle.phaseDiffusion = o.get<double>("phase_diffusion", cfg.oracle.phaseDiffusion);
        cfg.oracle.telegraphRate = o.get<double>("telegraph_rate", cfg.oracle.telegraphRate);
        o.finish();
        cfg.oracle.seed = cfg.seed;
        cfg.oracle.validate();
    } else {
        Fields in = top.child("input");
        const std::filesystem::path p = in.required<std::string>("path");
        cfg.input.path = p.is_absolute() || baseDir.empty() ? p : baseDir / p;
        cfg.input.format = in.get<std::string>("format", p.extension() == ".bin" ? "binary" : "csv");
        if (cfg.input.format != "csv" && cfg.input.format != "binary")
            throw ConfigError("input.format must be 'csv' or 'binary'");
        cfg.input.dt = in.get<double>("dt", 0.0);
        in.finish();
    }

    if (top.has("analyses")) {
        Fields a = top.child("analyses");
        Analyses &an = cfg.analyses;
        if (a.has("correlator")) {
            Fields c = a.child("correlator");
            CorrelatorSpec spec;
            spec.maxLag = c.get<double>("max_lag", spec.maxLag);
            spec.batches = c.get<std::size_t>("batches", spec.batches);
            spec.binWidth = c.get<double>("bin_width", spec.binWidth);
            c.finish();
            detail::positive("analyses.correlator.max_lag", spec.maxLag);
            detail::positive("analyses.correlator.bin_width", spec.binWidth);
            if (spec.batches < 2) throw ConfigError("analyses.correlator.batches must be >= 2");
            an.correlator = spec;
        }
        if (a.has("lg")) {
            Fields l = a.child("lg");
            LgSpec spec;
            if (l.has("pairs")) {
                const json &pairs = l.raw("pairs");
                if (!pairs.is_array()) throw ConfigError("analyses.lg.pairs must be an array of [tau1, tau2]");
                for (std::size_t k = 0; k < pairs.size(); ++k) {
                    const json &pr = pairs[k];
                    if (!pr.is_array() || pr.size() != 2 || !pr[0].is_number() || !pr[1].is_number())
                        throw ConfigError("analyses.lg.pairs[" + std::to_string(k) + "] must be [tau1, tau2]");
                    spec.pairs.emplace_back(pr[0].get<double>(), pr[1].get<double>());
                }
            }
            spec.randomPairs = l.get<std::size_t>("random_pairs", 0);
            spec.randomTauMin = l.get<double>("random_tau_min", spec.randomTauMin);
            spec.randomTauMax = l.get<double>("random_tau_max", spec.randomTauMax);
            spec.lagHalfWidth = l.get<double>("lag_half_width", spec.lagHalfWidth);
            spec.significance = l.get<double>("significance", spec.significance);
            l.finish();
            if (spec.pairs.empty() && spec.randomPairs == 0)
                throw ConfigError("analyses.lg: give pairs or random_pairs");
            if (!(spec.randomTauMin > 0.0) || !(spec.randomTauMax >= spec.randomTauMin))
                throw ConfigError("analyses.lg.random_tau_min/max must satisfy 0 < min <= max");
            if (spec.lagHalfWidth < 0.0) throw ConfigError("analyses.lg.lag_half_width must be >= 0");
            an.lg = spec;
        }
        if (a.has("moments")) {
            Fields m = a.child("moments");
            m.finish();
            an.moments = true;
        }
        if (a.has("spectrum")) {
            Fields s = a.child("spectrum");
            SpectrumSpec spec;
            spec.segmentLength = s.get<std::size_t>("segment_length", spec.segmentLength);
            spec.overlap = s.get<double>("overlap", spec.overlap);
            spec.batches = s.get<std::size_t>("batches", spec.batches);
            s.finish();
            if (spec.segmentLength < 16) throw ConfigError("analyses.spectrum.segment_length must be >= 16");
            if (!(spec.overlap >= 0.0 && spec.overlap < 1.0))
                throw ConfigError("analyses.spectrum.overlap must be in [0, 1)");
            an.spectrum = spec;
        }
        if (a.has("peak_area")) {
            Fields p = a.child("peak_area");
            PeakAreaSpec spec;
            spec.windowDelta = p.get<double>("window_delta", spec.windowDelta);
            spec.centerOmega = p.optional<double>("center_omega");
            spec.singlePeak = p.get<bool>("single_peak", false);
            spec.segmentLength = p.get<std::size_t>("segment_length", spec.segmentLength);
            spec.significance = p.get<double>("significance", spec.significance);
            p.finish();
            detail::positive("analyses.peak_area.window_delta", spec.windowDelta);
            if (spec.centerOmega) detail::positive("analyses.peak_area.center_omega", *spec.centerOmega);
            if (spec.segmentLength < 16) throw ConfigError("analyses.peak_area.segment_length must be >= 16");
            an.peakArea = spec;
        }
        if (a.has("lemma")) {
            Fields l = a.child("lemma");
            LemmaSpec spec;
            spec.windowDelta = l.get<double>("window_delta", spec.windowDelta);
            spec.segmentLength = l.get<std::size_t>("segment_length", spec.segmentLength);
            l.finish();
            detail::positive("analyses.lemma.window_delta", spec.windowDelta);
            an.lemma = spec;
        }
        if (a.has("scheme_comparison")) {
            Fields s = a.child("scheme_comparison");
            SchemeComparisonSpec spec;
            if (auto name = s.optional<std::string>("scheme")) spec.other = parse_scheme(*name);
            s.finish();
            if (cfg.scenario != Scenario::QuantumSim)
                throw ConfigError("analyses.scheme_comparison: requires scenario quantum_sim");
            an.schemeComparison = spec;
        }
        if (a.has("three_time_bound")) {
            Fields t = a.child("three_time_bound");
            ThreeTimeSpec spec;
            spec.gridPoints = t.get<std::size_t>("grid_points", spec.gridPoints);
            t.finish();
            if (spec.gridPoints < 2) throw ConfigError("analyses.three_time_bound.grid_points must be >= 2");
            an.threeTime = spec;
        }
        if (a.has("export")) {
            Fields e = a.child("export");
            ExportSpec spec;
            spec.format = e.get<std::string>("format", spec.format);
            spec.stride = e.get<std::size_t>("stride", spec.stride);
            e.finish();
            if (spec.format != "csv" && spec.format != "binary")
                throw ConfigError("analyses.export.format must be 'csv' or 'binary'");
            if (spec.stride == 0) throw ConfigError("analyses.export.stride must be >= 1");
            an.exportRecord = spec;
        }
        a.finish();

        if (an.moments && cfg.scenario != Scenario::QuantumSim)
            throw ConfigError("analyses.moments: requires scenario quantum_sim");
        if (an.lg && !an.correlator) an.correlator = CorrelatorSpec{};
        if (an.schemeComparison && !an.correlator) an.correlator = CorrelatorSpec{};
        if (an.lg) {
            const double M = an.correlator->maxLag;
            const double hw = an.lg->lagHalfWidth;
            for (std::size_t k = 0; k < an.lg->pairs.size(); ++k) {
                const auto [t1, t2] = an.lg->pairs[k];
                if (!(t1 > 0.0) || !(t2 > 0.0))
                    throw ConfigError("analyses.lg.pairs[" + std::to_string(k) + "]: lags must be > 0");
                if (t1 + t2 + hw > M)
                    throw ConfigError("analyses.lg.pairs[" + std::to_string(k) +
                                      "]: tau1 + tau2 exceeds analyses.correlator.max_lag");
            }
            if (an.lg->randomPairs > 0 && 2.0 * an.lg->randomTauMax + hw > M)
                throw ConfigError("analyses.lg.random_tau_max: 2 tau_max exceeds analyses.correlator.max_lag");
        }
    }
    top.finish();
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path &path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file " + path.string());
    json doc;
    try {
        doc = json::parse(f, nullptr, true, true);
    } catch (const json::parse_error &e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(doc, path.parent_path());
}

// ---------------------------------------------------------------------------
// Records.

struct AcquiredRecord {
    std::optional<TrajectoryRecord> trajectory;
    SignalRecord external;  ///< used when there is no trajectory
    std::vector<std::string> warnings;
    std::uint64_t repairs = 0;

    const SignalRecord &signal() const { return trajectory ? trajectory->signal : external; }
};

inline AcquiredRecord acquire(const ExperimentConfig &cfg) {
    AcquiredRecord rec;
    switch (cfg.scenario) {
        case Scenario::QuantumSim:
            rec.trajectory = simulate(cfg.physical, cfg.sim);
            rec.warnings = rec.trajectory->warnings;
            rec.repairs = rec.trajectory->repairs;
            break;
        case Scenario::ClassicalOracle:
            rec.warnings = cfg.oracle.validate();
            rec.external = generate_oracle(cfg.oracle, cfg.physical.detector);
            break;
        case Scenario::ExternalRecord:
            rec.external = cfg.input.format == "binary"
                               ? io::read_record_binary(cfg.input.path, cfg.physical.detector.I0)
                               : io::read_record_csv(cfg.input.path, cfg.physical.detector.I0, cfg.input.dt);
            break;
    }
    return rec;
}

inline std::size_t first_sample(const ExperimentConfig &cfg, const SignalRecord &sig) {
    if (cfg.transient) return static_cast<std::size_t>(std::ceil(*cfg.transient / sig.dt));
    if (cfg.scenario == Scenario::QuantumSim) return transient_samples(derive_rates(cfg.physical), sig.dt);
    return 0;
}

// ---------------------------------------------------------------------------
// Pipeline.

namespace detail {

inline std::string fmt(const char *f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline json timed(json &timings, const std::string &key, auto &&fn) {
    const auto t0 = std::chrono::steady_clock::now();
    json out = fn();
    timings[key] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

inline std::vector<std::pair<double, double>> random_pairs(const LgSpec &spec, std::uint64_t seed) {
    RandomStream rng(derive_seed(seed, {streams::kTauPairs}));
    std::vector<std::pair<double, double>> out;
    out.reserve(spec.randomPairs);
    const double span = spec.randomTauMax - spec.randomTauMin;
    for (std::size_t k = 0; k < spec.randomPairs; ++k) {
        const double a = spec.randomTauMin + span * rng.uniform();
        const double b = spec.randomTauMin + span * rng.uniform();
        out.emplace_back(a, b);
    }
    return out;
}

}  // namespace detail

struct RunOptions {
    std::optional<std::filesystem::path> outputDir;  ///< overrides the config; empty optional keeps it
    bool writeArtifacts = true;
    unsigned threads = 1;
};

struct RunResult {
    json report;
    json timings;
    std::vector<std::string> summary;
    std::filesystem::path outputDir;
};

class Pipeline {
   public:
    Pipeline(const ExperimentConfig &cfg, const AcquiredRecord &rec, std::optional<std::filesystem::path> outDir)
        : cfg_(cfg), rec_(rec), sig_(rec.signal()), out_(std::move(outDir)), first_(first_sample(cfg, sig_)) {
        const DerivedRates r = derive_rates(cfg.physical);
        quantum_ = cfg.scenario == Scenario::QuantumSim;
        analytic_ = quantum_ && r.underdamped();
        A_ = cfg.physical.detector.signal_scale();
    }

    json analyze(json &timings) {
        json res = json::object();
        const Analyses &an = cfg_.analyses;
        if (an.exportRecord) res["export"] = detail::timed(timings, "export", [&] { return export_record(*an.exportRecord); });
        if (an.moments) res["moments"] = detail::timed(timings, "moments", [&] { return moments(); });
        if (an.correlator) {
            detail::timed(timings, "correlator", [&] {
                estimate_ = estimate_correlator(sig_, an.correlator->maxLag,
                                                {an.correlator->batches, first_, CorrelatorOptions{}.minDurationFactor});
                binned_ = bin_correlator(*estimate_, an.correlator->binWidth);
                res["correlator"] = correlator();
                return json();
            });
        }
        if (an.lg) res["lg"] = detail::timed(timings, "lg", [&] { return lg(*an.lg); });
        if (an.spectrum) res["spectrum"] = detail::timed(timings, "spectrum", [&] { return spectrum(*an.spectrum); });
        if (an.peakArea) res["peak_area"] = detail::timed(timings, "peak_area", [&] { return peak_area(*an.peakArea); });
        if (an.lemma) res["lemma"] = detail::timed(timings, "lemma", [&] { return lemma(*an.lemma); });
        if (an.threeTime) res["three_time_bound"] = detail::timed(timings, "three_time_bound", [&] { return three_time(*an.threeTime); });
        if (an.schemeComparison)
            res["scheme_comparison"] =
                detail::timed(timings, "scheme_comparison", [&] { return scheme_comparison(*an.schemeComparison); });
        return res;
    }

    std::size_t first() const { return first_; }
    const std::vector<std::string> &summary() const { return summary_; }
    const std::vector<std::string> &artifacts() const { return artifacts_; }
    const std::optional<CorrelatorEstimate> &estimate() const { return estimate_; }

   private:
    bool writing() const { return out_.has_value(); }

    std::filesystem::path artifact(const std::string &name) {
        artifacts_.push_back(name);
        return *out_ / name;
    }

    void line(std::string s) { summary_.push_back(std::move(s)); }

    const TrajectoryMoments &trajectory_moments() {
        if (!moments_) {
            const std::size_t batches = cfg_.analyses.correlator ? cfg_.analyses.correlator->batches : 20;
            moments_ = estimate_moments(*rec_.trajectory, first_, batches);
        }
        return *moments_;
    }

    json export_record(const ExportSpec &spec) {
        if (!writing()) return json();
        const bool bin = spec.format == "binary";
        const std::string name = bin ? "record.bin" : "record.csv";
        const std::filesystem::path p = artifact(name);
        if (bin) artifacts_.push_back(name + ".json");
        if (rec_.trajectory) {
            if (bin)
                io::write_trajectory_binary(p, *rec_.trajectory, cfg_.source, spec.stride);
            else
                io::write_trajectory_csv(p, *rec_.trajectory, spec.stride);
        } else {
            if (bin)
                io::write_signal_binary(p, sig_, cfg_.source, spec.stride);
            else
                io::write_signal_csv(p, sig_, spec.stride);
        }
        return {{"file", name}, {"format", spec.format}, {"stride", spec.stride}};
    }

    json moments() {
        const TrajectoryMoments &m = trajectory_moments();
        const DerivedRates r = derive_rates(cfg_.physical);
        const double imBound = 3.0 * r.GammaTotal / cfg_.physical.qubit.omega;
        json j = {{"q_squared_mean", m.qSquaredMean},
                  {"q_squared_stderr", m.qSquaredStderr},
                  {"im_rho_q_mean", m.imRhoQMean},
                  {"im_rho_q_stderr", m.imRhoQStderr},
                  {"weak_coupling_q_squared", 0.5},
                  {"im_rho_q_limit", imBound},
                  {"first_sample", m.firstSample}};
        line("moments: <Q^2> = " + detail::fmt("%.5f", m.qSquaredMean) + " +- " + detail::fmt("%.5f", m.qSquaredStderr) +
             " (weak coupling 0.5); <2 Im rho12 Q> = " + detail::fmt("%.5f", m.imRhoQMean) + " (limit |.| <= " +
             detail::fmt("%.4f", imBound) + ")");
        return j;
    }

    json correlator() {
        const CorrelatorEstimate &est = *estimate_;
        const BinnedCorrelator &b = *binned_;
        json j = {{"max_lag", cfg_.analyses.correlator->maxLag},
                  {"max_lag_index", est.maxLagIndex},
                  {"batches", cfg_.analyses.correlator->batches},
                  {"bin_width", cfg_.analyses.correlator->binWidth},
                  {"first_sample", est.firstSample},
                  {"sample_count", est.sampleCount},
                  {"bins", b.tau.size()}};
        if (writing()) {
            io::write_correlator_csv(artifact("correlator.csv"), est);
            io::write_binned_csv(artifact("correlator_binned.csv"), b);
            j["files"] = {"correlator.csv", "correlator_binned.csv"};
        }

        if (analytic_) {
            std::vector<double> pred(b.tau.size()), z(b.tau.size());
            double se = 0.0, sp = 0.0, worst = 0.0;
            std::size_t fails = 0;
            for (std::size_t k = 0; k < b.tau.size(); ++k) {
                pred[k] = window_average(b.bins[k], [&](double t) { return analytic_kI(t, cfg_.physical); });
                z[k] = (b.kI[k] - pred[k]) / b.kIStderr[k];
                se += (b.kI[k] - pred[k]) * (b.kI[k] - pred[k]);
                sp += pred[k] * pred[k];
                worst = std::max(worst, std::abs(z[k]));
                if (std::abs(z[k]) > 3.0) ++fails;
            }
            const double relRms = std::sqrt(se / sp);
            j["analytic"] = {{"bins_outside_3sigma", fails}, {"max_abs_z", worst}, {"relative_rms", relRms}};
            if (writing()) {
                io::write_csv(artifact("correlator_vs_analytic.csv"), "tau,k_i,k_i_stderr,k_i_analytic,z", b.tau.size(), 5,
                              [&](std::size_t k, std::vector<double> &v) {
                                  v = {b.tau[k], b.kI[k], b.kIStderr[k], pred[k], z[k]};
                              });
            }
            line("K_I vs closed form: " + std::to_string(fails) + "/" + std::to_string(b.tau.size()) +
                 " bins outside 3 sigma, max |z| = " + detail::fmt("%.2f", worst) +
                 ", relative RMS = " + detail::fmt("%.4f", relRms));
        }

        if (!b.kXiQ.empty()) {
            XiQComparison cmp;
            if (quantum_ && analytic_) {
                cmp = compare_xiq(b, trajectory_moments(), cfg_.physical);
            } else {
                cmp.tau = b.tau;
                cmp.measured = b.kXiQ;
                cmp.predicted.assign(b.tau.size(), 0.0);
                cmp.diffStderr = b.kXiQStderr;
            }
            std::size_t fails = 0;
            double worst = 0.0, peak = 0.0;
            for (std::size_t k = 0; k < cmp.tau.size(); ++k) {
                const double z = (cmp.measured[k] - cmp.predicted[k]) / cmp.diffStderr[k];
                worst = std::max(worst, std::abs(z));
                peak = std::max(peak, std::abs(cmp.measured[k]));
                if (std::abs(z) > 3.0) ++fails;
            }
            const char *reference = quantum_ ? "back-action closed form" : "zero";
            j["xi_q"] = {{"reference", reference},
                         {"bins_outside_3sigma", fails},
                         {"max_abs_z", worst},
                         {"max_abs_measured", peak}};
            if (writing()) {
                io::write_csv(artifact("xi_q.csv"), "tau,measured,predicted,diff_stderr", cmp.tau.size(), 4,
                              [&](std::size_t k, std::vector<double> &v) {
                                  v = {cmp.tau[k], cmp.measured[k], cmp.predicted[k], cmp.diffStderr[k]};
                              });
            }
            line(std::string("<xi Q(tau)> vs ") + reference + ": " + std::to_string(fails) + "/" +
                 std::to_string(cmp.tau.size()) + " bins outside 3 sigma, max |z| = " + detail::fmt("%.2f", worst));
        }
        return j;
    }

    json lg(const LgSpec &spec) {
        const CorrelatorEstimate &est = *estimate_;
        LgOptions opt;
        opt.lagHalfWidth = spec.lagHalfWidth;
        opt.significance = spec.significance;
        const double dI = cfg_.physical.detector.deltaI;

        auto evaluate = [&](double t1, double t2) {
            const LgVerdict v = lg_from_estimate(est, t1, t2, dI, opt);
            json j = io::to_json(v);
            if (analytic_) {
                const double exact = analytic_lg_lhs(est, t1, t2, cfg_.physical, opt);
                j["lhs_closed_form"] = exact;
                j["closed_form_z"] = (v.lhs - exact) / v.uncertainty;
            }
            return std::pair{v, j};
        };

        json explicitPairs = json::array();
        std::size_t explicitViolations = 0;
        for (const auto &[t1, t2] : spec.pairs) {
            auto [v, j] = evaluate(t1, t2);
            explicitPairs.push_back(j);
            if (v.violated) ++explicitViolations;
            std::string s = "LG three-time inequality (tau1=" + detail::fmt("%.4f", v.tau1) + ", tau2=" +
                            detail::fmt("%.4f", v.tau2) + "): lhs = " + detail::fmt("%.4f", v.lhs) + " +- " +
                            detail::fmt("%.4f", v.uncertainty) + ", bound = " + detail::fmt("%.4f", v.bound) +
                            ", verdict = " + (v.violated ? "VIOLATED" : "not violated");
            if (j.contains("lhs_closed_form")) s += " (closed form " + detail::fmt("%.4f", j["lhs_closed_form"].get<double>()) + ")";
            line(s);
        }

        json randomPairs = json::array();
        std::size_t randomViolations = 0;
        double worstMargin = -1e300;
        for (const auto &[t1, t2] : detail::random_pairs(spec, cfg_.seed)) {
            auto [v, j] = evaluate(t1, t2);
            randomPairs.push_back(j);
            if (v.violated) ++randomViolations;
            worstMargin = std::max(worstMargin, v.uncertainty > 0 ? v.margin / v.uncertainty : v.margin);
        }

        json verdicts = {{"pairs", explicitPairs}, {"random_pairs", randomPairs}};
        json j = {{"lag_half_width", spec.lagHalfWidth},
                  {"significance", spec.significance},
                  {"pairs", explicitPairs},
                  {"violations", explicitViolations},
                  {"random_pair_count", spec.randomPairs},
                  {"random_pair_violations", randomViolations}};
        if (spec.randomPairs > 0) {
            j["random_pair_max_margin_sigma"] = worstMargin;
            line("LG three-time inequality over " + std::to_string(spec.randomPairs) + " random lag pairs: " +
                 std::to_string(randomViolations) + " violations at " + detail::fmt("%.1f", spec.significance) +
                 " sigma, largest margin " + detail::fmt("%.2f", worstMargin) + " sigma");
        }
        if (writing()) {
            io::write_json(artifact("lg_verdicts.json"), verdicts);
            j["file"] = "lg_verdicts.json";
        }
        return j;
    }

    SpectrumEstimate spectrum_estimate(std::size_t segmentLength, double overlap, std::size_t batches) {
        SpectrumOptions opt;
        opt.segmentLength = segmentLength;
        opt.overlap = overlap;
        opt.batches = batches;
        opt.firstSample = first_;
        return estimate_spectrum(sig_, opt);
    }

    json spectrum(const SpectrumSpec &spec) {
        const SpectrumEstimate est = spectrum_estimate(spec.segmentLength, spec.overlap, spec.batches);
        json j = {{"segment_length", est.segmentLength},
                  {"segments", est.segmentCount},
                  {"resolution", est.resolution()},
                  {"pedestal_estimate", est.s0Estimate}};
        if (quantum_) {
            const double O = cfg_.physical.qubit.omega;
            j["peak_at_omega"] = spectrum_at(est, O);
            j["peak_at_omega_closed_form"] = analytic_spectrum(O, cfg_.physical);
        }
        if (writing()) {
            io::write_spectrum_csv(artifact("spectrum.csv"), est);
            j["file"] = "spectrum.csv";
        }
        return j;
    }

    json peak_area(const PeakAreaSpec &spec) {
        const double O = spec.centerOmega.value_or(cfg_.physical.qubit.omega);
        const SpectrumEstimate est = spectrum_estimate(spec.segmentLength, 0.5, 20);
        const FilteredArea fa = filtered_peak_area_frequency(est, O, spec.windowDelta);
        const PeakAreaVerdict v =
            peak_bound_verdict(fa, O, spec.windowDelta, cfg_.physical.detector.deltaI, spec.singlePeak, spec.significance);
        json j = io::to_json(v);
        j["pedestal"] = fa.pedestal;
        j["fitted_width"] = fa.fittedWidth;
        j["reliable"] = fa.reliable();
        j["segment_length"] = spec.segmentLength;
        j["area_over_signal_scale"] = fa.area / A_;
        if (quantum_) {
            const double closed = analytic_peak_area(cfg_.physical);
            j["closed_form_area"] = closed;
            j["closed_form_area_over_signal_scale"] = closed / A_;
        }
        line("peak area (Delta=" + detail::fmt("%.3f", spec.windowDelta) + "): area = " + detail::fmt("%.4f", v.area) +
             " +- " + detail::fmt("%.4f", v.areaStderr) + " = " + detail::fmt("%.4f", v.area / A_) +
             " (deltaI/2)^2; general bound " + detail::fmt("%.4f", v.generalBound) + ": " +
             bound_status_name(v.general) + "; single-peak bound " + detail::fmt("%.4f", v.singlePeakBound) + ": " +
             bound_status_name(v.singlePeak) + (v.singlePeakClaim ? "" : " (bound not binding: no single-peak claim)") +
             (fa.reliable() ? "" : " [outside regime]"));
        if (writing()) {
            io::write_json(artifact("peak_area.json"), j);
            j["file"] = "peak_area.json";
        }
        return j;
    }

    json lemma(const LemmaSpec &spec) {
        SpectrumOptions so;
        so.segmentLength = spec.segmentLength;
        so.firstSample = first_;
        TimeAreaOptions to;
        to.firstSample = first_;
        const LemmaCheck c = verify_lemma(sig_, cfg_.physical.detector.deltaI, cfg_.physical.qubit.omega,
                                          spec.windowDelta, so, to);
        json j = {{"window_delta", spec.windowDelta},
                  {"frequency_side", c.frequencySide},
                  {"time_side", c.timeSide},
                  {"discrepancy", c.discrepancy},
                  {"tolerance", c.tolerance},
                  {"regime_ok", c.regimeOk},
                  {"holds", c.holds()}};
        line("window lemma (Delta=" + detail::fmt("%.3f", spec.windowDelta) + "): frequency side " +
             detail::fmt("%.5f", c.frequencySide) + ", time side " + detail::fmt("%.5f", c.timeSide) +
             ", discrepancy " + detail::fmt("%.4f", c.discrepancy) + (c.holds() ? " (holds)" : " (FAILS)"));
        if (writing()) {
            io::write_json(artifact("lemma.json"), j);
            j["file"] = "lemma.json";
        }
        return j;
    }

    json three_time(const ThreeTimeSpec &spec) {
        const ThreeTimeMax m = brute_force_three_time_max(spec.gridPoints);
        line("three-time bound: max q1 q2 + q2 q3 - q1 q3 over [-1,1]^3 = " + detail::fmt("%.6f", m.value));
        return {{"grid_points", spec.gridPoints}, {"max", m.value}, {"argmax", m.argmax}};
    }

    json scheme_comparison(const SchemeComparisonSpec &spec) {
        const Scheme primary = cfg_.sim.scheme;
        const Scheme other = spec.other.value_or(primary == Scheme::HeunStratonovich ? Scheme::ItoEuler
                                                                                       : Scheme::HeunStratonovich);
        SimConfig sim = cfg_.sim;
        sim.scheme = other;
        const BinnedCorrelator &a = *binned_;
        BinnedCorrelator b;
        {
            const TrajectoryRecord rec = simulate(cfg_.physical, sim);
            const CorrelatorEstimate est = estimate_correlator(rec.signal, cfg_.analyses.correlator->maxLag,
                                                               {cfg_.analyses.correlator->batches, first_, 50.0});
            b = bin_correlator(est, cfg_.analyses.correlator->binWidth);
        }
        std::size_t peak = 0;
        double maxDiff = 0.0;
        for (std::size_t k = 0; k < a.kI.size(); ++k) {
            if (std::abs(a.kI[k]) > std::abs(a.kI[peak])) peak = k;
            maxDiff = std::max(maxDiff, std::abs(a.kI[k] - b.kI[k]));
        }
        const double rel = std::abs(a.kI[peak] - b.kI[peak]) / std::abs(a.kI[peak]);
        json j = {{"primary", scheme_name(primary)},
                  {"other", scheme_name(other)},
                  {"noise", "common random numbers (same seed)"},
                  {"dt", sim.dt},
                  {"peak_tau", a.tau[peak]},
                  {"k_primary", a.kI[peak]},
                  {"k_other", b.kI[peak]},
                  {"relative_difference", rel},
                  {"max_abs_difference", maxDiff}};
        if (writing()) {
            io::write_csv(artifact("scheme_comparison.csv"), "tau,k_primary,k_other", a.tau.size(), 3,
                          [&](std::size_t k, std::vector<double> &v) { v = {a.tau[k], a.kI[k], b.kI[k]}; });
            j["file"] = "scheme_comparison.csv";
        }
        line(std::string("scheme comparison (") + scheme_name(primary) + " vs " + scheme_name(other) + ", dt=" +
             detail::fmt("%g", sim.dt) + "): K_I at tau=" + detail::fmt("%.3f", a.tau[peak]) + " differs by " +
             detail::fmt("%.5f", rel) + " relative");
        return j;
    }

    const ExperimentConfig &cfg_;
    const AcquiredRecord &rec_;
    const SignalRecord &sig_;
    std::optional<std::filesystem::path> out_;
    std::size_t first_;
    bool quantum_ = false;
    bool analytic_ = false;
    double A_ = 1.0;
    std::optional<CorrelatorEstimate> estimate_;
    std::optional<BinnedCorrelator> binned_;
    std::optional<TrajectoryMoments> moments_;
    std::vector<std::string> summary_;
    std::vector<std::string> artifacts_;
};

inline json seeds_json(const ExperimentConfig &cfg) {
    json s = {{"seed", cfg.seed}};
    if (cfg.scenario == Scenario::QuantumSim) s["detector_noise"] = trajectory_seed(cfg.seed);
    if (cfg.scenario == Scenario::ClassicalOracle) {
        s["oracle_process"] = derive_seed(cfg.seed, {streams::kOracleProcess});
        s["oracle_noise"] = derive_seed(cfg.seed, {streams::kOracleNoise});
    }
    if (cfg.analyses.lg && cfg.analyses.lg->randomPairs > 0) s["tau_pairs"] = derive_seed(cfg.seed, {streams::kTauPairs});
    return s;
}

inline json rates_json(const PhysicalConfig &p) {
    const DerivedRates r = derive_rates(p);
    json j = {{"measurement_dephasing", p.detector.deltaI * p.detector.deltaI / (4.0 * p.detector.S0)},
              {"excess_dephasing", r.gamma},
              {"gamma_total", r.GammaTotal},
              {"underdamped", r.underdamped()}};
    j["omega_tilde"] = r.omegaTilde ? json(*r.omegaTilde) : json(nullptr);
    return j;
}

/// Runs the scenario and all configured analyses. Writes report.json,
/// summary.txt, timings.json and the artifact files unless disabled.
inline RunResult run(const ExperimentConfig &cfg, const RunOptions &opt = {}) {
    RunResult result;
    result.outputDir = opt.outputDir.value_or(std::filesystem::path(cfg.outputDir));
    json timings = json::object();
    const auto t0 = std::chrono::steady_clock::now();

    AcquiredRecord rec;
    detail::timed(timings, "acquire", [&] {
        rec = acquire(cfg);
        return json();
    });
    const SignalRecord &sig = rec.signal();

    std::optional<std::filesystem::path> out;
    if (opt.writeArtifacts) {
        out = result.outputDir;
        std::filesystem::create_directories(*out);
    }
    Pipeline pipe(cfg, rec, out);
    json analyses = pipe.analyze(timings);

    json &rep = result.report;
    rep["tool"] = "weakqubit";
    rep["version"] = kToolVersion;
    rep["schema_version"] = kSchemaVersion;
    rep["config"] = cfg.source;
    rep["scenario"] = scenario_name(cfg.scenario);
    rep["seeds"] = seeds_json(cfg);
    rep["rates"] = rates_json(cfg.physical);
    rep["signal_scale"] = cfg.physical.detector.signal_scale();
    rep["record"] = {{"samples", sig.size()},
                     {"dt", sig.dt},
                     {"duration", sig.duration()},
                     {"first_sample", pipe.first()},
                     {"has_q", sig.has_q()},
                     {"has_xi", sig.has_xi()}};
    if (rec.trajectory) {
        rep["record"]["scheme"] = scheme_name(cfg.sim.scheme);
        rep["record"]["repairs"] = rec.repairs;
    }
    rep["warnings"] = rec.warnings;
    rep["analyses"] = analyses;
    rep["artifacts"] = pipe.artifacts();

    result.summary.push_back(std::string("weakqubit ") + kToolVersion + " scenario " + scenario_name(cfg.scenario) +
                             ", seed " + std::to_string(cfg.seed) + ", " + std::to_string(sig.size()) + " samples at dt " +
                             detail::fmt("%g", sig.dt));
    for (const auto &w : rec.warnings) result.summary.push_back("warning: " + w);
    for (const auto &l : pipe.summary()) result.summary.push_back(l);

    timings["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.timings = timings;

    if (opt.writeArtifacts) {
        io::write_json(*out / "report.json", rep);
        io::write_json(*out / "timings.json", timings);
        std::ofstream s = io::open_out(*out / "summary.txt");
        for (const auto &l : result.summary) s << l << '\n';
    }
    return result;
}

// ---------------------------------------------------------------------------
// Sweeps.

enum class SweepParam { Gamma, Tau, WindowDelta, PhaseDiffusion };

inline SweepParam parse_sweep_param(const std::string &name) {
    if (name == "gamma") return SweepParam::Gamma;
    if (name == "tau") return SweepParam::Tau;
    if (name == "window_delta") return SweepParam::WindowDelta;
    if (name == "phase_diffusion") return SweepParam::PhaseDiffusion;
    throw ConfigError("--param: unknown sweep parameter '" + name +
                      "' (expected gamma, tau, window_delta or phase_diffusion)");
}

inline const char *sweep_param_name(SweepParam p) {
    switch (p) {
        case SweepParam::Gamma: return "gamma";
        case SweepParam::Tau: return "tau";
        case SweepParam::WindowDelta: return "window_delta";
        case SweepParam::PhaseDiffusion: return "phase_diffusion";
    }
    return "?";
}

struct SweepRow {
    double value = 0.0;
    std::uint64_t seed = 0;
    double tau1 = NAN, tau2 = NAN, lhs = NAN, uncertainty = NAN, bound = NAN, margin = NAN;
    double violated = NAN;
    double lhsClosedForm = NAN, lhsWeakCoupling = NAN;
    double area = NAN, areaStderr = NAN, generalMargin = NAN, singlePeakMargin = NAN;
};

namespace detail {

inline void fill_from(SweepRow &row, const json &analyses) {
    if (analyses.contains("lg") && !analyses["lg"]["pairs"].empty()) {
        const json &v = analyses["lg"]["pairs"][0];
        row.tau1 = v["tau1"];
        row.tau2 = v["tau2"];
        row.lhs = v["lhs"];
        row.uncertainty = v["uncertainty"].is_null() ? NAN : v["uncertainty"].get<double>();
        row.bound = v["bound"];
        row.margin = v["margin"];
        row.violated = v["violated"].get<bool>() ? 1.0 : 0.0;
        if (v.contains("lhs_closed_form")) row.lhsClosedForm = v["lhs_closed_form"];
    }
    if (analyses.contains("peak_area")) {
        const json &p = analyses["peak_area"];
        row.area = p["area"];
        row.areaStderr = p["area_stderr"];
        row.generalMargin = row.area - p["general_bound"].get<double>();
        row.singlePeakMargin = row.area - p["single_peak_bound"].get<double>();
    }
}

/// The analyses a sweep point needs: the first LG pair and the peak area.
inline Analyses sweep_analyses(const Analyses &an) {
    Analyses out;
    out.correlator = an.correlator;
    if (an.lg) {
        out.lg = an.lg;
        out.lg->randomPairs = 0;
        if (out.lg->pairs.size() > 1) out.lg->pairs.resize(1);
        if (out.lg->pairs.empty()) out.lg.reset();
    }
    out.peakArea = an.peakArea;
    return out;
}

}  // namespace detail

inline void write_sweep_csv(const std::filesystem::path &path, SweepParam p, const std::vector<SweepRow> &rows) {
    std::ofstream f = io::open_out(path);
    f << "parameter,value,seed,tau1,tau2,lg_lhs,lg_uncertainty,lg_bound,lg_margin,lg_violated,lg_lhs_closed_form,"
         "lg_lhs_weak_coupling,area,area_stderr,general_margin,single_peak_margin\n";
    for (const auto &r : rows) {
        std::string l = sweep_param_name(p);
        l += ',';
        io::append_number(l, r.value);
        l += ',' + std::to_string(r.seed);
        for (double v : {r.tau1, r.tau2, r.lhs, r.uncertainty, r.bound, r.margin,
                         r.violated, r.lhsClosedForm, r.lhsWeakCoupling, r.area, r.areaStderr, r.generalMargin,
                         r.singlePeakMargin}) {
            l += ',';
            io::append_number(l, v);
        }
        f << l << '\n';
    }
}

/// Repeats the pipeline per value. Parameters that change the data (gamma via
/// S0, phase_diffusion) regenerate the record with a derived per-run seed;
/// analysis parameters (tau, window_delta) reuse a single record.
inline std::vector<SweepRow> sweep(const ExperimentConfig &base, SweepParam param, const std::vector<double> &values,
                                   const RunOptions &opt = {}) {
    if (values.empty()) throw ConfigError("--values: at least one value is required");
    std::vector<SweepRow> rows(values.size());

    const bool regenerates = param == SweepParam::Gamma || param == SweepParam::PhaseDiffusion;
    if (param == SweepParam::Gamma && base.scenario != Scenario::QuantumSim)
        throw ConfigError("--param gamma: requires scenario quantum_sim");
    if (param == SweepParam::PhaseDiffusion &&
        (base.scenario != Scenario::ClassicalOracle || base.oracle.kind == OracleKind::RandomTelegraph))
        throw ConfigError("--param phase_diffusion: requires a phase-diffusing classical_oracle");
    if (param == SweepParam::WindowDelta && !base.analyses.peakArea)
        throw ConfigError("--param window_delta: config has no analyses.peak_area block");

    if (regenerates) {
        std::vector<ExperimentConfig> cfgs(values.size(), base);
        for (std::size_t k = 0; k < values.size(); ++k) {
            ExperimentConfig &c = cfgs[k];
            c.analyses = detail::sweep_analyses(base.analyses);
            c.set_seed(derive_seed(base.seed, {streams::kSweepRun, k}));
            if (param == SweepParam::Gamma) {
                detail::positive("--values", values[k]);
                const auto &d = c.physical.detector;
                c.physical.detector.S0 = d.deltaI * d.deltaI / (4.0 * d.eta * values[k]);
                c.physical.validate();
            } else {
                if (!(values[k] >= 0.0)) throw ConfigError("--values: phase diffusion must be >= 0");
                c.oracle.phaseDiffusion = values[k];
                c.oracle.validate();
            }
            rows[k].value = values[k];
            rows[k].seed = c.seed;
        }
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(values.size());
        auto worker = [&] {
            for (std::size_t k = next++; k < values.size(); k = next++) {
                try {
                    RunOptions ro;
                    ro.writeArtifacts = false;
                    const RunResult r = run(cfgs[k], ro);
                    detail::fill_from(rows[k], r.report["analyses"]);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            }
        };
        {
            std::vector<std::jthread> pool;
            const unsigned n = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(values.size())));
            for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
            worker();
        }
        for (auto &e : errors)
            if (e) std::rethrow_exception(e);
    } else {
        const AcquiredRecord rec = acquire(base);
        const SignalRecord &sig = rec.signal();
        const std::size_t first = first_sample(base, sig);
        const bool closedForm = base.scenario == Scenario::QuantumSim && derive_rates(base.physical).underdamped();
        const double dI = base.physical.detector.deltaI;
        if (param == SweepParam::Tau) {
            const CorrelatorSpec cs = base.analyses.correlator.value_or(CorrelatorSpec{});
            const LgSpec ls = base.analyses.lg.value_or(LgSpec{});
            LgOptions lo;
            lo.lagHalfWidth = ls.lagHalfWidth;
            lo.significance = ls.significance;
            for (double t : values)
                if (!(t > 0.0) || 2.0 * t + ls.lagHalfWidth > cs.maxLag)
                    throw ConfigError("--values: tau " + io::format_number(t) +
                                      " must be > 0 with 2 tau within analyses.correlator.max_lag");
            const CorrelatorEstimate est =
                estimate_correlator(sig, cs.maxLag, {cs.batches, first, CorrelatorOptions{}.minDurationFactor});
            for (std::size_t k = 0; k < values.size(); ++k) {
                SweepRow &row = rows[k];
                const LgVerdict v = lg_from_estimate(est, values[k], values[k], dI, lo);
                row.tau1 = v.tau1;
                row.tau2 = v.tau2;
                row.lhs = v.lhs;
                row.uncertainty = v.uncertainty;
                row.bound = v.bound;
                row.margin = v.margin;
                row.violated = v.violated ? 1.0 : 0.0;
                row.lhsWeakCoupling = lg_equal_tau_curve(values[k], base.physical);
                if (closedForm) row.lhsClosedForm = analytic_lg_lhs(est, values[k], values[k], base.physical, lo);
            }
        } else {
            const PeakAreaSpec ps = *base.analyses.peakArea;
            const double O = ps.centerOmega.value_or(base.physical.qubit.omega);
            SpectrumOptions so;
            so.segmentLength = ps.segmentLength;
            so.firstSample = first;
            const SpectrumEstimate spec = estimate_spectrum(sig, so);
            for (std::size_t k = 0; k < values.size(); ++k) {
                detail::positive("--values", values[k]);
                const FilteredArea fa = filtered_peak_area_frequency(spec, O, values[k]);
                const PeakAreaVerdict v = peak_bound_verdict(fa, O, values[k], dI, ps.singlePeak, ps.significance);
                SweepRow &row = rows[k];
                row.area = v.area;
                row.areaStderr = v.areaStderr;
                row.generalMargin = v.area - v.generalBound;
                row.singlePeakMargin = v.area - v.singlePeakBound;
            }
        }
        for (std::size_t k = 0; k < values.size(); ++k) {
            rows[k].value = values[k];
            rows[k].seed = base.seed;
        }
    }

    const std::filesystem::path out = opt.outputDir.value_or(std::filesystem::path(base.outputDir));
    if (opt.writeArtifacts) write_sweep_csv(out / "sweep.csv", param, rows);
    return rows;
}

}  // namespace weakqubit::harness
