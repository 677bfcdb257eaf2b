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

// Record and estimate export/import.
//
// Records:  CSV  t,rho11,re_rho12,im_rho12,q,xi,i
//           BIN  the same columns, little-endian f64, row-major, plus a
//                "<name>.json" sidecar {columns, rows, dt, i0, config}.
// Classical and external records have no coherence; those columns hold nan.

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "weakqubit/correlation.hpp"
#include "weakqubit/error.hpp"
#include "weakqubit/model.hpp"
#include "weakqubit/spectral.hpp"
#include "weakqubit/trajectory.hpp"

namespace weakqubit::io {

using json = nlohmann::json;

inline constexpr std::array<const char *, 7> kRecordColumns = {"t", "rho11", "re_rho12", "im_rho12", "q", "xi", "i"};

/// Shortest round-trip decimal form; "nan" / "inf" / "-inf" for non-finite values.
inline void append_number(std::string &out, double v) {
    if (std::isnan(v)) {
        out += "nan";
        return;
    }
    if (std::isinf(v)) {
        out += v > 0 ? "inf" : "-inf";
        return;
    }
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

inline std::string format_number(double v) {
    std::string s;
    append_number(s, v);
    return s;
}

inline double parse_number(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError("not a number: '" + std::string(s) + "'");
    return v;
}

inline std::ofstream open_out(const std::filesystem::path &path, bool binary = false) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
    if (!f) throw ConfigError("cannot open output file " + path.string());
    return f;
}

/// Writes rows of doubles under a header; one row per call of `row(k, buffer)`.
template <typename RowFn>
void write_csv(const std::filesystem::path &path, std::string_view header, std::size_t rows, std::size_t cols,
               RowFn &&row) {
    std::ofstream f = open_out(path);
    std::string line;
    std::vector<double> values(cols);
    f << header << '\n';
    for (std::size_t k = 0; k < rows; ++k) {
        row(k, values);
        line.clear();
        for (std::size_t c = 0; c < cols; ++c) {
            if (c) line += ',';
            append_number(line, values[c]);
        }
        line += '\n';
        f.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
}

inline std::string join_columns() {
    std::string h;
    for (std::size_t c = 0; c < kRecordColumns.size(); ++c) {
        if (c) h += ',';
        h += kRecordColumns[c];
    }
    return h;
}

namespace detail {
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Row k of the seven record columns for a trajectory (or a bare signal when `traj` is null).
inline void record_row(const TrajectoryRecord *traj, const SignalRecord &sig, std::size_t k, std::vector<double> &v) {
    const double q = sig.has_q() ? sig.qTruth[k] : kNaN;
    v[0] = static_cast<double>(k) * sig.dt;
    if (traj) {
        v[1] = traj->rho11[k];
        v[2] = traj->reRho12[k];
        v[3] = traj->imRho12[k];
    } else {
        v[1] = 0.5 * (1.0 + q);
        v[2] = kNaN;
        v[3] = kNaN;
    }
    v[4] = q;
    v[5] = sig.has_xi() ? sig.xiTruth[k] : kNaN;
    v[6] = sig.samples[k];
}

inline std::size_t strided_rows(std::size_t n, std::size_t stride) { return stride == 0 ? n : (n + stride - 1) / stride; }

inline void put_le(std::string &buf, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

inline double get_le(const unsigned char *p) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | p[b];
    return std::bit_cast<double>(bits);
}

inline void write_record_csv(const std::filesystem::path &path, const TrajectoryRecord *traj, const SignalRecord &sig,
                             std::size_t stride) {
    stride = std::max<std::size_t>(stride, 1);
    write_csv(path, join_columns(), strided_rows(sig.size(), stride), kRecordColumns.size(),
              [&](std::size_t r, std::vector<double> &v) { record_row(traj, sig, r * stride, v); });
}

inline void write_record_binary(const std::filesystem::path &path, const TrajectoryRecord *traj, const SignalRecord &sig,
                                std::size_t stride, const json &config) {
    stride = std::max<std::size_t>(stride, 1);
    const std::size_t rows = strided_rows(sig.size(), stride);
    std::ofstream f = open_out(path, true);
    std::vector<double> v(kRecordColumns.size());
    std::string buf;
    buf.reserve(8 * kRecordColumns.size() * 4096);
    for (std::size_t r = 0; r < rows; ++r) {
        record_row(traj, sig, r * stride, v);
        for (double x : v) put_le(buf, x);
        if (buf.size() >= 8 * kRecordColumns.size() * 4096) {
            f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));

    json side;
    side["format"] = "f64le-row-major";
    side["columns"] = json::array();
    for (const char *c : kRecordColumns) side["columns"].push_back(c);
    side["rows"] = rows;
    side["dt"] = sig.dt * static_cast<double>(stride);
    side["i0"] = sig.i0;
    side["config"] = config;
    std::filesystem::path sidecar = path;
    sidecar += ".json";
    open_out(sidecar) << side.dump(2) << '\n';
}
}  // namespace detail

/// `stride` > 1 keeps every stride-th row (plot-sized output).
inline void write_trajectory_csv(const std::filesystem::path &path, const TrajectoryRecord &rec, std::size_t stride = 1) {
    detail::write_record_csv(path, &rec, rec.signal, stride);
}

inline void write_signal_csv(const std::filesystem::path &path, const SignalRecord &sig, std::size_t stride = 1) {
    detail::write_record_csv(path, nullptr, sig, stride);
}

inline void write_trajectory_binary(const std::filesystem::path &path, const TrajectoryRecord &rec,
                                    const json &config = json::object(), std::size_t stride = 1) {
    detail::write_record_binary(path, &rec, rec.signal, stride, config);
}

inline void write_signal_binary(const std::filesystem::path &path, const SignalRecord &sig,
                                const json &config = json::object(), std::size_t stride = 1) {
    detail::write_record_binary(path, nullptr, sig, stride, config);
}

namespace detail {
/// Column layout shared by both readers. Only `i` is mandatory; q and xi are
/// kept when every value is finite.
inline SignalRecord assemble(std::vector<double> &&i, std::vector<double> &&q, std::vector<double> &&xi, double dt,
                             double i0) {
    auto all_finite = [](const std::vector<double> &v) {
        return !v.empty() && std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    SignalRecord rec;
    rec.dt = dt;
    rec.i0 = i0;
    rec.samples = std::move(i);
    if (all_finite(q)) rec.qTruth = std::move(q);
    if (all_finite(xi)) rec.xiTruth = std::move(xi);
    rec.validate();
    return rec;
}
}  // namespace detail

/// Reads a record CSV. The header must name an `i` column and either a `t`
/// column or an explicit dt (> 0). Other columns are optional.
inline SignalRecord read_record_csv(const std::filesystem::path &path, double i0, double dt = 0.0) {
    std::ifstream f(path);
    if (!f) throw ConfigError("input.path: cannot open " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw ConfigError("input.path: empty file " + path.string());
    std::vector<std::string> names;
    for (std::size_t pos = 0;;) {
        const std::size_t comma = line.find(',', pos);
        std::string name = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.pop_back();
        names.push_back(name);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    auto index_of = [&](std::string_view n) -> long {
        for (std::size_t c = 0; c < names.size(); ++c)
            if (names[c] == n) return static_cast<long>(c);
        return -1;
    };
    const long ci = index_of("i"), ct = index_of("t"), cq = index_of("q"), cx = index_of("xi");
    if (ci < 0) throw ConfigError("input.path: CSV header has no 'i' column");
    if (ct < 0 && !(dt > 0.0)) throw ConfigError("input.dt: required when the CSV has no 't' column");

    std::vector<double> t, i, q, xi;
    std::vector<std::string_view> fields;
    std::size_t lineNo = 1;
    while (std::getline(f, line)) {
        ++lineNo;
        if (line.empty() || line == "\r") continue;
        fields.clear();
        std::string_view sv(line);
        for (std::size_t pos = 0;;) {
            const std::size_t comma = sv.find(',', pos);
            fields.push_back(sv.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        if (fields.size() != names.size())
            throw ConfigError("input.path: line " + std::to_string(lineNo) + " has " + std::to_string(fields.size()) +
                              " fields, expected " + std::to_string(names.size()));
        i.push_back(parse_number(fields[static_cast<std::size_t>(ci)]));
        if (ct >= 0) t.push_back(parse_number(fields[static_cast<std::size_t>(ct)]));
        if (cq >= 0) q.push_back(parse_number(fields[static_cast<std::size_t>(cq)]));
        if (cx >= 0) xi.push_back(parse_number(fields[static_cast<std::size_t>(cx)]));
    }
    if (!(dt > 0.0)) {
        if (t.size() < 2) throw ConfigError("input.path: need at least two rows to infer dt");
        dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    }
    return detail::assemble(std::move(i), std::move(q), std::move(xi), dt, i0);
}

/// Reads a binary dump through its sidecar; i0 comes from the caller.
inline SignalRecord read_record_binary(const std::filesystem::path &path, double i0) {
    std::filesystem::path sidecar = path;
    sidecar += ".json";
    std::ifstream sf(sidecar);
    if (!sf) throw ConfigError("input.path: missing sidecar " + sidecar.string());
    json side;
    try {
        side = json::parse(sf);
    } catch (const json::exception &e) {
        throw ConfigError("input.path: sidecar is not valid JSON: " + std::string(e.what()));
    }
    if (!side.contains("columns") || !side.contains("rows") || !side.contains("dt"))
        throw ConfigError("input.path: sidecar must list columns, rows and dt");
    const auto columns = side["columns"].get<std::vector<std::string>>();
    const auto rows = side["rows"].get<std::size_t>();
    const double dt = side["dt"].get<double>();
    auto index_of = [&](std::string_view n) -> long {
        for (std::size_t c = 0; c < columns.size(); ++c)
            if (columns[c] == n) return static_cast<long>(c);
        return -1;
    };
    const long ci = index_of("i"), cq = index_of("q"), cx = index_of("xi");
    if (ci < 0) throw ConfigError("input.path: sidecar has no 'i' column");

    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("input.path: cannot open " + path.string());
    const std::size_t width = columns.size() * 8;
    if (std::filesystem::file_size(path) != rows * width)
        throw ConfigError("input.path: file size does not match sidecar rows x columns");
    std::vector<double> i(rows), q(cq >= 0 ? rows : 0), xi(cx >= 0 ? rows : 0);
    std::vector<unsigned char> buf(width);
    for (std::size_t r = 0; r < rows; ++r) {
        f.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(width));
        i[r] = detail::get_le(buf.data() + 8 * ci);
        if (cq >= 0) q[r] = detail::get_le(buf.data() + 8 * cq);
        if (cx >= 0) xi[r] = detail::get_le(buf.data() + 8 * cx);
    }
    return detail::assemble(std::move(i), std::move(q), std::move(xi), dt, i0);
}

inline void write_correlator_csv(const std::filesystem::path &path, const CorrelatorEstimate &est) {
    const bool xq = !est.kXiQ.empty();
    write_csv(path, "tau,k_i,k_i_stderr,k_xi_q,k_xi_q_stderr", est.tauGrid.size(), 5,
              [&](std::size_t k, std::vector<double> &v) {
                  v = {est.tauGrid[k], est.kI[k], est.kIStderr[k], xq ? est.kXiQ[k] : detail::kNaN,
                       xq ? est.kXiQStderr[k] : detail::kNaN};
              });
}

/// Same columns for lag-binned averages (tau is the bin centre).
inline void write_binned_csv(const std::filesystem::path &path, const BinnedCorrelator &b) {
    const bool xq = !b.kXiQ.empty();
    write_csv(path, "tau,k_i,k_i_stderr,k_xi_q,k_xi_q_stderr", b.tau.size(), 5, [&](std::size_t k, std::vector<double> &v) {
        v = {b.tau[k], b.kI[k], b.kIStderr[k], xq ? b.kXiQ[k] : detail::kNaN, xq ? b.kXiQStderr[k] : detail::kNaN};
    });
}

inline void write_spectrum_csv(const std::filesystem::path &path, const SpectrumEstimate &est) {
    write_csv(path, "omega,s_i,s_i_stderr", est.omegaGrid.size(), 3, [&](std::size_t k, std::vector<double> &v) {
        v = {est.omegaGrid[k], est.sI[k], est.sIStderr.empty() ? detail::kNaN : est.sIStderr[k]};
    });
}

/// JSON numbers cannot be nan; such values become null.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const LgVerdict &v) {
    return {{"tau1", number(v.tau1)},     {"tau2", number(v.tau2)},
            {"lhs", number(v.lhs)},       {"bound", number(v.bound)},
            {"margin", number(v.margin)}, {"uncertainty", number(v.uncertainty)},
            {"significance", v.significance}, {"violated", v.violated}};
}

inline json to_json(const PeakAreaVerdict &v) {
    return {{"center_omega", number(v.centerOmega)},
            {"window_delta", number(v.windowDelta)},
            {"area", number(v.area)},
            {"area_stderr", number(v.areaStderr)},
            {"general_bound", number(v.generalBound)},
            {"single_peak_bound", number(v.singlePeakBound)},
            {"quantum_reference", number(v.quantumReference)},
            {"significance", v.significance},
            {"single_peak_claim", v.singlePeakClaim},
            {"general", bound_status_name(v.general)},
            {"single_peak", bound_status_name(v.singlePeak)},
            {"window_ratio_ok", v.windowRatioOk},
            {"narrow_peak_ok", v.narrowPeakOk}};
}

inline void write_json(const std::filesystem::path &path, const json &j) { open_out(path) << j.dump(2) << '\n'; }

}  // namespace weakqubit::io
