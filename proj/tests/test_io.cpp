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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "weakqubit/io.hpp"
#include "weakqubit/oracles.hpp"

namespace wq = weakqubit;
namespace io = weakqubit::io;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
    const fs::path dir = fs::path(testing::TempDir()) / "weakqubit_io";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path &p) {
    std::ifstream f(p);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

wq::TrajectoryRecord small_trajectory() {
    wq::PhysicalConfig p;
    p.detector.I0 = 0.5;
    wq::SimConfig s;
    s.nSteps = 999;
    s.seed = 8;
    return wq::simulate(p, s);
}

}  // namespace

TEST(Numbers, ShortestRoundTrip) {
    for (double v : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0, 123456789.0})
        EXPECT_EQ(io::parse_number(io::format_number(v)), v);
    EXPECT_EQ(io::format_number(0.5), "0.5");
    EXPECT_EQ(io::format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
    EXPECT_TRUE(std::isnan(io::parse_number("nan")));
    EXPECT_TRUE(std::isinf(io::parse_number("-inf")));
    EXPECT_THROW(io::parse_number("abc"), wq::ConfigError);
}

TEST(RecordCsv, TrajectoryRoundTripIsExact) {
    const auto traj = small_trajectory();
    const auto path = scratch("traj.csv");
    io::write_trajectory_csv(path, traj);
    std::ifstream f(path);
    std::string header;
    std::getline(f, header);
    EXPECT_EQ(header, "t,rho11,re_rho12,im_rho12,q,xi,i");
    const auto back = io::read_record_csv(path, 0.5);
    EXPECT_EQ(back.samples, traj.signal.samples);
    EXPECT_EQ(back.qTruth, traj.signal.qTruth);
    EXPECT_EQ(back.xiTruth, traj.signal.xiTruth);
    EXPECT_NEAR(back.dt, traj.sim.dt, 1e-15);
    EXPECT_EQ(back.i0, 0.5);
}

TEST(RecordCsv, StrideKeepsEveryKthRow) {
    const auto traj = small_trajectory();
    const auto path = scratch("traj_stride.csv");
    io::write_trajectory_csv(path, traj, 10);
    const auto back = io::read_record_csv(path, 0.5);
    ASSERT_EQ(back.size(), 100u);
    EXPECT_EQ(back.samples[3], traj.signal.samples[30]);
    EXPECT_NEAR(back.dt, 10 * traj.sim.dt, 1e-12);
}

TEST(RecordCsv, OracleSignalHasNoCoherenceColumns) {
    wq::OracleConfig c;
    c.nSteps = 50;
    const auto sig = wq::generate_oracle(c, {});
    const auto path = scratch("oracle.csv");
    io::write_signal_csv(path, sig);
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    std::getline(f, line);
    EXPECT_NE(line.find(",nan,nan,"), std::string::npos) << line;
    const auto back = io::read_record_csv(path, 0.0);
    EXPECT_EQ(back.qTruth, sig.qTruth);
    EXPECT_EQ(back.samples, sig.samples);
}

TEST(RecordCsv, MinimalExternalFile) {
    const auto path = scratch("external.csv");
    std::ofstream(path) << "i\n1.5\n0.5\n2\n";
    EXPECT_THROW(io::read_record_csv(path, 1.0), wq::ConfigError);  // no t column and no dt
    const auto rec = io::read_record_csv(path, 1.0, 0.01);
    EXPECT_EQ(rec.samples, (std::vector<double>{1.5, 0.5, 2.0}));
    EXPECT_FALSE(rec.has_q());
    EXPECT_FALSE(rec.has_xi());
    EXPECT_EQ(rec.dt, 0.01);
}

TEST(RecordCsv, Errors) {
    const auto noI = scratch("no_i.csv");
    std::ofstream(noI) << "t,q\n0,1\n";
    try {
        io::read_record_csv(noI, 0.0, 0.1);
        FAIL();
    } catch (const wq::ConfigError &e) {
        EXPECT_NE(std::string(e.what()).find("'i'"), std::string::npos);
    }
    const auto ragged = scratch("ragged.csv");
    std::ofstream(ragged) << "t,i\n0,1\n0.1\n";
    EXPECT_THROW(io::read_record_csv(ragged, 0.0), wq::ConfigError);
    EXPECT_THROW(io::read_record_csv(scratch("does_not_exist.csv"), 0.0), wq::ConfigError);
}

TEST(RecordBinary, RoundTripAndSidecar) {
    const auto traj = small_trajectory();
    const auto path = scratch("traj.bin");
    io::write_trajectory_binary(path, traj, {{"seed", 8}});
    EXPECT_EQ(fs::file_size(path), 1000u * 7u * 8u);
    fs::path sidecarPath = path;
    sidecarPath += ".json";
    const auto side = io::json::parse(slurp(sidecarPath));
    EXPECT_EQ(side["rows"], 1000);
    EXPECT_EQ(side["columns"].size(), 7u);
    EXPECT_EQ(side["columns"][6], "i");
    EXPECT_EQ(side["config"]["seed"], 8);
    const auto back = io::read_record_binary(path, 0.5);
    EXPECT_EQ(back.samples, traj.signal.samples);
    EXPECT_EQ(back.qTruth, traj.signal.qTruth);
    EXPECT_EQ(back.xiTruth, traj.signal.xiTruth);
    EXPECT_EQ(back.dt, traj.sim.dt);
}

TEST(RecordBinary, TruncatedFileIsRejected) {
    const auto traj = small_trajectory();
    const auto path = scratch("short.bin");
    io::write_trajectory_binary(path, traj);
    fs::resize_file(path, 100);
    EXPECT_THROW(io::read_record_binary(path, 0.0), wq::ConfigError);
    EXPECT_THROW(io::read_record_binary(scratch("none.bin"), 0.0), wq::ConfigError);
}

TEST(EstimateCsv, Headers) {
    wq::SignalRecord r;
    r.dt = 0.01;
    r.samples.assign(10000, 1.0);
    const auto est = wq::estimate_correlator(r, 0.5);
    const auto path = scratch("corr.csv");
    io::write_correlator_csv(path, est);
    const auto text = slurp(path);
    EXPECT_EQ(text.substr(0, text.find('\n')), "tau,k_i,k_i_stderr,k_xi_q,k_xi_q_stderr");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 51);
    const auto bpath = scratch("binned.csv");
    io::write_binned_csv(bpath, wq::bin_correlator(est, 0.1));
    const auto btext = slurp(bpath);
    EXPECT_EQ(std::count(btext.begin(), btext.end(), '\n'), 6);
}

TEST(Json, VerdictFields) {
    const auto lg = io::to_json(wq::lg_combination(1.0, 1.0, 0.5, 2.0, 0.1));
    EXPECT_EQ(lg["lhs"], 1.5);
    EXPECT_EQ(lg["violated"], true);
    EXPECT_TRUE(lg.contains("uncertainty"));
    const auto pk = io::to_json(wq::peak_bound_verdict(0.81, 2.0, false));
    EXPECT_EQ(pk["general"], "satisfied");
    EXPECT_EQ(pk["single_peak"], "exceeded");
    EXPECT_EQ(pk["single_peak_claim"], false);
    EXPECT_TRUE(pk.contains("narrow_peak_ok"));
    EXPECT_TRUE(io::number(std::numeric_limits<double>::quiet_NaN()).is_null());
}
