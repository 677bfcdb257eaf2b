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

// weakqubit run <config> | weakqubit sweep <config> --param P --values a,b,c
//
// Exit codes: 0 completed, 2 config error, 3 numerical failure, 1 anything else.

#include <CLI11.hpp>
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "weakqubit/harness.hpp"

namespace {

struct Common {
    std::string config;
    std::string outputDir;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

weakqubit::harness::ExperimentConfig load(const Common &c) {
    auto cfg = weakqubit::harness::load_config(c.config);
    if (c.seed) cfg.set_seed(*c.seed);
    return cfg;
}

weakqubit::harness::RunOptions options(const Common &c) {
    weakqubit::harness::RunOptions o;
    if (!c.outputDir.empty()) o.outputDir = c.outputDir;
    o.threads = c.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : c.threads;
    return o;
}

void add_common(CLI::App *app, Common &c) {
    app->add_option("config", c.config, "experiment config file")->required();
    app->add_option("--output-dir", c.outputDir, "directory for report.json, summary.txt and artifacts");
    app->add_option("--seed", c.seed, "override the top-level seed");
    app->add_option("--threads", c.threads, "worker threads (0 = all cores)")->capture_default_str();
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"weakqubit: weak-measurement qubit simulator and macrorealism tests"};
    app.require_subcommand(1);

    Common runArgs;
    CLI::App *run = app.add_subcommand("run", "run one experiment config");
    add_common(run, runArgs);

    Common sweepArgs;
    std::string param;
    std::vector<double> values;
    CLI::App *sweep = app.add_subcommand("sweep", "repeat an experiment over a parameter");
    add_common(sweep, sweepArgs);
    sweep->add_option("--param", param, "gamma | tau | window_delta | phase_diffusion")->required();
    sweep->add_option("--values", values, "comma-separated values")->required()->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    using namespace weakqubit;
    try {
        if (run->parsed()) {
            const auto cfg = load(runArgs);
            const auto result = harness::run(cfg, options(runArgs));
            for (const auto &l : result.summary) std::cout << l << '\n';
            std::cout << "report: " << (result.outputDir / "report.json").string() << '\n';
        } else {
            const auto cfg = load(sweepArgs);
            const auto opt = options(sweepArgs);
            const auto rows = harness::sweep(cfg, harness::parse_sweep_param(param), values, opt);
            const auto out = opt.outputDir.value_or(cfg.outputDir);
            std::cout << "sweep over " << param << ": " << rows.size() << " points -> "
                      << (out / "sweep.csv").string() << '\n';
        }
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError &e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
