// Copyright 2026 The samplab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end.  Deliberately thin: it reads the config file,
// forwards flag overrides, and lets the shared library do the work through
// the C API — nothing here includes the C++ headers.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <samplab.h>

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> paths;
    std::optional<std::string> out_dir;
    std::optional<std::int32_t> workers;
};

void add_common_flags(CLI::App* sub, CommonFlags& flags) {
    sub->add_option("--config", flags.config_path,
                    "experiment config (a single JSON document)")
        ->required();
    sub->add_option("--seed", flags.seed, "override the master seed");
    sub->add_option("--paths", flags.paths,
                    "override the simulated path count");
    sub->add_option("--out", flags.out_dir,
                    "override the output directory");
    sub->add_option("--workers", flags.workers,
                    "override the worker thread count");
}

int run_subcommand(const std::string& name, const CommonFlags& flags) {
    std::ifstream in(flags.config_path, std::ios::binary);
    if (!in) {
        std::cerr << "config error: cannot read " << flags.config_path
                  << "\n";
        return 3;
    }
    std::ostringstream text;
    text << in.rdbuf();
    const std::string config = text.str();

    samplab_run_overrides overrides{};
    overrides.experiment = name.c_str();
    std::uint64_t seed = 0;
    std::int64_t paths = 0;
    std::int32_t workers = 0;
    if (flags.seed) {
        seed = *flags.seed;
        overrides.seed = &seed;
    }
    if (flags.paths) {
        paths = *flags.paths;
        overrides.paths = &paths;
    }
    if (flags.out_dir) {
        overrides.out_dir = flags.out_dir->c_str();
    }
    if (flags.workers) {
        workers = *flags.workers;
        overrides.workers = &workers;
    }

    const std::int32_t code =
        samplab_run_experiment(config.c_str(), &overrides);
    const char* summary = samplab_last_summary();
    if (summary[0] != '\0') {
        std::cout << summary << "\n";
    }
    const char* error = samplab_last_error();
    if (error[0] != '\0') {
        std::cerr << error << "\n";
    }
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for discrete-time diffusion "
                 "sampling"};
    app.set_version_flag("--version", samplab_version());
    app.require_subcommand(1);

    const struct {
        const char* name;
        const char* description;
    } subcommands[] = {
        {"divergence", "exact KL decomposition with bounds and an optional "
                       "Monte Carlo cross-check"},
        {"rate-study", "convergence rate of the divergence across a grid "
                       "of step counts"},
        {"schedule-sweep", "divergence and ratio bound across geometric "
                           "step ratios"},
        {"reverse-check", "covariance structure of the reverse-chain "
                          "innovations"},
        {"tweedie-check", "posterior-mean score against a finite-difference "
                          "density gradient"},
        {"figure1", "staircase-vs-curve area picture behind the divergence "
                    "identity"},
    };

    CommonFlags flags[6];
    int exit_code = 0;
    for (int i = 0; i < 6; ++i) {
        CLI::App* sub = app.add_subcommand(subcommands[i].name,
                                           subcommands[i].description);
        add_common_flags(sub, flags[i]);
        const std::string name = subcommands[i].name;
        CommonFlags* sub_flags = &flags[i];
        sub->callback([&exit_code, name, sub_flags] {
            exit_code = run_subcommand(name, *sub_flags);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 3; // help/version exit 0, bad usage is 3
    }
    return exit_code;
}
