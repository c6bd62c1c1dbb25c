// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The isac-hbf Authors
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

// isac-hbf: run or describe a Monte-Carlo sweep.
// Exit codes: 0 ok, 1 config or usage error, 2 runtime failure.

#include "isac/sweep.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid beamforming designs for mmWave sensing and communication"};
  app.require_subcommand(1);

  std::string config;
  std::string out_path;
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::optional<std::uint64_t> seed;
  bool timing = false;

  auto* run = app.add_subcommand("run", "run the sweep and write CSV");
  run->add_option("config", config, "config file")->required();
  run->add_option("--out", out_path, "write CSV here instead of stdout");
  run->add_option("--workers", workers, "parallel trials")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "override scenario.seed");
  run->add_flag("--timing", timing, "add a mean wall-time column (breaks byte-identical reruns)");

  auto* desc = app.add_subcommand("describe", "print the resolved scenario without solving");
  desc->add_option("config", config, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  isac::SweepSpec spec;
  try {
    spec = isac::load_config(config);
    if (seed) spec.base.seed = *seed;
  } catch (const isac::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  if (desc->parsed()) {
    isac::describe(std::cout, spec);
    return 0;
  }

  try {
    isac::Stopwatch clock;
    const auto rows = isac::run_sweep(spec, workers);
    if (out_path.empty()) {
      isac::write_csv(std::cout, spec, rows, timing);
    } else {
      std::ofstream out(out_path);
      if (!out) throw std::runtime_error("cannot write " + out_path);
      isac::write_csv(out, spec, rows, timing);
    }
    std::cerr << spec.algorithm << ": " << spec.values.size() << " x " << spec.trials << " trials in "
              << clock.seconds() << " s\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
