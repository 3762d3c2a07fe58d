// Copyright 2026 The privdgd Authors
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

// privdgd_cli: run | check-schedule | attack | witness | sweep.
//
// Exit codes: 0 ok, 1 invalid input, 2 divergence, 3 failed verification.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "privdgd/harness.hpp"

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
  std::optional<long> iterations;
  bool quiet = false;
};

void AddCommon(CLI::App* sub, Common* c) {
  sub->add_option("config,--config", c->config, "experiment config (JSON)")->required();
  sub->add_option("--out", c->out, "output directory (overrides the config)");
  sub->add_option("--seed", c->seed, "master seed override");
  sub->add_option("--iterations", c->iterations, "iteration count override");
  sub->add_flag("--quiet", c->quiet, "suppress warnings");
}

privdgd::ExperimentConfig Load(const Common& c) {
  privdgd::ExperimentConfig cfg = privdgd::LoadConfig(c.config);
  std::optional<std::filesystem::path> out;
  if (!c.out.empty()) out = c.out;
  privdgd::ApplyOverrides(&cfg, c.seed, c.iterations, out);
  if (!c.quiet)
    for (const std::string& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
  return cfg;
}

// "3..7" or "5".
std::pair<uint64_t, uint64_t> ParseSeedRange(const std::string& s) {
  const size_t dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const uint64_t v = std::stoull(s);
      return {v, v};
    }
    return {std::stoull(s.substr(0, dots)), std::stoull(s.substr(dots + 2))};
  } catch (const std::exception&) {
    throw privdgd::ConfigError("--seeds", "expected a..b, got '" + s + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privacy-preserving decentralized gradient simulator"};
  app.require_subcommand(1);

  Common run_c, sched_c, attack_c, witness_c, sweep_c;
  auto* run = app.add_subcommand("run", "run an experiment and write artifacts");
  AddCommon(run, &run_c);
  auto* sched = app.add_subcommand("check-schedule", "check stepsize conditions only");
  AddCommon(sched, &sched_c);
  auto* attack = app.add_subcommand("attack", "run a tracking baseline and the gradient inference");
  AddCommon(attack, &attack_c);
  auto* witness = app.add_subcommand("witness", "run a pdg trace and build the witness");
  AddCommon(witness, &witness_c);
  auto* sweep = app.add_subcommand("sweep", "independent seeded repeats, run concurrently");
  AddCommon(sweep, &sweep_c);
  std::string seeds = "1..8";
  unsigned threads = 0;
  sweep->add_option("--seeds", seeds, "seed range a..b")->capture_default_str();
  sweep->add_option("--threads", threads, "worker threads (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : privdgd::kExitValidation;
  }

  try {
    if (*sweep) {
      const privdgd::ExperimentConfig cfg = Load(sweep_c);
      const auto [a, b] = ParseSeedRange(seeds);
      const privdgd::SweepResult r = privdgd::Sweep(cfg, a, b, threads);
      std::cout << r.verdict << "\n";
      return r.exit_code;
    }
    privdgd::Mode mode = privdgd::Mode::kRun;
    const Common* c = &run_c;
    if (*sched) {
      mode = privdgd::Mode::kCheckSchedule;
      c = &sched_c;
    } else if (*attack) {
      mode = privdgd::Mode::kAttack;
      c = &attack_c;
    } else if (*witness) {
      mode = privdgd::Mode::kWitness;
      c = &witness_c;
    }
    const privdgd::ExperimentConfig cfg = Load(*c);
    const privdgd::ExperimentResult r = privdgd::RunExperiment(cfg, mode);
    std::cout << r.verdict << "\n";
    return r.exit_code;
  } catch (const privdgd::ConfigError& e) {
    std::cerr << "config error at " << e.what() << "\n";
    return privdgd::kExitValidation;
  } catch (const privdgd::DivergenceError& e) {
    std::cerr << "diverged in round " << e.round() << ": " << e.what() << "\n";
    return privdgd::kExitDivergence;
  } catch (const privdgd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return privdgd::kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return privdgd::kExitValidation;
  }
}
