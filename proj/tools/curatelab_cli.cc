// Copyright 2026 The Curatelab Authors.
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

// Batch front end:
//   curatelab simulate|attack-bench|verify-bounds --spec <path> [--out <dir>]
//                                                  [--seeds s1,s2,...]
// Exit codes: 0 success, 1 validation failure, 2 runtime failure,
// 3 mandatory bound-check failure.

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "curatelab/curatelab.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Curation-loop simulation laboratory"};
  app.require_subcommand(1, 1);
  std::string spec_path;
  std::string out_dir;
  std::string seeds;
  for (const char* name : {"simulate", "attack-bench", "verify-bounds"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--spec", spec_path, "experiment spec (key = value lines)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the spec's out key)");
    sub->add_option("--seeds", seeds, "comma-separated seed list (overrides the spec)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? curatelab::kExitOk : curatelab::kExitValidation;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    curatelab::ExperimentSpec spec = curatelab::ParseSpecFile(spec_path);
    if (curatelab::CommandName(spec.command) != command) {
      throw curatelab::ValidationError(
          "command", "spec says '" + curatelab::CommandName(spec.command) +
                         "' but the command line asks for '" + command + "'");
    }
    if (!seeds.empty()) spec.seeds = curatelab::ParseSeedList("--seeds", seeds);
    if (!out_dir.empty()) spec.out = out_dir;
    const int rc = curatelab::RunExperiment(spec, spec.out);
    if (rc == curatelab::kExitBoundFailure) {
      std::cerr << "mandatory bound check failed; see " << spec.out << "/verify_report.txt\n";
    } else if (rc == curatelab::kExitRuntime) {
      std::cerr << "some runs failed; outputs in " << spec.out << " are partial\n";
    }
    return rc;
  } catch (const curatelab::ValidationError& e) {
    std::cerr << "invalid spec: " << e.what() << '\n';
    return curatelab::kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return curatelab::kExitRuntime;
  }
}
