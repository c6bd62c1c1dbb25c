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

#pragma once

#include <chrono>
#include <string>
#include <vector>

namespace isac {

enum class SolveStatus { kConverged, kMaxIter, kInfeasible };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIter: return "max-iter";
    case SolveStatus::kInfeasible: return "infeasible";
  }
  return "unknown";
}

struct SolveReport {
  std::string algorithm;
  SolveStatus status = SolveStatus::kConverged;
  int iterations = 0;                      // outer iterations
  double wall_time_s = 0.0;
  std::vector<double> objective_trace;     // outer objective (eta_lo, GM rate, rate target)
  std::vector<std::vector<double>> inner_traces;  // one per inner solve, objective per accepted step
  std::vector<bool> feasible_trace;        // outer feasibility verdicts
  std::vector<double> constraint_residuals;
  std::vector<std::string> warnings;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace isac
