// Copyright 2026 The replearn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Monte Carlo experiments for the learner: paired runs with shared keys,
// replicability and error estimates, parameter sweeps written as CSV.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "replearn/domain.hpp"
#include "replearn/learner.hpp"
#include "replearn/stats.hpp"

namespace replearn {

// Output file could not be opened or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  Params params{4, 29, 0.3, 0.1, 0.1, 100};
  std::int64_t trials = 1000;
  std::uint64_t master_seed = 0;
  // 0 = std::thread::hardware_concurrency().
  unsigned threads = 0;
  // Sweep axes; an empty axis means "the value in params". k targets are
  // rounded up to the next prime.
  std::vector<std::int64_t> sweep_n;
  std::vector<double> sweep_epsilon;
  std::vector<double> sweep_rho;
  std::vector<int> sweep_d;
  std::vector<std::int64_t> sweep_k;
  std::filesystem::path output;
  bool resume = false;
  bool keep_trials = false;
};

// Flat "key = value" text. Blank lines and lines starting with '#' are
// skipped; lists are comma separated. Keys: d k epsilon rho delta n c_n
// beta_constant radius_fraction ball_cap trials master_seed threads
// sweep_n sweep_epsilon sweep_rho sweep_d sweep_k output resume keep_trials.
// Unknown keys, duplicates and malformed values throw UsageError with the
// line number.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

struct TrialRecord {
  HypothesisIndex target;
  HypothesisIndex out1;
  HypothesisIndex out2;
  double err1 = 0.0;
  double err2 = 0.0;
  bool agree = false;
  bool cap_hit = false;
};

struct ReplicationReport {
  Params params{1, 3, 0.5, 0.5, 0.5, 0};
  std::int64_t radius = 0;
  std::int64_t trials = 0;
  std::uint64_t master_seed = 0;
  std::int64_t completed = 0;      // trials - ball_cap_hits
  std::int64_t ball_cap_hits = 0;
  std::int64_t disagreements = 0;
  double rho_hat = 0.0;            // disagreements / completed
  stats::Interval rho_ci;          // Wilson 95%
  double err_rate = 0.0;           // fraction of the 2 * completed runs with er > epsilon
  double mean_err = 0.0;
  double median_err = 0.0;
  std::vector<TrialRecord> records;  // filled when keep_trials is set
};

// Trial t draws i* from derive_stream(seed, t, kTarget), the shared key from
// kKey, and S, S' from kSample1, kSample2; both runs use the same key.
// Trials that exceed the ball cap are counted, not aggregated; if every trial
// does, the ResourceError propagates.
ReplicationReport run_replication_experiment(const ExperimentConfig& config);

// The grid, in order d, k, epsilon, rho, n (n varies fastest).
std::vector<Params> sweep_grid(const ExperimentConfig& config);

inline constexpr const char* kSweepHeader =
    "d,k,epsilon,rho_target,delta,n,radius,trials,rho_hat,rho_lo,rho_hi,err_rate,mean_err,"
    "median_err,ball_cap_hits,master_seed";

// One CSV line (no newline); reals with 17 significant digits.
std::string sweep_csv_row(const ReplicationReport& r);

// Writes the header and one flushed row per grid point. A grid point whose
// ball exceeds the cap yields a row with ball_cap_hits = trials and nan
// statistics.
std::vector<ReplicationReport> sweep_experiments(const ExperimentConfig& config, std::ostream& out);

// File variant. With config.resume and an existing file whose header and
// leading rows match the grid, only the missing rows are computed.
std::vector<ReplicationReport> sweep_experiments(const ExperimentConfig& config);

struct TrendCheck {
  std::vector<double> fitted;     // weighted non-increasing fit of rho_hat
  std::vector<double> deviation;  // |rho_hat - fitted| / CI width
  double worst = 0.0;             // max deviation
  bool ok = true;                 // worst < tolerance
};

// rho_hat is non-increasing along the reports up to `tolerance` CI widths.
TrendCheck check_non_increasing(std::span<const ReplicationReport> reports, double tolerance = 2.0);

}  // namespace replearn
