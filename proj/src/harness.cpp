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

#include "replearn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "replearn/errors.hpp"

namespace replearn {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& text, const std::string& key, int line) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw UsageError("config line " + std::to_string(line) + ": bad value '" + text + "' for " + key);
  }
  return v;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& key, int line) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(trim(item), key, line));
  if (out.empty()) throw UsageError("config line " + std::to_string(line) + ": " + key + " is empty");
  return out;
}

bool parse_bool(const std::string& text, const std::string& key, int line) {
  if (text == "1" || text == "true" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "no") return false;
  throw UsageError("config line " + std::to_string(line) + ": bad boolean '" + text + "' for " + key);
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  static const std::vector<std::string> kKeys = {
      "d",       "k",           "epsilon",      "rho",           "delta",   "n",
      "c_n",     "beta_constant", "radius_fraction", "ball_cap",  "trials",  "master_seed",
      "threads", "sweep_n",     "sweep_epsilon", "sweep_rho",    "sweep_d", "sweep_k",
      "output",  "resume",      "keep_trials"};
  std::map<std::string, std::pair<std::string, int>> kv;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line) + ": expected key = value");
    }
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw UsageError("config line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
    if (!kv.emplace(key, std::make_pair(value, line)).second) {
      throw UsageError("config line " + std::to_string(line) + ": duplicate key '" + key + "'");
    }
  }

  ExperimentConfig cfg;
  const Params& base = cfg.params;
  auto get = [&](const std::string& key) -> std::optional<std::pair<std::string, int>> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };
  auto num = [&]<typename T>(const std::string& key, T fallback) {
    const auto v = get(key);
    return v ? parse_number<T>(v->first, key, v->second) : fallback;
  };

  Params p(num.operator()<int>("d", base.d()), num.operator()<int>("k", base.k()),
           num.operator()<double>("epsilon", base.epsilon()), num.operator()<double>("rho", base.rho()),
           num.operator()<double>("delta", base.delta()), num.operator()<std::int64_t>("n", base.n()));
  p.set_beta_constant(num.operator()<double>("beta_constant", base.beta_constant()));
  p.set_radius_fraction(num.operator()<double>("radius_fraction", base.radius_fraction()));
  p.set_ball_cap(num.operator()<std::uint64_t>("ball_cap", base.ball_cap()));
  if (const auto c = get("c_n")) {
    if (get("n")) throw UsageError("config line " + std::to_string(c->second) + ": give n or c_n, not both");
    p.set_n(sample_size_for(p, parse_number<double>(c->first, "c_n", c->second)));
  }
  cfg.params = p;
  cfg.trials = num.operator()<std::int64_t>("trials", cfg.trials);
  if (cfg.trials < 1) throw UsageError("config: trials must be >= 1");
  cfg.master_seed = num.operator()<std::uint64_t>("master_seed", cfg.master_seed);
  cfg.threads = num.operator()<unsigned>("threads", cfg.threads);
  if (const auto v = get("sweep_n")) cfg.sweep_n = parse_list<std::int64_t>(v->first, "sweep_n", v->second);
  if (const auto v = get("sweep_epsilon")) {
    cfg.sweep_epsilon = parse_list<double>(v->first, "sweep_epsilon", v->second);
  }
  if (const auto v = get("sweep_rho")) cfg.sweep_rho = parse_list<double>(v->first, "sweep_rho", v->second);
  if (const auto v = get("sweep_d")) cfg.sweep_d = parse_list<int>(v->first, "sweep_d", v->second);
  if (const auto v = get("sweep_k")) cfg.sweep_k = parse_list<std::int64_t>(v->first, "sweep_k", v->second);
  if (const auto v = get("output")) cfg.output = v->first;
  if (const auto v = get("resume")) cfg.resume = parse_bool(v->first, "resume", v->second);
  if (const auto v = get("keep_trials")) cfg.keep_trials = parse_bool(v->first, "keep_trials", v->second);
  // Surfaces bad grid values at load time.
  sweep_grid(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  return parse_config(in);
}

namespace {

unsigned worker_count(unsigned requested, std::int64_t trials) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::int64_t>(n, trials));
}

TrialRecord run_trial(const Params& params, std::uint64_t seed, std::uint64_t t) {
  auto target_rng = derive_stream(seed, t, StreamRole::kTarget);
  auto key_rng = derive_stream(seed, t, StreamRole::kKey);
  auto s1_rng = derive_stream(seed, t, StreamRole::kSample1);
  auto s2_rng = derive_stream(seed, t, StreamRole::kSample2);
  TrialRecord rec;
  rec.target = random_hypothesis(params, target_rng);
  const auto key = SharedKey::from_stream(key_rng);
  const auto S1 = sample_training_set(params, rec.target, s1_rng);
  const auto S2 = sample_training_set(params, rec.target, s2_rng);
  try {
    rec.out1 = replicable_learn(S1, params, key);
    rec.out2 = replicable_learn(S2, params, key);
  } catch (const ResourceError&) {
    rec.cap_hit = true;
    return rec;
  }
  rec.agree = rec.out1 == rec.out2;
  rec.err1 = exact_error(rec.out1, rec.target, params);
  rec.err2 = exact_error(rec.out2, rec.target, params);
  return rec;
}

}  // namespace

ReplicationReport run_replication_experiment(const ExperimentConfig& config) {
  if (config.trials < 1) throw UsageError("run_replication_experiment: trials must be >= 1");
  const Params& params = config.params;
  const auto trials = static_cast<std::size_t>(config.trials);
  std::vector<TrialRecord> records(trials);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= trials) return;
      try {
        records[t] = run_trial(params, config.master_seed, t);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = trials;
        return;
      }
    }
  };
  const unsigned workers = worker_count(config.threads, config.trials);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  ReplicationReport r;
  r.params = params;
  r.radius = params.acceptance_radius();
  r.trials = config.trials;
  r.master_seed = config.master_seed;
  std::vector<double> errs;
  errs.reserve(2 * trials);
  std::int64_t bad = 0;
  for (const auto& rec : records) {
    if (rec.cap_hit) {
      ++r.ball_cap_hits;
      continue;
    }
    r.disagreements += !rec.agree;
    for (double e : {rec.err1, rec.err2}) {
      errs.push_back(e);
      bad += e > params.epsilon();
    }
  }
  r.completed = r.trials - r.ball_cap_hits;
  if (r.completed == 0) {
    // Every trial shares the radius, so this is the learner's own error.
    replicable_learn(LabeledSample{}, params, SharedKey{});
  }
  r.rho_hat = static_cast<double>(r.disagreements) / static_cast<double>(r.completed);
  r.rho_ci = stats::wilson_interval(static_cast<std::uint64_t>(r.disagreements),
                                    static_cast<std::uint64_t>(r.completed));
  r.err_rate = static_cast<double>(bad) / static_cast<double>(errs.size());
  r.mean_err = stats::pairwise_sum(errs) / static_cast<double>(errs.size());
  std::sort(errs.begin(), errs.end());
  const std::size_t m = errs.size() / 2;
  r.median_err = errs.size() % 2 ? errs[m] : 0.5 * (errs[m - 1] + errs[m]);
  if (config.keep_trials) r.records = std::move(records);
  return r;
}

std::vector<Params> sweep_grid(const ExperimentConfig& config) {
  const Params& base = config.params;
  auto or_base = []<typename T>(const std::vector<T>& axis, T fallback) {
    return axis.empty() ? std::vector<T>{fallback} : axis;
  };
  std::vector<std::int64_t> ks;
  for (auto target : config.sweep_k) ks.push_back(choose_prime_k(std::max<std::int64_t>(target, 3)));
  const auto ds = or_base(config.sweep_d, base.d());
  ks = or_base(ks, std::int64_t{base.k()});
  const auto eps = or_base(config.sweep_epsilon, base.epsilon());
  const auto rhos = or_base(config.sweep_rho, base.rho());
  const auto ns = or_base(config.sweep_n, base.n());

  std::vector<Params> grid;
  for (int d : ds) {
    for (auto k : ks) {
      for (double e : eps) {
        for (double rho : rhos) {
          for (auto n : ns) {
            Params p(d, static_cast<int>(k), e, rho, base.delta(), n);
            p.set_beta_constant(base.beta_constant())
                .set_radius_fraction(base.radius_fraction())
                .set_ball_cap(base.ball_cap());
            grid.push_back(p);
          }
        }
      }
    }
  }
  return grid;
}

namespace {

std::string real(double x) {
  if (std::isnan(x)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

// The columns that identify a grid point: d,k,epsilon,rho_target,delta,n.
std::string grid_key(const Params& p) {
  return std::to_string(p.d()) + "," + std::to_string(p.k()) + "," + real(p.epsilon()) + "," +
         real(p.rho()) + "," + real(p.delta()) + "," + std::to_string(p.n());
}

ReplicationReport capped_report(const ExperimentConfig& config) {
  ReplicationReport r;
  r.params = config.params;
  r.radius = config.params.acceptance_radius();
  r.trials = config.trials;
  r.master_seed = config.master_seed;
  r.ball_cap_hits = config.trials;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.rho_hat = r.err_rate = r.mean_err = r.median_err = nan;
  r.rho_ci = {nan, nan};
  return r;
}

std::vector<ReplicationReport> run_grid(const ExperimentConfig& config, std::span<const Params> grid,
                                        std::ostream& out) {
  std::vector<ReplicationReport> reports;
  for (const auto& p : grid) {
    ExperimentConfig point = config;
    point.params = p;
    try {
      reports.push_back(run_replication_experiment(point));
    } catch (const ResourceError&) {
      reports.push_back(capped_report(point));
    }
    out << sweep_csv_row(reports.back()) << '\n' << std::flush;
    if (!out) throw IoError("sweep: write failed");
  }
  return reports;
}

}  // namespace

std::string sweep_csv_row(const ReplicationReport& r) {
  return grid_key(r.params) + "," + std::to_string(r.radius) + "," + std::to_string(r.trials) + "," +
         real(r.rho_hat) + "," + real(r.rho_ci.lo) + "," + real(r.rho_ci.hi) + "," + real(r.err_rate) + "," +
         real(r.mean_err) + "," + real(r.median_err) + "," + std::to_string(r.ball_cap_hits) + "," +
         std::to_string(r.master_seed);
}

std::vector<ReplicationReport> sweep_experiments(const ExperimentConfig& config, std::ostream& out) {
  const auto grid = sweep_grid(config);
  out << kSweepHeader << '\n' << std::flush;
  if (!out) throw IoError("sweep: write failed");
  return run_grid(config, grid, out);
}

std::vector<ReplicationReport> sweep_experiments(const ExperimentConfig& config) {
  if (config.output.empty()) throw UsageError("sweep: no output path");
  const auto grid = sweep_grid(config);
  std::vector<std::string> kept;
  if (config.resume && std::filesystem::exists(config.output)) {
    std::ifstream in(config.output);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::string> lines;
    std::size_t start = 0;
    // A trailing line without '\n' was cut off mid-write and is recomputed.
    for (std::size_t nl; (nl = text.find('\n', start)) != std::string::npos; start = nl + 1) {
      lines.push_back(text.substr(start, nl - start));
    }
    if (!lines.empty()) {
      if (lines.front() != kSweepHeader) {
        throw UsageError("resume: " + config.output.string() + " does not start with the sweep header");
      }
      if (lines.size() - 1 > grid.size()) throw UsageError("resume: file has more rows than the grid");
      const std::string seed = "," + std::to_string(config.master_seed);
      for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& row = lines[i];
        const auto key = grid_key(grid[i - 1]) + ",";
        if (row.rfind(key, 0) != 0 || !row.ends_with(seed)) {
          throw UsageError("resume: row " + std::to_string(i) + " does not match the configured grid");
        }
        kept.push_back(row);
      }
    }
  }

  std::ofstream out(config.output, std::ios::trunc);
  if (!out) throw IoError("cannot open " + config.output.string() + " for writing");
  out << kSweepHeader << '\n';
  for (const auto& row : kept) out << row << '\n';
  out << std::flush;
  if (!out) throw IoError("write failed on " + config.output.string());
  return run_grid(config, std::span<const Params>(grid).subspan(kept.size()), out);
}

TrendCheck check_non_increasing(std::span<const ReplicationReport> reports, double tolerance) {
  std::vector<double> values, weights;
  for (const auto& r : reports) {
    values.push_back(r.rho_hat);
    weights.push_back(static_cast<double>(r.completed));
  }
  TrendCheck c;
  c.fitted = stats::isotonic_non_increasing(values, weights);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double width = reports[i].rho_ci.width();
    const double gap = std::abs(values[i] - c.fitted[i]);
    const double dev = width > 0.0 ? gap / width : (gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    c.deviation.push_back(dev);
    c.worst = std::max(c.worst, dev);
  }
  c.ok = c.worst < tolerance;
  return c;
}

}  // namespace replearn
