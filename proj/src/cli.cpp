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

#include "replearn/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "replearn/balls.hpp"
#include "replearn/coupling.hpp"
#include "replearn/domain.hpp"
#include "replearn/errors.hpp"
#include "replearn/harness.hpp"
#include "replearn/learner.hpp"
#include "replearn/spectral.hpp"

namespace replearn::cli {

namespace {

using Json = nlohmann::ordered_json;

// What a subcommand produces: scalar results and an optional table.
struct Report {
  std::string command;
  Json summary = Json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;
  int exit_code = kOk;
};

std::string csv_field(const Json& v) {
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (std::isnan(x)) return "nan";
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
  }
  if (v.is_null()) return "nan";
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") != std::string::npos) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }
  return s;
}

void write_csv_row(std::ostream& os, const std::vector<Json>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_field(row[i]);
  os << '\n';
}

// NaN is not valid JSON; it becomes null.
Json real(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json interval(const stats::Interval& i) { return Json::array({real(i.lo), real(i.hi)}); }

Json chi2(const stats::ChiSquareResult& c) {
  return Json{{"statistic", real(c.statistic)}, {"dof", c.dof}, {"p_value", real(c.p_value)}};
}

// With a table, CSV mode sends the table to `out` and the summary as
// key,value lines to `err`; without one the summary is the document.
void emit(const Report& r, bool json, std::ostream& out, std::ostream& err) {
  if (json) {
    Json doc{{"command", r.command}, {"summary", r.summary}};
    if (!r.columns.empty()) {
      Json rows = Json::array();
      for (const auto& row : r.rows) rows.push_back(row);
      doc["table"] = Json{{"columns", r.columns}, {"rows", rows}};
    }
    out << doc.dump(2) << '\n';
    return;
  }
  std::ostream& summary_stream = r.columns.empty() ? out : err;
  if (!r.columns.empty()) {
    std::vector<Json> header(r.columns.begin(), r.columns.end());
    write_csv_row(out, header);
    for (const auto& row : r.rows) write_csv_row(out, row);
  }
  if (!r.summary.empty()) {
    if (r.columns.empty()) summary_stream << "key,value\n";
    for (const auto& [k, v] : r.summary.items()) write_csv_row(summary_stream, {Json(k), v});
  }
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof()) {
      throw UsageError(std::string("--") + flag + ": bad list entry '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string("--") + flag + ": empty list");
  return out;
}

struct ParamFlags {
  std::optional<int> d;
  std::optional<int> k;
  std::optional<double> epsilon;
  std::optional<double> rho;
  std::optional<double> delta;
  std::optional<std::int64_t> n;
  std::optional<double> radius_fraction;
  std::optional<double> beta_constant;
  std::optional<std::uint64_t> ball_cap;

  void add_to(CLI::App* app) {
    app->add_option("--d", d, "number of axes d");
    app->add_option("--k", k, "cycle length k (prime)");
    app->add_option("--epsilon", epsilon, "accuracy epsilon in (0,1)");
    app->add_option("--rho", rho, "replicability rho in (0,1)");
    app->add_option("--delta", delta, "failure probability delta in (0,1)");
    app->add_option("--n", n, "sample size n");
    app->add_option("--radius-fraction", radius_fraction, "acceptance radius = floor(eps k d * fraction)");
    app->add_option("--beta-constant", beta_constant, "constant in beta");
    app->add_option("--ball-cap", ball_cap, "largest acceptance ball the learner enumerates");
  }

  Params apply(Params p) const {
    Params q(d.value_or(p.d()), k.value_or(p.k()), epsilon.value_or(p.epsilon()), rho.value_or(p.rho()),
             delta.value_or(p.delta()), n.value_or(p.n()));
    q.set_radius_fraction(radius_fraction.value_or(p.radius_fraction()))
        .set_beta_constant(beta_constant.value_or(p.beta_constant()))
        .set_ball_cap(ball_cap.value_or(p.ball_cap()));
    return q;
  }

  Params build(int d0, int k0, std::int64_t n0) const {
    return apply(Params(d.value_or(d0), k.value_or(k0), 0.3, 0.1, 0.1, n.value_or(n0)));
  }
};

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool json = false;
  std::string out;
  std::string config;
};

void add_globals(CLI::App* app, Globals& g) {
  app->add_option("--seed", g.seed, "master seed (U64)");
  app->add_option("--threads", g.threads, "worker threads (0 = all cores)");
  app->add_flag("--json", g.json, "emit one JSON document instead of CSV");
  app->add_option("--out", g.out, "write the report to PATH");
  app->add_option("--config", g.config, "experiment config file (key = value)");
}

HypothesisIndex parse_tuple(const std::string& text, const Params& params) {
  const auto c = parse_list<std::int32_t>(text, "target");
  if (static_cast<int>(c.size()) != params.d()) throw UsageError("--target needs d coordinates");
  for (auto x : c) {
    if (x < 0 || x >= params.k()) throw UsageError("--target coordinates must lie in [0, k)");
  }
  return HypothesisIndex(c, params.k());
}

Json tuple_json(const HypothesisIndex& h) { return h.to_string(); }

Report cmd_learn(const Params& params, const Globals& g, const std::string& target_text) {
  auto target_rng = derive_stream(g.seed, 0, StreamRole::kTarget);
  auto key_rng = derive_stream(g.seed, 0, StreamRole::kKey);
  auto sample_rng = derive_stream(g.seed, 0, StreamRole::kSample1);
  const auto target = target_text.empty() ? random_hypothesis(params, target_rng) : parse_tuple(target_text, params);
  const auto key = SharedKey::from_stream(key_rng);
  const auto S = sample_training_set(params, target, sample_rng);
  const auto r = replicable_learn_detailed(S, params, key);
  Report rep;
  rep.command = "learn";
  rep.summary = Json{{"d", params.d()},
                     {"k", params.k()},
                     {"epsilon", params.epsilon()},
                     {"n", params.n()},
                     {"radius", r.radius},
                     {"ball_size", acceptance_ball_size(params, r.radius).str()},
                     {"target", tuple_json(target)},
                     {"center", tuple_json(r.estimate.center)},
                     {"output", tuple_json(r.output)},
                     {"center_distance", tuple_distance(r.estimate.center, target)},
                     {"error", exact_error(r.output, target, params)},
                     {"degenerate_axes", r.estimate.degenerate_axes.size()},
                     {"seed", g.seed}};
  return rep;
}

Report replication_table(const std::vector<ReplicationReport>& reports, const char* name) {
  Report rep;
  rep.command = name;
  std::stringstream header(kSweepHeader);
  for (std::string c; std::getline(header, c, ',');) rep.columns.push_back(c);
  for (const auto& r : reports) {
    const auto& p = r.params;
    rep.rows.push_back({p.d(), p.k(), p.epsilon(), p.rho(), p.delta(), p.n(), r.radius, r.trials, real(r.rho_hat),
                        real(r.rho_ci.lo), real(r.rho_ci.hi), real(r.err_rate), real(r.mean_err),
                        real(r.median_err), r.ball_cap_hits, r.master_seed});
  }
  return rep;
}

Report cmd_mode(const Params& params, const Globals& g, const std::string& target_text) {
  auto key_rng = derive_stream(g.seed, 0, StreamRole::kKey);
  const auto key = SharedKey::from_stream(key_rng);
  auto labeling = [](const Labeling& f) {
    std::string s;
    for (auto b : f) s += static_cast<char>('0' + b);
    return s;
  };
  Report rep;
  rep.command = "mode";
  if (!target_text.empty()) {
    const auto e = exact_mode(params, parse_tuple(target_text, params), key);
    rep.columns = {"labeling", "count", "probability"};
    for (const auto& [f, c] : e.distribution) {
      rep.rows.push_back({labeling(f), c, static_cast<double>(c) / static_cast<double>(e.total)});
    }
    rep.summary = Json{{"target", tuple_json(e.target)},
                       {"mode_hypothesis", tuple_json(e.mode_hypothesis)},
                       {"mode_labeling", labeling(e.mode_labeling)},
                       {"mode_probability", e.mode_probability()},
                       {"samples", e.total}};
    return rep;
  }
  const auto mc = build_mode_classes(params, key);
  rep.columns = {"target", "mode_hypothesis", "mode_probability", "mode_error", "retained"};
  for (const auto& e : mc.entries) {
    const double err = error_vs_labeling(e.mode_labeling, e.target, params);
    rep.rows.push_back({tuple_json(e.target), tuple_json(e.mode_hypothesis), e.mode_probability(), err,
                        err <= params.epsilon()});
  }
  rep.summary = Json{{"hypotheses", mc.entries.size()},
                     {"retained", mc.retained},
                     {"dropped", mc.dropped},
                     {"classes", mc.class_map.size()},
                     {"largest_class", mc.largest_class},
                     {"cf_bound", mc.cf_bound},
                     {"cf_bound_applies", mc.cf_bound_applies},
                     {"cf_bound_holds", mc.cf_bound_holds}};
  if (!mc.cf_bound_holds) rep.exit_code = kVerification;
  return rep;
}

std::string coords_string(std::span<const std::int32_t> v) {
  std::string s = "(";
  for (std::size_t a = 0; a < v.size(); ++a) s += (a ? "," : "") + std::to_string(v[a]);
  return s + ")";
}

Report cmd_spectrum(int d, int k, std::size_t buckets) {
  const spectral::CayleyInstance g(d, k);
  Report rep;
  rep.command = "spectrum";
  rep.columns = {"coords", "eigenvalue"};
  const auto ev = spectral::analytic_spectrum(g);
  for (std::uint64_t code = 0; code < ev.size(); ++code) {
    const auto v = HypothesisIndex::decode(code, d, k);
    rep.rows.push_back({coords_string(v.coords()), ev[code]});
  }
  const double z = static_cast<double>(g.generator_count());
  std::uint64_t above = 0;
  for (double x : ev) above += spectral::eigenvalue_tail_event(x, g.generator_count());
  const double trace = stats::pairwise_sum(ev);
  rep.summary = Json{{"d", d},
                     {"k", k},
                     {"generators", g.generator_count()},
                     {"nodes", ev.size()},
                     {"trace", trace},
                     {"trace_relative_error", std::abs(trace - static_cast<double>(ev.size())) /
                                                  static_cast<double>(ev.size())},
                     {"threshold", 0.92 * z},
                     {"above_threshold", above}};
  if (ev.size() <= spectral::kMaxDenseNodes) {
    const auto chk = spectral::eigen_check(d, k, buckets);
    rep.summary["max_abs_deviation"] = chk.max_abs_deviation;
    rep.summary["orthonormality_deviation"] = chk.orthonormality_deviation;
    rep.summary["eigenvector_residual"] = chk.eigenvector_residual;
    rep.summary["histogram_lo"] = chk.histogram_lo;
    rep.summary["histogram_hi"] = chk.histogram_hi;
    rep.summary["histogram"] = chk.histogram;
    if (chk.max_abs_deviation > 1e-9 || chk.trace_relative_error > 1e-6) rep.exit_code = kVerification;
  } else {
    rep.summary["dense_check"] = "skipped: k^d above " + std::to_string(spectral::kMaxDenseNodes);
  }
  return rep;
}

Report cmd_expansion(const Params& params, const Globals& g, std::int64_t radius, std::int64_t random_size) {
  const spectral::CayleyInstance graph(params.d(), params.k());
  std::vector<HypothesisIndex> T;
  std::string shape;
  if (random_size > 0) {
    auto rng = derive_stream(g.seed, 0, StreamRole::kAux);
    for (std::int64_t i = 0; i < random_size; ++i) T.push_back(random_hypothesis(params, rng));
    shape = "random";
  } else {
    T = collect_acceptance_ball(HypothesisIndex::zero(params.d(), params.k()), radius,
                                Params(params).set_ball_cap(spectral::kMaxEnumeratedNodes));
    shape = "ball";
  }
  std::vector<std::uint64_t> codes;
  for (const auto& t : T) codes.push_back(t.encode());
  std::sort(codes.begin(), codes.end());
  const auto distinct = static_cast<std::uint64_t>(std::unique(codes.begin(), codes.end()) - codes.begin());
  Report rep;
  rep.command = "expansion";
  rep.summary = Json{{"d", params.d()},
                     {"k", params.k()},
                     {"set", shape},
                     {"radius", random_size > 0 ? Json(nullptr) : Json(radius)},
                     {"size", distinct},
                     {"generators", graph.generator_count()},
                     {"internal_edges", spectral::internal_edge_count(T, graph)},
                     {"escaping_edges", spectral::escaping_edge_count(T, graph)},
                     {"internal_fraction", spectral::expansion_ratio(T, graph)}};
  return rep;
}

Report cmd_tail(int d, int k, int r, std::int64_t trials, bool exact, const Globals& g) {
  Report rep;
  rep.command = "tail";
  auto rng = derive_stream(g.seed, 0, StreamRole::kAux);
  const auto t = spectral::tail_and_moment_estimate(d, k, r, trials, rng);
  rep.summary = Json{{"d", d},
                     {"k", k},
                     {"r", r},
                     {"trials", trials},
                     {"tail_hits", t.tail_hits},
                     {"p_hat", t.p_hat},
                     {"p_ci", interval(t.p_ci)},
                     {"mean_exact", t.mean_exact},
                     {"moment_hat", t.moment_hat},
                     {"eigen_tail_hits", t.eigen_tail_hits},
                     {"implication_violations", t.implication_violations}};
  std::uint64_t violations = t.implication_violations;
  if (exact) {
    const auto e = spectral::exact_tail(d, k);
    rep.summary["exact_nodes"] = e.nodes;
    rep.summary["exact_tail_count"] = e.tail_count;
    rep.summary["exact_p"] = e.p();
    rep.summary["exact_eigen_tail_count"] = e.eigen_tail_count;
    rep.summary["exact_implication_violations"] = e.implication_violations;
    violations += e.implication_violations;
  }
  if (violations) rep.exit_code = kVerification;
  return rep;
}

Report coupling_report(const CouplingMatrix& p, std::span<const double> x, std::span<const double> y) {
  Report rep;
  rep.command = "coupling";
  rep.columns = {"i", "j", "p"};
  for (int i = 0; i <= p.d(); ++i) {
    for (int j = 0; j <= i; ++j) rep.rows.push_back({i, j, p(i, j)});
  }
  const auto c = check_coupling(p, x, y);
  rep.summary = Json{{"d", p.d()},
                     {"x", std::vector<double>(x.begin(), x.end())},
                     {"y", std::vector<double>(y.begin(), y.end())},
                     {"range_violation", c.range},
                     {"row_sum_violation", c.row_sum},
                     {"transport_violation", c.transport}};
  if (!c.ok(1e-9)) rep.exit_code = kVerification;
  return rep;
}

Report cmd_coupling(const std::string& xs, const std::string& ys, const ParamFlags& pf) {
  if (!xs.empty() || !ys.empty()) {
    if (xs.empty() || ys.empty()) throw UsageError("coupling: give both --x and --y");
    const auto x = parse_list<double>(xs, "x");
    const auto y = parse_list<double>(ys, "y");
    return coupling_report(majorization_coupling(x, y), x, y);
  }
  const Params params = pf.build(3, 11, 20);
  const auto law = exact_candidate_size_law(params.d(), params.k(), params.n());
  const StepSampler sampler(params, law, DominancePolicy::kReportOnly);
  const auto y = target_size_law(params.d());
  auto rep = coupling_report(sampler.coupling(), sampler.coupled_law(), y);
  const auto& dom = sampler.dominance();
  rep.summary["n"] = params.n();
  rep.summary["k"] = params.k();
  rep.summary["law_of_P"] = law.probs;
  rep.summary["dominance_holds"] = dom.holds;
  rep.summary["worst_gap"] = dom.worst_gap;
  rep.summary["tv_lower_bound"] = dom.tv_lower_bound;
  rep.summary["regime_k_min"] = dom.regime_k_min;
  rep.summary["regime_holds"] = dom.regime_holds;
  rep.summary["diagnostics"] = dom.diagnostics();
  if (!dom.holds) rep.exit_code = kVerification;
  return rep;
}

Report cmd_step_verify(const Params& params, std::uint64_t trials, const Globals& g) {
  auto rng = derive_stream(g.seed, 0, StreamRole::kAux);
  const auto v = verify_step_distribution(params, trials, rng);
  Report rep;
  rep.command = "step-verify";
  rep.summary = Json{{"d", v.d},
                     {"k", v.k},
                     {"n", v.n},
                     {"trials", v.trials},
                     {"dominance_holds", v.dominance.holds},
                     {"dominance", v.dominance.diagnostics()},
                     {"tv_lower_bound", v.dominance.tv_lower_bound},
                     {"direction_tv", v.direction_tv},
                     {"direction_chi2", chi2(v.direction_chi2)},
                     {"v_bins", v.v_bins},
                     {"v_tv", v.v_tv},
                     {"v_chi2", chi2(v.v_chi2)},
                     {"u_tv", v.u_tv},
                     {"v_given_s_chi2", chi2(v.v_given_s_chi2)},
                     {"direction_given_s_chi2", chi2(v.direction_given_s_chi2)},
                     {"kept_size_counts", v.kept_size_counts},
                     {"kept_size_tv", v.kept_size_tv},
                     {"kept_size_chi2", chi2(v.kept_size_chi2)},
                     {"candidate_size_counts", v.candidate_size_counts},
                     {"label_violations", v.label_violations},
                     {"support_violations", v.support_violations}};
  if (!v.dominance.holds || v.label_violations || v.support_violations) rep.exit_code = kVerification;
  return rep;
}

Report cmd_balls(int d, std::int64_t r, std::optional<int> k, bool table, std::optional<double> gamma,
                 std::optional<double> beta, std::int64_t trials, const ParamFlags& pf, const Globals& g) {
  const auto spec = k ? BallSpec::wrap(d, r, *k) : BallSpec::unbounded(d, r);
  const BallTable t(spec);
  Report rep;
  rep.command = "balls";
  const BigInt l1 = l1_ball_count(d, r);
  const double bound = std::pow(6.0, d) * static_cast<double>(r) * static_cast<double>(r);
  rep.summary = Json{{"d", d},
                     {"r", r},
                     {"k", k ? Json(*k) : Json(nullptr)},
                     {"count", t.volume().str()},
                     {"l1_count", l1.str()},
                     {"l1_bound", bound},
                     {"l1_bound_holds", r == 0 || l1.convert_to<double>() <= bound}};
  if (table) {
    rep.columns = {"t", "count"};
    const auto counts = t.counts();
    for (std::size_t i = 0; i < counts.size(); ++i) rep.rows.push_back({i, counts[i].str()});
  }
  if (gamma || beta) {
    if (!k) throw UsageError("balls: interior statistics need --k");
    const Params params = pf.build(d, *k, 0);
    auto rng = derive_stream(g.seed, 0, StreamRole::kAux);
    const auto s = interior_statistics(params, r, gamma.value_or(0.25), beta.value_or(params.beta()), trials, rng);
    rep.summary["q"] = s.q;
    rep.summary["interior_exact"] = s.interior_exact;
    rep.summary["interior_hat"] = s.interior_hat;
    rep.summary["smallnorm_applies"] = s.smallnorm_applies;
    rep.summary["smallnorm_holds"] = s.smallnorm_holds;
    rep.summary["small_count_histogram"] = s.small_count_histogram;
    rep.summary["fewsmall_bound"] = s.fewsmall_bound;
    rep.summary["fewsmall_hat"] = s.fewsmall_hat;
    rep.summary["fewsmall_applies"] = s.fewsmall_applies;
    rep.summary["fewsmall_holds"] = s.fewsmall_holds;
    if (!s.smallnorm_holds || !s.fewsmall_holds) rep.exit_code = kVerification;
  }
  return rep;
}

Report cmd_lo(const std::string& xs, std::int64_t s, std::int64_t y, int k, std::int64_t trials, const Globals& g) {
  std::vector<std::int64_t> x;
  auto rng = derive_stream(g.seed, 0, StreamRole::kAux);
  if (!xs.empty()) {
    x = parse_list<std::int64_t>(xs, "x");
  } else {
    if (s < 1) throw UsageError("lo-check: give --x or --s >= 1");
    for (std::int64_t i = 0; i < s; ++i) x.push_back(1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(k - 1))));
  }
  const auto r = spectral::littlewood_offord_estimate(x, y, k, trials, rng);
  Report rep;
  rep.command = "lo-check";
  rep.summary = Json{{"s", r.s},       {"k", k},         {"y", y},
                     {"exact", r.exact}, {"estimate", r.estimate}, {"sigma", r.sigma},
                     {"bound", r.bound}, {"within_bound", r.within_bound}};
  if (!r.within_bound) rep.exit_code = kVerification;
  return rep;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"replearn: replicable learning of wrap-around intervals", "replearn"};
  app.require_subcommand(1);
  app.fallthrough(false);

  Globals g;
  ParamFlags pf;
  std::string target, xs, ys, sweep_n, sweep_k, sweep_d, sweep_eps, sweep_rho;
  std::optional<std::int64_t> trials;
  std::int64_t radius = 1, random_size = 0, s = 0, y = 0;
  std::int64_t r_ball = 0;
  int r_moment = 2;
  bool exact = false, table = false, resume = false;
  std::size_t buckets = 20;
  std::optional<int> ball_k;
  std::optional<double> gamma, beta;

  auto sub = [&](const char* name, const char* help) {
    auto* c = app.add_subcommand(name, help);
    add_globals(c, g);
    return c;
  };

  auto* learn = sub("learn", "run the learner once on a fresh sample");
  pf.add_to(learn);
  learn->add_option("--target", target, "target tuple a,b,... (default: random)");

  auto* replicate = sub("replicate", "paired runs: replicability and error rates");
  pf.add_to(replicate);
  replicate->add_option("--trials", trials, "number of paired trials");

  auto* sweep = sub("sweep", "replicate over a parameter grid, one CSV row per point");
  pf.add_to(sweep);
  sweep->add_option("--trials", trials, "paired trials per grid point");
  sweep->add_option("--sweep-n", sweep_n, "comma list of n");
  sweep->add_option("--sweep-k", sweep_k, "comma list of k targets (rounded up to primes)");
  sweep->add_option("--sweep-d", sweep_d, "comma list of d");
  sweep->add_option("--sweep-epsilon", sweep_eps, "comma list of epsilon");
  sweep->add_option("--sweep-rho", sweep_rho, "comma list of rho");
  sweep->add_flag("--resume", resume, "continue a partially written --out file");

  auto* mode = sub("mode", "exact output law and mode for tiny instances");
  pf.add_to(mode);
  mode->add_option("--target", target, "one target tuple (default: all, with mode classes)");

  auto* spectrum = sub("spectrum", "analytic Cayley-graph spectrum with a dense cross-check");
  pf.add_to(spectrum);
  spectrum->add_option("--buckets", buckets, "histogram buckets");

  auto* expansion = sub("expansion", "internal and escaping edges of a vertex set");
  pf.add_to(expansion);
  expansion->add_option("--radius", radius, "T = wrap ball of this radius around 0");
  expansion->add_option("--random", random_size, "T = this many uniform vertices instead");

  auto* tail = sub("tail", "indicator tail, eigenvalue implication and central moment");
  pf.add_to(tail);
  tail->add_option("--r", r_moment, "even moment order");
  tail->add_option("--trials", trials, "Monte Carlo draws of u");
  tail->add_flag("--exact", exact, "also enumerate every u");

  auto* coupling = sub("coupling", "majorization coupling of two laws (default: |P| against Binomial(d,2/3))");
  pf.add_to(coupling);
  coupling->add_option("--x", xs, "comma list x_0..x_d");
  coupling->add_option("--y", ys, "comma list y_0..y_d");

  auto* step = sub("step-verify", "distribution checks for the random step");
  pf.add_to(step);
  step->add_option("--trials", trials, "number of steps");

  auto* balls = sub("balls", "exact l1 and wrap-around ball counts");
  pf.add_to(balls);
  balls->add_option("--r", r_ball, "radius")->required();
  balls->add_option("--modulus", ball_k, "wrap modulus (default: unbounded Z^d)");
  balls->add_flag("--table", table, "print the shell counts t,count");
  balls->add_option("--gamma", gamma, "interior statistics: gamma");
  balls->add_option("--beta", beta, "interior statistics: beta");
  balls->add_option("--trials", trials, "interior statistics: draws");

  auto* lo = sub("lo-check", "Littlewood-Offord estimate against its bound");
  pf.add_to(lo);
  lo->add_option("--x", xs, "comma list of coefficients");
  lo->add_option("--s", s, "draw this many random nonzero coefficients instead");
  lo->add_option("--y", y, "target residue");
  lo->add_option("--trials", trials, "Monte Carlo draws when 3^s is large");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    Report rep;
    std::unique_ptr<std::ofstream> file;
    auto* sink = &out;
    auto open_out = [&] {
      if (g.out.empty()) return;
      file = std::make_unique<std::ofstream>(g.out);
      if (!*file) throw IoError("cannot open " + g.out + " for writing");
      sink = file.get();
    };

    auto experiment = [&] {
      ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
      cfg.params = pf.apply(cfg.params);
      if (trials) cfg.trials = *trials;
      if (cfg.trials < 1) throw UsageError("--trials must be >= 1");
      // An explicit --seed wins over the file.
      bool seed_given = false;
      for (auto* c : app.get_subcommands()) seed_given = seed_given || c->count("--seed") > 0;
      if (seed_given || g.config.empty()) cfg.master_seed = g.seed;
      if (g.threads) cfg.threads = g.threads;
      return cfg;
    };

    if (learn->parsed()) {
      rep = cmd_learn(pf.build(4, 29, 100), g, target);
    } else if (replicate->parsed()) {
      auto cfg = experiment();
      rep = replication_table({run_replication_experiment(cfg)}, "replicate");
    } else if (sweep->parsed()) {
      auto cfg = experiment();
      if (!sweep_n.empty()) cfg.sweep_n = parse_list<std::int64_t>(sweep_n, "sweep-n");
      if (!sweep_k.empty()) cfg.sweep_k = parse_list<std::int64_t>(sweep_k, "sweep-k");
      if (!sweep_d.empty()) cfg.sweep_d = parse_list<int>(sweep_d, "sweep-d");
      if (!sweep_eps.empty()) cfg.sweep_epsilon = parse_list<double>(sweep_eps, "sweep-epsilon");
      if (!sweep_rho.empty()) cfg.sweep_rho = parse_list<double>(sweep_rho, "sweep-rho");
      if (resume) cfg.resume = true;
      if (!g.out.empty()) cfg.output = g.out;
      if (!g.json && !cfg.output.empty()) {
        sweep_experiments(cfg);
        return kOk;
      }
      std::ostringstream sink_csv;
      rep = replication_table(sweep_experiments(cfg, sink_csv), "sweep");
      if (!cfg.output.empty()) g.out = cfg.output.string();
    } else if (mode->parsed()) {
      rep = cmd_mode(pf.build(1, 3, 2), g, target);
    } else if (spectrum->parsed()) {
      const Params p = pf.build(1, 3, 0);
      rep = cmd_spectrum(p.d(), p.k(), buckets);
    } else if (expansion->parsed()) {
      rep = cmd_expansion(pf.build(2, 5, 0), g, radius, random_size);
    } else if (tail->parsed()) {
      const Params p = pf.build(3, 11, 0);
      rep = cmd_tail(p.d(), p.k(), r_moment, trials.value_or(100'000), exact, g);
    } else if (coupling->parsed()) {
      rep = cmd_coupling(xs, ys, pf);
    } else if (step->parsed()) {
      const auto t = trials.value_or(100'000);
      if (t < 1) throw UsageError("--trials must be >= 1");
      rep = cmd_step_verify(pf.build(3, 11, 20), static_cast<std::uint64_t>(t), g);
    } else if (balls->parsed()) {
      rep = cmd_balls(pf.d.value_or(2), r_ball, ball_k ? ball_k : pf.k, table, gamma, beta,
                      trials.value_or(100'000), pf, g);
    } else if (lo->parsed()) {
      const int k = pf.k.value_or(101);
      if (k < 2 || !is_prime(k)) throw UsageError("lo-check: --k must be prime");
      rep = cmd_lo(xs, s, y, k, trials.value_or(100'000), g);
    }

    open_out();
    emit(rep, g.json, *sink, err);
    if (file) {
      file->flush();
      if (!*file) throw IoError("write failed on " + g.out);
    }
    if (rep.exit_code != kOk) err << rep.command << ": verification failed\n";
    return rep.exit_code;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kUsage;
  } catch (const ResourceError& e) {
    err << "resource limit: " << e.what() << '\n';
    return kResource;
  } catch (const VerificationError& e) {
    err << "verification failed: " << e.what() << '\n';
    return kVerification;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace replearn::cli
