// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cdnroute/auction_tp.h"
#include "cdnroute/dist_init.h"
#include "cdnroute/dist_ts.h"
#include "cdnroute/instance_io.h"
#include "cdnroute/runner.h"
#include "cdnroute/seq_solvers.h"
#include "oracles.h"

using namespace cdnroute;

namespace {

// Pinned thresholds.
constexpr int kOracleInstances = 240;        // C1: at least 200
constexpr double kOracleSeconds = 60;        // C1 runtime
constexpr double kParityMedian = 0.5;        // C3
constexpr double kParitySeconds = 300;       // C3 runtime
constexpr long kDistTsMsgFactor = 20;        // C5: msg <= 20 p n m
constexpr long kDistTsChainFactor = 20;      // C5: chain <= 20 p n
constexpr long kDistInitMsgFactor = 5;       // C5: msg <= 5 n m
constexpr double kAuctionMsgRatio = 5;       // C6
constexpr double kTrendSeconds = 600;        // C6 runtime
constexpr int kQualityInstances = 20;        // C7
constexpr int kQualitySeeds = 10;            // C7
constexpr double kQualityFactor = 3;         // C7
constexpr std::uint64_t kQualitySeedScan = 200;

struct Verdict {
  long checks = 0;
  long failures = 0;
  std::string first_failure;

  void expect(bool ok, const std::string& what) {
    ++checks;
    if (ok) return;
    if (failures++ == 0) first_failure = what;
  }
  bool passed() const { return failures == 0; }
};

Verdict verdicts[11];
std::string summaries[11];

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

// C2 on one basis: tree shape, exact conservation, duals on basic cells.
void check_basis(const TpInstance& inst, const BasisState& b, const std::string& where) {
  Verdict& v = verdicts[2];
  const int n = inst.n();
  const int m = inst.m();
  v.expect(static_cast<int>(b.basic.size()) == n + m - 1, where + ": |basic| != n+m-1");
  v.expect(is_spanning_tree(b.basic, n, m), where + ": basis is not a spanning tree");
  v.expect(std::holds_alternative<FlowSolution>(check_feasible(inst, b.x)),
           where + ": flows do not conserve b and d");
  bool duals = static_cast<int>(b.u.size()) == n && static_cast<int>(b.v.size()) == m;
  for (const Cell& c : b.basic) {
    duals = duals && b.u[c.source] + b.v[c.dest] == inst.cost[c];
  }
  v.expect(duals, where + ": u_i + v_j != c_ij on a basic cell");
}

// C5 bounds on a dist-ts run.
void check_dist_ts_bounds(const TpInstance& inst, const DistTsStats& s, const std::string& where) {
  const long p = s.parallel_rounds;
  const long n = inst.n();
  const long m = inst.m();
  verdicts[5].expect(s.msg_count <= kDistTsMsgFactor * p * n * m, where + ": dist-ts msg_count bound");
  verdicts[5].expect(s.chain_len <= kDistTsChainFactor * p * n, where + ": dist-ts chain_len bound");
}

void check_dist_init_bound(const TpInstance& inst, long msg, const std::string& where) {
  verdicts[5].expect(msg <= kDistInitMsgFactor * inst.n() * inst.m(),
                     where + ": dist-init msg_count bound");
}

// C9 at the end of an auction run.
void check_auction_end(const TpInstance& inst, const AuctionResult& r, const std::string& where) {
  const AuctionModel model = make_auction_model(inst);
  // epsilon < 1/q  <=>  epsilon_scaled * q < scale
  verdicts[9].expect(r.stats.epsilon * model.q < r.stats.scale,
                     where + ": auction stopped with epsilon >= 1/min(n,m)");
  verdicts[9].expect(epsilon_cs_holds(model, r.awards, r.stats.epsilon),
                     where + ": epsilon-complementary slackness violated");
}

// Pivots of one epoch never share a cell.
void check_disjoint(const EpochRecord& rec, const std::string& where) {
  std::set<Cell> used;
  bool ok = true;
  for (const PivotCycle& p : rec.applied) {
    for (const Cell& c : p.cells) ok = used.insert(c).second && ok;
  }
  verdicts[10].expect(ok, where + ": two pivots of one epoch share a cell");
}

bool all_reduced_costs_non_negative(const TpInstance& inst, BasisState b) {
  compute_duals(inst, b);
  const CostMatrix rc = reduced_costs(inst, b);
  for (int i = 0; i < inst.n(); ++i) {
    for (int j = 0; j < inst.m(); ++j) {
      if (rc(i, j) < 0) return false;
    }
  }
  return true;
}

int zero_pivot_cases = 0;
int zero_pivot_heuristic_cases = 0;  // starts from MCM or DistInit

// C4: from a start with no negative reduced cost, both simplex variants stop
// immediately.
bool check_zero_pivots(const TpInstance& inst, const BasisState& start, const std::string& where) {
  if (!all_reduced_costs_non_negative(inst, start)) return false;
  ++zero_pivot_cases;
  const SimplexResult s = transportation_simplex(inst, start);
  DistTsOptions options;
  options.kernel.record_events = false;
  const DistTsResult d = dist_ts(inst, start, options);
  verdicts[4].expect(s.pivots == 0, where + ": seq-ts pivoted from an optimal start");
  verdicts[4].expect(d.stats.pivots == 0, where + ": dist-ts pivoted from an optimal start");
  return true;
}

TpInstance generated(InstanceClass cls, int n, std::uint64_t seed) {
  return reduce_rrsp_to_tp(generate(class_params(cls, n, seed)));
}

std::string name_of(int n, std::uint64_t seed) {
  return "gen_" + std::to_string(n) + "_" + std::to_string(seed);
}

// C1 with C2, C5, C9 and the disjointness half of C10 on the same runs.
void oracle_equality() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240611);
  long mismatches = 0;
  for (int trial = 0; trial < kOracleInstances; ++trial) {
    const TpInstance inst = testing::random_tp(rng);
    const std::string where = "random instance " + std::to_string(trial);
    const Cost opt = brute_force_optimum(inst);

    SimplexOptions seq_options;
    seq_options.on_pivot = [&](const BasisState& b, const PivotCycle&) {
      check_basis(inst, b, where + " seq-ts");
    };
    for (const BasisState& start : {northwest_corner(inst), minimum_cost_method(inst)}) {
      const SimplexResult s = transportation_simplex(inst, start, seq_options);
      check_basis(inst, s.basis, where + " seq-ts final");
      const bool ok = s.solution.objective == opt;
      mismatches += !ok;
      verdicts[1].expect(ok, where + ": transportation simplex");
      check_zero_pivots(inst, s.basis, where + " restarted at the optimum");
    }

    DistTsOptions dts;
    dts.kernel.seed = static_cast<std::uint64_t>(trial);
    if (trial % 2 == 1) dts.kernel.delay = netsim::DelayModel::uniform(1, 5);
    dts.on_epoch = [&](const EpochRecord& rec) {
      check_basis(inst, rec.basis, where + " dist-ts epoch " + std::to_string(rec.epoch));
      verdicts[2].expect(rec.mirrors_consistent, where + ": basis mirrors disagree");
      check_disjoint(rec, where);
    };
    const DistTsResult d = dist_ts(inst, northwest_corner(inst), dts);
    check_basis(inst, d.basis, where + " dist-ts final");
    check_dist_ts_bounds(inst, d.stats, where);
    mismatches += d.solution.objective != opt;
    verdicts[1].expect(d.solution.objective == opt, where + ": dist-ts");

    AuctionOptions ao;
    ao.kernel = dts.kernel;
    const AuctionResult a = auction_tp(inst, ao);
    mismatches += a.solution.objective != opt;
    verdicts[1].expect(a.solution.objective == opt, where + ": auction");
    check_auction_end(inst, a, where);

    DistInitOptions di;
    di.kernel = dts.kernel;
    check_dist_init_bound(inst, dist_init(inst, di).transcript.msg_count, where);
  }
  const double secs = seconds_since(t0);
  verdicts[1].expect(secs < kOracleSeconds, "runtime over the limit");
  summaries[1] = fmt("%.0f instances x 4 solvers, %.0f mismatches, %.1f s", kOracleInstances,
                     static_cast<double>(mismatches), secs);
}

// C3 with the C4 and C5 checks on the same instances.
void pivot_parity() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> ratios;
  for (int n : {10, 20}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const std::string where = name_of(n, seed);
      const TpInstance inst = generated(InstanceClass::kMedium, n, seed);
      const BasisState mcm = minimum_cost_method(inst);
      const SimplexResult s = transportation_simplex(inst, mcm);

      DistInitOptions di;
      di.kernel.record_events = false;
      const DistInitResult init = dist_init(inst, di);
      check_dist_init_bound(inst, init.transcript.msg_count, where);
      const BasisState start = basis_completion(inst, init.solution.x);
      DistTsOptions options;
      options.kernel.record_events = false;
      const DistTsResult d = dist_ts(inst, start, options);
      check_dist_ts_bounds(inst, d.stats, where);
      verdicts[3].expect(d.solution.objective == s.solution.objective,
                         where + ": seq-ts and dist-ts disagree on the optimum");
      ratios.push_back(std::abs(static_cast<double>(d.stats.pivots - s.pivots)) /
                       std::max<double>(1, static_cast<double>(s.pivots)));

      zero_pivot_heuristic_cases += check_zero_pivots(inst, mcm, where + " from MCM");
      zero_pivot_heuristic_cases += check_zero_pivots(inst, start, where + " from DistInit");
    }
  }
  std::sort(ratios.begin(), ratios.end());
  const double median = (ratios[9] + ratios[10]) / 2;
  const double secs = seconds_since(t0);
  verdicts[3].expect(median <= kParityMedian, "median pivot-count difference above 0.5");
  verdicts[3].expect(secs < kParitySeconds, "runtime over the limit");
  summaries[3] = fmt("20 instances (n = 10, 20), median |dist - seq| / max(1, seq) = %.3f "
                     "(limit %.1f), max %.3f, %.1f s",
                     median, kParityMedian, ratios.back(), secs);
}

void zero_pivots_summary() {
  verdicts[4].expect(zero_pivot_cases >= 20, "too few starts with no negative reduced cost");
  verdicts[4].expect(zero_pivot_heuristic_cases >= 1, "no heuristic start was already optimal");
  summaries[4] = fmt("%.0f starts with all reduced costs >= 0 (%.0f of them MCM or DistInit "
                     "starts on generated instances), both solvers 0 pivots on each",
                     zero_pivot_cases, zero_pivot_heuristic_cases);
}

void message_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  double min_ratio = 1e300;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::string where = name_of(20, seed);
    const TpInstance inst = generated(InstanceClass::kMedium, 20, seed);
    DistInitOptions di;
    di.kernel.record_events = false;
    const BasisState start = basis_completion(inst, dist_init(inst, di).solution.x);
    DistTsOptions dts;
    dts.kernel.record_events = false;
    const DistTsResult d = dist_ts(inst, start, dts);
    check_dist_ts_bounds(inst, d.stats, where);
    AuctionOptions ao;
    ao.kernel.record_events = false;
    const AuctionResult a = auction_tp(inst, ao);
    check_auction_end(inst, a, where);
    verdicts[6].expect(a.solution.objective == d.solution.objective,
                       where + ": auction and dist-ts disagree on the optimum");
    const double ratio = static_cast<double>(a.stats.msg_count) /
                         static_cast<double>(std::max(1L, d.stats.msg_count));
    min_ratio = std::min(min_ratio, ratio);
    verdicts[6].expect(ratio > kAuctionMsgRatio, where + ": auction sends too few messages");
  }
  const double secs = seconds_since(t0);
  verdicts[6].expect(secs < kTrendSeconds, "runtime over the limit");
  summaries[6] = fmt("10 instances (n = 20), smallest auction/dist-ts message ratio %.0f "
                     "(limit > %.0f), %.1f s",
                     min_ratio, kAuctionMsgRatio, secs);
}

// Mean and sample SD.
std::pair<double, double> mean_sd(const std::vector<double>& xs) {
  double sum = 0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double sq = 0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return {mean, xs.size() > 1 ? std::sqrt(sq / static_cast<double>(xs.size() - 1)) : 0.0};
}

void init_quality() {
  std::vector<double> mcm_gaps;
  std::vector<double> di_gaps;
  std::string sds;
  int skipped = 0;
  for (std::uint64_t seed = 1;
       seed <= kQualitySeedScan && static_cast<int>(mcm_gaps.size()) < kQualityInstances; ++seed) {
    const TpInstance inst = generated(InstanceClass::kMedium, 10, seed);
    const FlowSolution mcm = make_solution(inst, minimum_cost_method(inst).x);
    std::vector<FlowSolution> runs;
    bool feasible = !mcm.uses_artificial;
    for (int k = 0; k < kQualitySeeds; ++k) {
      DistInitOptions options;
      options.kernel.delay = netsim::DelayModel::uniform(1, 5);
      options.kernel.seed = static_cast<std::uint64_t>(k + 1);
      options.kernel.record_events = false;
      const DistInitResult r = dist_init(inst, options);
      check_dist_init_bound(inst, r.transcript.msg_count, name_of(10, seed));
      feasible = feasible && !r.solution.uses_artificial;
      runs.push_back(r.solution);
    }
    // Gaps are compared only where both heuristics avoid artificial arcs.
    if (!feasible) {
      ++skipped;
      continue;
    }
    const double opt = static_cast<double>(reference_optimum(inst));
    mcm_gaps.push_back(100.0 * (static_cast<double>(mcm.objective) - opt) / opt);
    std::vector<double> values;
    for (const FlowSolution& s : runs) values.push_back(static_cast<double>(s.objective));
    const auto [mean, sd] = mean_sd(values);
    di_gaps.push_back(100.0 * (mean - opt) / opt);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", sd);
    sds += (sds.empty() ? "" : " ") + std::string(buf);
  }
  verdicts[7].expect(static_cast<int>(mcm_gaps.size()) == kQualityInstances,
                     "not enough instances where both heuristics avoid artificial arcs");
  const double mcm_mean = mean_sd(mcm_gaps).first;
  const double di_mean = mean_sd(di_gaps).first;
  verdicts[7].expect(di_mean <= kQualityFactor * mcm_mean && mcm_mean <= kQualityFactor * di_mean,
                     "DistInit and MCM gaps differ by more than a factor of 3");
  summaries[7] = fmt("%.0f medium instances (%.0f skipped with artificial flow), mean gap "
                     "MCM %.2f%%, DistInit %.2f%%",
                     static_cast<double>(mcm_gaps.size()), skipped, mcm_mean, di_mean) +
                 "; per-instance DistInit SD: " + sds;
}

void determinism() {
  std::vector<NamedInstance> instances = {{"t4", testing::t4()},
                                          {"conflict", testing::conflicting_cycles()}};
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    GeneratorParams p = class_params(seed == 3 ? InstanceClass::kHard : InstanceClass::kMedium, 6, seed);
    p.avg_requests_per_server = 10;
    instances.push_back({name_of(6, seed), reduce_rrsp_to_tp(generate(p))});
  }
  instances.push_back({name_of(10, 1), generated(InstanceClass::kMedium, 10, 1)});
  long triples = 0;
  for (const NamedInstance& inst : instances) {
    for (Algorithm alg : all_algorithms()) {
      if (alg == Algorithm::kOracle && inst.tp.n() + inst.tp.m() > kBruteForceLimit) continue;
      for (const char* delay : {"unit", "uniform:1:5"}) {
        for (std::uint64_t seed : {1u, 7u}) {
          RunConfig config;
          config.alg = alg;
          config.seed = seed;
          config.delay = netsim::DelayModel::parse(delay);
          const RunOutcome a = run_algorithm(inst.tp, config);
          const RunOutcome b = run_algorithm(inst.tp, config);
          const std::string where = inst.name + " " + to_string(alg) + " " + delay;
          verdicts[8].expect(a.transcript_csv == b.transcript_csv, where + ": transcripts differ");
          verdicts[8].expect(emit_stats({compare_row(inst.name, alg, a)}) ==
                                 emit_stats({compare_row(inst.name, alg, b)}),
                             where + ": CSV rows differ");
          ++triples;
        }
      }
    }
  }
  CompareConfig config;
  config.algs = {Algorithm::kSeqTs, Algorithm::kDistInit, Algorithm::kDistTs, Algorithm::kAuction};
  config.reps = 3;
  config.delay = netsim::DelayModel::uniform(1, 5);
  verdicts[8].expect(emit_stats(compare(instances, config)) == emit_stats(compare(instances, config)),
                     "comparison tables differ");
  const std::string gen = emit_rrsp(generate(class_params(InstanceClass::kMedium, 10, 5)));
  verdicts[8].expect(gen == emit_rrsp(generate(class_params(InstanceClass::kMedium, 10, 5))),
                     "generator output differs");
  summaries[8] = fmt("%.0f (instance, algorithm, delay, seed) runs replayed, plus the comparison "
                     "table and the generator",
                     static_cast<double>(triples));
}

void epsilon_summary() {
  summaries[9] = fmt("%.0f checks over the criterion 1 and 6 runs", static_cast<double>(verdicts[9].checks));
}

void conflict_cancellation() {
  const TpInstance inst = testing::conflicting_cycles();
  std::vector<EpochRecord> epochs;
  DistTsOptions options;
  options.on_epoch = [&](const EpochRecord& r) { epochs.push_back(r); };
  const DistTsResult d = dist_ts(inst, northwest_corner(inst), options);
  Verdict& v = verdicts[10];
  v.expect(!epochs.empty(), "no epoch observed");
  if (!epochs.empty()) {
    const CostMatrix rc = reduced_costs(inst, epochs[0].basis);
    v.expect(rc(1, 0) == -2 && rc(2, 0) == -4, "instance does not have the -2 and -4 candidates");
    v.expect(epochs[0].initiated == 2, "both candidate cycles should start");
    v.expect(epochs[0].applied.size() == 1, "expected exactly one applied pivot");
    v.expect(!epochs[0].applied.empty() && epochs[0].applied[0].entering == Cell{2, 0} &&
                 rc(2, 0) == -4,
             "the applied pivot is not the -4 cycle");
  }
  v.expect(d.stats.pivots == 1, "expected one pivot in the whole run");
  const long cancels = d.transcript.count(netsim::Tag::kCancel);
  v.expect(cancels >= 1, "no Cancel message in the transcript");
  v.expect(d.solution.objective == brute_force_optimum(inst), "run is not optimal");
  for (const EpochRecord& r : epochs) check_disjoint(r, "conflict instance");
  summaries[10] = fmt("one applied pivot (reduced cost -4), %.0f Cancel message(s); "
                      "%.0f epoch disjointness checks",
                      static_cast<double>(cancels), static_cast<double>(v.checks));
}

const char* kTitles[11] = {"",
                           "oracle equality",
                           "basis invariants",
                           "DistTS/sequential pivot parity",
                           "zero pivots from an optimal start",
                           "message-complexity bounds",
                           "auction vs DistTS message trend",
                           "DistInit quality vs MCM",
                           "determinism",
                           "epsilon-optimality threshold",
                           "conflict-cancellation soundness"};

}  // namespace

int main() {
  oracle_equality();
  conflict_cancellation();
  pivot_parity();
  zero_pivots_summary();
  message_trend();
  init_quality();
  determinism();
  epsilon_summary();
  summaries[2] = fmt("%.0f basis checks on every pivot and epoch of the criterion 1 runs",
                     static_cast<double>(verdicts[2].checks));
  summaries[5] = fmt("%.0f bound checks (criteria 1, 3, 6 and 7 runs)",
                     static_cast<double>(verdicts[5].checks));

  int failed = 0;
  for (int c = 1; c <= 10; ++c) {
    const Verdict& v = verdicts[c];
    std::printf("C%-2d %s  %s: %s\n", c, v.passed() ? "PASS" : "FAIL", kTitles[c],
                summaries[c].c_str());
    if (!v.passed()) {
      std::printf("     %ld of %ld checks failed; first: %s\n", v.failures, v.checks,
                  v.first_failure.c_str());
      ++failed;
    }
  }
  return failed ? 1 : 0;
}
