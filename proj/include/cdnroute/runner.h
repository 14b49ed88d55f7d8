#ifndef CDNROUTE_RUNNER_H_
#define CDNROUTE_RUNNER_H_

// Algorithm pipelines behind the command-line tool: one run of a named
// algorithm on an instance, and the comparison table over instances,
// algorithms and seeds.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdnroute/instance_io.h"
#include "cdnroute/netsim.h"
#include "cdnroute/tp_core.h"

namespace cdnroute {

enum class Algorithm { kNwc, kMcm, kSeqTs, kDistInit, kDistTs, kAuction, kOracle };

// Names used on the command line: nwc, mcm, seq-ts, dist-init, dist-ts,
// auction, oracle.
std::string to_string(Algorithm alg);
Algorithm parse_algorithm(const std::string& text);
const std::vector<Algorithm>& all_algorithms();

// Starting basis of the simplex variants. dist-init runs the distributed
// heuristic and completes its flow to a tree.
enum class InitMethod { kNwc, kMcm, kDistInit };
std::string to_string(InitMethod init);
InitMethod parse_init_method(const std::string& text);

struct RunConfig {
  Algorithm alg = Algorithm::kNwc;
  InitMethod init = InitMethod::kNwc;
  netsim::DelayModel delay;
  std::uint64_t seed = 0;  // kernel seed
};

struct RunOutcome {
  FlowSolution solution;
  std::optional<long> total_pivots;
  std::optional<long> parallel_rounds;  // pricing epochs or auction rounds
  std::optional<long> msg_count;
  std::optional<long> chain_len;
  std::optional<long> feasible_first_pivots;
  std::optional<long> feasible_round;
  std::optional<Cost> feasible_first_value;
  // Delivery log of the distributed algorithms; empty otherwise.
  std::string transcript_csv;
};

// Propagates the solver's exceptions (InfeasibleError, WatchdogError, and
// PreconditionError for the oracle on instances above kBruteForceLimit).
RunOutcome run_algorithm(const TpInstance& inst, const RunConfig& config);

// Reference optimum: simplex from the minimum cost basis.
Cost reference_optimum(const TpInstance& inst);

struct NamedInstance {
  std::string name;
  TpInstance tp;
};

struct CompareConfig {
  std::vector<Algorithm> algs;
  int reps = 1;             // kernel seeds seed, seed + 1, ...
  std::uint64_t seed = 1;
  netsim::DelayModel delay;
  InitMethod init = InitMethod::kNwc;
  bool wallclock = false;
};

// One row per (instance, algorithm). Distributed algorithms run once per
// seed and report means (and the sample SD of the objective); sequential
// ones run once. A failing cell gets status "error: ..." and the others
// still run. Cells run in parallel when OpenMP is available.
std::vector<CompareRow> compare(const std::vector<NamedInstance>& instances,
                                const CompareConfig& config);

// Single-run rows for the per-algorithm tables.
DistTsRow dist_ts_row(const std::string& name, const RunOutcome& run);
AuctionRow auction_row(const std::string& name, const RunOutcome& run);
CompareRow compare_row(const std::string& name, Algorithm alg, const RunOutcome& run);

// Flow matrix, one row per line.
std::string format_flows(const FlowMatrix& x);

}  // namespace cdnroute

#endif  // CDNROUTE_RUNNER_H_
