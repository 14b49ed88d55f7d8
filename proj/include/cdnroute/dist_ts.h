#ifndef CDNROUTE_DIST_TS_H_
#define CDNROUTE_DIST_TS_H_

// Distributed transportation simplex.
//
// Server i hosts source node S_i and every destination node D_j homed on
// it; a basic cell is mirrored on the hosts of both endpoints. Server 0 is
// the root of the dual tree and coordinates epochs:
//
//   1. Duals flow down the tree (Varv to destinations, Varu to sources).
//      Afterwards each server sends the v values (and tree paths) of the
//      destinations it re-priced to every other server.
//   2. Each server prices its own row and reports its best negative cell
//      to the root, which answers Stop or Go.
//   3. Every server with a candidate sends ReducedCost to the host of the
//      entering destination, which starts a Cycle message along the tree
//      path back to the entering source. Cells are claimed on the source
//      side; a better cycle preempts a worse claim and the loser's initiator
//      receives Cancel. Initiators report to the root, which commits the
//      surviving, pairwise cell-disjoint cycles once every Cancel is
//      accounted for.
//   4. Survivors retrace their cycle with Update messages. The root then
//      announces the pivots and only nodes whose tree path crossed a
//      leaving cell are re-priced, starting from the entering cells.
//
// After 10 (n + m) max(n, m) pivots the root lets only the smallest-index
// negative cell enter per epoch (Bland's rule), which cannot cycle.

#include <functional>
#include <optional>
#include <vector>

#include "cdnroute/netsim.h"
#include "cdnroute/seq_solvers.h"
#include "cdnroute/tp_core.h"

namespace cdnroute {

// What the root decided in one epoch, plus an observer's snapshot of the
// distributed state taken when every server had priced its row.
struct EpochRecord {
  int epoch = 0;
  BasisState basis;                 // S-side mirrors and the rebuilt duals
  bool mirrors_consistent = true;   // D-side mirrors agree with S-side ones
  std::vector<PivotCycle> applied;  // committed pivots, by initiator id
  int initiated = 0;                // cycles started this epoch
  int cancelled = 0;                // cycles that did not commit
  long dual_messages = 0;           // Varv/Varu tree messages this epoch
  bool bland = false;
};

struct DistTsOptions {
  netsim::KernelOptions kernel;
  // Pivot count after which only one smallest-index pivot runs per epoch.
  // Zero selects 10 * (n + m) * max(n, m).
  long watchdog = 0;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct DistTsStats {
  long pivots = 0;
  int parallel_rounds = 0;  // pricing epochs, including the final one
  long cancellations = 0;
  long msg_count = 0;
  int chain_len = 0;
  std::optional<int> feasible_first_epoch;
  std::optional<long> feasible_first_pivots;
  std::optional<Cost> feasible_first_value;
  bool switched_to_bland = false;
};

struct DistTsResult {
  FlowSolution solution;
  BasisState basis;
  DistTsStats stats;
  netsim::Transcript transcript;
};

// Runs the protocol from a tree basis (typically dist_init followed by
// basis_completion). Throws PreconditionError if init is not a tree and
// WatchdogError if the epoch or event limit is exceeded.
DistTsResult dist_ts(const TpInstance& inst, const BasisState& init,
                     const DistTsOptions& options = {});

struct DualPropagationResult {
  std::vector<Cost> u;
  std::vector<Cost> v;
  netsim::Transcript transcript;  // tree messages only
};

// Runs only the initial dual flood from server 0 over the basis tree.
DualPropagationResult dual_propagation(const TpInstance& inst,
                                       const BasisState& basis,
                                       const netsim::KernelOptions& kernel = {});

}  // namespace cdnroute

#endif  // CDNROUTE_DIST_TS_H_
