#ifndef CDNROUTE_DIST_INIT_H_
#define CDNROUTE_DIST_INIT_H_

// Distributed constructive heuristic. Each server is a process that owns
// its own row of the flow matrix and the requests homed on it. A server
// serves what it can of its own requests, then asks the other servers in
// order of proximity with Serve messages; a receiver grants what its
// residual bandwidth allows and answers Ack (possibly partial) or Nack.
// Servers that do not hold a content come last in the order and are served
// over penalty arcs, so every request ends fully attended.

#include <cstdint>
#include <vector>

#include "cdnroute/netsim.h"
#include "cdnroute/seq_solvers.h"
#include "cdnroute/tp_core.h"

namespace cdnroute {

struct ServeMsg {
  int dest = 0;
  Flow amount = 0;
};

struct GrantMsg {
  int dest = 0;
  Flow requested = 0;
  Flow granted = 0;
};

struct DistInitOptions {
  netsim::KernelOptions kernel;
};

struct DistInitResult {
  FlowSolution solution;
  // Serve/Ack/Nack exchange.
  netsim::Transcript transcript;
  // Convergecast of Σb - Σd to server 0 that sizes the balancing
  // destination; run and counted separately from the exchange above.
  netsim::Transcript balance;
};

// Order in which request j's home asks servers for bandwidth: the home
// itself when it holds the content, then the other holders by (proximity,
// id), then non-holders by (proximity, id).
std::vector<int> serve_order(const TpInstance& inst, int j);

// Runs the protocol on `inst` (one process per source). The balancing
// destination, if any, receives each server's residual bandwidth.
// Throws InfeasibleError when Σb < Σd.
DistInitResult dist_init(const TpInstance& inst,
                         const DistInitOptions& options = {});

// Turns a feasible flow into a tree basis. Flow cycles among positive cells
// are first cancelled in whichever direction does not raise the cost; the
// remaining forest is then completed with zero cells, cheapest first (ties
// on (i, j)). Throws PreconditionError when x is infeasible.
BasisState basis_completion(const TpInstance& inst, const FlowMatrix& x);

}  // namespace cdnroute

#endif  // CDNROUTE_DIST_INIT_H_
