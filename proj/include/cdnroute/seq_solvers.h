#ifndef CDNROUTE_SEQ_SOLVERS_H_
#define CDNROUTE_SEQ_SOLVERS_H_

// Sequential transportation simplex and its building blocks. These are the
// reference solvers the distributed algorithms are checked against.

#include <functional>
#include <optional>
#include <vector>

#include "cdnroute/tp_core.h"

namespace cdnroute {

// A basic solution: n+m-1 cells forming a spanning tree of the bipartite
// graph, the flows on them, and the dual values that price the tree.
struct BasisState {
  std::vector<Cell> basic;  // sorted ascending
  FlowMatrix x;
  std::vector<Cost> u;
  std::vector<Cost> v;

  bool is_basic(const Cell& cell) const;
  int n() const { return x.rows(); }
  int m() const { return x.cols(); }

  // Tree adjacency over nodes [0, n) = sources and [n, n+m) = destinations.
  std::vector<std::vector<int>> adjacency() const;
};

// True when `cells` has exactly n+m-1 members and they connect all nodes.
bool is_spanning_tree(const std::vector<Cell>& cells, int n, int m);

struct PivotCycle {
  Cell entering;
  std::vector<Cell> cells;  // cells[0] = entering (+), then alternating -, +
  Flow theta = 0;
  Cell leaving;

  // Sign of cells[k]: +1 for even k, -1 for odd k.
  static int sign(std::size_t k) { return k % 2 == 0 ? 1 : -1; }
};

// Algorithm-exact northwest corner rule, including the degenerate extra
// basic cell when a row and a column are exhausted together.
BasisState northwest_corner(const TpInstance& inst);

// Repeatedly saturates the cheapest open cell (ties on (i, j)); cells of
// the balancing destination come after all others. Exactly one row or
// column closes per allocation, so the result is always a tree.
BasisState minimum_cost_method(const TpInstance& inst);

// Fixes u[0] = 0 and solves u_i + v_j = c_ij along the tree. Throws
// PreconditionError if the basic cells are not a spanning tree.
void compute_duals(const TpInstance& inst, BasisState& basis);

// c_ij - u_i - v_j for every cell. Throws PreconditionError when the duals
// do not price some basic cell at exactly zero.
CostMatrix reduced_costs(const TpInstance& inst, const BasisState& basis);

// The tree cycle closed by `entering`, with theta and the leaving cell
// (smallest cell among those reaching theta). Does not modify the basis.
PivotCycle find_cycle(const BasisState& basis, const Cell& entering);

// Applies the pivot for a non-basic cell with negative reduced cost, then
// recomputes the duals. Throws PreconditionError otherwise.
PivotCycle pivot(const TpInstance& inst, BasisState& basis,
                 const Cell& entering);

// Same as pivot() but skips the reduced-cost precondition check and the
// dual refresh. Used by callers that maintain duals themselves.
void apply_cycle(BasisState& basis, const PivotCycle& cycle);

enum class EnteringRule { kDantzig, kBland };

struct SimplexOptions {
  // Called after every pivot with the updated basis.
  std::function<void(const BasisState&, const PivotCycle&)> on_pivot;
  // Pivot count after which the entering rule switches to Bland's. Zero
  // selects the default 10 * (n + m) * max(n, m).
  long watchdog = 0;
};

struct SimplexResult {
  FlowSolution solution;
  BasisState basis;
  long pivots = 0;
  // First pivot count at which no artificial arc carried flow; 0 when the
  // initial basis already avoided them, empty if it never happened.
  std::optional<long> feasible_first_pivots;
  std::optional<Cost> feasible_first_value;
  bool switched_to_bland = false;
};

SimplexResult transportation_simplex(const TpInstance& inst, BasisState init,
                                     const SimplexOptions& options = {});

// Largest n + m accepted by brute_force_optimum().
inline constexpr int kBruteForceLimit = 10;

// Minimum objective over all basic feasible solutions, found by enumerating
// every spanning tree of cells. Throws PreconditionError if n + m exceeds
// kBruteForceLimit or the instance is unbalanced.
Cost brute_force_optimum(const TpInstance& inst);
// Single-threaded reference for the enumeration above.
Cost brute_force_optimum_serial(const TpInstance& inst);

}  // namespace cdnroute

#endif  // CDNROUTE_SEQ_SOLVERS_H_
