#include "cdnroute/seq_solvers.h"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>
#include <utility>

#include "cdnroute/kernels.h"

#ifdef CDNROUTE_HAS_OPENMP
#include <omp.h>
#endif

namespace cdnroute {

namespace {

// Union-find with undo, for tree tests and the enumerator.
class DisjointSets {
 public:
  explicit DisjointSets(int size) : parent_(size), rank_(size, 0) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int a) const {
    while (parent_[a] != a) a = parent_[a];
    return a;
  }

  // Returns false (and records nothing) when a and b are already joined.
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    history_.push_back({b, rank_[a] == rank_[b]});
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

  void undo() {
    auto [child, bumped] = history_.back();
    history_.pop_back();
    const int root = parent_[child];
    parent_[child] = child;
    if (bumped) --rank_[root];
  }

 private:
  struct Change {
    int child;
    bool bumped;
  };
  std::vector<int> parent_;
  std::vector<int> rank_;
  std::vector<Change> history_;
};

void require_balanced(const TpInstance& inst, const char* who) {
  if (!inst.balanced()) {
    throw PreconditionError(std::string(who) + " needs a balanced instance");
  }
  if (inst.n() == 0 || inst.m() == 0) {
    throw PreconditionError(std::string(who) + " needs a non-empty instance");
  }
}

// Adds zero-flow cells from `order` until `basis.basic` spans all nodes.
void complete_tree(BasisState& basis, const std::vector<Cell>& order) {
  const int n = basis.n();
  const int m = basis.m();
  DisjointSets sets(n + m);
  for (const Cell& c : basis.basic) sets.unite(c.source, n + c.dest);
  for (const Cell& c : order) {
    if (static_cast<int>(basis.basic.size()) == n + m - 1) break;
    if (sets.unite(c.source, n + c.dest)) basis.basic.push_back(c);
  }
  std::sort(basis.basic.begin(), basis.basic.end());
}

std::vector<Cell> lexicographic_cells(int n, int m) {
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) cells.push_back({i, j});
  }
  return cells;
}

Matrix<std::uint8_t> basic_mask(const BasisState& basis) {
  Matrix<std::uint8_t> mask(basis.n(), basis.m());
  for (const Cell& c : basis.basic) mask[c] = 1;
  return mask;
}

}  // namespace

bool BasisState::is_basic(const Cell& cell) const {
  return std::binary_search(basic.begin(), basic.end(), cell);
}

std::vector<std::vector<int>> BasisState::adjacency() const {
  const int n_src = n();
  std::vector<std::vector<int>> adj(n_src + m());
  for (const Cell& c : basic) {
    adj[c.source].push_back(n_src + c.dest);
    adj[n_src + c.dest].push_back(c.source);
  }
  return adj;
}

bool is_spanning_tree(const std::vector<Cell>& cells, int n, int m) {
  if (static_cast<int>(cells.size()) != n + m - 1) return false;
  DisjointSets sets(n + m);
  for (const Cell& c : cells) {
    if (c.source < 0 || c.source >= n || c.dest < 0 || c.dest >= m) {
      return false;
    }
    if (!sets.unite(c.source, n + c.dest)) return false;
  }
  return true;
}

BasisState northwest_corner(const TpInstance& inst) {
  require_balanced(inst, "northwest_corner");
  const int n = inst.n();
  const int m = inst.m();
  BasisState basis;
  basis.x = FlowMatrix(n, m);
  std::vector<Flow> supply = inst.supply;
  std::vector<Flow> demand = inst.demand;
  Flow remaining = inst.total_demand();
  Matrix<std::uint8_t> mark(n, m);
  int i = 0;
  int j = 0;
  do {
    const Flow delta = std::min(supply[i], demand[j]);
    basis.x(i, j) = delta;
    mark(i, j) = 1;
    supply[i] -= delta;
    demand[j] -= delta;
    remaining -= delta;
    if (remaining != 0 && supply[i] == 0 && demand[j] == 0) {
      // Degenerate step: keep the tree connected with a zero basic cell.
      // Remaining demand lies right of column j, so j + 1 < m here; the
      // (i + 1, j) branch only guards against malformed input.
      if (j + 1 < m) {
        mark(i, j + 1) = 1;
      } else if (i + 1 < n) {
        mark(i + 1, j) = 1;
      }
    }
    if (supply[i] == 0 && i + 1 < n) ++i;
    if (demand[j] == 0 && j + 1 < m) ++j;
  } while (remaining != 0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < m; ++c) {
      if (mark(r, c)) basis.basic.push_back({r, c});
    }
  }
  // Zero rows/columns trailing the staircase are not reached by the loop.
  complete_tree(basis, lexicographic_cells(n, m));
  compute_duals(inst, basis);
  return basis;
}

BasisState minimum_cost_method(const TpInstance& inst) {
  require_balanced(inst, "minimum_cost_method");
  const int n = inst.n();
  const int m = inst.m();
  std::vector<Cell> order = lexicographic_cells(n, m);
  // The balancing destination costs 0 but is filled last: taking it first
  // would strand real demand on penalty arcs.
  const auto balancing = [&](const Cell& c) { return inst.artificial_dest == c.dest; };
  std::stable_sort(order.begin(), order.end(),
                   [&](const Cell& a, const Cell& b) {
                     return std::make_pair(balancing(a), inst.cost[a]) <
                            std::make_pair(balancing(b), inst.cost[b]);
                   });
  BasisState basis;
  basis.x = FlowMatrix(n, m);
  std::vector<Flow> supply = inst.supply;
  std::vector<Flow> demand = inst.demand;
  std::vector<bool> row_open(n, true);
  std::vector<bool> col_open(m, true);
  int open_rows = n;
  int open_cols = m;
  std::size_t cursor = 0;
  while (open_rows > 0 && open_cols > 0) {
    while (!row_open[order[cursor].source] || !col_open[order[cursor].dest]) {
      ++cursor;
    }
    const Cell cell = order[cursor];
    const Flow delta = std::min(supply[cell.source], demand[cell.dest]);
    basis.x[cell] = delta;
    basis.basic.push_back(cell);
    supply[cell.source] -= delta;
    demand[cell.dest] -= delta;
    const bool row_done = supply[cell.source] == 0;
    const bool col_done = demand[cell.dest] == 0;
    if (open_rows == 1 && open_cols == 1) break;
    // Close exactly one line per allocation; a column left open at zero
    // demand later receives a degenerate zero cell.
    if (row_done && (open_rows > 1 || !col_done)) {
      row_open[cell.source] = false;
      --open_rows;
    } else {
      col_open[cell.dest] = false;
      --open_cols;
    }
  }
  std::sort(basis.basic.begin(), basis.basic.end());
  compute_duals(inst, basis);
  return basis;
}

void compute_duals(const TpInstance& inst, BasisState& basis) {
  const int n = basis.n();
  const int m = basis.m();
  if (!is_spanning_tree(basis.basic, n, m)) {
    throw PreconditionError("basic cells do not form a spanning tree");
  }
  const auto adj = basis.adjacency();
  std::vector<bool> seen(n + m, false);
  basis.u.assign(n, 0);
  basis.v.assign(m, 0);
  std::deque<int> queue{0};
  seen[0] = true;
  while (!queue.empty()) {
    const int node = queue.front();
    queue.pop_front();
    for (int next : adj[node]) {
      if (seen[next]) continue;
      seen[next] = true;
      if (node < n) {
        const int j = next - n;
        basis.v[j] = inst.cost(node, j) - basis.u[node];
      } else {
        const int j = node - n;
        basis.u[next] = inst.cost(next, j) - basis.v[j];
      }
      queue.push_back(next);
    }
  }
}

CostMatrix reduced_costs(const TpInstance& inst, const BasisState& basis) {
  if (static_cast<int>(basis.u.size()) != inst.n() ||
      static_cast<int>(basis.v.size()) != inst.m()) {
    throw PreconditionError("duals have not been computed");
  }
  CostMatrix out;
  kernels::reduced_cost_matrix_parallel(inst.cost, basis.u, basis.v, out);
  for (const Cell& c : basis.basic) {
    if (out[c] != 0) {
      throw PreconditionError("stale duals: basic cell " + to_string(c) +
                              " has reduced cost " + std::to_string(out[c]));
    }
  }
  return out;
}

PivotCycle find_cycle(const BasisState& basis, const Cell& entering) {
  const int n = basis.n();
  if (basis.is_basic(entering)) {
    throw PreconditionError("entering cell " + to_string(entering) +
                            " is already basic");
  }
  const auto adj = basis.adjacency();
  // Parent pointers of a search rooted at the entering source.
  std::vector<int> parent(adj.size(), -1);
  const int root = entering.source;
  const int target = n + entering.dest;
  parent[root] = root;
  std::deque<int> queue{root};
  while (!queue.empty() && parent[target] < 0) {
    const int node = queue.front();
    queue.pop_front();
    for (int next : adj[node]) {
      if (parent[next] >= 0) continue;
      parent[next] = node;
      queue.push_back(next);
    }
  }
  if (parent[target] < 0) {
    throw PreconditionError("basis is not connected");
  }
  PivotCycle cycle;
  cycle.entering = entering;
  cycle.cells.push_back(entering);
  for (int node = target; node != root; node = parent[node]) {
    const int up = parent[node];
    cycle.cells.push_back(node < n ? Cell{node, up - n} : Cell{up, node - n});
  }
  cycle.theta = std::numeric_limits<Flow>::max();
  for (std::size_t k = 1; k < cycle.cells.size(); k += 2) {
    const Cell& c = cycle.cells[k];
    const Flow f = basis.x[c];
    if (f < cycle.theta || (f == cycle.theta && c < cycle.leaving)) {
      cycle.theta = f;
      cycle.leaving = c;
    }
  }
  return cycle;
}

void apply_cycle(BasisState& basis, const PivotCycle& cycle) {
  for (std::size_t k = 0; k < cycle.cells.size(); ++k) {
    basis.x[cycle.cells[k]] += PivotCycle::sign(k) * cycle.theta;
  }
  auto it = std::lower_bound(basis.basic.begin(), basis.basic.end(),
                             cycle.leaving);
  basis.basic.erase(it);
  basis.basic.insert(std::lower_bound(basis.basic.begin(), basis.basic.end(),
                                      cycle.entering),
                     cycle.entering);
}

PivotCycle pivot(const TpInstance& inst, BasisState& basis,
                 const Cell& entering) {
  if (basis.is_basic(entering)) {
    throw PreconditionError("entering cell " + to_string(entering) +
                            " is already basic");
  }
  const Cost rc = inst.cost[entering] - basis.u[entering.source] -
                  basis.v[entering.dest];
  if (rc >= 0) {
    throw PreconditionError("entering cell " + to_string(entering) +
                            " has non-negative reduced cost " +
                            std::to_string(rc));
  }
  PivotCycle cycle = find_cycle(basis, entering);
  apply_cycle(basis, cycle);
  compute_duals(inst, basis);
  return cycle;
}

SimplexResult transportation_simplex(const TpInstance& inst, BasisState init,
                                     const SimplexOptions& options) {
  const int n = inst.n();
  const int m = inst.m();
  SimplexResult result;
  result.basis = std::move(init);
  BasisState& basis = result.basis;
  compute_duals(inst, basis);
  const long default_watchdog = 10L * (n + m) * std::max(n, m);
  const long watchdog =
      options.watchdog > 0 ? options.watchdog : default_watchdog;
  // Bland's rule cannot cycle; this only guards against a broken basis.
  const long hard_limit = watchdog + 20 * default_watchdog;
  auto note_feasible = [&] {
    if (!result.feasible_first_pivots && !uses_artificial(inst, basis.x)) {
      result.feasible_first_pivots = result.pivots;
      result.feasible_first_value = objective(inst, basis.x);
    }
  };
  note_feasible();
  EnteringRule rule = EnteringRule::kDantzig;
  while (true) {
    const Matrix<std::uint8_t> mask = basic_mask(basis);
    const std::optional<kernels::Candidate> candidate =
        rule == EnteringRule::kDantzig
            ? kernels::most_negative_parallel(inst.cost, basis.u, basis.v,
                                              mask)
            : kernels::first_negative(inst.cost, basis.u, basis.v, mask);
    if (!candidate) break;
    const PivotCycle cycle = find_cycle(basis, candidate->cell);
    apply_cycle(basis, cycle);
    compute_duals(inst, basis);
    ++result.pivots;
    if (options.on_pivot) options.on_pivot(basis, cycle);
    note_feasible();
    if (rule == EnteringRule::kDantzig && result.pivots >= watchdog) {
      rule = EnteringRule::kBland;
      result.switched_to_bland = true;
    }
    if (result.pivots >= hard_limit) {
      throw WatchdogError("transportation simplex exceeded " +
                          std::to_string(hard_limit) + " pivots");
    }
  }
  result.solution = make_solution(inst, basis.x);
  return result;
}

namespace {

// Depth-first enumeration of acyclic cell subsets of a fixed size. Every
// complete subset is a spanning tree; its flows are obtained by peeling
// leaves and kept if non-negative.
class TreeEnumerator {
 public:
  explicit TreeEnumerator(const TpInstance& inst)
      : inst_(inst),
        n_(inst.n()),
        m_(inst.m()),
        need_(inst.n() + inst.m() - 1),
        cells_(lexicographic_cells(inst.n(), inst.m())),
        sets_(inst.n() + inst.m()) {
    chosen_.reserve(need_);
  }

  // Best objective over trees whose smallest cell is cells_[first].
  Cost best_with_first(std::size_t first) {
    best_ = std::numeric_limits<Cost>::max();
    const Cell& c = cells_[first];
    sets_.unite(c.source, n_ + c.dest);
    chosen_.push_back(first);
    extend(first + 1);
    chosen_.pop_back();
    sets_.undo();
    return best_;
  }

  std::size_t cell_count() const { return cells_.size(); }

 private:
  void extend(std::size_t next) {
    if (static_cast<int>(chosen_.size()) == need_) {
      evaluate();
      return;
    }
    const std::size_t missing = need_ - chosen_.size();
    for (std::size_t k = next; k + missing <= cells_.size(); ++k) {
      const Cell& c = cells_[k];
      if (!sets_.unite(c.source, n_ + c.dest)) continue;
      chosen_.push_back(k);
      extend(k + 1);
      chosen_.pop_back();
      sets_.undo();
    }
  }

  void evaluate() {
    const int nodes = n_ + m_;
    std::vector<Flow> rest(nodes);
    for (int i = 0; i < n_; ++i) rest[i] = inst_.supply[i];
    for (int j = 0; j < m_; ++j) rest[n_ + j] = inst_.demand[j];
    std::vector<int> degree(nodes, 0);
    std::vector<std::vector<int>> incident(nodes);
    for (std::size_t e = 0; e < chosen_.size(); ++e) {
      const Cell& c = cells_[chosen_[e]];
      ++degree[c.source];
      ++degree[n_ + c.dest];
      incident[c.source].push_back(static_cast<int>(e));
      incident[n_ + c.dest].push_back(static_cast<int>(e));
    }
    std::vector<bool> used(chosen_.size(), false);
    std::vector<int> leaves;
    for (int v = 0; v < nodes; ++v) {
      if (degree[v] == 1) leaves.push_back(v);
    }
    Cost total = 0;
    std::size_t assigned = 0;
    while (!leaves.empty()) {
      const int leaf = leaves.back();
      leaves.pop_back();
      if (degree[leaf] != 1) continue;
      int edge = -1;
      for (int e : incident[leaf]) {
        if (!used[e]) {
          edge = e;
          break;
        }
      }
      const Cell& c = cells_[chosen_[edge]];
      const Flow flow = rest[leaf];
      if (flow < 0) return;
      used[edge] = true;
      ++assigned;
      total += flow * inst_.cost[c];
      const int other = leaf < n_ ? n_ + c.dest : c.source;
      rest[leaf] = 0;
      rest[other] -= flow;
      --degree[leaf];
      if (--degree[other] == 1) leaves.push_back(other);
    }
    if (assigned != chosen_.size()) return;
    for (Flow r : rest) {
      if (r != 0) return;
    }
    best_ = std::min(best_, total);
  }

  const TpInstance& inst_;
  int n_;
  int m_;
  int need_;
  std::vector<Cell> cells_;
  DisjointSets sets_;
  std::vector<std::size_t> chosen_;
  Cost best_ = 0;
};

void check_brute_force_size(const TpInstance& inst) {
  require_balanced(inst, "brute_force_optimum");
  if (inst.n() + inst.m() > kBruteForceLimit) {
    throw PreconditionError("brute force is limited to n + m <= " +
                            std::to_string(kBruteForceLimit) + ", got " +
                            std::to_string(inst.n() + inst.m()));
  }
}

}  // namespace

Cost brute_force_optimum_serial(const TpInstance& inst) {
  check_brute_force_size(inst);
  TreeEnumerator enumerator(inst);
  Cost best = std::numeric_limits<Cost>::max();
  for (std::size_t first = 0; first < enumerator.cell_count(); ++first) {
    best = std::min(best, enumerator.best_with_first(first));
  }
  return best;
}

Cost brute_force_optimum(const TpInstance& inst) {
  check_brute_force_size(inst);
  const long firsts = static_cast<long>(inst.n()) * inst.m();
  Cost best = std::numeric_limits<Cost>::max();
#pragma omp parallel
  {
    TreeEnumerator enumerator(inst);
    Cost local = std::numeric_limits<Cost>::max();
#pragma omp for schedule(dynamic, 1) nowait
    for (long first = 0; first < firsts; ++first) {
      local = std::min(local, enumerator.best_with_first(first));
    }
#pragma omp critical(cdnroute_brute_force)
    best = std::min(best, local);
  }
  return best;
}

}  // namespace cdnroute
