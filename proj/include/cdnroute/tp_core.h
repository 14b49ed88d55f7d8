#ifndef CDNROUTE_TP_CORE_H_
#define CDNROUTE_TP_CORE_H_

// Domain model for the transportation problem (TP) and the CDN request
// routing problem (RRSP), plus the reduction from one to the other.
//
// All quantities are integers. Sources and destinations are 0-based in the
// API; the instance file format uses 1-based ids.

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace cdnroute {

using Cost = std::int64_t;
using Flow = std::int64_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Σb < Σd, or the auction cannot displace its artificial source.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A caller violated an operation's documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A bounded loop (pivots, simulated events) ran past its limit.
class WatchdogError : public Error {
 public:
  using Error::Error;
};

struct Cell {
  int source = 0;
  int dest = 0;

  auto operator<=>(const Cell&) const = default;
};

std::string to_string(const Cell& cell);

// Dense row-major matrix.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = static_cast<int>(rows.size());
    cols_ = rows_ == 0 ? 0 : static_cast<int>(rows.begin()->size());
    data_.reserve(static_cast<std::size_t>(rows_) * cols_);
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != cols_) {
        throw DimensionError("ragged matrix literal");
      }
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  T& operator()(int i, int j) { return data_[index(i, j)]; }
  const T& operator()(int i, int j) const { return data_[index(i, j)]; }
  T& operator[](const Cell& c) { return (*this)(c.source, c.dest); }
  const T& operator[](const Cell& c) const { return (*this)(c.source, c.dest); }

  const std::vector<T>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * cols_ + j;
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

using FlowMatrix = Matrix<Flow>;
using CostMatrix = Matrix<Cost>;

// A (possibly balanced) transportation problem on a complete bipartite graph.
struct TpInstance {
  std::vector<Flow> supply;  // b_i
  std::vector<Flow> demand;  // d_j
  CostMatrix cost;           // c_ij

  // Index of the zero-cost balancing destination, when one was appended.
  std::optional<int> artificial_dest;
  // Arcs that do not exist in the routing problem and carry the penalty cost.
  Matrix<std::uint8_t> artificial_mask;

  // Server that owns each destination in the distributed algorithms. Empty
  // means round-robin ownership (destination j lives on server j mod n).
  std::vector<int> home;
  // Communication cost from source i to destination j's home server,
  // including non-holders. Empty for plain TP instances; the distributed
  // heuristic then orders candidate servers by c_ij.
  CostMatrix proximity;

  int n() const { return static_cast<int>(supply.size()); }
  int m() const { return static_cast<int>(demand.size()); }

  bool is_artificial(int i, int j) const {
    return !artificial_mask.empty() && artificial_mask(i, j) != 0;
  }
  std::vector<Cell> artificial_arcs() const;
  int home_of(int j) const { return home.empty() ? j % n() : home[j]; }
  Cost proximity_of(int i, int j) const {
    return proximity.empty() ? cost(i, j) : proximity(i, j);
  }

  Flow total_supply() const;
  Flow total_demand() const;
  bool balanced() const { return total_supply() == total_demand(); }

  bool operator==(const TpInstance&) const = default;
};

// Builds a plain TP instance (no artificial entities, round-robin homes).
// Throws DimensionError when the cost matrix does not match b and d.
TpInstance make_tp(std::vector<Flow> supply, std::vector<Flow> demand,
                   CostMatrix cost);

struct Request {
  int home = 0;     // k(j), 0-based server
  int content = 0;  // c(j), 0-based content
  Flow demand = 0;  // d_j

  auto operator<=>(const Request&) const = default;
};

struct RrspInstance {
  int server_count = 0;
  int content_count = 0;
  std::vector<std::vector<int>> holdings;  // C_i, sorted ascending
  std::vector<Flow> bandwidth;             // b_i
  std::vector<Request> requests;
  CostMatrix server_cost;  // zero diagonal

  bool holds(int server, int content) const;

  bool operator==(const RrspInstance&) const = default;
};

// Checks the structural invariants of an RRSP instance: sizes, zero
// diagonal, every requested content has a holder, one request per
// (server, content). Throws PreconditionError with the first problem found.
void validate(const RrspInstance& rrsp);

// Penalty cost used for arcs absent from the routing problem:
// (1 + largest real arc cost) * total demand.
Cost big_cost(const RrspInstance& rrsp);

// Sources are servers; destinations are requests ordered by (home, content)
// followed by the balancing destination when Σb > Σd.
// Throws InfeasibleError when Σb < Σd.
TpInstance reduce_rrsp_to_tp(const RrspInstance& rrsp);

// Σ c_ij x_ij. Throws DimensionError on a shape mismatch.
Cost objective(const TpInstance& inst, const FlowMatrix& x);

struct FlowSolution {
  FlowMatrix x;
  Cost objective = 0;
  bool uses_artificial = false;
};

struct Violation {
  enum class Kind { kNegativeFlow, kSupplyRow, kDemandColumn };
  Kind kind = Kind::kNegativeFlow;
  int index = 0;        // row, column, or flattened cell index
  Flow residual = 0;    // actual - required (or the negative flow itself)

  std::string describe() const;
};

using FeasibilityResult = std::variant<FlowSolution, Violation>;

// Verifies x >= 0 and both equality families. Never throws for a
// well-shaped x; returns the first violation (negative cells, then demand
// columns, then supply rows) otherwise.
FeasibilityResult check_feasible(const TpInstance& inst, const FlowMatrix& x);

// Convenience: check_feasible that throws PreconditionError on violation.
FlowSolution make_solution(const TpInstance& inst, const FlowMatrix& x);

bool uses_artificial(const TpInstance& inst, const FlowMatrix& x);

}  // namespace cdnroute

#endif  // CDNROUTE_TP_CORE_H_
