#include "cdnroute/tp_core.h"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace cdnroute {

std::string to_string(const Cell& cell) {
  std::ostringstream out;
  out << '(' << cell.source + 1 << ',' << cell.dest + 1 << ')';
  return out.str();
}

std::vector<Cell> TpInstance::artificial_arcs() const {
  std::vector<Cell> arcs;
  if (artificial_mask.empty()) return arcs;
  for (int i = 0; i < n(); ++i) {
    for (int j = 0; j < m(); ++j) {
      if (artificial_mask(i, j) != 0) arcs.push_back({i, j});
    }
  }
  return arcs;
}

Flow TpInstance::total_supply() const {
  return std::accumulate(supply.begin(), supply.end(), Flow{0});
}

Flow TpInstance::total_demand() const {
  return std::accumulate(demand.begin(), demand.end(), Flow{0});
}

TpInstance make_tp(std::vector<Flow> supply, std::vector<Flow> demand,
                   CostMatrix cost) {
  if (cost.rows() != static_cast<int>(supply.size()) ||
      cost.cols() != static_cast<int>(demand.size())) {
    throw DimensionError("cost matrix is " + std::to_string(cost.rows()) +
                         "x" + std::to_string(cost.cols()) +
                         ", expected " + std::to_string(supply.size()) + "x" +
                         std::to_string(demand.size()));
  }
  TpInstance inst;
  inst.supply = std::move(supply);
  inst.demand = std::move(demand);
  inst.cost = std::move(cost);
  return inst;
}

bool RrspInstance::holds(int server, int content) const {
  const auto& held = holdings[server];
  return std::binary_search(held.begin(), held.end(), content);
}

void validate(const RrspInstance& rrsp) {
  const int n = rrsp.server_count;
  auto fail = [](const std::string& what) { throw PreconditionError(what); };
  if (n <= 0) fail("instance has no servers");
  if (static_cast<int>(rrsp.holdings.size()) != n ||
      static_cast<int>(rrsp.bandwidth.size()) != n) {
    fail("holdings/bandwidth do not cover every server");
  }
  if (rrsp.server_cost.rows() != n || rrsp.server_cost.cols() != n) {
    fail("server cost matrix must be " + std::to_string(n) + "x" +
         std::to_string(n));
  }
  for (int i = 0; i < n; ++i) {
    if (rrsp.server_cost(i, i) != 0) {
      fail("server cost diagonal must be zero at server " +
           std::to_string(i + 1));
    }
    if (rrsp.bandwidth[i] < 0) {
      fail("negative bandwidth at server " + std::to_string(i + 1));
    }
    for (int k = 0; k < n; ++k) {
      if (rrsp.server_cost(i, k) < 0) fail("negative server cost");
    }
    const auto& held = rrsp.holdings[i];
    if (!std::is_sorted(held.begin(), held.end()) ||
        std::adjacent_find(held.begin(), held.end()) != held.end()) {
      fail("holdings of server " + std::to_string(i + 1) +
           " must be sorted and unique");
    }
    for (int c : held) {
      if (c < 0 || c >= rrsp.content_count) fail("unknown content id");
    }
  }
  std::vector<std::pair<int, int>> keys;
  keys.reserve(rrsp.requests.size());
  for (const Request& r : rrsp.requests) {
    if (r.home < 0 || r.home >= n) fail("request homed at unknown server");
    if (r.content < 0 || r.content >= rrsp.content_count) {
      fail("request for unknown content");
    }
    if (r.demand < 0) fail("negative demand");
    bool has_holder = false;
    for (int i = 0; i < n && !has_holder; ++i) {
      has_holder = rrsp.holds(i, r.content);
    }
    if (!has_holder) {
      fail("content " + std::to_string(r.content + 1) + " has no holder");
    }
    keys.emplace_back(r.home, r.content);
  }
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
    fail("more than one request for the same (server, content) pair");
  }
}

namespace {

std::vector<Request> sorted_requests(const RrspInstance& rrsp) {
  std::vector<Request> requests = rrsp.requests;
  std::sort(requests.begin(), requests.end(),
            [](const Request& a, const Request& b) {
              return std::tie(a.home, a.content) < std::tie(b.home, b.content);
            });
  return requests;
}

}  // namespace

Cost big_cost(const RrspInstance& rrsp) {
  Cost max_real = 0;
  Flow total_demand = 0;
  for (const Request& r : rrsp.requests) {
    total_demand += r.demand;
    for (int i = 0; i < rrsp.server_count; ++i) {
      if (rrsp.holds(i, r.content)) {
        max_real = std::max(max_real, rrsp.server_cost(i, r.home));
      }
    }
  }
  return (1 + max_real) * total_demand;
}

TpInstance reduce_rrsp_to_tp(const RrspInstance& rrsp) {
  validate(rrsp);
  const int n = rrsp.server_count;
  const std::vector<Request> requests = sorted_requests(rrsp);
  const Flow supply = std::accumulate(rrsp.bandwidth.begin(),
                                      rrsp.bandwidth.end(), Flow{0});
  Flow demand = 0;
  for (const Request& r : requests) demand += r.demand;
  if (supply < demand) {
    throw InfeasibleError("total bandwidth " + std::to_string(supply) +
                          " is below total demand " + std::to_string(demand));
  }
  const bool needs_balance = supply > demand;
  const int real_m = static_cast<int>(requests.size());
  const int m = real_m + (needs_balance ? 1 : 0);
  const Cost big = big_cost(rrsp);

  TpInstance inst;
  inst.supply = rrsp.bandwidth;
  inst.demand.reserve(m);
  inst.cost = CostMatrix(n, m);
  inst.proximity = CostMatrix(n, m);
  inst.artificial_mask = Matrix<std::uint8_t>(n, m);
  inst.home.reserve(m);
  for (int j = 0; j < real_m; ++j) {
    const Request& r = requests[j];
    inst.demand.push_back(r.demand);
    inst.home.push_back(r.home);
    for (int i = 0; i < n; ++i) {
      inst.proximity(i, j) = rrsp.server_cost(i, r.home);
      if (rrsp.holds(i, r.content)) {
        inst.cost(i, j) = rrsp.server_cost(i, r.home);
      } else {
        inst.cost(i, j) = big;
        inst.artificial_mask(i, j) = 1;
      }
    }
  }
  if (needs_balance) {
    // Zero-cost slack column, owned by the smallest-id server.
    inst.demand.push_back(supply - demand);
    inst.home.push_back(0);
    inst.artificial_dest = real_m;
  }
  return inst;
}

Cost objective(const TpInstance& inst, const FlowMatrix& x) {
  if (x.rows() != inst.n() || x.cols() != inst.m()) {
    throw DimensionError("flow matrix shape does not match the instance");
  }
  Cost total = 0;
  for (int i = 0; i < inst.n(); ++i) {
    for (int j = 0; j < inst.m(); ++j) total += inst.cost(i, j) * x(i, j);
  }
  return total;
}

bool uses_artificial(const TpInstance& inst, const FlowMatrix& x) {
  for (int i = 0; i < inst.n(); ++i) {
    for (int j = 0; j < inst.m(); ++j) {
      if (x(i, j) > 0 && inst.is_artificial(i, j)) return true;
    }
  }
  return false;
}

std::string Violation::describe() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::kNegativeFlow:
      out << "negative flow " << residual << " at cell " << index;
      break;
    case Kind::kSupplyRow:
      out << "row " << index + 1 << " sum differs from supply by " << residual;
      break;
    case Kind::kDemandColumn:
      out << "column " << index + 1 << " sum differs from demand by "
          << residual;
      break;
  }
  return out.str();
}

FeasibilityResult check_feasible(const TpInstance& inst, const FlowMatrix& x) {
  if (x.rows() != inst.n() || x.cols() != inst.m()) {
    throw DimensionError("flow matrix shape does not match the instance");
  }
  const int n = inst.n();
  const int m = inst.m();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      if (x(i, j) < 0) {
        return Violation{Violation::Kind::kNegativeFlow, i * m + j, x(i, j)};
      }
    }
  }
  for (int j = 0; j < m; ++j) {
    Flow col = 0;
    for (int i = 0; i < n; ++i) col += x(i, j);
    if (col != inst.demand[j]) {
      return Violation{Violation::Kind::kDemandColumn, j, col - inst.demand[j]};
    }
  }
  for (int i = 0; i < n; ++i) {
    Flow row = 0;
    for (int j = 0; j < m; ++j) row += x(i, j);
    if (row != inst.supply[i]) {
      return Violation{Violation::Kind::kSupplyRow, i, row - inst.supply[i]};
    }
  }
  return FlowSolution{x, objective(inst, x), uses_artificial(inst, x)};
}

FlowSolution make_solution(const TpInstance& inst, const FlowMatrix& x) {
  FeasibilityResult result = check_feasible(inst, x);
  if (auto* v = std::get_if<Violation>(&result)) {
    throw PreconditionError("infeasible flow: " + v->describe());
  }
  return std::get<FlowSolution>(std::move(result));
}

}  // namespace cdnroute
