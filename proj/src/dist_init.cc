#include "cdnroute/dist_init.h"

#include <algorithm>
#include <deque>
#include <limits>
#include <memory>
#include <numeric>
#include <tuple>

namespace cdnroute {

namespace {

using netsim::Context;
using netsim::Envelope;
using netsim::Tag;

class InitServer : public netsim::Process {
 public:
  InitServer(const TpInstance& inst, int self)
      : inst_(inst), self_(self), residual_(inst.supply[self]),
        row_(inst.m(), 0), remaining_(inst.m(), 0), order_(inst.m()),
        cursor_(inst.m(), 0) {}

  void on_start(Context& ctx) override {
    for (int j = 0; j < inst_.m(); ++j) {
      if (j == inst_.artificial_dest || inst_.home_of(j) != self_) continue;
      remaining_[j] = inst_.demand[j];
      order_[j] = serve_order(inst_, j);
      advance(ctx, j);
    }
  }

  void on_message(Context& ctx, const Envelope& env) override {
    switch (env.tag) {
      case Tag::kServe: {
        const auto& msg = std::any_cast<const ServeMsg&>(env.payload);
        const Flow granted = take(msg.dest, msg.amount);
        ctx.send(env.src, granted > 0 ? Tag::kAck : Tag::kNack,
                 GrantMsg{msg.dest, msg.amount, granted});
        break;
      }
      case Tag::kAck:
      case Tag::kNack: {
        const auto& msg = std::any_cast<const GrantMsg&>(env.payload);
        remaining_[msg.dest] -= msg.granted;
        advance(ctx, msg.dest);
        break;
      }
      default:
        throw PreconditionError(std::string("unexpected message ") +
                                netsim::tag_name(env.tag));
    }
  }

  Flow residual() const { return residual_; }
  const std::vector<Flow>& row() const { return row_; }

 private:
  Flow take(int dest, Flow amount) {
    const Flow granted = std::min(amount, residual_);
    residual_ -= granted;
    row_[dest] += granted;
    return granted;
  }

  // Serves request j locally where possible and asks the next server for
  // the rest. At most one Serve per request is in flight.
  void advance(Context& ctx, int j) {
    const std::vector<int>& order = order_[j];
    while (remaining_[j] > 0 && cursor_[j] < order.size()) {
      const int server = order[cursor_[j]++];
      if (server == self_) {
        remaining_[j] -= take(j, remaining_[j]);
        continue;
      }
      ctx.send(server, Tag::kServe, ServeMsg{j, remaining_[j]});
      return;
    }
    if (remaining_[j] > 0) {
      // Unreachable when Σb >= Σd: residuals only shrink, so a request that
      // every server refused would imply all bandwidth is already granted.
      throw Error("request " + std::to_string(j + 1) +
                  " left unattended after asking every server");
    }
  }

  const TpInstance& inst_;
  int self_;
  Flow residual_;
  std::vector<Flow> row_;
  std::vector<Flow> remaining_;
  std::vector<std::vector<int>> order_;
  std::vector<std::size_t> cursor_;
};

// Every server reports b_i minus the demand homed on it to server 0.
Flow balance_convergecast(const TpInstance& inst,
                          const netsim::KernelOptions& options,
                          netsim::Transcript& transcript) {
  const int n = inst.n();
  std::vector<Flow> local(n);
  for (int i = 0; i < n; ++i) local[i] = inst.supply[i];
  for (int j = 0; j < inst.m(); ++j) {
    if (j != inst.artificial_dest) local[inst.home_of(j)] -= inst.demand[j];
  }
  Flow slack = local[0];
  netsim::Kernel kernel(options);
  kernel.spawn(0, nullptr, [&slack](Context&, const Envelope& env) {
    slack += std::any_cast<Flow>(env.payload);
  });
  for (int i = 1; i < n; ++i) {
    kernel.spawn(
        i, [&local](Context& ctx) { ctx.send(0, Tag::kControl, local[ctx.self()]); },
        nullptr);
  }
  transcript = kernel.run_until_quiescent();
  return slack;
}

// Cancels one flow cycle through the positive cells, if any. Returns false
// when the positive cells already form a forest.
bool cancel_one_cycle(const TpInstance& inst, FlowMatrix& x) {
  const int n = inst.n();
  const int m = inst.m();
  std::vector<std::vector<std::pair<int, Cell>>> adj(n + m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      if (x(i, j) <= 0) continue;
      // Path from S_i to D_j through the forest built so far.
      std::vector<int> parent(n + m, -1);
      std::vector<Cell> via(n + m);
      parent[i] = i;
      std::deque<int> queue{i};
      while (!queue.empty() && parent[n + j] < 0) {
        const int node = queue.front();
        queue.pop_front();
        for (const auto& [next, cell] : adj[node]) {
          if (parent[next] >= 0) continue;
          parent[next] = node;
          via[next] = cell;
          queue.push_back(next);
        }
      }
      if (parent[n + j] < 0) {
        adj[i].push_back({n + j, {i, j}});
        adj[n + j].push_back({i, {i, j}});
        continue;
      }
      // Cycle: (i,j) then the path back from D_j to S_i, alternating signs.
      std::vector<Cell> cycle{{i, j}};
      for (int node = n + j; node != i; node = parent[node]) {
        cycle.push_back(via[node]);
      }
      Cost delta = 0;
      for (std::size_t k = 0; k < cycle.size(); ++k) {
        delta += PivotCycle::sign(k) * inst.cost[cycle[k]];
      }
      // Push in the direction that does not raise the cost.
      const int dir = delta <= 0 ? 1 : -1;
      Flow theta = std::numeric_limits<Flow>::max();
      for (std::size_t k = 0; k < cycle.size(); ++k) {
        if (PivotCycle::sign(k) * dir < 0) theta = std::min(theta, x[cycle[k]]);
      }
      for (std::size_t k = 0; k < cycle.size(); ++k) {
        x[cycle[k]] += PivotCycle::sign(k) * dir * theta;
      }
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<int> serve_order(const TpInstance& inst, int j) {
  const int home = inst.home_of(j);
  std::vector<int> order(inst.n());
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](int i) {
    return std::make_tuple(inst.is_artificial(i, j), i != home,
                           inst.proximity_of(i, j), i);
  };
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return key(a) < key(b); });
  return order;
}

DistInitResult dist_init(const TpInstance& inst,
                         const DistInitOptions& options) {
  const int n = inst.n();
  const int m = inst.m();
  DistInitResult result;
  const Flow slack = balance_convergecast(inst, options.kernel, result.balance);
  if (slack < 0) {
    throw InfeasibleError("total bandwidth is short of total demand by " +
                          std::to_string(-slack));
  }
  const Flow booked = inst.artificial_dest ? inst.demand[*inst.artificial_dest] : 0;
  if (slack != booked) {
    throw PreconditionError("balancing demand " + std::to_string(booked) +
                            " does not match the slack " +
                            std::to_string(slack));
  }

  netsim::Kernel kernel(options.kernel);
  std::vector<InitServer*> servers(n);
  for (int i = 0; i < n; ++i) {
    auto server = std::make_unique<InitServer>(inst, i);
    servers[i] = server.get();
    kernel.spawn(i, std::move(server));
  }
  result.transcript = kernel.run_until_quiescent();

  FlowMatrix x(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) x(i, j) = servers[i]->row()[j];
    if (inst.artificial_dest) x(i, *inst.artificial_dest) = servers[i]->residual();
  }
  result.solution = make_solution(inst, x);
  return result;
}

BasisState basis_completion(const TpInstance& inst, const FlowMatrix& x) {
  FeasibilityResult check = check_feasible(inst, x);
  if (auto* v = std::get_if<Violation>(&check)) {
    throw PreconditionError("cannot complete an infeasible flow: " +
                            v->describe());
  }
  const int n = inst.n();
  const int m = inst.m();
  BasisState basis;
  basis.x = x;
  while (cancel_one_cycle(inst, basis.x)) {
  }
  std::vector<Cell> zeros;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      if (basis.x(i, j) > 0) {
        basis.basic.push_back({i, j});
      } else {
        zeros.push_back({i, j});
      }
    }
  }
  std::stable_sort(zeros.begin(), zeros.end(), [&](const Cell& a, const Cell& b) {
    return inst.cost[a] < inst.cost[b];
  });
  // Kruskal over the zero cells, seeded with the positive forest.
  std::vector<int> parent(n + m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const Cell& c : basis.basic) parent[find(c.source)] = find(n + c.dest);
  for (const Cell& c : zeros) {
    if (static_cast<int>(basis.basic.size()) == n + m - 1) break;
    const int a = find(c.source);
    const int b = find(n + c.dest);
    if (a == b) continue;
    parent[a] = b;
    basis.basic.push_back(c);
  }
  std::sort(basis.basic.begin(), basis.basic.end());
  compute_duals(inst, basis);
  return basis;
}

}  // namespace cdnroute
