#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "cdnroute/dist_init.h"
#include "oracles.h"

using namespace cdnroute;
using netsim::Tag;

namespace {

// One request from server 0 for content 0, which only `holders` keep.
RrspInstance single_request(std::vector<Flow> bandwidth,
                            std::vector<int> holders, Flow demand,
                            CostMatrix server_cost) {
  RrspInstance r;
  r.server_count = static_cast<int>(bandwidth.size());
  r.content_count = 1;
  r.holdings.assign(r.server_count, {});
  for (int h : holders) r.holdings[h] = {0};
  r.bandwidth = std::move(bandwidth);
  r.requests = {{0, 0, demand}};
  r.server_cost = std::move(server_cost);
  return r;
}

std::vector<Tag> tags(const netsim::Transcript& t) {
  std::vector<Tag> out;
  for (const auto& e : t.events) out.push_back(e.tag);
  return out;
}

void check_rows_match_bandwidth(const TpInstance& inst, const FlowMatrix& x) {
  for (int i = 0; i < inst.n(); ++i) {
    Flow row = 0;
    for (int j = 0; j < inst.m(); ++j) {
      CHECK(x(i, j) >= 0);
      row += x(i, j);
    }
    CHECK(row == inst.supply[i]);
  }
}

}  // namespace

TEST_CASE("requests served locally need no messages") {
  RrspInstance r;
  r.server_count = 2;
  r.content_count = 2;
  r.holdings = {{0}, {1}};
  r.bandwidth = {5, 5};
  r.requests = {{0, 0, 3}, {1, 1, 4}};
  r.server_cost = CostMatrix{{0, 7}, {7, 0}};
  const TpInstance inst = reduce_rrsp_to_tp(r);
  const DistInitResult res = dist_init(inst);
  CHECK(res.solution.objective == 0);
  CHECK(res.transcript.msg_count == 0);
  CHECK(res.solution.x(0, 0) == 3);
  CHECK(res.solution.x(1, 1) == 4);
  // Residual bandwidth lands on the balancing destination.
  REQUIRE(inst.artificial_dest);
  CHECK(res.solution.x(0, *inst.artificial_dest) == 2);
  CHECK(res.solution.x(1, *inst.artificial_dest) == 1);
  CHECK_FALSE(res.solution.uses_artificial);
}

TEST_CASE("a remote holder answers one Serve with an Ack") {
  const RrspInstance r =
      single_request({0, 5}, {1}, 4, CostMatrix{{0, 3}, {3, 0}});
  const TpInstance inst = reduce_rrsp_to_tp(r);
  const DistInitResult res = dist_init(inst);
  CHECK(res.transcript.msg_count == 2);
  CHECK(tags(res.transcript) == std::vector<Tag>{Tag::kServe, Tag::kAck});
  CHECK(res.solution.x(1, 0) == 4);
  CHECK(res.solution.objective == 12);
}

TEST_CASE("a partial Ack sends the remainder to the next holder") {
  const RrspInstance r = single_request(
      {0, 3, 1}, {1, 2}, 4, CostMatrix{{0, 1, 2}, {1, 0, 1}, {2, 1, 0}});
  const TpInstance inst = reduce_rrsp_to_tp(r);
  const DistInitResult res = dist_init(inst);
  CHECK(res.transcript.msg_count == 4);
  CHECK(tags(res.transcript) ==
        std::vector<Tag>{Tag::kServe, Tag::kAck, Tag::kServe, Tag::kAck});
  // The closer holder is asked first and grants its whole bandwidth.
  CHECK(res.transcript.events[0].dst == 1);
  CHECK(res.transcript.events[2].dst == 2);
  CHECK(res.solution.x(1, 0) == 3);
  CHECK(res.solution.x(2, 0) == 1);
  CHECK(res.solution.objective == 5);
}

TEST_CASE("an exhausted holder answers Nack") {
  const RrspInstance r = single_request(
      {0, 0, 4}, {1, 2}, 4, CostMatrix{{0, 1, 2}, {1, 0, 1}, {2, 1, 0}});
  const TpInstance inst = reduce_rrsp_to_tp(r);
  const DistInitResult res = dist_init(inst);
  CHECK(tags(res.transcript) ==
        std::vector<Tag>{Tag::kServe, Tag::kNack, Tag::kServe, Tag::kAck});
  CHECK(res.solution.x(2, 0) == 4);
}

TEST_CASE("non-holders cover what the holders cannot") {
  const RrspInstance r =
      single_request({4, 1}, {1}, 4, CostMatrix{{0, 2}, {2, 0}});
  const TpInstance inst = reduce_rrsp_to_tp(r);
  const DistInitResult res = dist_init(inst);
  CHECK(res.transcript.msg_count == 2);
  CHECK(res.solution.x(1, 0) == 1);
  CHECK(res.solution.x(0, 0) == 3);
  CHECK(res.solution.uses_artificial);
  CHECK(res.solution.objective == 2 + 3 * big_cost(r));
}

TEST_CASE("serve order puts the holding home first, then holders, then the rest") {
  RrspInstance r;
  r.server_count = 4;
  r.content_count = 1;
  r.holdings = {{0}, {}, {0}, {0}};
  r.bandwidth = {1, 9, 1, 1};
  r.requests = {{0, 0, 4}};
  r.server_cost =
      CostMatrix{{0, 1, 5, 3}, {1, 0, 1, 1}, {5, 1, 0, 1}, {3, 1, 1, 0}};
  const TpInstance inst = reduce_rrsp_to_tp(r);
  CHECK(serve_order(inst, 0) == std::vector<int>{0, 3, 2, 1});
  const DistInitResult res = dist_init(inst);
  CHECK(res.solution.x(0, 0) == 1);
  CHECK(res.solution.x(3, 0) == 1);
  CHECK(res.solution.x(2, 0) == 1);
  CHECK(res.solution.x(1, 0) == 1);
}

TEST_CASE("the balance convergecast sends one report per non-root server") {
  const RrspInstance r = single_request(
      {2, 3, 1}, {1, 2}, 4, CostMatrix{{0, 1, 2}, {1, 0, 1}, {2, 1, 0}});
  const DistInitResult res = dist_init(reduce_rrsp_to_tp(r));
  CHECK(res.balance.msg_count == 2);
  CHECK(res.balance.count(Tag::kControl) == 2);
  CHECK(res.balance.chain_len == 1);
}

TEST_CASE("insufficient bandwidth is reported as infeasible") {
  TpInstance inst = make_tp({2, 1}, {2, 1}, CostMatrix{{1, 2}, {3, 4}});
  inst.demand = {3, 1};
  CHECK_THROWS_AS(dist_init(inst), InfeasibleError);
}

TEST_CASE("plain TP instances use costs as proximity") {
  const TpInstance inst = testing::t1();
  const DistInitResult res = dist_init(inst);
  check_rows_match_bandwidth(inst, res.solution.x);
  CHECK(res.solution.objective >= 11);
}

TEST_CASE("random instances end feasible within the message budget") {
  std::mt19937_64 rng(20261016);
  for (int trial = 0; trial < 300; ++trial) {
    const RrspInstance r = testing::random_rrsp(rng, 6, 6);
    const TpInstance inst = reduce_rrsp_to_tp(r);
    const int n = inst.n();
    const int m = inst.m();
    DistInitOptions options;
    if (trial % 2 == 1) {
      options.kernel.delay = netsim::DelayModel::uniform(1, 7);
      options.kernel.seed = trial;
    }
    const DistInitResult res = dist_init(inst, options);
    check_rows_match_bandwidth(inst, res.solution.x);
    CHECK(res.transcript.msg_count <= 2L * n * m);
    CHECK(res.transcript.count(Tag::kServe) ==
          res.transcript.count(Tag::kAck) + res.transcript.count(Tag::kNack));
    if (m > 0) {
      const SimplexResult opt =
          transportation_simplex(inst, minimum_cost_method(inst));
      CHECK(res.solution.objective >= opt.solution.objective);
    }
    // Same seed, same run.
    const DistInitResult again = dist_init(inst, options);
    CHECK(again.solution.x == res.solution.x);
    CHECK(again.transcript.events == res.transcript.events);
  }
}

TEST_CASE("basis completion keeps a tree flow as is") {
  const TpInstance inst = testing::t1();
  const BasisState basis =
      basis_completion(inst, FlowMatrix{{3, 0}, {2, 2}});
  CHECK(basis.basic == std::vector<Cell>{{0, 0}, {1, 0}, {1, 1}});
  CHECK(basis.x == FlowMatrix{{3, 0}, {2, 2}});
  CHECK(basis.u == std::vector<Cost>{0, 2});
  CHECK(basis.v == std::vector<Cost>{1, -1});
}

TEST_CASE("basis completion adds the cheapest connecting zero cell") {
  const TpInstance inst = make_tp({2, 3}, {2, 3}, CostMatrix{{4, 1}, {2, 3}});
  const BasisState basis = basis_completion(inst, FlowMatrix{{2, 0}, {0, 3}});
  CHECK(basis.basic == std::vector<Cell>{{0, 0}, {0, 1}, {1, 1}});
  CHECK(basis.x == FlowMatrix{{2, 0}, {0, 3}});
}

TEST_CASE("basis completion cancels flow cycles without raising the cost") {
  const TpInstance inst = testing::t1();
  const FlowMatrix x{{2, 1}, {3, 1}};
  CHECK(objective(inst, x) == 14);
  const BasisState basis = basis_completion(inst, x);
  CHECK(basis.x == FlowMatrix{{3, 0}, {2, 2}});
  CHECK(objective(inst, basis.x) == 11);
  CHECK(is_spanning_tree(basis.basic, 2, 2));
}

TEST_CASE("basis completion rejects infeasible flows") {
  CHECK_THROWS_AS(basis_completion(testing::t1(), FlowMatrix{{3, 0}, {2, 1}}),
                  PreconditionError);
}

TEST_CASE("basis completion yields a tree with consistent duals") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const TpInstance inst = testing::random_tp(rng);
    const FlowSolution start = dist_init(inst).solution;
    const BasisState basis = basis_completion(inst, start.x);
    REQUIRE(is_spanning_tree(basis.basic, inst.n(), inst.m()));
    CHECK(make_solution(inst, basis.x).objective <= start.objective);
    for (int i = 0; i < inst.n(); ++i) {
      for (int j = 0; j < inst.m(); ++j) {
        if (!basis.is_basic({i, j})) {
          CHECK(basis.x(i, j) == 0);
        } else {
          CHECK(basis.u[i] + basis.v[j] == inst.cost(i, j));
        }
      }
    }
  }
}
