#ifndef CDNROUTE_AUCTION_TP_H_
#define CDNROUTE_AUCTION_TP_H_

// Distributed auction for the transportation problem with epsilon scaling.
//
// Costs become benefits a_ij = C - c_ij, where C is the largest cost over
// the arcs a source may serve (penalty arcs of a routing instance are not
// eligible). Each destination keeps an award list of (holder, price, flow)
// slots; initially an artificial holder keeps all of d_j. Rounds alternate
// a bid wave (sources with unplaced supply bid for the cheapest units of
// their best destinations) and an ACK wave (every destination sends its
// award list to every source). A phase ends when no artificial units are
// left; epsilon is then halved and the units go back to the artificial
// holder at the destination's entry price. The run stops once a phase ends
// with epsilon < 1 / min(n, m), which is exact for integer costs.
//
// Amounts are integers; benefits, prices and epsilon are integers scaled by
// AuctionModel::scale so that every epsilon of the schedule is exact.

#include <functional>
#include <optional>
#include <vector>

#include "cdnroute/netsim.h"
#include "cdnroute/tp_core.h"

namespace cdnroute {

constexpr int kArtificialHolder = -1;

struct AwardSlot {
  int holder = kArtificialHolder;
  Cost price = 0;  // scaled
  Flow flow = 0;
  bool operator==(const AwardSlot&) const = default;
};

// Sorted by (price, holder): the cheapest units, artificial ones first,
// are displaced first. One slot per (holder, price).
using AwardList = std::vector<AwardSlot>;

struct AuctionModel {
  int n = 0;
  int m = 0;
  std::vector<Flow> supply;
  std::vector<Flow> demand;
  Matrix<std::uint8_t> eligible;
  Cost max_cost = 0;  // C, over eligible arcs
  Cost scale = 1;     // S
  CostMatrix benefit;  // (C - c_ij) * S on eligible arcs
  Cost epsilon0 = 0;   // scaled initial epsilon
  int q = 0;           // min(n, m)

  bool done(Cost epsilon) const { return epsilon * q < scale; }
};

// C * min(n, m) / 2, with C the largest eligible cost. Throws
// PreconditionError on an empty instance.
double init_epsilon(const TpInstance& inst);

// Picks the smallest power-of-two scale S that keeps every epsilon of the
// halving schedule integral down to the first one below 1 / min(n, m).
// With C = 0 the single phase runs at epsilon = 1 / (2 min(n, m)).
AuctionModel make_auction_model(const TpInstance& inst);

struct Bid {
  int source = 0;
  int dest = 0;
  Cost price = 0;  // applies to the new units and to units already held
  Flow flow = 0;   // units wanted in addition to those held
  bool operator==(const Bid&) const = default;
};

Flow held_by(const AwardList& list, int source);
// Lowest price of any unit of the destination (0 when it has none).
Cost entry_price(const AwardList& list);

// Bids of source i given the award lists of every destination. Sources
// whose supply is fully placed bid nothing; otherwise the bids cover the
// destinations with targeted or already held units.
std::vector<Bid> bidding_step(const AuctionModel& model,
                              const std::vector<AwardList>& view, int source,
                              Cost epsilon);

// Applies one round of bids to a destination: re-prices each bidder's held
// units, then serves bids by decreasing price (ties to the smaller source)
// by displacing the cheapest units priced below the bid.
AwardList assignment_step(AwardList list, std::vector<Bid> bids);

// Next epsilon after a completed phase, or nullopt when epsilon < 1/q.
// Both values are scaled by `scale`. Throws PreconditionError when an odd
// epsilon would have to be halved.
std::optional<Cost> epsilon_schedule(Cost epsilon, Cost scale, int q);

// epsilon-complementary slackness on the transformed benefits: every
// awarded cell satisfies a_ij - p_j >= max_k (a_ik - p_k) - epsilon over
// eligible k holding units, with p the entry prices.
bool epsilon_cs_holds(const AuctionModel& model,
                      const std::vector<AwardList>& view, Cost epsilon);

FlowMatrix flows_of(const AuctionModel& model,
                    const std::vector<AwardList>& view);

// State of the auction when a bid wave starts.
struct AuctionRound {
  int round = 0;
  int phase = 0;
  Cost epsilon = 0;
  std::vector<AwardList> view;
};

struct AuctionOptions {
  netsim::KernelOptions kernel;
  long max_rounds = 1'000'000;
  std::function<void(const AuctionRound&)> on_round;
};

struct AuctionStats {
  int rounds = 0;  // bid waves
  int phases = 0;
  long msg_count = 0;
  int chain_len = 0;
  std::optional<int> feasible_round;  // rounds until no artificial units
  std::optional<Cost> feasible_first_value;
  Cost epsilon = 0;  // final, scaled
  Cost scale = 1;
};

struct AuctionResult {
  FlowSolution solution;
  std::vector<AwardList> awards;
  std::vector<Cost> prices;  // entry prices, scaled
  AuctionStats stats;
  netsim::Transcript transcript;
};

// Throws InfeasibleError when the eligible arcs cannot carry every demand
// (or Σb < Σd), PreconditionError when Σb > Σd, WatchdogError when
// max_rounds is exceeded.
AuctionResult auction_tp(const TpInstance& inst, const AuctionOptions& options = {});

}  // namespace cdnroute

#endif  // CDNROUTE_AUCTION_TP_H_
