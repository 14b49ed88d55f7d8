#include "cdnroute/auction_tp.h"

#include <algorithm>
#include <deque>
#include <map>
#include <memory>
#include <numeric>
#include <tuple>

namespace cdnroute {

namespace {

using netsim::Context;
using netsim::Envelope;
using netsim::Tag;

void normalize(AwardList& list) {
  std::sort(list.begin(), list.end(), [](const AwardSlot& a, const AwardSlot& b) {
    return std::tie(a.price, a.holder) < std::tie(b.price, b.holder);
  });
  AwardList merged;
  for (const AwardSlot& s : list) {
    if (s.flow == 0) continue;
    if (!merged.empty() && merged.back().holder == s.holder &&
        merged.back().price == s.price) {
      merged.back().flow += s.flow;
    } else {
      merged.push_back(s);
    }
  }
  list = std::move(merged);
}

bool has_artificial_units(const std::vector<AwardList>& view) {
  for (const AwardList& list : view) {
    for (const AwardSlot& s : list) {
      if (s.holder == kArtificialHolder) return true;
    }
  }
  return false;
}

// Largest amount the eligible arcs can carry (augmenting paths over the
// bipartite network).
Flow eligible_max_flow(const AuctionModel& model) {
  const int n = model.n;
  const int m = model.m;
  FlowMatrix x(n, m);
  std::vector<Flow> out(n, 0);
  std::vector<Flow> in(m, 0);
  Flow total = 0;
  while (true) {
    // BFS over nodes [0, n) sources and [n, n+m) destinations.
    std::vector<int> parent(n + m, -2);
    std::deque<int> queue;
    for (int i = 0; i < n; ++i) {
      if (out[i] < model.supply[i]) {
        parent[i] = -1;
        queue.push_back(i);
      }
    }
    int sink = -1;
    while (!queue.empty() && sink < 0) {
      const int node = queue.front();
      queue.pop_front();
      if (node < n) {
        for (int j = 0; j < m; ++j) {
          if (!model.eligible(node, j) || parent[n + j] != -2) continue;
          parent[n + j] = node;
          if (in[j] < model.demand[j]) {
            sink = n + j;
            break;
          }
          queue.push_back(n + j);
        }
      } else {
        const int j = node - n;
        for (int i = 0; i < n; ++i) {
          if (x(i, j) > 0 && parent[i] == -2) {
            parent[i] = node;
            queue.push_back(i);
          }
        }
      }
    }
    if (sink < 0) return total;
    Flow amount = model.demand[sink - n] - in[sink - n];
    int node = sink;
    while (parent[node] != -1) {
      const int prev = parent[node];
      if (node >= n) {
        // Forward arc prev -> node; unbounded capacity.
      } else {
        amount = std::min(amount, x(node, prev - n));
      }
      node = prev;
    }
    amount = std::min(amount, model.supply[node] - out[node]);
    out[node] += amount;
    in[sink - n] += amount;
    node = sink;
    while (parent[node] != -1) {
      const int prev = parent[node];
      if (node >= n) {
        x(prev, node - n) += amount;
      } else {
        x(node, prev - n) -= amount;
      }
      node = prev;
    }
    total += amount;
  }
}

}  // namespace

double init_epsilon(const TpInstance& inst) {
  const AuctionModel model = make_auction_model(inst);
  return static_cast<double>(model.max_cost) * model.q / 2.0;
}

AuctionModel make_auction_model(const TpInstance& inst) {
  AuctionModel model;
  model.n = inst.n();
  model.m = inst.m();
  if (model.n == 0 || model.m == 0) {
    throw PreconditionError("the auction needs at least one source and one destination");
  }
  model.supply = inst.supply;
  model.demand = inst.demand;
  model.q = std::min(model.n, model.m);
  model.eligible = Matrix<std::uint8_t>(model.n, model.m, 0);
  for (int i = 0; i < model.n; ++i) {
    for (int j = 0; j < model.m; ++j) {
      if (inst.is_artificial(i, j)) continue;
      if (inst.cost(i, j) < 0) {
        throw PreconditionError("the auction needs non-negative costs");
      }
      model.eligible(i, j) = 1;
      model.max_cost = std::max(model.max_cost, inst.cost(i, j));
    }
  }
  const Cost q = model.q;
  if (model.max_cost == 0) {
    model.scale = 2 * q;
    model.epsilon0 = 1;
  } else {
    model.scale = 2;
    while (model.max_cost * q * q >= model.scale) {
      if (model.scale > (Cost{1} << 40)) {
        throw PreconditionError("costs too large for exact epsilon scaling");
      }
      model.scale *= 2;
    }
    if (model.max_cost > (Cost{1} << 60) / model.scale) {
      throw PreconditionError("costs too large for exact epsilon scaling");
    }
    model.epsilon0 = model.max_cost * q * model.scale / 2;
  }
  model.benefit = CostMatrix(model.n, model.m, 0);
  for (int i = 0; i < model.n; ++i) {
    for (int j = 0; j < model.m; ++j) {
      if (model.eligible(i, j)) {
        model.benefit(i, j) = (model.max_cost - inst.cost(i, j)) * model.scale;
      }
    }
  }
  return model;
}

Flow held_by(const AwardList& list, int source) {
  Flow held = 0;
  for (const AwardSlot& s : list) {
    if (s.holder == source) held += s.flow;
  }
  return held;
}

Cost entry_price(const AwardList& list) {
  Cost price = 0;
  bool any = false;
  for (const AwardSlot& s : list) {
    if (!any || s.price < price) price = s.price;
    any = true;
  }
  return price;
}

std::vector<Bid> bidding_step(const AuctionModel& model,
                              const std::vector<AwardList>& view, int source,
                              Cost epsilon) {
  const int i = source;
  std::vector<Flow> held(model.m, 0);
  Flow placed = 0;
  for (int j = 0; j < model.m; ++j) {
    held[j] = held_by(view[j], i);
    placed += held[j];
  }
  Flow unplaced = model.supply[i] - placed;
  if (unplaced <= 0) return {};

  struct Offer {
    Cost value;
    int dest;
    Flow flow;
  };
  std::vector<Offer> offers;
  Cost top_benefit = 0;
  for (int j = 0; j < model.m; ++j) {
    if (!model.eligible(i, j)) continue;
    top_benefit = std::max(top_benefit, model.benefit(i, j));
    for (const AwardSlot& s : view[j]) {
      if (s.holder == i) continue;
      offers.push_back({model.benefit(i, j) - s.price, j, s.flow});
    }
  }
  std::stable_sort(offers.begin(), offers.end(), [](const Offer& a, const Offer& b) {
    return std::tie(b.value, a.dest) < std::tie(a.value, b.dest);
  });

  // Take the best `unplaced` units; w is the value of the next one.
  std::vector<Flow> wanted(model.m, 0);
  std::optional<Cost> next_value;
  Cost last_value = 0;
  Flow need = unplaced;
  for (const Offer& o : offers) {
    if (need == 0) {
      next_value = o.value;
      break;
    }
    const Flow take = std::min(need, o.flow);
    wanted[o.dest] += take;
    need -= take;
    last_value = o.value;
    if (take < o.flow) {
      next_value = o.value;
      break;
    }
  }
  if (need > 0) {
    throw PreconditionError("source " + std::to_string(i + 1) +
                            " has fewer eligible units than unplaced supply");
  }
  // With no second-best unit any finite margin works.
  const Cost w = next_value ? *next_value : last_value - top_benefit - epsilon;

  std::vector<Bid> bids;
  for (int j = 0; j < model.m; ++j) {
    if (wanted[j] == 0 && held[j] == 0) continue;
    bids.push_back({i, j, model.benefit(i, j) - w + epsilon, wanted[j]});
  }
  return bids;
}

AwardList assignment_step(AwardList list, std::vector<Bid> bids) {
  normalize(list);
  for (const Bid& b : bids) {
    for (AwardSlot& s : list) {
      if (s.holder == b.source) s.price = std::max(s.price, b.price);
    }
  }
  normalize(list);
  std::stable_sort(bids.begin(), bids.end(), [](const Bid& a, const Bid& b) {
    return std::tie(b.price, a.source) < std::tie(a.price, b.source);
  });
  for (const Bid& b : bids) {
    Flow need = b.flow;
    AwardList won;
    for (AwardSlot& s : list) {
      if (need == 0 || s.price >= b.price) break;
      if (s.holder == b.source) continue;
      const Flow take = std::min(need, s.flow);
      s.flow -= take;
      need -= take;
      won.push_back({b.source, b.price, take});
    }
    list.insert(list.end(), won.begin(), won.end());
    normalize(list);
  }
  return list;
}

std::optional<Cost> epsilon_schedule(Cost epsilon, Cost scale, int q) {
  if (epsilon * q < scale) return std::nullopt;
  if (epsilon % 2 != 0) {
    throw PreconditionError("epsilon " + std::to_string(epsilon) + "/" +
                            std::to_string(scale) + " cannot be halved exactly");
  }
  return epsilon / 2;
}

bool epsilon_cs_holds(const AuctionModel& model,
                      const std::vector<AwardList>& view, Cost epsilon) {
  std::vector<Cost> price(model.m);
  for (int j = 0; j < model.m; ++j) price[j] = entry_price(view[j]);
  for (int i = 0; i < model.n; ++i) {
    Cost best = 0;
    bool any = false;
    for (int j = 0; j < model.m; ++j) {
      // A destination without units has nothing to offer.
      if (!model.eligible(i, j) || view[j].empty()) continue;
      const Cost value = model.benefit(i, j) - price[j];
      if (!any || value > best) best = value;
      any = true;
    }
    for (int j = 0; j < model.m; ++j) {
      if (held_by(view[j], i) == 0) continue;
      if (!model.eligible(i, j)) return false;
      if (model.benefit(i, j) - price[j] < best - epsilon) return false;
    }
  }
  return true;
}

FlowMatrix flows_of(const AuctionModel& model,
                    const std::vector<AwardList>& view) {
  FlowMatrix x(model.n, model.m);
  for (int j = 0; j < model.m; ++j) {
    for (const AwardSlot& s : view[j]) {
      if (s.holder != kArtificialHolder) x(s.holder, j) += s.flow;
    }
  }
  return x;
}

namespace {

struct BidMsg {
  int round = 0;
  Bid bid;
};

struct AckMsg {
  int round = 0;
  int dest = 0;
  AwardList list;
};

struct Observer {
  const TpInstance& inst;
  const AuctionModel& model;
  std::function<void(const AuctionRound&)> on_round;
  long max_rounds = 0;
  AuctionStats stats;
  std::vector<AwardList> final_view;
};

// Server i runs source i and the destinations homed on it. Every server
// keeps the same view of all award lists, refreshed by each ACK wave, so
// all of them agree on who bids, when a phase ends and when to stop.
class AuctionServer : public netsim::Process {
 public:
  AuctionServer(const TpInstance& inst, const AuctionModel& model,
                Observer& obs, int self)
      : inst_(inst), model_(model), obs_(obs), self_(self),
        view_(model.m), epsilon_(model.epsilon0) {
    for (int j = 0; j < model.m; ++j) {
      if (inst.home_of(j) == self) hosted_.push_back(j);
      if (model.demand[j] > 0) {
        view_[j] = {{kArtificialHolder, 0, model.demand[j]}};
      }
    }
  }

  void on_start(Context& ctx) override {
    begin_round(ctx);
    drain(ctx);
  }

  void on_message(Context& ctx, const Envelope& env) override {
    dispatch(ctx, env);
    drain(ctx);
  }

 private:
  template <typename T>
  void post(Context& ctx, int dst, Tag tag, T msg) {
    if (dst == self_) {
      Envelope env;
      env.src = env.dst = self_;
      env.tag = tag;
      env.payload = std::move(msg);
      local_.push_back(std::move(env));
    } else {
      ctx.send(dst, tag, std::move(msg));
    }
  }

  void drain(Context& ctx) {
    while (!local_.empty()) {
      Envelope env = std::move(local_.front());
      local_.pop_front();
      dispatch(ctx, env);
    }
  }

  void dispatch(Context& ctx, const Envelope& env) {
    if (env.tag == Tag::kBid) {
      const auto& msg = std::any_cast<const BidMsg&>(env.payload);
      bids_[msg.round][msg.bid.dest].push_back(msg.bid);
      if (msg.round == round_) try_award(ctx, msg.bid.dest);
    } else if (env.tag == Tag::kAuctionAck) {
      const auto& msg = std::any_cast<const AckMsg&>(env.payload);
      acks_[msg.round].push_back({msg.dest, msg.list});
      if (msg.round == round_) try_advance(ctx);
    } else {
      throw PreconditionError(std::string("unexpected message ") +
                              netsim::tag_name(env.tag));
    }
  }

  void begin_round(Context& ctx) {
    if (!has_artificial_units(view_)) {
      if (self_ == 0 && !obs_.stats.feasible_round) {
        obs_.stats.feasible_round = round_;
        obs_.stats.feasible_first_value = objective(inst_, flows_of(model_, view_));
      }
      const std::optional<Cost> next = epsilon_schedule(epsilon_, model_.scale, model_.q);
      if (!next) {
        if (self_ == 0) {
          obs_.stats.rounds = round_;
          obs_.stats.phases = phase_ + 1;
          obs_.stats.epsilon = epsilon_;
          obs_.final_view = view_;
        }
        return;
      }
      epsilon_ = *next;
      ++phase_;
      for (int j = 0; j < model_.m; ++j) {
        const Cost price = entry_price(view_[j]);
        view_[j].clear();
        if (model_.demand[j] > 0) {
          view_[j] = {{kArtificialHolder, price, model_.demand[j]}};
        }
      }
    }
    if (round_ >= obs_.max_rounds) {
      throw WatchdogError("auction exceeded " + std::to_string(obs_.max_rounds) +
                          " rounds");
    }
    if (self_ == 0 && obs_.on_round) {
      obs_.on_round(AuctionRound{round_, phase_, epsilon_, view_});
    }

    // Sources with unplaced supply bid on every destination they may serve;
    // the ones without anything to ask for send an empty bid so the
    // destination knows the wave is complete.
    std::vector<std::uint8_t> bidder(model_.n, 0);
    for (int i = 0; i < model_.n; ++i) {
      Flow placed = 0;
      for (int j = 0; j < model_.m; ++j) placed += held_by(view_[j], i);
      bidder[i] = placed < model_.supply[i];
    }
    expected_.assign(model_.m, 0);
    for (int j : hosted_) {
      for (int i = 0; i < model_.n; ++i) {
        if (bidder[i] && model_.eligible(i, j)) ++expected_[j];
      }
    }
    if (bidder[self_]) {
      std::vector<Bid> bids = bidding_step(model_, view_, self_, epsilon_);
      std::size_t k = 0;
      for (int j = 0; j < model_.m; ++j) {
        if (!model_.eligible(self_, j)) continue;
        Bid bid{self_, j, 0, 0};
        if (k < bids.size() && bids[k].dest == j) bid = bids[k++];
        post(ctx, inst_.home_of(j), Tag::kBid, BidMsg{round_, bid});
      }
    }
    for (int j : hosted_) try_award(ctx, j);
    try_advance(ctx);
  }

  void try_award(Context& ctx, int j) {
    auto& pending = bids_[round_][j];
    if (static_cast<int>(pending.size()) < expected_[j] || expected_[j] < 0) return;
    expected_[j] = -1;  // awarded this round
    AwardList list = assignment_step(view_[j], pending);
    for (int s = 0; s < model_.n; ++s) {
      post(ctx, s, Tag::kAuctionAck, AckMsg{round_, j, list});
    }
  }

  void try_advance(Context& ctx) {
    auto it = acks_.find(round_);
    if (it == acks_.end() || static_cast<int>(it->second.size()) < model_.m) return;
    for (auto& [j, list] : it->second) view_[j] = std::move(list);
    acks_.erase(it);
    bids_.erase(round_);
    ++round_;
    begin_round(ctx);
  }

  const TpInstance& inst_;
  const AuctionModel& model_;
  Observer& obs_;
  int self_;
  std::vector<int> hosted_;
  std::vector<AwardList> view_;
  Cost epsilon_;
  int round_ = 0;
  int phase_ = 0;
  std::vector<int> expected_;
  std::map<int, std::map<int, std::vector<Bid>>> bids_;
  std::map<int, std::vector<std::pair<int, AwardList>>> acks_;
  std::deque<Envelope> local_;
};

}  // namespace

AuctionResult auction_tp(const TpInstance& inst, const AuctionOptions& options) {
  if (inst.total_supply() < inst.total_demand()) {
    throw InfeasibleError("total supply is short of total demand");
  }
  if (inst.total_supply() > inst.total_demand()) {
    throw PreconditionError("the auction needs a balanced instance");
  }
  const AuctionModel model = make_auction_model(inst);
  if (eligible_max_flow(model) < inst.total_demand()) {
    throw InfeasibleError(
        "the eligible arcs cannot carry every demand; the artificial holder "
        "could never be displaced");
  }

  Observer obs{inst, model, options.on_round, options.max_rounds, {}, {}};
  obs.stats.scale = model.scale;
  netsim::Kernel kernel(options.kernel);
  for (int i = 0; i < model.n; ++i) {
    kernel.spawn(i, std::make_unique<AuctionServer>(inst, model, obs, i));
  }
  AuctionResult result;
  result.transcript = kernel.run_until_quiescent();
  result.awards = std::move(obs.final_view);
  if (static_cast<int>(result.awards.size()) != model.m) {
    throw Error("auction stopped before the final phase ended");
  }
  result.stats = obs.stats;
  result.stats.msg_count = result.transcript.msg_count;
  result.stats.chain_len = result.transcript.chain_len;
  for (const AwardList& list : result.awards) {
    result.prices.push_back(entry_price(list));
  }
  result.solution = make_solution(inst, flows_of(model, result.awards));
  return result;
}

}  // namespace cdnroute
