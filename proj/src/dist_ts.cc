#include "cdnroute/dist_ts.h"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <tuple>
#include <variant>

namespace cdnroute {

namespace {

using netsim::Context;
using netsim::Envelope;
using netsim::Tag;

constexpr Flow kUnbounded = std::numeric_limits<Flow>::max();

// Node ids: sources are [0, n), destination j is n + j.

struct FloodMsg {
  int epoch = 0;
  int node = 0;
  Cost value = 0;
  std::vector<int> path;  // root ... node
};

struct DestDual {
  int dest = 0;
  Cost value = 0;
  std::vector<int> path;
};

struct BatchMsg {
  int epoch = 0;
  std::vector<DestDual> dests;
};

struct CycleMsg {
  int epoch = 0;
  int initiator = 0;
  Cell entering;
  Cost rc = 0;
  std::vector<int> route;  // D_j ... S_i along the tree
  std::size_t pos = 0;
  Flow theta = kUnbounded;
  Cell leaving{-1, -1};
  int caused = 0;  // claims this cycle took away from worse cycles
};

struct CancelMsg {
  int epoch = 0;
  bool rejected = false;  // the cycle stopped here; otherwise preempted
  int caused = 0;
};

struct UpdateMsg {
  int epoch = 0;
  int initiator = 0;
  Cell entering;
  Flow theta = 0;
  Cell leaving;
  std::vector<int> route;
  std::size_t pos = 0;
};

struct MinRc {
  int epoch = 0;
  int server = 0;
  std::optional<Cell> cell;
  Cost rc = 0;
};
struct Go {
  int epoch = 0;
  std::vector<int> initiators;
};
struct Report {
  int epoch = 0;
  int initiator = 0;
  bool arrived = false;
  int caused = 0;
  int received = 0;
};
struct LateCancel {
  int epoch = 0;
  int initiator = 0;
};
struct Commit {
  int epoch = 0;
};
struct UpdateDone {
  int epoch = 0;
  int initiator = 0;
  PivotCycle pivot;
};
struct Rebuild {
  int epoch = 0;
  std::vector<std::pair<Cell, Cell>> changes;  // (entering, leaving)
  bool bland = false;
};
struct Stop {
  int epoch = 0;
};
using ControlMsg =
    std::variant<MinRc, Go, Report, LateCancel, Commit, UpdateDone, Rebuild, Stop>;

class TsServer;

struct Shared {
  explicit Shared(const TpInstance& instance) : inst(instance) {}

  const TpInstance& inst;
  int n = 0;
  int m = 0;
  long watchdog = 0;
  long epoch_limit = 0;
  bool duals_only = false;
  std::function<void(const EpochRecord&)> on_epoch;
  std::vector<TsServer*> servers;

  // Observer state; protocol code only writes to it.
  DistTsStats stats;
  EpochRecord current;
  long dual_messages = 0;

  int host(int node) const { return node < n ? node : inst.home_of(node - n); }
  Cell cell_of(int a, int b) const {
    return a < n ? Cell{a, b - n} : Cell{b, a - n};
  }
  FlowMatrix gather_flows() const;
  void priced(int epoch, bool bland, long pivots);
  void finish_epoch(std::vector<PivotCycle> applied, int cancelled);
};

std::vector<Cell> cycle_cells(const Shared& sh, const Cell& entering,
                              const std::vector<int>& route) {
  std::vector<Cell> cells{entering};
  for (std::size_t k = 0; k + 1 < route.size(); ++k) {
    cells.push_back(sh.cell_of(route[k], route[k + 1]));
  }
  return cells;
}

class TsServer : public netsim::Process {
 public:
  TsServer(Shared& sh, int self, const BasisState& init)
      : sh_(sh), self_(self), nbrs_(sh.n + sh.m), row_basic_(sh.m, 0),
        val_(sh.n + sh.m, 0), path_(sh.n + sh.m), waiting_(sh.n + sh.m, 0) {
    for (int node = 0; node < sh.n + sh.m; ++node) {
      if (sh.host(node) == self) hosted_.push_back(node);
    }
    for (const Cell& c : init.basic) add_link(c, init.x[c]);
  }

  void on_start(Context& ctx) override {
    for (int node : hosted_) {
      waiting_[node] = 1;
      ++pending_;
      if (node >= sh_.n) dirty_dests_.push_back(node - sh_.n);
    }
    if (self_ == 0) assign(ctx, 0, 0, {0});
    check_duals_done(ctx);
    drain(ctx);
  }

  void on_message(Context& ctx, const Envelope& env) override {
    dispatch(ctx, env);
    drain(ctx);
  }

  // Observer access.
  const std::map<Cell, Flow>& links() const { return links_; }
  Cost dual(int node) const { return val_[node]; }
  int epochs() const { return root_.epochs; }
  long pivots() const { return root_.pivots; }
  bool bland() const { return bland_; }

 private:
  struct Claim {
    Cost rc;
    int initiator;
    bool beats(Cost other_rc, int other_initiator) const {
      return std::tie(rc, initiator) < std::tie(other_rc, other_initiator);
    }
  };

  struct RootState {
    std::vector<MinRc> minrcs;
    std::vector<int> initiators;
    int reports = 0;
    long caused = 0;
    long received = 0;
    long late = 0;
    std::set<int> cancelled;
    bool committed = false;
    std::vector<int> survivors;
    std::vector<UpdateDone> done;
    long pivots = 0;
    int epochs = 0;
  };

  void add_link(const Cell& c, Flow f) {
    const int s = c.source;
    const int d = sh_.n + c.dest;
    const bool has_s = sh_.host(s) == self_;
    const bool has_d = sh_.host(d) == self_;
    if (!has_s && !has_d) return;
    links_[c] = f;
    if (has_s) {
      nbrs_[s].push_back(d);
      if (s == self_) row_basic_[c.dest] = 1;
    }
    if (has_d) nbrs_[d].push_back(s);
  }

  void remove_link(const Cell& c) {
    const int s = c.source;
    const int d = sh_.n + c.dest;
    links_.erase(c);
    auto drop = [](std::vector<int>& list, int node) {
      list.erase(std::find(list.begin(), list.end(), node));
    };
    if (sh_.host(s) == self_) {
      drop(nbrs_[s], d);
      if (s == self_) row_basic_[c.dest] = 0;
    }
    if (sh_.host(d) == self_) drop(nbrs_[d], s);
  }

  template <typename T>
  void post(Context& ctx, int dst, Tag tag, T msg) {
    if (dst == self_) {
      Envelope env;
      env.src = self_;
      env.dst = self_;
      env.tag = tag;
      env.payload = std::move(msg);
      local_.push_back(std::move(env));
    } else {
      ctx.send(dst, tag, std::move(msg));
    }
  }

  void control(Context& ctx, int dst, ControlMsg msg) {
    post(ctx, dst, Tag::kControl, std::move(msg));
  }

  void drain(Context& ctx) {
    while (!local_.empty()) {
      Envelope env = std::move(local_.front());
      local_.pop_front();
      dispatch(ctx, env);
    }
  }

  static int epoch_of(const Envelope& env) {
    if (auto* f = std::any_cast<FloodMsg>(&env.payload)) return f->epoch;
    if (auto* b = std::any_cast<BatchMsg>(&env.payload)) return b->epoch;
    if (auto* c = std::any_cast<CycleMsg>(&env.payload)) return c->epoch;
    if (auto* c = std::any_cast<CancelMsg>(&env.payload)) return c->epoch;
    if (auto* u = std::any_cast<UpdateMsg>(&env.payload)) return u->epoch;
    if (auto* c = std::any_cast<ControlMsg>(&env.payload)) {
      if (std::holds_alternative<Rebuild>(*c)) return -1;
      return std::visit([](const auto& m) { return m.epoch; }, *c);
    }
    throw Error("unknown payload");
  }

  void dispatch(Context& ctx, const Envelope& env) {
    // Messages of an epoch this server has not reached yet wait for the
    // root's Rebuild.
    if (epoch_of(env) > epoch_) {
      deferred_.push_back(env);
      return;
    }
    switch (env.tag) {
      case Tag::kVarv:
      case Tag::kVaru:
        if (auto* f = std::any_cast<FloodMsg>(&env.payload)) {
          assign(ctx, f->node, f->value, f->path);
        } else {
          on_batch(ctx, std::any_cast<const BatchMsg&>(env.payload));
        }
        break;
      case Tag::kReducedCost:
      case Tag::kCycle:
        traverse(ctx, std::any_cast<CycleMsg>(env.payload));
        break;
      case Tag::kCancel:
        on_cancel(ctx, std::any_cast<const CancelMsg&>(env.payload));
        break;
      case Tag::kUpdate:
        update_walk(ctx, std::any_cast<UpdateMsg>(env.payload));
        break;
      case Tag::kControl:
        std::visit([&](const auto& m) { on_control(ctx, m); },
                   std::any_cast<const ControlMsg&>(env.payload));
        break;
      default:
        throw PreconditionError(std::string("unexpected message ") +
                                netsim::tag_name(env.tag));
    }
  }

  // ---- duals --------------------------------------------------------------

  void assign(Context& ctx, int node, Cost value, std::vector<int> path) {
    if (!waiting_[node]) {
      throw PreconditionError("dual of node " + std::to_string(node) +
                              " reached twice; the basis is not a tree");
    }
    val_[node] = value;
    path_[node] = std::move(path);
    waiting_[node] = 0;
    --pending_;
    const auto& p = path_[node];
    const int from = p.size() >= 2 ? p[p.size() - 2] : -1;
    for (int next : nbrs_[node]) {
      if (next != from) forward(ctx, node, next);
    }
    check_duals_done(ctx);
  }

  void forward(Context& ctx, int node, int next) {
    const Cell c = sh_.cell_of(node, next);
    FloodMsg msg;
    msg.epoch = epoch_;
    msg.node = next;
    msg.value = sh_.inst.cost[c] - val_[node];
    msg.path = path_[node];
    msg.path.push_back(next);
    const int dst = sh_.host(next);
    if (dst != self_) ++sh_.dual_messages;
    post(ctx, dst, next < sh_.n ? Tag::kVaru : Tag::kVarv, std::move(msg));
  }

  void check_duals_done(Context& ctx) {
    if (pending_ > 0 || batch_sent_) return;
    batch_sent_ = true;
    if (sh_.duals_only) return;
    BatchMsg batch;
    batch.epoch = epoch_;
    for (int j : dirty_dests_) {
      batch.dests.push_back({j, val_[sh_.n + j], path_[sh_.n + j]});
    }
    for (int s = 0; s < sh_.n; ++s) {
      if (s != self_) ctx.send(s, Tag::kVarv, batch);
    }
    try_price(ctx);
  }

  void on_batch(Context& ctx, const BatchMsg& batch) {
    for (const DestDual& d : batch.dests) {
      val_[sh_.n + d.dest] = d.value;
      path_[sh_.n + d.dest] = d.path;
    }
    ++batches_;
    try_price(ctx);
  }

  // ---- pricing -------------------------------------------------------------

  void try_price(Context& ctx) {
    if (priced_ || !batch_sent_ || batches_ < sh_.n - 1) return;
    priced_ = true;
    const int s = self_;
    std::optional<int> best;
    Cost best_rc = 0;
    for (int j = 0; j < sh_.m; ++j) {
      if (row_basic_[j]) continue;
      const Cost rc = sh_.inst.cost(s, j) - val_[s] - val_[sh_.n + j];
      if (rc < best_rc) {
        best = j;
        best_rc = rc;
        if (bland_) break;
      }
    }
    MinRc report{epoch_, s, std::nullopt, 0};
    candidate_.reset();
    if (best) {
      const int j = *best;
      report.cell = Cell{s, j};
      report.rc = best_rc;
      CycleMsg cycle;
      cycle.epoch = epoch_;
      cycle.initiator = s;
      cycle.entering = {s, j};
      cycle.rc = best_rc;
      cycle.route = route_between(sh_.n + j, s);
      candidate_ = std::move(cycle);
    }
    control(ctx, 0, report);
  }

  // Tree path from a destination to a source through their deepest common
  // ancestor, using the root paths learned during dual propagation.
  std::vector<int> route_between(int dest_node, int source_node) const {
    const auto& pd = path_[dest_node];
    const auto& ps = path_[source_node];
    std::size_t common = 0;
    while (common < pd.size() && common < ps.size() &&
           pd[common] == ps[common]) {
      ++common;
    }
    std::vector<int> route(pd.rbegin(), pd.rend() - (common - 1));
    route.insert(route.end(), ps.begin() + common, ps.end());
    return route;
  }

  // ---- cycles --------------------------------------------------------------

  void traverse(Context& ctx, CycleMsg msg) {
    const std::size_t len = msg.route.size();
    while (true) {
      const int node = msg.route[msg.pos];
      if (node < sh_.n) {
        std::vector<Cell> edges;
        if (msg.pos > 0) edges.push_back(sh_.cell_of(msg.route[msg.pos - 1], node));
        if (msg.pos + 1 < len) {
          edges.push_back(sh_.cell_of(node, msg.route[msg.pos + 1]));
        } else {
          edges.push_back(msg.entering);
        }
        if (!claim(ctx, msg, edges)) return;
      }
      if (msg.pos + 1 < len && msg.pos % 2 == 0) {
        const Cell c = sh_.cell_of(node, msg.route[msg.pos + 1]);
        const Flow f = links_.at(c);
        if (f < msg.theta || (f == msg.theta && c < msg.leaving)) {
          msg.theta = f;
          msg.leaving = c;
        }
      }
      ++msg.pos;
      if (msg.pos == len) {
        finished_ = std::move(msg);
        report(ctx, true, finished_->caused);
        return;
      }
      const int dst = sh_.host(msg.route[msg.pos]);
      if (dst != self_) {
        ctx.send(dst, Tag::kCycle, std::move(msg));
        return;
      }
    }
  }

  // Claims the cycle's cells at this source. A better claim already held
  // rejects the cycle; worse holders are preempted.
  bool claim(Context& ctx, CycleMsg& msg, const std::vector<Cell>& edges) {
    for (const Cell& e : edges) {
      auto it = claims_.find(e);
      if (it != claims_.end() && it->second.beats(msg.rc, msg.initiator)) {
        post(ctx, msg.initiator, Tag::kCancel,
             CancelMsg{epoch_, true, msg.caused});
        return false;
      }
    }
    std::set<int> losers;
    for (const Cell& e : edges) {
      auto it = claims_.find(e);
      if (it != claims_.end()) losers.insert(it->second.initiator);
      claims_[e] = Claim{msg.rc, msg.initiator};
    }
    for (int loser : losers) {
      post(ctx, loser, Tag::kCancel, CancelMsg{epoch_, false, 0});
      ++msg.caused;
    }
    return true;
  }

  void on_cancel(Context& ctx, const CancelMsg& msg) {
    if (msg.rejected) {
      finished_.reset();
      report(ctx, false, msg.caused);
    } else if (reported_) {
      control(ctx, 0, LateCancel{epoch_, self_});
    } else {
      ++received_;
    }
  }

  void report(Context& ctx, bool arrived, int caused) {
    reported_ = true;
    control(ctx, 0, Report{epoch_, self_, arrived, caused, received_});
  }

  // ---- updates -------------------------------------------------------------

  void update_walk(Context& ctx, UpdateMsg msg) {
    const std::size_t len = msg.route.size();
    while (true) {
      const std::size_t k = msg.pos;
      const int node = msg.route[k];
      // Edge e joins route[e] and route[e + 1]; even edges lose theta.
      if (k > 0) apply(msg, sh_.cell_of(msg.route[k - 1], node), (k - 1) % 2 == 0 ? -1 : 1);
      if (k + 1 < len) apply(msg, sh_.cell_of(node, msg.route[k + 1]), k % 2 == 0 ? -1 : 1);
      if (k == 0 || k + 1 == len) apply(msg, msg.entering, 1);
      if (k == 0) {
        UpdateDone done;
        done.epoch = epoch_;
        done.initiator = msg.initiator;
        done.pivot.entering = msg.entering;
        done.pivot.cells = cycle_cells(sh_, msg.entering, msg.route);
        done.pivot.theta = msg.theta;
        done.pivot.leaving = msg.leaving;
        control(ctx, 0, std::move(done));
        return;
      }
      --msg.pos;
      const int dst = sh_.host(msg.route[msg.pos]);
      if (dst != self_) {
        ctx.send(dst, Tag::kUpdate, std::move(msg));
        return;
      }
    }
  }

  void apply(const UpdateMsg& msg, const Cell& c, int sign) {
    if (!applied_.insert({msg.initiator, c}).second) return;
    if (c == msg.entering) {
      add_link(c, msg.theta);
      return;
    }
    links_.at(c) += sign * msg.theta;
    if (c == msg.leaving) remove_link(c);
  }

  // ---- control plane -------------------------------------------------------

  void on_control(Context& ctx, const MinRc& msg) {
    root_.minrcs.push_back(msg);
    if (static_cast<int>(root_.minrcs.size()) < sh_.n) return;
    ++root_.epochs;
    if (root_.epochs > sh_.epoch_limit) {
      throw WatchdogError("distributed simplex exceeded " +
                          std::to_string(sh_.epoch_limit) + " epochs");
    }
    sh_.priced(epoch_, bland_, root_.pivots);
    std::vector<int> negative;
    for (const MinRc& r : root_.minrcs) {
      if (r.cell) negative.push_back(r.server);
    }
    std::sort(negative.begin(), negative.end());
    root_.minrcs.clear();
    if (negative.empty()) {
      sh_.finish_epoch({}, 0);
      for (int s = 0; s < sh_.n; ++s) control(ctx, s, Stop{epoch_});
      return;
    }
    if (bland_) negative.resize(1);
    root_.initiators = negative;
    root_.reports = 0;
    root_.caused = root_.received = root_.late = 0;
    root_.cancelled.clear();
    root_.committed = false;
    root_.done.clear();
    sh_.current.initiated = static_cast<int>(negative.size());
    for (int s = 0; s < sh_.n; ++s) control(ctx, s, Go{epoch_, negative});
  }

  void on_control(Context& ctx, const Go& msg) {
    if (!candidate_) return;
    if (!std::binary_search(msg.initiators.begin(), msg.initiators.end(), self_)) {
      return;
    }
    reported_ = false;
    received_ = 0;
    post(ctx, sh_.host(sh_.n + candidate_->entering.dest), Tag::kReducedCost,
         *candidate_);
  }

  void on_control(Context& ctx, const Report& msg) {
    ++root_.reports;
    root_.caused += msg.caused;
    root_.received += msg.received;
    if (!msg.arrived || msg.received > 0) root_.cancelled.insert(msg.initiator);
    try_commit(ctx);
  }

  void on_control(Context& ctx, const LateCancel& msg) {
    ++root_.late;
    root_.cancelled.insert(msg.initiator);
    try_commit(ctx);
  }

  // Every preemption is counted once by its cause and once by its victim;
  // when the totals meet, no Cancel is still in flight.
  void try_commit(Context& ctx) {
    if (root_.committed ||
        root_.reports < static_cast<int>(root_.initiators.size()) ||
        root_.caused != root_.received + root_.late) {
      return;
    }
    root_.committed = true;
    root_.survivors.clear();
    for (int s : root_.initiators) {
      if (!root_.cancelled.count(s)) root_.survivors.push_back(s);
    }
    if (root_.survivors.empty()) {
      throw Error("no cycle survived epoch " + std::to_string(epoch_));
    }
    for (int s : root_.survivors) control(ctx, s, Commit{epoch_});
  }

  void on_control(Context& ctx, const Commit&) {
    const CycleMsg& c = *finished_;
    UpdateMsg msg;
    msg.epoch = epoch_;
    msg.initiator = self_;
    msg.entering = c.entering;
    msg.theta = c.theta;
    msg.leaving = c.leaving;
    msg.route = c.route;
    msg.pos = c.route.size() - 1;
    update_walk(ctx, std::move(msg));
  }

  void on_control(Context& ctx, const UpdateDone& msg) {
    root_.done.push_back(msg);
    if (root_.done.size() < root_.survivors.size()) return;
    std::sort(root_.done.begin(), root_.done.end(),
              [](const UpdateDone& a, const UpdateDone& b) {
                return a.initiator < b.initiator;
              });
    Rebuild next;
    next.epoch = epoch_ + 1;
    std::vector<PivotCycle> applied;
    for (const UpdateDone& d : root_.done) {
      next.changes.push_back({d.pivot.entering, d.pivot.leaving});
      applied.push_back(d.pivot);
    }
    root_.pivots += static_cast<long>(applied.size());
    next.bland = bland_ || root_.pivots >= sh_.watchdog;
    sh_.finish_epoch(std::move(applied),
                     static_cast<int>(root_.initiators.size() -
                                      root_.survivors.size()));
    for (int s = 0; s < sh_.n; ++s) control(ctx, s, next);
  }

  void on_control(Context& ctx, const Rebuild& msg) {
    epoch_ = msg.epoch;
    bland_ = msg.bland;
    batch_sent_ = false;
    priced_ = false;
    batches_ = 0;
    claims_.clear();
    applied_.clear();
    candidate_.reset();
    finished_.reset();
    reported_ = false;
    received_ = 0;
    dirty_dests_.clear();
    pending_ = 0;

    // A node keeps its dual unless its tree path ran through a leaving cell.
    std::set<Cell> leaving;
    for (const auto& [in, out] : msg.changes) leaving.insert(out);
    for (int node : hosted_) {
      const auto& p = path_[node];
      bool dirty = false;
      for (std::size_t k = 0; k + 1 < p.size() && !dirty; ++k) {
        dirty = leaving.count(sh_.cell_of(p[k], p[k + 1])) > 0;
      }
      if (!dirty) continue;
      waiting_[node] = 1;
      ++pending_;
      if (node >= sh_.n) dirty_dests_.push_back(node - sh_.n);
    }
    // Entering cells join the re-priced part of the tree to the rest; the
    // unchanged endpoint starts the flood.
    for (const auto& [in, out] : msg.changes) {
      for (int node : {in.source, sh_.n + in.dest}) {
        if (sh_.host(node) != self_ || waiting_[node]) continue;
        const int other = node < sh_.n ? sh_.n + in.dest : in.source;
        forward(ctx, node, other);
      }
    }
    check_duals_done(ctx);
    std::vector<Envelope> replay;
    replay.swap(deferred_);
    for (const Envelope& env : replay) dispatch(ctx, env);
  }

  void on_control(Context&, const Stop&) { stopped_ = true; }

  Shared& sh_;
  int self_;
  int epoch_ = 0;
  bool bland_ = false;
  bool stopped_ = false;

  std::map<Cell, Flow> links_;  // basic cells touching a hosted node
  std::vector<std::vector<int>> nbrs_;
  std::vector<std::uint8_t> row_basic_;
  std::vector<Cost> val_;
  std::vector<std::vector<int>> path_;
  std::vector<int> hosted_;

  std::vector<std::uint8_t> waiting_;
  int pending_ = 0;
  bool batch_sent_ = false;
  bool priced_ = false;
  int batches_ = 0;
  std::vector<int> dirty_dests_;
  std::vector<Envelope> deferred_;
  std::deque<Envelope> local_;

  std::map<Cell, Claim> claims_;
  std::set<std::pair<int, Cell>> applied_;

  std::optional<CycleMsg> candidate_;
  std::optional<CycleMsg> finished_;
  bool reported_ = false;
  int received_ = 0;

  RootState root_;
};

FlowMatrix Shared::gather_flows() const {
  FlowMatrix x(n, m);
  for (int i = 0; i < n; ++i) {
    for (const auto& [c, f] : servers[i]->links()) {
      if (c.source == i) x[c] = f;
    }
  }
  return x;
}

void Shared::priced(int epoch, bool bland, long pivots) {
  current = EpochRecord{};
  current.epoch = epoch;
  current.bland = bland;
  current.dual_messages = dual_messages;
  dual_messages = 0;
  const FlowMatrix x = gather_flows();
  if (!stats.feasible_first_epoch && !uses_artificial(inst, x)) {
    stats.feasible_first_epoch = epoch;
    stats.feasible_first_pivots = pivots;
    stats.feasible_first_value = objective(inst, x);
  }
  if (!on_epoch) return;
  BasisState& b = current.basis;
  b.x = x;
  b.u.resize(n);
  b.v.resize(m);
  for (int i = 0; i < n; ++i) {
    b.u[i] = servers[i]->dual(i);
    for (const auto& [c, f] : servers[i]->links()) {
      if (c.source == i) b.basic.push_back(c);
    }
  }
  std::sort(b.basic.begin(), b.basic.end());
  for (int j = 0; j < m; ++j) b.v[j] = servers[host(n + j)]->dual(n + j);
  for (int s = 0; s < n; ++s) {
    for (const auto& [c, f] : servers[s]->links()) {
      if (host(n + c.dest) != s) continue;
      const auto& owner = servers[c.source]->links();
      auto it = owner.find(c);
      if (it == owner.end() || it->second != f) current.mirrors_consistent = false;
    }
  }
}

void Shared::finish_epoch(std::vector<PivotCycle> applied, int cancelled) {
  current.applied = std::move(applied);
  current.cancelled = cancelled;
  stats.cancellations += cancelled;
  if (on_epoch) on_epoch(current);
}

struct Run {
  std::unique_ptr<Shared> shared;
  netsim::Transcript transcript;
};

Run run_protocol(const TpInstance& inst, const BasisState& init,
                 const netsim::KernelOptions& kernel_options, long watchdog,
                 bool duals_only,
                 std::function<void(const EpochRecord&)> on_epoch) {
  const int n = inst.n();
  const int m = inst.m();
  if (init.x.rows() != n || init.x.cols() != m ||
      !is_spanning_tree(init.basic, n, m)) {
    throw PreconditionError("initial basis is not a spanning tree of the instance");
  }
  Run run;
  run.shared = std::make_unique<Shared>(inst);
  Shared& sh = *run.shared;
  sh.n = n;
  sh.m = m;
  const long default_watchdog = 10L * (n + m) * std::max(n, m);
  sh.watchdog = watchdog > 0 ? watchdog : default_watchdog;
  sh.epoch_limit = sh.watchdog + 20 * default_watchdog;
  sh.duals_only = duals_only;
  sh.on_epoch = std::move(on_epoch);
  netsim::Kernel kernel(kernel_options);
  for (int i = 0; i < n; ++i) {
    auto server = std::make_unique<TsServer>(sh, i, init);
    sh.servers.push_back(server.get());
    kernel.spawn(i, std::move(server));
  }
  run.transcript = kernel.run_until_quiescent();
  // Servers die with the kernel, so gather what callers need now.
  BasisState final_basis;
  final_basis.x = sh.gather_flows();
  final_basis.u.resize(n);
  final_basis.v.resize(m);
  for (int i = 0; i < n; ++i) {
    final_basis.u[i] = sh.servers[i]->dual(i);
    for (const auto& [c, f] : sh.servers[i]->links()) {
      if (c.source == i) final_basis.basic.push_back(c);
    }
  }
  std::sort(final_basis.basic.begin(), final_basis.basic.end());
  for (int j = 0; j < m; ++j) {
    final_basis.v[j] = sh.servers[sh.host(n + j)]->dual(n + j);
  }
  sh.current.basis = std::move(final_basis);
  sh.stats.parallel_rounds = sh.servers[0]->epochs();
  sh.stats.pivots = sh.servers[0]->pivots();
  sh.stats.switched_to_bland = sh.servers[0]->bland();
  sh.servers.clear();
  return run;
}

}  // namespace

DistTsResult dist_ts(const TpInstance& inst, const BasisState& init,
                     const DistTsOptions& options) {
  Run run = run_protocol(inst, init, options.kernel, options.watchdog, false,
                         options.on_epoch);
  DistTsResult result;
  result.basis = std::move(run.shared->current.basis);
  result.solution = make_solution(inst, result.basis.x);
  result.stats = run.shared->stats;
  result.stats.msg_count = run.transcript.msg_count;
  result.stats.chain_len = run.transcript.chain_len;
  result.transcript = std::move(run.transcript);
  return result;
}

DualPropagationResult dual_propagation(const TpInstance& inst,
                                       const BasisState& basis,
                                       const netsim::KernelOptions& kernel) {
  Run run = run_protocol(inst, basis, kernel, 0, true, nullptr);
  DualPropagationResult result;
  result.u = std::move(run.shared->current.basis.u);
  result.v = std::move(run.shared->current.basis.v);
  result.transcript = std::move(run.transcript);
  return result;
}

}  // namespace cdnroute
