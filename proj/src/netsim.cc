#include "cdnroute/netsim.h"

#include <algorithm>
#include <sstream>
#include <tuple>

namespace cdnroute::netsim {

const char* tag_name(Tag tag) {
  switch (tag) {
    case Tag::kServe: return "Serve";
    case Tag::kAck: return "Ack";
    case Tag::kNack: return "Nack";
    case Tag::kVarv: return "Varv";
    case Tag::kVaru: return "Varu";
    case Tag::kReducedCost: return "ReducedCost";
    case Tag::kCycle: return "Cycle";
    case Tag::kUpdate: return "Update";
    case Tag::kCancel: return "Cancel";
    case Tag::kBid: return "Bid";
    case Tag::kAuctionAck: return "AuctionAck";
    case Tag::kControl: return "Control";
  }
  return "?";
}

long Transcript::count(Tag tag) const {
  return std::count_if(events.begin(), events.end(),
                       [tag](const TranscriptEvent& e) { return e.tag == tag; });
}

std::string Transcript::to_csv() const {
  std::ostringstream out;
  for (const TranscriptEvent& e : events) {
    out << e.time << ',' << e.src + 1 << ',' << e.dst + 1 << ','
        << tag_name(e.tag) << ',' << e.seq << '\n';
  }
  return out.str();
}

DelayModel DelayModel::uniform(SimTime lo, SimTime hi) {
  if (lo < 1 || hi < lo) {
    throw PreconditionError("uniform delay needs 1 <= lo <= hi");
  }
  return {Kind::kUniform, lo, hi};
}

DelayModel DelayModel::parse(const std::string& text) {
  if (text == "unit") return unit();
  const std::string prefix = "uniform:";
  if (text.rfind(prefix, 0) == 0) {
    std::istringstream in(text.substr(prefix.size()));
    SimTime lo = 0;
    SimTime hi = 0;
    char colon = 0;
    if (in >> lo >> colon >> hi && colon == ':' && in.peek() == EOF) {
      return uniform(lo, hi);
    }
  }
  throw PreconditionError("bad delay model '" + text +
                          "' (expected unit or uniform:LO:HI)");
}

std::string DelayModel::describe() const {
  if (kind == Kind::kUnit) return "unit";
  return "uniform:" + std::to_string(lo) + ":" + std::to_string(hi);
}

SimTime Context::now() const { return kernel_.now(); }

int Context::process_count() const { return kernel_.process_count(); }

void Context::send(ProcessId dst, Tag tag, std::any payload) {
  kernel_.send(self_, dst, tag, std::move(payload));
}

Kernel::Kernel(KernelOptions options) : options_(std::move(options)) {}

Process& Kernel::spawn(ProcessId id, std::unique_ptr<Process> process) {
  if (started_) throw PreconditionError("cannot spawn after the run started");
  if (id < 0) throw PreconditionError("process ids must be non-negative");
  if (static_cast<std::size_t>(id) >= processes_.size()) {
    processes_.resize(id + 1);
  }
  if (processes_[id]) {
    throw PreconditionError("duplicate process id " + std::to_string(id));
  }
  processes_[id] = std::move(process);
  ++live_;
  return *processes_[id];
}

Process& Kernel::spawn(ProcessId id, FunctionProcess::StartFn start,
                       FunctionProcess::MessageFn message) {
  return spawn(id, std::make_unique<FunctionProcess>(std::move(start),
                                                     std::move(message)));
}

bool Kernel::Later::operator()(const Envelope& a, const Envelope& b) const {
  // Heap comparator: true when a is delivered after b.
  return std::tie(a.deliver_at, a.src, a.send_seq) >
         std::tie(b.deliver_at, b.src, b.send_seq);
}

SimTime Kernel::draw_delay(ProcessId src, ProcessId dst) {
  const DelayModel& model = options_.delay;
  if (model.kind == DelayModel::Kind::kUnit) return 1;
  auto& stream = streams_[pair_index(src, dst)];
  if (!stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(options_.seed),
                      static_cast<std::uint32_t>(options_.seed >> 32),
                      static_cast<std::uint32_t>(src),
                      static_cast<std::uint32_t>(dst)};
    stream = std::make_unique<std::mt19937_64>(seq);
  }
  std::uniform_int_distribution<SimTime> dist(model.lo, model.hi);
  return dist(*stream);
}

void Kernel::send(ProcessId src, ProcessId dst, Tag tag, std::any payload) {
  if (dst < 0 || static_cast<std::size_t>(dst) >= processes_.size() ||
      !processes_[dst]) {
    throw PreconditionError("send to unknown process " + std::to_string(dst));
  }
  Envelope env;
  env.src = src;
  env.dst = dst;
  env.tag = tag;
  env.payload = std::move(payload);
  env.send_seq = next_seq_[src]++;
  env.sent_at = now_;
  // FIFO per pair: never deliver before an earlier envelope on this channel.
  SimTime& last = last_delivery_[pair_index(src, dst)];
  env.deliver_at = std::max(now_ + draw_delay(src, dst), last);
  last = env.deliver_at;
  env.depth = received_depth_[src] + 1;
  heap_.push_back(std::move(env));
  std::push_heap(heap_.begin(), heap_.end(), Later{});
}

Transcript Kernel::run_until_quiescent() {
  if (started_) throw PreconditionError("kernel already ran");
  started_ = true;
  slots_ = processes_.size();
  next_seq_.assign(slots_, 0);
  received_depth_.assign(slots_, 0);
  last_delivery_.assign(slots_ * slots_, 0);
  streams_.resize(slots_ * slots_);

  Transcript transcript;
  for (ProcessId id = 0; id < static_cast<ProcessId>(slots_); ++id) {
    if (!processes_[id]) continue;
    Context ctx(*this, id);
    processes_[id]->on_start(ctx);
  }
  while (!heap_.empty()) {
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Envelope env = std::move(heap_.back());
    heap_.pop_back();
    if (++transcript.msg_count > options_.max_events) {
      throw WatchdogError("simulation exceeded " +
                          std::to_string(options_.max_events) + " events");
    }
    now_ = env.deliver_at;
    transcript.chain_len = std::max(transcript.chain_len, env.depth);
    received_depth_[env.dst] = std::max(received_depth_[env.dst], env.depth);
    if (options_.record_events) {
      transcript.events.push_back(
          {env.deliver_at, env.src, env.dst, env.tag, env.send_seq, env.depth});
    }
    Context ctx(*this, env.dst);
    processes_[env.dst]->on_message(ctx, env);
  }
  transcript.end_time = now_;
  return transcript;
}

}  // namespace cdnroute::netsim
