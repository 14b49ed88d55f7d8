#ifndef CDNROUTE_NETSIM_H_
#define CDNROUTE_NETSIM_H_

// Deterministic discrete-event kernel for message-passing protocols.
//
// Processes are identified by totally ordered integer ids and communicate
// only through envelopes. Channels are reliable and FIFO per ordered pair;
// each send draws a finite delay from a seeded model. Events are delivered
// in (deliver_at, src, send_seq) order, which is total because send_seq is
// a per-source counter.

#include <any>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "cdnroute/tp_core.h"

namespace cdnroute::netsim {

using ProcessId = int;
using SimTime = std::int64_t;

enum class Tag {
  kServe,
  kAck,
  kNack,
  kVarv,
  kVaru,
  kReducedCost,
  kCycle,
  kUpdate,
  kCancel,
  kBid,
  kAuctionAck,
  kControl,
};

const char* tag_name(Tag tag);

struct Envelope {
  ProcessId src = 0;
  ProcessId dst = 0;
  Tag tag = Tag::kControl;
  std::any payload;
  std::uint64_t send_seq = 0;  // strictly increasing per source
  SimTime sent_at = 0;
  SimTime deliver_at = 0;
  int depth = 0;  // length of the causal message chain ending here
};

struct TranscriptEvent {
  SimTime time = 0;
  ProcessId src = 0;
  ProcessId dst = 0;
  Tag tag = Tag::kControl;
  std::uint64_t seq = 0;
  int depth = 0;

  bool operator==(const TranscriptEvent&) const = default;
};

struct Transcript {
  std::vector<TranscriptEvent> events;  // delivery order
  long msg_count = 0;
  int chain_len = 0;
  SimTime end_time = 0;

  long count(Tag tag) const;
  // One line per delivery: time,src,dst,tag,seq (1-based process ids).
  std::string to_csv() const;
};

// Delay drawn per send. "unit" is always 1; "uniform" draws from [lo, hi]
// with an independent stream per ordered (src, dst) pair.
struct DelayModel {
  enum class Kind { kUnit, kUniform };
  Kind kind = Kind::kUnit;
  SimTime lo = 1;
  SimTime hi = 1;

  static DelayModel unit() { return {}; }
  static DelayModel uniform(SimTime lo, SimTime hi);
  // Parses "unit" or "uniform:LO:HI".
  static DelayModel parse(const std::string& text);
  std::string describe() const;
};

class Kernel;

// Handle a process uses to interact with the kernel while it runs.
class Context {
 public:
  ProcessId self() const { return self_; }
  SimTime now() const;
  int process_count() const;
  void send(ProcessId dst, Tag tag, std::any payload = {});

 private:
  friend class Kernel;
  Context(Kernel& kernel, ProcessId self) : kernel_(kernel), self_(self) {}
  Kernel& kernel_;
  ProcessId self_;
};

class Process {
 public:
  virtual ~Process() = default;
  virtual void on_start(Context& ctx) = 0;
  virtual void on_message(Context& ctx, const Envelope& env) = 0;
};

// Adapts a pair of lambdas into a Process.
class FunctionProcess : public Process {
 public:
  using StartFn = std::function<void(Context&)>;
  using MessageFn = std::function<void(Context&, const Envelope&)>;
  FunctionProcess(StartFn start, MessageFn message)
      : start_(std::move(start)), message_(std::move(message)) {}
  void on_start(Context& ctx) override {
    if (start_) start_(ctx);
  }
  void on_message(Context& ctx, const Envelope& env) override {
    if (message_) message_(ctx, env);
  }

 private:
  StartFn start_;
  MessageFn message_;
};

struct KernelOptions {
  DelayModel delay;
  std::uint64_t seed = 0;
  long max_events = 50'000'000;
  bool record_events = true;
};

class Kernel {
 public:
  explicit Kernel(KernelOptions options = {});

  // Registers a process. Throws PreconditionError on a duplicate id.
  Process& spawn(ProcessId id, std::unique_ptr<Process> process);
  Process& spawn(ProcessId id, FunctionProcess::StartFn start,
                 FunctionProcess::MessageFn message);

  // Starts every process (ascending id) and delivers envelopes until none
  // remain in flight. Throws WatchdogError past options.max_events.
  Transcript run_until_quiescent();

  SimTime now() const { return now_; }
  int process_count() const { return live_; }
  const KernelOptions& options() const { return options_; }

 private:
  friend class Context;

  struct Later {
    bool operator()(const Envelope& a, const Envelope& b) const;
  };

  void send(ProcessId src, ProcessId dst, Tag tag, std::any payload);
  SimTime draw_delay(ProcessId src, ProcessId dst);
  std::size_t pair_index(ProcessId src, ProcessId dst) const {
    return static_cast<std::size_t>(src) * slots_ + dst;
  }

  KernelOptions options_;
  // Indexed by process id; ids are small non-negative integers.
  std::vector<std::unique_ptr<Process>> processes_;
  int live_ = 0;
  std::size_t slots_ = 0;
  std::vector<Envelope> heap_;
  std::vector<std::uint64_t> next_seq_;
  std::vector<int> received_depth_;
  std::vector<SimTime> last_delivery_;  // per ordered pair
  std::vector<std::unique_ptr<std::mt19937_64>> streams_;
  SimTime now_ = 0;
  bool started_ = false;
};

}  // namespace cdnroute::netsim

#endif  // CDNROUTE_NETSIM_H_
