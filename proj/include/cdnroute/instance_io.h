#ifndef CDNROUTE_INSTANCE_IO_H_
#define CDNROUTE_INSTANCE_IO_H_

// Text instance formats, the seeded routing-instance generator and the CSV
// stats writers.
//
// Routing instance (ids are 1-based, `#` starts a comment):
//
//   SERVERS
//   3
//   CONTENTS
//   2
//   HOLDINGS          # server content content ...
//   1 1
//   3 1 2
//   BANDWIDTH         # server bandwidth
//   1 10
//   2 5
//   3 8
//   COSTS             # full server x server matrix, zero diagonal
//   0 4 9
//   4 0 2
//   9 2 0
//   REQUESTS          # home_server content demand
//   2 1 6
//   2 2 3
//
// Plain transportation instance:
//
//   TRANSPORTATION
//   SOURCES
//   2
//   DESTINATIONS
//   2
//   SUPPLY
//   3 4
//   DEMAND
//   2 5
//   COSTS
//   4 1
//   2 3

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cdnroute/tp_core.h"

namespace cdnroute {

class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& what);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Throws ParseError for syntax and semantic problems (unknown ids, negative
// amounts, duplicate requests, contents without a holder).
RrspInstance parse_rrsp(std::string_view text);
std::string emit_rrsp(const RrspInstance& rrsp);

TpInstance parse_tp(std::string_view text);
// Only plain instances (no balancing destination or penalty arcs).
std::string emit_tp(const TpInstance& inst);

using AnyInstance = std::variant<RrspInstance, TpInstance>;
// Picks the format from the first section header.
AnyInstance parse_instance(std::string_view text);
TpInstance to_tp(const AnyInstance& instance);

enum class InstanceClass { kMedium, kHard };
std::string to_string(InstanceClass cls);
InstanceClass parse_instance_class(const std::string& text);

struct GeneratorParams {
  int n_servers = 10;
  int avg_requests_per_server = 70;
  int content_count = 0;  // 0: 1.5 * avg_requests_per_server
  int replication_degree = 3;
  // Σb / Σd. The classes are defined by this ratio alone, an approximation.
  double bandwidth_tightness = 1.8;
  InstanceClass cls = InstanceClass::kMedium;
  bool central_server = false;  // server 1 also holds every content
  std::uint64_t seed = 1;
};

// Class defaults: medium = 1.8, hard = 1.0.
GeneratorParams class_params(InstanceClass cls, int n_servers, std::uint64_t seed);

// Each server requests a uniform number of distinct contents in
// [0.9 avg, 1.1 avg]; demands are uniform in [1, 10]; each content gets
// replication_degree distinct random holders; server costs are symmetric,
// uniform in [1, 100]. Bandwidth ceil(tightness * Σd) is split over the
// servers with random weights. Throws PreconditionError on invalid params
// (including tightness < 1).
RrspInstance generate(const GeneratorParams& params);

// ---- stats ------------------------------------------------------------------

// One comparison cell: an (instance, algorithm) pair over `reps` seeds.
// Absent values print as empty fields.
struct CompareRow {
  std::string instance;
  std::string alg;
  std::string status = "ok";  // "ok" or "error: ..."
  std::optional<double> objective;  // mean over seeds
  std::optional<Cost> opt;
  std::optional<double> delta_opt;
  std::optional<double> gap_pct;
  std::optional<double> sd;
  std::optional<double> feasible_first_value;
  std::optional<double> feasible_first_pivots;
  // Means over seeds, like the objective.
  std::optional<double> total_pivots;
  std::optional<double> parallel_rounds;
  std::optional<double> msg_count;
  std::optional<double> chain_len;
  int reps = 1;
  std::optional<double> wallclock_ms;  // host time, not reproducible
};

struct DistTsRow {
  std::string instance;
  Cost objective = 0;
  std::optional<Cost> feasible_first_value;
  std::optional<long> feasible_first_pivots;
  long total_pivots = 0;
  long parallel_rounds = 0;
  long msg_count = 0;
  long chain_len = 0;
};

struct AuctionRow {
  std::string instance;
  Cost opt = 0;
  std::optional<Cost> feasible_first_value;
  std::optional<long> feasible_round;
  long total_rounds = 0;
  long msg_count = 0;
  long chain_len = 0;
};

// Header line plus one line per row. The compare table carries a
// wallclock_ms column only when `wallclock` is set.
std::string emit_stats(const std::vector<CompareRow>& rows, bool wallclock = false);
std::string emit_stats(const std::vector<DistTsRow>& rows);
std::string emit_stats(const std::vector<AuctionRow>& rows);

// Integers print without a fractional part; other values with 4 decimals.
std::string format_number(double value);

}  // namespace cdnroute

#endif  // CDNROUTE_INSTANCE_IO_H_
