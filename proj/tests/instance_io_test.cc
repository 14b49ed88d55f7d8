#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "cdnroute/dist_init.h"
#include "cdnroute/instance_io.h"
#include "oracles.h"

using namespace cdnroute;

namespace {

constexpr const char* kMinimal =
    "SERVERS\n1\nCONTENTS\n1\nHOLDINGS\n1 1\nBANDWIDTH\n1 4\nCOSTS\n0\n"
    "REQUESTS\n1 1 3\n";

int error_line(const std::string& text) {
  try {
    parse_rrsp(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

std::string error_text(const std::string& text) {
  try {
    parse_rrsp(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

Flow total_demand(const RrspInstance& r) {
  Flow d = 0;
  for (const Request& q : r.requests) d += q.demand;
  return d;
}

}  // namespace

TEST_CASE("minimal file") {
  const RrspInstance r = parse_rrsp(kMinimal);
  CHECK(r.server_count == 1);
  CHECK(r.content_count == 1);
  CHECK(r.holdings == std::vector<std::vector<int>>{{0}});
  CHECK(r.bandwidth == std::vector<Flow>{4});
  REQUIRE(r.requests.size() == 1);
  CHECK(r.requests[0].demand == 3);
}

TEST_CASE("comments and blank lines are ignored") {
  const RrspInstance r = parse_rrsp(
      "# header\nSERVERS   # count\n1\n\nCONTENTS\n1\nHOLDINGS\n1 1\n"
      "BANDWIDTH\n1 4\nCOSTS\n0\nREQUESTS\n1 1 3  # last\n");
  CHECK(r == parse_rrsp(kMinimal));
}

TEST_CASE("documented example") {
  const RrspInstance r = parse_rrsp(
      "SERVERS\n3\nCONTENTS\n2\nHOLDINGS\n1 1\n3 1 2\nBANDWIDTH\n1 10\n2 5\n3 8\n"
      "COSTS\n0 4 9\n4 0 2\n9 2 0\nREQUESTS\n2 1 6\n2 2 3\n");
  CHECK(r.holdings == std::vector<std::vector<int>>{{0}, {}, {0, 1}});
  CHECK(r.server_cost(0, 2) == 9);
  CHECK(r.requests[1].content == 1);
}

TEST_CASE("semantic errors") {
  const std::string no_holder =
      "SERVERS\n2\nCONTENTS\n2\nHOLDINGS\n1 1\nBANDWIDTH\n1 4\n2 4\nCOSTS\n0 1\n1 0\n"
      "REQUESTS\n2 2 3\n";
  CHECK(error_text(no_holder).find("content has no holder") != std::string::npos);
  CHECK(error_line(no_holder) == 14);

  CHECK(error_text("SERVERS\n1\nCONTENTS\n1\nHOLDINGS\n1 1\nBANDWIDTH\n1 4\nCOSTS\n0\n"
                   "REQUESTS\n1 2 3\n")
            .find("unknown content id 2") != std::string::npos);
  CHECK(error_text("SERVERS\n1\nCONTENTS\n1\nHOLDINGS\n1 1\nBANDWIDTH\n1 4\nCOSTS\n0\n"
                   "REQUESTS\n1 1 -3\n")
            .find("negative demand") != std::string::npos);
  CHECK(error_text("SERVERS\n1\nCONTENTS\n1\nHOLDINGS\n1 1\nBANDWIDTH\n1 4\nCOSTS\n0\n"
                   "REQUESTS\n1 1 3\n1 1 2\n")
            .find("duplicate request") != std::string::npos);
}

TEST_CASE("syntax errors carry line and column") {
  try {
    parse_rrsp("SERVERS\n1\nCONTENTS\n1\nHOLDINGS\n1 1\nBANDWIDTH\n1 x4\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 8);
    CHECK(e.column() == 3);
  }
  CHECK(error_line("SERVERS\n1\nHOLDINGS\n") == 3);
  CHECK(error_line("SERVERS\n1\nCONTENTS\n1\n") == 5);
  CHECK(error_text(std::string(kMinimal) + "EXTRA\n").find("unexpected") != std::string::npos);
  CHECK(error_text("SERVERS\n2\nCONTENTS\n1\nHOLDINGS\n1 1\nBANDWIDTH\n1 4\n2 4\n"
                   "COSTS\n0 1\n1 5\nREQUESTS\n")
            .find("diagonal") != std::string::npos);
  CHECK(error_line("SERVERS\n2\nCONTENTS\n1\nHOLDINGS\n1 1\nBANDWIDTH\n1 4\n") == 8);
}

TEST_CASE("transportation files") {
  const TpInstance t = parse_tp(
      "TRANSPORTATION\nSOURCES\n2\nDESTINATIONS\n2\nSUPPLY\n3 4\nDEMAND\n2 5\n"
      "COSTS\n4 1\n2 3\n");
  CHECK(t.supply == std::vector<Flow>{3, 4});
  CHECK(t.cost == CostMatrix{{4, 1}, {2, 3}});
  CHECK(parse_tp(emit_tp(testing::t4())).cost == testing::t4().cost);
  CHECK(std::holds_alternative<TpInstance>(parse_instance(emit_tp(testing::t1()))));
  CHECK(std::holds_alternative<RrspInstance>(parse_instance(kMinimal)));
  CHECK_THROWS_AS(emit_tp(reduce_rrsp_to_tp(parse_rrsp(kMinimal))), PreconditionError);
}

TEST_CASE("round trip over random and generated instances") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    const RrspInstance r = testing::random_rrsp(rng);
    const std::string text = emit_rrsp(r);
    CHECK(parse_rrsp(text) == r);
    CHECK(emit_rrsp(parse_rrsp(text)) == text);
  }
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GeneratorParams p = class_params(InstanceClass::kMedium, 6, seed);
    p.avg_requests_per_server = 12;
    p.central_server = seed % 2 == 0;
    const RrspInstance r = generate(p);
    CHECK(parse_rrsp(emit_rrsp(r)) == r);
  }
  for (int trial = 0; trial < 100; ++trial) {
    const TpInstance t = testing::random_tp(rng);
    const TpInstance back = parse_tp(emit_tp(t));
    CHECK(back.supply == t.supply);
    CHECK(back.demand == t.demand);
    CHECK(back.cost == t.cost);
  }
}

TEST_CASE("the generator is deterministic") {
  const GeneratorParams p = class_params(InstanceClass::kMedium, 10, 1);
  CHECK(emit_rrsp(generate(p)) == emit_rrsp(generate(p)));
  GeneratorParams other = p;
  other.seed = 2;
  CHECK(emit_rrsp(generate(other)) != emit_rrsp(generate(p)));
}

TEST_CASE("generated instances match the benchmark statistics") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const RrspInstance r = generate(class_params(InstanceClass::kMedium, 10, seed));
    CHECK(r.requests.size() >= 630);
    CHECK(r.requests.size() <= 770);
    CHECK(r.content_count == 105);
    for (int c = 0; c < r.content_count; ++c) {
      int holders = 0;
      for (int s = 0; s < r.server_count; ++s) holders += r.holds(s, c);
      CHECK(holders == 3);
    }
    for (const Request& q : r.requests) {
      CHECK(q.demand >= 1);
      CHECK(q.demand <= 10);
    }
    for (int i = 0; i < 10; ++i) {
      for (int k = 0; k < 10; ++k) {
        CHECK(r.server_cost(i, k) == r.server_cost(k, i));
        if (i != k) CHECK((r.server_cost(i, k) >= 1 && r.server_cost(i, k) <= 100));
      }
    }
    Flow b = 0;
    for (Flow x : r.bandwidth) b += x;
    const Flow d = total_demand(r);
    CHECK(b * 10 >= d * 18);
    CHECK(b * 10 < d * 18 + 10);
  }

  GeneratorParams central = class_params(InstanceClass::kMedium, 4, 3);
  central.avg_requests_per_server = 10;
  central.central_server = true;
  const RrspInstance r = generate(central);
  CHECK(static_cast<int>(r.holdings[0].size()) == r.content_count);
}

TEST_CASE("hard instances push DistInit onto artificial arcs") {
  int with_artificial = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const RrspInstance r = generate(class_params(InstanceClass::kHard, 10, seed));
    Flow b = 0;
    for (Flow x : r.bandwidth) b += x;
    CHECK(b == total_demand(r));
    const DistInitResult res = dist_init(reduce_rrsp_to_tp(r));
    with_artificial += res.solution.uses_artificial;
  }
  CHECK(with_artificial > 0);
}

TEST_CASE("invalid generator parameters") {
  GeneratorParams p;
  p.bandwidth_tightness = 0.9;
  CHECK_THROWS_AS(generate(p), PreconditionError);
  p = GeneratorParams{};
  p.replication_degree = 0;
  CHECK_THROWS_AS(generate(p), PreconditionError);
  p = GeneratorParams{};
  p.n_servers = 0;
  CHECK_THROWS_AS(generate(p), PreconditionError);
  CHECK(parse_instance_class("hard") == InstanceClass::kHard);
  CHECK_THROWS_AS(parse_instance_class("easy"), PreconditionError);
}

TEST_CASE("stats tables") {
  CHECK(emit_stats(std::vector<DistTsRow>{}) ==
        "instance,objective,feasible_first_value,feasible_first_pivots,total_pivots,"
        "parallel_rounds,msg_count,chain_len\n");
  CHECK(emit_stats(std::vector<AuctionRow>{}) ==
        "instance,opt,feasible_first_value,feasible_round,total_rounds,msg_count,chain_len\n");

  const std::string one = emit_stats(std::vector<DistTsRow>{{"t4", 13, 13, 0, 1, 2, 12, 5}});
  const std::string line = one.substr(one.find('\n') + 1);
  CHECK(line == "t4,13,13,0,1,2,12,5\n");
  CHECK(std::count(line.begin(), line.end(), ',') == 7);

  CHECK(format_number(12.0) == "12");
  CHECK(format_number(-3.0) == "-3");
  CHECK(format_number(2.5) == "2.5000");
  CHECK(format_number(1.0 / 3.0) == "0.3333");
}

TEST_CASE("comparison table golden output") {
  CompareRow a;
  a.instance = "gen_10_medium_1";
  a.alg = "dist-init";
  a.objective = 1040.5;
  a.opt = 1000;
  a.delta_opt = 40.5;
  a.gap_pct = 4.05;
  a.sd = 3.25;
  a.msg_count = 96;
  a.chain_len = 4;
  a.reps = 10;
  CompareRow b;
  b.instance = "a,b";
  b.alg = "oracle";
  b.status = "error: instance too large";
  CompareRow c;
  c.instance = "t4";
  c.alg = "seq-ts";
  c.objective = 13;
  c.opt = 13;
  c.delta_opt = 0;
  c.gap_pct = 0;
  c.feasible_first_value = 15;
  c.feasible_first_pivots = 0;
  c.total_pivots = 1;
  c.wallclock_ms = 0.125;
  const std::string expected =
      "instance,alg,status,objective,opt,delta_opt,gap_pct,sd,feasible_first_value,"
      "feasible_first_pivots,total_pivots,parallel_rounds,msg_count,chain_len,reps\n"
      "gen_10_medium_1,dist-init,ok,1040.5000,1000,40.5000,4.0500,3.2500,,,,,96,4,10\n"
      "\"a,b\",oracle,error: instance too large,,,,,,,,,,,,1\n"
      "t4,seq-ts,ok,13,13,0,0,,15,0,1,,,,1\n";
  CHECK(emit_stats({a, b, c}) == expected);
  const std::string timed = emit_stats({c}, true);
  CHECK(timed.find(",reps,wallclock_ms\n") != std::string::npos);
  CHECK(timed.find(",1,0.1250\n") != std::string::npos);
  CHECK(emit_stats(std::vector<CompareRow>{}).find('\n') == timed.find(",wallclock_ms"));
}
