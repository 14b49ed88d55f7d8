// cdnroute: generate routing instances, solve them with one algorithm, or
// compare algorithms over instances and kernel seeds.
//
// Exit status: 0 on success, 1 when a run (or any comparison cell) failed,
// 2 on a usage error. Relative --out/--dump paths are taken relative to
// $CDNROUTE_OUT_DIR when it is set.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cdnroute/instance_io.h"
#include "cdnroute/runner.h"

namespace fs = std::filesystem;
using namespace cdnroute;

namespace {

constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path resolve_out(const std::string& path) {
  fs::path p(path);
  if (const char* dir = std::getenv("CDNROUTE_OUT_DIR"); dir && *dir && p.is_relative()) {
    p = fs::path(dir) / p;
  }
  return p;
}

// Writes to the resolved path, or to stdout when `path` is empty.
void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  const fs::path p = resolve_out(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + p.string());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

TpInstance load_tp(const std::string& path) {
  try {
    return to_tp(parse_instance(read_file(path)));
  } catch (const ParseError& e) {
    throw Error(path + ": " + e.what());
  }
}

template <typename F>
auto usage_checked(F&& parse) {
  try {
    return parse();
  } catch (const PreconditionError& e) {
    throw UsageError(e.what());
  }
}

std::string instance_name(const std::string& path) { return fs::path(path).stem().string(); }

std::string generated_name(int n, InstanceClass cls, std::uint64_t seed) {
  return "gen_" + std::to_string(n) + "_" + to_string(cls) + "_" + std::to_string(seed);
}

struct GenArgs {
  int n = 10;
  std::string cls = "medium";
  std::uint64_t seed = 1;
  int avg = 70;
  int contents = 0;
  int replication = 3;
  std::optional<double> tightness;
  bool central = false;
  std::string out;
};

GeneratorParams generator_params(const GenArgs& a) {
  GeneratorParams p = class_params(usage_checked([&] { return parse_instance_class(a.cls); }),
                                   a.n, a.seed);
  p.avg_requests_per_server = a.avg;
  p.content_count = a.contents;
  p.replication_degree = a.replication;
  if (a.tightness) p.bandwidth_tightness = *a.tightness;
  p.central_server = a.central;
  return p;
}

int cmd_gen(const GenArgs& a) {
  const GeneratorParams p = generator_params(a);
  const RrspInstance r = usage_checked([&] { return generate(p); });
  std::ostringstream text;
  text << "# generated: servers " << p.n_servers << ", class " << to_string(p.cls)
       << " (tightness-based approximation), tightness " << format_number(p.bandwidth_tightness)
       << ", avg requests " << p.avg_requests_per_server << ", replication "
       << p.replication_degree << (p.central_server ? ", central server" : "") << ", seed "
       << p.seed << "\n"
       << emit_rrsp(r);
  write_output(a.out, text.str());
  return 0;
}

struct SolveArgs {
  std::string instance;
  std::string alg = "nwc";
  std::string init = "nwc";
  std::uint64_t seed = 0;
  std::string delay = "unit";
  std::string out;
  std::string dump;
  std::string transcript;
  bool wallclock = false;
};

int cmd_solve(const SolveArgs& a) {
  RunConfig config;
  config.alg = usage_checked([&] { return parse_algorithm(a.alg); });
  config.init = usage_checked([&] { return parse_init_method(a.init); });
  config.delay = usage_checked([&] { return netsim::DelayModel::parse(a.delay); });
  config.seed = a.seed;
  const TpInstance inst = load_tp(a.instance);

  const auto t0 = std::chrono::steady_clock::now();
  const RunOutcome run = run_algorithm(inst, config);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  const std::string name = instance_name(a.instance);
  std::string table;
  if (config.alg == Algorithm::kDistTs) {
    table = emit_stats(std::vector<DistTsRow>{dist_ts_row(name, run)});
  } else if (config.alg == Algorithm::kAuction) {
    table = emit_stats(std::vector<AuctionRow>{auction_row(name, run)});
  } else {
    CompareRow row = compare_row(name, config.alg, run);
    if (a.wallclock) row.wallclock_ms = ms;
    table = emit_stats({row}, a.wallclock);
  }
  write_output(a.out, table);
  if (a.wallclock && (config.alg == Algorithm::kDistTs || config.alg == Algorithm::kAuction)) {
    std::cerr << "wallclock_ms (host time, not reproducible): " << format_number(ms) << "\n";
  }
  if (!a.dump.empty()) write_output(a.dump, format_flows(run.solution.x));
  if (!a.transcript.empty()) write_output(a.transcript, run.transcript_csv);
  return 0;
}

struct CompareArgs {
  std::vector<std::string> files;
  std::vector<int> n;
  std::string cls = "medium";
  int instances = 1;
  std::uint64_t gen_seed = 1;
  std::vector<std::string> algs;
  int reps = 1;
  std::uint64_t seed = 1;
  std::string delay = "unit";
  std::string init = "nwc";
  std::string out;
  bool wallclock = false;
};

int cmd_compare(const CompareArgs& a) {
  CompareConfig config;
  for (const std::string& s : a.algs) {
    config.algs.push_back(usage_checked([&] { return parse_algorithm(s); }));
  }
  if (config.algs.empty()) {
    for (Algorithm alg : all_algorithms()) {
      if (alg != Algorithm::kOracle) config.algs.push_back(alg);
    }
  }
  config.reps = a.reps;
  config.seed = a.seed;
  config.delay = usage_checked([&] { return netsim::DelayModel::parse(a.delay); });
  config.init = usage_checked([&] { return parse_init_method(a.init); });
  config.wallclock = a.wallclock;

  std::vector<NamedInstance> instances;
  for (const std::string& f : a.files) instances.push_back({instance_name(f), load_tp(f)});
  const InstanceClass cls = usage_checked([&] { return parse_instance_class(a.cls); });
  for (int n : a.n) {
    for (int k = 0; k < a.instances; ++k) {
      const std::uint64_t seed = a.gen_seed + static_cast<std::uint64_t>(k);
      const RrspInstance r = usage_checked([&] { return generate(class_params(cls, n, seed)); });
      instances.push_back({generated_name(n, cls, seed), reduce_rrsp_to_tp(r)});
    }
  }
  if (instances.empty()) throw UsageError("compare needs an instance file or --n");

  const std::vector<CompareRow> rows = compare(instances, config);
  write_output(a.out, emit_stats(rows, a.wallclock));
  int failed = 0;
  for (const CompareRow& row : rows) {
    if (row.status != "ok") {
      std::cerr << row.instance << " " << row.alg << ": " << row.status << "\n";
      ++failed;
    }
  }
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Request routing as a transportation problem: generate, solve, compare"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate a routing instance");
  gen_cmd->add_option("--n", gen.n, "Number of servers")->capture_default_str();
  gen_cmd->add_option("--class", gen.cls, "medium or hard (tightness-based)")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--avg", gen.avg, "Average requests per server")->capture_default_str();
  gen_cmd->add_option("--contents", gen.contents, "Content count (0: 1.5 x avg)");
  gen_cmd->add_option("--replication", gen.replication, "Holders per content")->capture_default_str();
  gen_cmd->add_option("--tightness", gen.tightness, "Override the class bandwidth ratio");
  gen_cmd->add_flag("--central", gen.central, "Server 1 also holds every content");
  gen_cmd->add_option("--out", gen.out, "Output file (default stdout)");

  SolveArgs solve;
  CLI::App* solve_cmd = app.add_subcommand("solve", "Run one algorithm on an instance file");
  solve_cmd->add_option("instance", solve.instance, "Instance file")->required();
  solve_cmd->add_option("--alg", solve.alg,
                        "nwc, mcm, seq-ts, dist-init, dist-ts, auction or oracle")
      ->capture_default_str();
  solve_cmd->add_option("--init", solve.init, "Simplex start: nwc, mcm or dist-init")
      ->capture_default_str();
  solve_cmd->add_option("--seed", solve.seed, "Kernel seed")->capture_default_str();
  solve_cmd->add_option("--delay", solve.delay, "unit or uniform:LO:HI")->capture_default_str();
  solve_cmd->add_option("--out", solve.out, "Stats output file (default stdout)");
  solve_cmd->add_option("--dump", solve.dump, "Write the flow matrix to this file");
  solve_cmd->add_option("--transcript", solve.transcript, "Write the delivery log to this file");
  solve_cmd->add_flag("--wallclock", solve.wallclock, "Also report host runtime");

  CompareArgs cmp;
  CLI::App* cmp_cmd = app.add_subcommand("compare", "Compare algorithms over instances and seeds");
  cmp_cmd->add_option("files", cmp.files, "Instance files");
  cmp_cmd->add_option("--n", cmp.n, "Generate instances with these server counts")
      ->delimiter(',');
  cmp_cmd->add_option("--class", cmp.cls, "Class of generated instances")->capture_default_str();
  cmp_cmd->add_option("--instances", cmp.instances, "Generated instances per server count")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--gen-seed", cmp.gen_seed, "First generator seed")->capture_default_str();
  cmp_cmd->add_option("--alg", cmp.algs, "Algorithms (default: all but oracle)")
      ->delimiter(',');
  cmp_cmd->add_option("--reps", cmp.reps, "Kernel seeds per distributed algorithm")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--seed", cmp.seed, "First kernel seed")->capture_default_str();
  cmp_cmd->add_option("--delay", cmp.delay, "unit or uniform:LO:HI")->capture_default_str();
  cmp_cmd->add_option("--init", cmp.init, "Simplex start: nwc, mcm or dist-init")
      ->capture_default_str();
  cmp_cmd->add_option("--out", cmp.out, "Output file (default stdout)");
  cmp_cmd->add_flag("--wallclock", cmp.wallclock, "Add host runtime (not reproducible)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*solve_cmd) return cmd_solve(solve);
    return cmd_compare(cmp);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
