#include "cdnroute/runner.h"

#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>

#include "cdnroute/auction_tp.h"
#include "cdnroute/dist_init.h"
#include "cdnroute/dist_ts.h"
#include "cdnroute/seq_solvers.h"

namespace cdnroute {

namespace {

struct AlgName {
  Algorithm alg;
  const char* name;
};

constexpr AlgName kAlgNames[] = {
    {Algorithm::kNwc, "nwc"},           {Algorithm::kMcm, "mcm"},
    {Algorithm::kSeqTs, "seq-ts"},      {Algorithm::kDistInit, "dist-init"},
    {Algorithm::kDistTs, "dist-ts"},    {Algorithm::kAuction, "auction"},
    {Algorithm::kOracle, "oracle"},
};

bool is_distributed(Algorithm alg) {
  return alg == Algorithm::kDistInit || alg == Algorithm::kDistTs ||
         alg == Algorithm::kAuction;
}

netsim::KernelOptions kernel_of(const RunConfig& config) {
  netsim::KernelOptions kernel;
  kernel.delay = config.delay;
  kernel.seed = config.seed;
  return kernel;
}

BasisState initial_basis(const TpInstance& inst, const RunConfig& config) {
  switch (config.init) {
    case InitMethod::kMcm:
      return minimum_cost_method(inst);
    case InitMethod::kDistInit: {
      DistInitOptions options;
      options.kernel = kernel_of(config);
      return basis_completion(inst, dist_init(inst, options).solution.x);
    }
    case InitMethod::kNwc:
      break;
  }
  return northwest_corner(inst);
}

}  // namespace

std::string to_string(Algorithm alg) {
  for (const AlgName& a : kAlgNames) {
    if (a.alg == alg) return a.name;
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& text) {
  for (const AlgName& a : kAlgNames) {
    if (text == a.name) return a.alg;
  }
  throw PreconditionError("unknown algorithm '" + text + "'");
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> algs = [] {
    std::vector<Algorithm> out;
    for (const AlgName& a : kAlgNames) out.push_back(a.alg);
    return out;
  }();
  return algs;
}

std::string to_string(InitMethod init) {
  switch (init) {
    case InitMethod::kMcm: return "mcm";
    case InitMethod::kDistInit: return "dist-init";
    case InitMethod::kNwc: break;
  }
  return "nwc";
}

InitMethod parse_init_method(const std::string& text) {
  if (text == "nwc") return InitMethod::kNwc;
  if (text == "mcm") return InitMethod::kMcm;
  if (text == "dist-init") return InitMethod::kDistInit;
  throw PreconditionError("unknown init method '" + text + "' (nwc, mcm or dist-init)");
}

RunOutcome run_algorithm(const TpInstance& inst, const RunConfig& config) {
  RunOutcome out;
  switch (config.alg) {
    case Algorithm::kNwc:
    case Algorithm::kMcm: {
      const BasisState b = config.alg == Algorithm::kNwc ? northwest_corner(inst)
                                                          : minimum_cost_method(inst);
      out.solution = make_solution(inst, b.x);
      break;
    }
    case Algorithm::kSeqTs: {
      const SimplexResult r = transportation_simplex(inst, initial_basis(inst, config));
      out.solution = r.solution;
      out.total_pivots = r.pivots;
      out.feasible_first_pivots = r.feasible_first_pivots;
      out.feasible_first_value = r.feasible_first_value;
      break;
    }
    case Algorithm::kDistInit: {
      DistInitOptions options;
      options.kernel = kernel_of(config);
      const DistInitResult r = dist_init(inst, options);
      out.solution = r.solution;
      out.msg_count = r.transcript.msg_count;
      out.chain_len = r.transcript.chain_len;
      out.transcript_csv = r.transcript.to_csv();
      break;
    }
    case Algorithm::kDistTs: {
      DistTsOptions options;
      options.kernel = kernel_of(config);
      const DistTsResult r = dist_ts(inst, initial_basis(inst, config), options);
      out.solution = r.solution;
      out.total_pivots = r.stats.pivots;
      out.parallel_rounds = r.stats.parallel_rounds;
      out.msg_count = r.stats.msg_count;
      out.chain_len = r.stats.chain_len;
      out.feasible_first_pivots = r.stats.feasible_first_pivots;
      out.feasible_first_value = r.stats.feasible_first_value;
      out.transcript_csv = r.transcript.to_csv();
      break;
    }
    case Algorithm::kAuction: {
      AuctionOptions options;
      options.kernel = kernel_of(config);
      const AuctionResult r = auction_tp(inst, options);
      out.solution = r.solution;
      out.parallel_rounds = r.stats.rounds;
      out.msg_count = r.stats.msg_count;
      out.chain_len = r.stats.chain_len;
      if (r.stats.feasible_round) out.feasible_round = *r.stats.feasible_round;
      out.feasible_first_value = r.stats.feasible_first_value;
      out.transcript_csv = r.transcript.to_csv();
      break;
    }
    case Algorithm::kOracle: {
      const Cost best = brute_force_optimum(inst);
      // The enumeration yields only the value; the simplex recovers a flow.
      out.solution = transportation_simplex(inst, minimum_cost_method(inst)).solution;
      if (out.solution.objective != best) {
        throw Error("simplex and enumeration disagree on the optimum");
      }
      break;
    }
  }
  return out;
}

Cost reference_optimum(const TpInstance& inst) {
  return transportation_simplex(inst, minimum_cost_method(inst)).solution.objective;
}

DistTsRow dist_ts_row(const std::string& name, const RunOutcome& run) {
  DistTsRow row;
  row.instance = name;
  row.objective = run.solution.objective;
  row.feasible_first_value = run.feasible_first_value;
  row.feasible_first_pivots = run.feasible_first_pivots;
  row.total_pivots = run.total_pivots.value_or(0);
  row.parallel_rounds = run.parallel_rounds.value_or(0);
  row.msg_count = run.msg_count.value_or(0);
  row.chain_len = run.chain_len.value_or(0);
  return row;
}

AuctionRow auction_row(const std::string& name, const RunOutcome& run) {
  AuctionRow row;
  row.instance = name;
  row.opt = run.solution.objective;
  row.feasible_first_value = run.feasible_first_value;
  row.feasible_round = run.feasible_round;
  row.total_rounds = run.parallel_rounds.value_or(0);
  row.msg_count = run.msg_count.value_or(0);
  row.chain_len = run.chain_len.value_or(0);
  return row;
}

namespace {

std::optional<double> as_double(const std::optional<long>& v) {
  if (!v) return std::nullopt;
  return static_cast<double>(*v);
}

// Running means over the seeds of one cell. A field stays set only when
// every run reported it.
struct Accumulator {
  std::vector<double> objectives;
  std::optional<double> fields[6];
  bool seen[6] = {true, true, true, true, true, true};

  void add(const RunOutcome& r) {
    objectives.push_back(static_cast<double>(r.solution.objective));
    const std::optional<double> values[6] = {
        r.feasible_first_value ? std::optional<double>(static_cast<double>(*r.feasible_first_value))
                               : std::nullopt,
        as_double(r.feasible_first_pivots), as_double(r.total_pivots),
        as_double(r.parallel_rounds),      as_double(r.msg_count),
        as_double(r.chain_len)};
    for (int k = 0; k < 6; ++k) {
      if (!values[k]) {
        seen[k] = false;
      } else {
        fields[k] = fields[k].value_or(0.0) + *values[k];
      }
    }
  }

  std::optional<double> mean(int k) const {
    if (!seen[k] || !fields[k]) return std::nullopt;
    return *fields[k] / static_cast<double>(objectives.size());
  }
};

}  // namespace

CompareRow compare_row(const std::string& name, Algorithm alg, const RunOutcome& run) {
  CompareRow row;
  row.instance = name;
  row.alg = to_string(alg);
  row.objective = static_cast<double>(run.solution.objective);
  if (run.feasible_first_value) {
    row.feasible_first_value = static_cast<double>(*run.feasible_first_value);
  }
  row.feasible_first_pivots = as_double(run.feasible_first_pivots);
  row.total_pivots = as_double(run.total_pivots);
  row.parallel_rounds = as_double(run.parallel_rounds);
  row.msg_count = as_double(run.msg_count);
  row.chain_len = as_double(run.chain_len);
  return row;
}

std::vector<CompareRow> compare(const std::vector<NamedInstance>& instances,
                                const CompareConfig& config) {
  if (config.reps < 1) throw PreconditionError("reps must be at least 1");
  const int n_inst = static_cast<int>(instances.size());
  const int n_alg = static_cast<int>(config.algs.size());

  std::vector<std::optional<Cost>> opt(n_inst);
#ifdef CDNROUTE_HAS_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int k = 0; k < n_inst; ++k) {
    try {
      opt[k] = reference_optimum(instances[k].tp);
    } catch (const std::exception&) {
      // Left empty; the cells report their own errors.
    }
  }

  std::vector<CompareRow> rows(static_cast<std::size_t>(n_inst) * n_alg);
#ifdef CDNROUTE_HAS_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int cell = 0; cell < n_inst * n_alg; ++cell) {
    const NamedInstance& inst = instances[cell / n_alg];
    const Algorithm alg = config.algs[cell % n_alg];
    CompareRow& row = rows[cell];
    row.instance = inst.name;
    row.alg = to_string(alg);
    row.opt = opt[cell / n_alg];
    const int reps = is_distributed(alg) ? config.reps : 1;
    row.reps = reps;
    try {
      Accumulator acc;
      double elapsed_ms = 0;
      for (int r = 0; r < reps; ++r) {
        RunConfig rc;
        rc.alg = alg;
        rc.init = config.init;
        rc.delay = config.delay;
        rc.seed = config.seed + static_cast<std::uint64_t>(r);
        const auto t0 = std::chrono::steady_clock::now();
        acc.add(run_algorithm(inst.tp, rc));
        elapsed_ms += std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
      }
      double sum = 0;
      for (double v : acc.objectives) sum += v;
      const double mean = sum / reps;
      row.objective = mean;
      if (reps > 1) {
        double sq = 0;
        for (double v : acc.objectives) sq += (v - mean) * (v - mean);
        row.sd = std::sqrt(sq / (reps - 1));
      }
      if (row.opt) {
        row.delta_opt = mean - static_cast<double>(*row.opt);
        if (*row.opt != 0) row.gap_pct = 100.0 * *row.delta_opt / static_cast<double>(*row.opt);
      }
      row.feasible_first_value = acc.mean(0);
      row.feasible_first_pivots = acc.mean(1);
      row.total_pivots = acc.mean(2);
      row.parallel_rounds = acc.mean(3);
      row.msg_count = acc.mean(4);
      row.chain_len = acc.mean(5);
      if (config.wallclock) row.wallclock_ms = elapsed_ms / reps;
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
  }
  return rows;
}

std::string format_flows(const FlowMatrix& x) {
  std::ostringstream out;
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) {
      if (j) out << ' ';
      out << x(i, j);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cdnroute
