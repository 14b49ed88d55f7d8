#include "cdnroute/instance_io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace cdnroute {

ParseError::ParseError(int line, int column, const std::string& what)
    : Error("line " + std::to_string(line) + ", column " +
            std::to_string(column) + ": " + what),
      line_(line), column_(column) {}

namespace {

struct Token {
  std::string_view text;
  int column = 1;
};

struct Line {
  int number = 0;
  std::vector<Token> tokens;
};

std::vector<Line> scan(std::string_view text) {
  std::vector<Line> lines;
  int number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    ++number;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) {
      raw = raw.substr(0, hash);
    }
    Line line{number, {}};
    std::size_t k = 0;
    while (k < raw.size()) {
      while (k < raw.size() && std::isspace(static_cast<unsigned char>(raw[k]))) ++k;
      const std::size_t from = k;
      while (k < raw.size() && !std::isspace(static_cast<unsigned char>(raw[k]))) ++k;
      if (k > from) {
        line.tokens.push_back({raw.substr(from, k - from), static_cast<int>(from) + 1});
      }
    }
    if (!line.tokens.empty()) lines.push_back(std::move(line));
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

bool is_header(const Line& line) {
  if (line.tokens.size() != 1) return false;
  const std::string_view t = line.tokens[0].text;
  return std::all_of(t.begin(), t.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

class Reader {
 public:
  explicit Reader(std::string_view text) : lines_(scan(text)) {}

  // Returns the body lines of the next section, which must be `name`.
  std::vector<Line> section(const char* name) {
    if (pos_ >= lines_.size()) {
      throw ParseError(last_line() + 1, 1, std::string("expected section ") + name);
    }
    const Line& head = lines_[pos_];
    if (!is_header(head) || head.tokens[0].text != name) {
      throw ParseError(head.number, head.tokens[0].column,
                       std::string("expected section ") + name);
    }
    const int header_line = head.number;
    ++pos_;
    std::vector<Line> body;
    while (pos_ < lines_.size() && !is_header(lines_[pos_])) {
      body.push_back(lines_[pos_++]);
    }
    current_header_ = header_line;
    return body;
  }

  void finish() const {
    if (pos_ < lines_.size()) {
      const Line& extra = lines_[pos_];
      throw ParseError(extra.number, extra.tokens[0].column, "unexpected content after the last section");
    }
  }

  // The single integer of a count section.
  std::int64_t count(const std::vector<Line>& body, const char* name, std::int64_t min) {
    if (body.size() != 1 || body[0].tokens.size() != 1) {
      const int line = body.empty() ? current_header_ + 1 : body[0].number;
      throw ParseError(line, 1, std::string(name) + " takes a single integer");
    }
    const std::int64_t value = integer(body[0], body[0].tokens[0]);
    if (value < min) {
      throw ParseError(body[0].number, body[0].tokens[0].column,
                       std::string(name) + " must be at least " + std::to_string(min));
    }
    return value;
  }

  std::string_view first_token() const {
    return lines_.empty() ? std::string_view{} : lines_[0].tokens[0].text;
  }

  static std::int64_t integer(const Line& line, const Token& tok) {
    std::int64_t value = 0;
    const char* first = tok.text.data();
    const char* last = first + tok.text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
      throw ParseError(line.number, tok.column,
                       "expected an integer, got '" + std::string(tok.text) + "'");
    }
    return value;
  }

  // A 1-based id in [1, limit], returned 0-based.
  static int id(const Line& line, const Token& tok, std::int64_t limit, const char* what) {
    const std::int64_t value = integer(line, tok);
    if (value < 1 || value > limit) {
      throw ParseError(line.number, tok.column,
                       std::string("unknown ") + what + " id " + std::to_string(value));
    }
    return static_cast<int>(value - 1);
  }

  static std::int64_t non_negative(const Line& line, const Token& tok, const char* what) {
    const std::int64_t value = integer(line, tok);
    if (value < 0) {
      throw ParseError(line.number, tok.column, std::string("negative ") + what);
    }
    return value;
  }

  static void expect_width(const Line& line, std::size_t width, const char* what) {
    if (line.tokens.size() != width) {
      const Token& at = line.tokens.size() > width ? line.tokens[width] : line.tokens.back();
      throw ParseError(line.number, at.column,
                       std::string(what) + " lines take " + std::to_string(width) + " values");
    }
  }

 private:
  int last_line() const { return lines_.empty() ? 0 : lines_.back().number; }

  std::vector<Line> lines_;
  std::size_t pos_ = 0;
  int current_header_ = 0;
};

CostMatrix parse_matrix(const std::vector<Line>& body, int rows, int cols,
                        int header_line, bool non_negative) {
  if (static_cast<int>(body.size()) != rows) {
    const int line = body.size() > static_cast<std::size_t>(rows)
                         ? body[rows].number
                         : (body.empty() ? header_line + 1 : body.back().number + 1);
    throw ParseError(line, 1, "COSTS needs " + std::to_string(rows) + " rows");
  }
  CostMatrix cost(rows, cols);
  for (int i = 0; i < rows; ++i) {
    Reader::expect_width(body[i], cols, "COSTS");
    for (int j = 0; j < cols; ++j) {
      cost(i, j) = non_negative ? Reader::non_negative(body[i], body[i].tokens[j], "cost")
                                : Reader::integer(body[i], body[i].tokens[j]);
    }
  }
  return cost;
}

std::vector<Flow> parse_vector(const std::vector<Line>& body, int size,
                               const char* name, int header_line) {
  if (body.size() != 1) {
    const int line = body.empty() ? header_line + 1 : body[1].number;
    throw ParseError(line, 1, std::string(name) + " takes one line");
  }
  Reader::expect_width(body[0], size, name);
  std::vector<Flow> out(size);
  for (int k = 0; k < size; ++k) {
    out[k] = Reader::non_negative(body[0], body[0].tokens[k], "amount");
  }
  return out;
}

void append_row(std::ostringstream& out, const std::vector<std::int64_t>& values) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out << ' ';
    out << values[k];
  }
  out << '\n';
}

}  // namespace

RrspInstance parse_rrsp(std::string_view text) {
  Reader reader(text);
  RrspInstance r;
  r.server_count = static_cast<int>(reader.count(reader.section("SERVERS"), "SERVERS", 1));
  r.content_count = static_cast<int>(reader.count(reader.section("CONTENTS"), "CONTENTS", 0));
  const int n = r.server_count;
  r.holdings.assign(n, {});

  std::vector<std::uint8_t> seen(n, 0);
  for (const Line& line : reader.section("HOLDINGS")) {
    const int s = Reader::id(line, line.tokens[0], n, "server");
    if (seen[s]) throw ParseError(line.number, line.tokens[0].column, "server listed twice in HOLDINGS");
    seen[s] = 1;
    std::set<int> held;
    for (std::size_t k = 1; k < line.tokens.size(); ++k) {
      const int c = Reader::id(line, line.tokens[k], r.content_count, "content");
      if (!held.insert(c).second) {
        throw ParseError(line.number, line.tokens[k].column, "content listed twice");
      }
    }
    r.holdings[s].assign(held.begin(), held.end());
  }

  r.bandwidth.assign(n, 0);
  seen.assign(n, 0);
  std::vector<Line> bandwidth = reader.section("BANDWIDTH");
  for (const Line& line : bandwidth) {
    Reader::expect_width(line, 2, "BANDWIDTH");
    const int s = Reader::id(line, line.tokens[0], n, "server");
    if (seen[s]) throw ParseError(line.number, line.tokens[0].column, "server listed twice in BANDWIDTH");
    seen[s] = 1;
    r.bandwidth[s] = Reader::non_negative(line, line.tokens[1], "bandwidth");
  }
  for (int s = 0; s < n; ++s) {
    if (!seen[s]) {
      const int line = bandwidth.empty() ? 1 : bandwidth.back().number;
      throw ParseError(line, 1, "server " + std::to_string(s + 1) + " has no bandwidth");
    }
  }

  std::vector<Line> costs = reader.section("COSTS");
  const int cost_header = costs.empty() ? 0 : costs[0].number - 1;
  r.server_cost = parse_matrix(costs, n, n, cost_header, true);
  for (int i = 0; i < n; ++i) {
    if (r.server_cost(i, i) != 0) {
      throw ParseError(costs[i].number, costs[i].tokens[i].column,
                       "server cost diagonal must be zero");
    }
  }

  std::set<std::pair<int, int>> keys;
  for (const Line& line : reader.section("REQUESTS")) {
    Reader::expect_width(line, 3, "REQUESTS");
    Request q;
    q.home = Reader::id(line, line.tokens[0], n, "server");
    q.content = Reader::id(line, line.tokens[1], r.content_count, "content");
    q.demand = Reader::non_negative(line, line.tokens[2], "demand");
    if (!keys.insert({q.home, q.content}).second) {
      throw ParseError(line.number, line.tokens[0].column,
                       "duplicate request for (server, content)");
    }
    bool held = false;
    for (int s = 0; s < n && !held; ++s) held = r.holds(s, q.content);
    if (!held) {
      throw ParseError(line.number, line.tokens[1].column, "content has no holder");
    }
    r.requests.push_back(q);
  }
  reader.finish();
  validate(r);
  return r;
}

std::string emit_rrsp(const RrspInstance& r) {
  validate(r);
  std::ostringstream out;
  out << "SERVERS\n" << r.server_count << "\nCONTENTS\n" << r.content_count << "\nHOLDINGS\n";
  for (int s = 0; s < r.server_count; ++s) {
    std::vector<std::int64_t> row{s + 1};
    for (int c : r.holdings[s]) row.push_back(c + 1);
    append_row(out, row);
  }
  out << "BANDWIDTH\n";
  for (int s = 0; s < r.server_count; ++s) append_row(out, {s + 1, r.bandwidth[s]});
  out << "COSTS\n";
  for (int i = 0; i < r.server_count; ++i) {
    std::vector<std::int64_t> row;
    for (int k = 0; k < r.server_count; ++k) row.push_back(r.server_cost(i, k));
    append_row(out, row);
  }
  out << "REQUESTS\n";
  for (const Request& q : r.requests) append_row(out, {q.home + 1, q.content + 1, q.demand});
  return out.str();
}

TpInstance parse_tp(std::string_view text) {
  Reader reader(text);
  reader.section("TRANSPORTATION");
  const int n = static_cast<int>(reader.count(reader.section("SOURCES"), "SOURCES", 1));
  const int m = static_cast<int>(reader.count(reader.section("DESTINATIONS"), "DESTINATIONS", 1));
  std::vector<Line> body = reader.section("SUPPLY");
  std::vector<Flow> supply = parse_vector(body, n, "SUPPLY", 0);
  body = reader.section("DEMAND");
  std::vector<Flow> demand = parse_vector(body, m, "DEMAND", 0);
  body = reader.section("COSTS");
  CostMatrix cost = parse_matrix(body, n, m, 0, false);
  reader.finish();
  return make_tp(std::move(supply), std::move(demand), std::move(cost));
}

std::string emit_tp(const TpInstance& inst) {
  if (inst.artificial_dest || !inst.artificial_mask.empty() || !inst.home.empty() ||
      !inst.proximity.empty()) {
    throw PreconditionError("only plain transportation instances can be written");
  }
  std::ostringstream out;
  out << "TRANSPORTATION\nSOURCES\n" << inst.n() << "\nDESTINATIONS\n" << inst.m()
      << "\nSUPPLY\n";
  append_row(out, std::vector<std::int64_t>(inst.supply.begin(), inst.supply.end()));
  out << "DEMAND\n";
  append_row(out, std::vector<std::int64_t>(inst.demand.begin(), inst.demand.end()));
  out << "COSTS\n";
  for (int i = 0; i < inst.n(); ++i) {
    std::vector<std::int64_t> row;
    for (int j = 0; j < inst.m(); ++j) row.push_back(inst.cost(i, j));
    append_row(out, row);
  }
  return out.str();
}

AnyInstance parse_instance(std::string_view text) {
  Reader probe(text);
  if (probe.first_token() == "TRANSPORTATION") return parse_tp(text);
  return parse_rrsp(text);
}

TpInstance to_tp(const AnyInstance& instance) {
  if (const auto* r = std::get_if<RrspInstance>(&instance)) return reduce_rrsp_to_tp(*r);
  return std::get<TpInstance>(instance);
}

std::string to_string(InstanceClass cls) {
  return cls == InstanceClass::kHard ? "hard" : "medium";
}

InstanceClass parse_instance_class(const std::string& text) {
  if (text == "medium") return InstanceClass::kMedium;
  if (text == "hard") return InstanceClass::kHard;
  throw PreconditionError("unknown instance class '" + text + "' (medium or hard)");
}

GeneratorParams class_params(InstanceClass cls, int n_servers, std::uint64_t seed) {
  GeneratorParams p;
  p.n_servers = n_servers;
  p.cls = cls;
  p.seed = seed;
  p.bandwidth_tightness = cls == InstanceClass::kHard ? 1.0 : 1.8;
  return p;
}

RrspInstance generate(const GeneratorParams& params) {
  const int n = params.n_servers;
  const int avg = params.avg_requests_per_server;
  if (n < 1) throw PreconditionError("the generator needs at least one server");
  if (avg < 1) throw PreconditionError("avg_requests_per_server must be positive");
  if (params.replication_degree < 1) throw PreconditionError("replication_degree must be positive");
  if (!(params.bandwidth_tightness >= 1.0)) {
    throw PreconditionError("bandwidth_tightness below 1 leaves demand unserved");
  }
  const int contents = params.content_count > 0 ? params.content_count : (3 * avg + 1) / 2;

  std::mt19937_64 rng(params.seed);
  RrspInstance r;
  r.server_count = n;
  r.content_count = contents;

  r.holdings.assign(n, {});
  std::vector<int> servers(n);
  std::iota(servers.begin(), servers.end(), 0);
  const int degree = std::min(params.replication_degree, n);
  for (int c = 0; c < contents; ++c) {
    std::vector<int> holders;
    std::sample(servers.begin(), servers.end(), std::back_inserter(holders), degree, rng);
    for (int s : holders) r.holdings[s].push_back(c);
  }
  if (params.central_server) {
    r.holdings[0].resize(contents);
    std::iota(r.holdings[0].begin(), r.holdings[0].end(), 0);
  }
  for (auto& held : r.holdings) {
    std::sort(held.begin(), held.end());
    held.erase(std::unique(held.begin(), held.end()), held.end());
  }

  const int lo = std::min(contents, (9 * avg + 9) / 10);
  const int hi = std::min(contents, std::max(lo, (11 * avg) / 10));
  std::uniform_int_distribution<int> count(lo, hi);
  std::uniform_int_distribution<Flow> demand(1, 10);
  std::vector<int> all(contents);
  std::iota(all.begin(), all.end(), 0);
  Flow total = 0;
  for (int s = 0; s < n; ++s) {
    std::vector<int> picked;
    std::sample(all.begin(), all.end(), std::back_inserter(picked), count(rng), rng);
    for (int c : picked) {
      r.requests.push_back({s, c, demand(rng)});
      total += r.requests.back().demand;
    }
  }

  r.server_cost = CostMatrix(n, n);
  std::uniform_int_distribution<Cost> cost(1, 100);
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k < n; ++k) r.server_cost(i, k) = r.server_cost(k, i) = cost(rng);
  }

  const Flow budget =
      static_cast<Flow>(std::ceil(params.bandwidth_tightness * static_cast<double>(total) - 1e-9));
  std::uniform_int_distribution<Flow> weight(50, 150);
  std::vector<Flow> w(n);
  Flow weight_sum = 0;
  for (Flow& x : w) {
    x = weight(rng);
    weight_sum += x;
  }
  r.bandwidth.assign(n, 0);
  Flow given = 0;
  for (int s = 0; s < n; ++s) {
    r.bandwidth[s] = budget * w[s] / weight_sum;
    given += r.bandwidth[s];
  }
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (; given < budget; ++given) r.bandwidth[pick(rng)] += 1;
  validate(r);
  return r;
}

// ---- stats ------------------------------------------------------------------

std::string format_number(double value) {
  char buf[64];
  if (std::nearbyint(value) == value && std::fabs(value) < 1e15) {
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(value));
  } else {
    std::snprintf(buf, sizeof buf, "%.4f", value);
  }
  return buf;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

template <typename T>
std::string opt_field(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_floating_point_v<T>) {
    return format_number(*v);
  } else {
    return std::to_string(*v);
  }
}

std::string join(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) line += ',';
    line += csv_field(fields[k]);
  }
  return line + "\n";
}

}  // namespace

std::string emit_stats(const std::vector<CompareRow>& rows, bool wallclock) {
  std::vector<std::string> header{
      "instance", "alg", "status", "objective", "opt", "delta_opt", "gap_pct", "sd",
      "feasible_first_value", "feasible_first_pivots", "total_pivots",
      "parallel_rounds", "msg_count", "chain_len", "reps"};
  if (wallclock) header.push_back("wallclock_ms");
  std::string out = join(header);
  for (const CompareRow& r : rows) {
    std::vector<std::string> f{
        r.instance, r.alg, r.status, opt_field(r.objective), opt_field(r.opt),
        opt_field(r.delta_opt), opt_field(r.gap_pct), opt_field(r.sd),
        opt_field(r.feasible_first_value), opt_field(r.feasible_first_pivots),
        opt_field(r.total_pivots), opt_field(r.parallel_rounds), opt_field(r.msg_count),
        opt_field(r.chain_len), std::to_string(r.reps)};
    if (wallclock) f.push_back(opt_field(r.wallclock_ms));
    out += join(f);
  }
  return out;
}

std::string emit_stats(const std::vector<DistTsRow>& rows) {
  std::string out = join({"instance", "objective", "feasible_first_value",
                          "feasible_first_pivots", "total_pivots", "parallel_rounds",
                          "msg_count", "chain_len"});
  for (const DistTsRow& r : rows) {
    out += join({r.instance, std::to_string(r.objective), opt_field(r.feasible_first_value),
                 opt_field(r.feasible_first_pivots), std::to_string(r.total_pivots),
                 std::to_string(r.parallel_rounds), std::to_string(r.msg_count),
                 std::to_string(r.chain_len)});
  }
  return out;
}

std::string emit_stats(const std::vector<AuctionRow>& rows) {
  std::string out = join({"instance", "opt", "feasible_first_value", "feasible_round",
                          "total_rounds", "msg_count", "chain_len"});
  for (const AuctionRow& r : rows) {
    out += join({r.instance, std::to_string(r.opt), opt_field(r.feasible_first_value),
                 opt_field(r.feasible_round), std::to_string(r.total_rounds),
                 std::to_string(r.msg_count), std::to_string(r.chain_len)});
  }
  return out;
}

}  // namespace cdnroute
