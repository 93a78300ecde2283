#include "cat/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace cat {

namespace {

template <class Fn>
void parallel_for(std::int64_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const auto workers = static_cast<std::int64_t>(std::min<std::int64_t>(threads, std::max<std::int64_t>(count, 1)));
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    try {
      for (std::int64_t i = next++; i < count; i = next++) fn(i);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::int64_t t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
  }
  if (error) std::rethrow_exception(error);
}

std::string format_real(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_number(std::string_view field, std::size_t line) {
  T value{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw std::invalid_argument("line " + std::to_string(line) + ": bad number '" + std::string(field) + "'");
  }
  return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

std::vector<SweepRow> sweep(StrategyKind strategy, std::int64_t n, unsigned threads, SearchOptions options) {
  if (n < 1) throw std::domain_error("sweep needs n >= 1");
  std::vector<SweepRow> rows(static_cast<std::size_t>(n + 1));
  parallel_for(n + 1, threads, [&](std::int64_t p) {
    const auto result = run_to_completion(strategy, n, DeterministicProfile{n, p}, {}, options);
    const auto m = measure(result.trace);
    const auto pred = predicted(strategy, n, p);
    const auto lb = instance_lower_bound(n, p);
    rows[static_cast<std::size_t>(p)] =
        SweepRow{n, p, strategy, m.negatives, m.total, pred.negatives_pred, pred.total_pred, lb.negatives, lb.total};
  });
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.strategy, a.p) < std::tie(b.strategy, b.p);
  });
  return rows;
}

std::string format_sweep_csv(std::span<const SweepRow> rows) {
  std::string out(kSweepCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.n) + ',' + std::to_string(r.p) + ',' + std::string(to_string(r.strategy)) + ',' +
           std::to_string(r.negatives) + ',' + std::to_string(r.total) + ',' + format_real(r.predicted_negatives) +
           ',' + format_real(r.predicted_total) + ',' + std::to_string(r.lb_negatives) + ',' +
           std::to_string(r.lb_total) + '\n';
  }
  return out;
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kSweepCsvHeader) {
    throw std::invalid_argument("line 1: expected header '" + std::string(kSweepCsvHeader) + "'");
  }
  std::vector<SweepRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 9) throw std::invalid_argument("line " + std::to_string(line_no) + ": expected 9 fields");
    SweepRow r;
    r.n = parse_number<std::int64_t>(f[0], line_no);
    r.p = parse_number<std::int64_t>(f[1], line_no);
    r.strategy = parse_strategy(f[2]);
    r.negatives = parse_number<std::int64_t>(f[3], line_no);
    r.total = parse_number<std::int64_t>(f[4], line_no);
    r.predicted_negatives = parse_number<double>(f[5], line_no);
    r.predicted_total = parse_number<double>(f[6], line_no);
    r.lb_negatives = parse_number<std::int64_t>(f[7], line_no);
    r.lb_total = parse_number<std::int64_t>(f[8], line_no);
    rows.push_back(r);
  }
  return rows;
}

void emit_csv(std::span<const SweepRow> rows, const std::filesystem::path& path) {
  write_text_file(path, format_sweep_csv(rows));
}

std::vector<SweepRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_sweep_csv(buf.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::vector<DominanceRow> dominance_table(std::int64_t n, std::span<const StrategyKind> strategies) {
  if (n < 1) throw std::domain_error("dominance table needs n >= 1");
  std::vector<std::vector<SweepRow>> per_strategy;
  for (StrategyKind kind : strategies) per_strategy.push_back(sweep(kind, n));
  std::vector<DominanceRow> rows;
  for (std::int64_t p = 0; p <= n; ++p) {
    std::vector<StrategyPoint> points;
    for (const auto& s : per_strategy) {
      const auto& r = s[static_cast<std::size_t>(p)];
      points.emplace_back(r.strategy, FrustrationMeasure{r.negatives, r.total});
    }
    const auto front = pareto_front(points);
    for (StrategyKind kind : strategies) {
      const bool on = std::any_of(front.begin(), front.end(), [&](const StrategyPoint& f) { return f.first == kind; });
      rows.push_back(DominanceRow{n, p, kind, on});
    }
  }
  return rows;
}

std::string format_dominance_csv(std::span<const DominanceRow> rows) {
  std::string out(kDominanceCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.n) + ',' + std::to_string(r.p) + ',' + std::string(to_string(r.strategy)) + ',' +
           (r.on_front ? "1" : "0") + '\n';
  }
  return out;
}

void emit_dominance(std::int64_t n, const std::filesystem::path& path) {
  write_text_file(path, format_dominance_csv(dominance_table(n)));
}

std::string describe_trace(StrategyKind kind, std::int64_t n, std::int64_t p, const RunTrace& trace) {
  std::string out = std::string(to_string(kind)) + " n=" + std::to_string(n) + " p=" + std::to_string(p) + ":";
  for (const auto& r : trace) {
    out += ' ' + std::to_string(r.level) + (r.outcome == Outcome::Pass ? 'P' : 'F');
  }
  return out;
}

bool VerifyReport::passed() const {
  return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.passed; });
}

std::string VerifyReport::to_text() const {
  std::string out;
  for (const auto& p : properties) {
    out += std::string(p.passed ? "PASS " : "FAIL ") + p.name + " (" + std::to_string(p.cases) + " cases)";
    if (p.counterexample) out += "\n  counterexample: " + *p.counterexample;
    out += '\n';
  }
  out += passed() ? "OVERALL PASS\n" : "OVERALL FAIL\n";
  return out;
}

namespace {

enum Prop : std::size_t {
  kCorrectness,
  kTermination,
  kNarrowing,
  kAccounting,
  kSequentialNegatives,
  kFunLaw,
  kSeparationA,
  kSeparationB,
  kDominanceOrder,
  kMoreFunImpliesDominates,
  kAboveLowerBound,
  kSequentialPrediction,
  kBinaryBound,
  kPropCount
};

constexpr std::array<std::string_view, kPropCount> kPropNames = {
    "strategies.correctness",
    "strategies.termination_bound",
    "strategies.interval_narrowing",
    "strategies.trace_accounting",
    "strategies.sequential_negatives",
    "strategies.fun_negatives_law",
    "strategies.separation_family_a",
    "strategies.separation_family_b",
    "analysis.dominates_strict_partial_order",
    "analysis.more_fun_implies_dominates",
    "analysis.measure_above_lower_bound",
    "analysis.sequential_prediction",
    "analysis.binary_total_bound",
};

struct Tally {
  std::int64_t cases = 0;
  std::optional<std::string> counterexample;

  void check(bool ok, const auto& describe) {
    ++cases;
    if (!ok && !counterexample) counterexample = describe();
  }
  void merge(const Tally& other) {
    cases += other.cases;
    if (!counterexample && other.counterexample) counterexample = other.counterexample;
  }
};

using Tallies = std::array<Tally, kPropCount>;

std::int64_t floor_log2(std::int64_t n) { return static_cast<std::int64_t>(std::bit_width(static_cast<std::uint64_t>(n))) - 1; }

struct DrivenRun {
  std::int64_t found = 0;
  RunTrace trace;
  bool narrowing_ok = true;
  std::string narrowing_note;
};

DrivenRun drive(StrategyKind kind, std::int64_t n, std::int64_t p, SearchOptions options) {
  auto session = SearchSession::start(kind, n, options);
  DrivenRun out;
  std::int64_t last_phase = 0;
  std::int64_t prev_lo = session.lo();
  std::int64_t prev_hi = session.hi();
  std::int64_t prev_width = session.hi() - session.lo();
  std::int64_t step_lo = session.lo();
  const std::int64_t cap = 64 * (n + 2);
  while (!session.done()) {
    if (static_cast<std::int64_t>(session.trace().size()) > cap) {
      out.narrowing_ok = false;
      out.narrowing_note = "no termination";
      break;
    }
    const Level level = session.next_probe();
    session.observe(answer_deterministic(p, level, n));
    if (session.lo() < step_lo && out.narrowing_ok) {
      out.narrowing_ok = false;
      out.narrowing_note = "lo decreased at probe " + std::to_string(session.trace().size());
    }
    step_lo = session.lo();
    if (session.phase() != last_phase || session.done()) {
      last_phase = session.phase();
      const std::int64_t width = session.hi() - session.lo();
      if (out.narrowing_ok && (width >= prev_width || session.lo() < prev_lo || session.hi() > prev_hi)) {
        out.narrowing_ok = false;
        out.narrowing_note = "interval (" + std::to_string(prev_lo) + "," + std::to_string(prev_hi) + ") -> (" +
                             std::to_string(session.lo()) + "," + std::to_string(session.hi()) + ")";
      }
      prev_lo = session.lo();
      prev_hi = session.hi();
      prev_width = width;
    }
  }
  out.found = session.done() ? session.result() : -1;
  out.trace = session.trace();
  return out;
}

void check_domain(Tallies& t, std::int64_t n, SearchOptions options) {
  const std::int64_t cap = 4 * (floor_log2(n) + 2) * (floor_log2(n) + 2);
  for (StrategyKind kind : kAllStrategies) {
    for (std::int64_t p = 0; p <= n; ++p) {
      const auto run = drive(kind, n, p, options);
      const auto m = measure(run.trace);
      auto describe = [&] { return describe_trace(kind, n, p, run.trace); };
      t[kCorrectness].check(run.found == p, [&] { return describe() + " -> found " + std::to_string(run.found); });
      const std::int64_t limit = kind == StrategyKind::Sequential ? n + 1 : cap;
      t[kTermination].check(m.total <= limit, [&] { return describe() + " exceeds cap " + std::to_string(limit); });
      t[kNarrowing].check(run.narrowing_ok, [&] { return describe() + " (" + run.narrowing_note + ")"; });
      const auto positives = std::count_if(run.trace.begin(), run.trace.end(),
                                           [](const ProbeRecord& r) { return r.outcome == Outcome::Pass; });
      t[kAccounting].check(m.negatives + positives == m.total && m.negatives <= m.total, describe);
      if (kind == StrategyKind::Sequential) {
        t[kSequentialNegatives].check(m.negatives <= 1 && ((m.negatives == 0) == (p == n)), describe);
      }
      const auto lb = instance_lower_bound(n, p);
      t[kAboveLowerBound].check(m.negatives >= lb.negatives && m.total >= lb.total, describe);
    }
  }
}

}  // namespace

VerifyReport verify(std::int64_t n_max, const VerifyOptions& options) {
  if (n_max < 16) throw std::domain_error("verify needs n_max >= 16");
  const SearchOptions search = options.search;

  // Exhaustive domains: every n up to 512, plus n_max itself.
  std::vector<std::int64_t> domains;
  for (std::int64_t n = 1; n <= std::min<std::int64_t>(n_max, 512); ++n) domains.push_back(n);
  if (n_max > 512) domains.push_back(n_max);

  std::vector<Tallies> per_domain(domains.size());
  parallel_for(static_cast<std::int64_t>(domains.size()), options.threads, [&](std::int64_t i) {
    check_domain(per_domain[static_cast<std::size_t>(i)], domains[static_cast<std::size_t>(i)], search);
  });

  std::vector<Tallies> binary(static_cast<std::size_t>(n_max));
  parallel_for(n_max, options.threads, [&](std::int64_t i) {
    const std::int64_t n = i + 1;
    const auto bound = static_cast<std::int64_t>(std::bit_width(static_cast<std::uint64_t>(n)));  // ceil(log2(n+1))
    auto& t = binary[static_cast<std::size_t>(i)][kBinaryBound];
    for (std::int64_t p = 0; p <= n; ++p) {
      const auto res = run_to_completion(StrategyKind::Binary, n, DeterministicProfile{n, p}, {}, search);
      const auto m = measure(res.trace);
      t.check(m.total <= bound && m.negatives <= m.total,
              [&] { return describe_trace(StrategyKind::Binary, n, p, res.trace) + " bound " + std::to_string(bound); });
    }
  });

  std::vector<Tallies> fun_law(12);
  parallel_for(12, options.threads, [&](std::int64_t i) {
    const std::int64_t n = std::int64_t{1} << (i + 1);
    if (n > n_max) return;
    auto& t = fun_law[static_cast<std::size_t>(i)][kFunLaw];
    for (std::int64_t p = 0; p < n; ++p) {
      const auto res = run_to_completion(StrategyKind::Fun, n, DeterministicProfile{n, p}, {}, search);
      const auto expected = popcount(p) + (p % 2 == 0 ? 1 : 0);
      t.check(measure(res.trace).negatives == expected, [&] {
        return describe_trace(StrategyKind::Fun, n, p, res.trace) + " expected " + std::to_string(expected) +
               " negatives";
      });
    }
  });

  Tallies total;
  for (const auto& t : per_domain) {
    for (std::size_t k = 0; k < kPropCount; ++k) total[k].merge(t[k]);
  }
  for (const auto& t : binary) total[kBinaryBound].merge(t[kBinaryBound]);
  for (const auto& t : fun_law) total[kFunLaw].merge(t[kFunLaw]);

  auto negatives_of = [&](StrategyKind kind, std::int64_t n, std::int64_t p) {
    const auto res = run_to_completion(kind, n, DeterministicProfile{n, p}, {}, search);
    return std::make_pair(measure(res.trace).negatives, describe_trace(kind, n, p, res.trace));
  };
  for (std::int64_t k = 2; k <= 11; ++k) {
    {
      const std::int64_t p = (std::int64_t{1} << k) - 1;
      const std::int64_t n = std::int64_t{1} << (k + 1);
      const auto [fun, fun_desc] = negatives_of(StrategyKind::Fun, n, p);
      const auto [fru, fru_desc] = negatives_of(StrategyKind::Frustrating, n, p);
      total[kSeparationA].check(fun == k && fru == 1, [&] { return fun_desc + " | " + fru_desc; });
    }
    {
      const std::int64_t p = std::int64_t{1} << k;
      const std::int64_t n = std::int64_t{1} << (k + 2);
      const auto [fun, fun_desc] = negatives_of(StrategyKind::Fun, n, p);
      const auto [fru, fru_desc] = negatives_of(StrategyKind::Frustrating, n, p);
      total[kSeparationB].check(fun == 2 && fru >= k, [&] { return fun_desc + " | " + fru_desc; });
    }
  }

  std::mt19937_64 rng(options.seed);
  auto random_measure = [&] {
    std::uniform_int_distribution<std::int64_t> tot(0, 6);
    const auto t = tot(rng);
    std::uniform_int_distribution<std::int64_t> neg(0, t);
    return FrustrationMeasure{neg(rng), t};
  };
  auto show = [](const FrustrationMeasure& m) {
    return "(" + std::to_string(m.negatives) + "," + std::to_string(m.total) + ")";
  };
  for (int i = 0; i < 10000; ++i) {
    const auto a = random_measure();
    const auto b = random_measure();
    const auto c = random_measure();
    auto triple = [&] { return show(a) + " " + show(b) + " " + show(c); };
    const bool ok = !dominates(a, a) && !(dominates(a, b) && dominates(b, a)) &&
                    (!(dominates(a, b) && dominates(b, c)) || dominates(a, c));
    total[kDominanceOrder].check(ok, triple);
    total[kMoreFunImpliesDominates].check(fun_relation(a, b) != FunRelation::MoreFun || dominates(a, b), triple);
  }

  for (std::int64_t p = 1; p < n_max; ++p) {
    const auto res = run_to_completion(StrategyKind::Sequential, n_max, DeterministicProfile{n_max, p}, {}, search);
    const auto pred = predicted(StrategyKind::Sequential, n_max, p);
    total[kSequentialPrediction].check(
        static_cast<double>(measure(res.trace).negatives) == pred.negatives_pred,
        [&] { return describe_trace(StrategyKind::Sequential, n_max, p, res.trace); });
  }

  VerifyReport report;
  for (std::size_t k = 0; k < kPropCount; ++k) {
    report.properties.push_back(
        PropertyResult{std::string(kPropNames[k]), !total[k].counterexample, total[k].cases, total[k].counterexample});
  }
  return report;
}

std::int64_t MonteCarloResult::modal_found_p() const {
  const auto it = std::max_element(histogram.begin(), histogram.end());
  return it == histogram.end() ? 0 : static_cast<std::int64_t>(it - histogram.begin());
}

std::uint64_t run_seed(std::uint64_t master_seed, std::int64_t run) {
  return hash_combine(master_seed, static_cast<std::uint64_t>(run));
}

MonteCarloResult monte_carlo(StrategyKind strategy, const StochasticProfile& profile, std::int64_t runs,
                             std::uint64_t master_seed) {
  if (runs < 1) throw std::domain_error("monte_carlo needs runs >= 1");
  validate(profile);
  MonteCarloResult out;
  out.strategy = strategy;
  out.histogram.assign(static_cast<std::size_t>(profile.n() + 1), 0);
  double neg_sum = 0.0;
  double tot_sum = 0.0;
  for (std::int64_t r = 0; r < runs; ++r) {
    const StreamContext ctx{run_seed(master_seed, r), static_cast<std::uint64_t>(r)};
    const auto res = run_to_completion(strategy, profile.n(), profile, ctx);
    const auto m = measure(res.trace);
    ++out.histogram[static_cast<std::size_t>(res.found_p)];
    neg_sum += static_cast<double>(m.negatives);
    tot_sum += static_cast<double>(m.total);
    out.runs.push_back(MonteCarloRun{r, res.found_p, m});
  }
  out.mean_negatives = neg_sum / static_cast<double>(runs);
  out.mean_total = tot_sum / static_cast<double>(runs);
  return out;
}

std::string format_monte_carlo_csv(std::span<const MonteCarloResult> results) {
  std::string out = "run,strategy,found_p,negatives,total\n";
  for (const auto& res : results) {
    for (const auto& r : res.runs) {
      out += std::to_string(r.run) + ',' + std::string(to_string(res.strategy)) + ',' + std::to_string(r.found_p) +
             ',' + std::to_string(r.frustration.negatives) + ',' + std::to_string(r.frustration.total) + '\n';
    }
  }
  return out;
}

}  // namespace cat
