// Exhaustive sweeps, the property verifier, Monte Carlo runs and CSV output.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cat/analysis.hpp"
#include "cat/errors.hpp"
#include "cat/strategies.hpp"
#include "cat/subject_model.hpp"

namespace cat {

struct SweepRow {
  std::int64_t n = 0;
  std::int64_t p = 0;
  StrategyKind strategy = StrategyKind::Sequential;
  std::int64_t negatives = 0;
  std::int64_t total = 0;
  double predicted_negatives = 0.0;
  double predicted_total = 0.0;
  std::int64_t lb_negatives = 0;
  std::int64_t lb_total = 0;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

// threads == 0 picks std::thread::hardware_concurrency(). Output is sorted by
// (strategy, p) whatever the thread count.
std::vector<SweepRow> sweep(StrategyKind strategy, std::int64_t n, unsigned threads = 1,
                            SearchOptions options = {});

inline constexpr std::string_view kSweepCsvHeader =
    "n,p,strategy,negatives,total,predicted_negatives,predicted_total,lb_negatives,lb_total";
inline constexpr std::string_view kDominanceCsvHeader = "n,p,strategy,on_front";

std::string format_sweep_csv(std::span<const SweepRow> rows);
std::vector<SweepRow> parse_sweep_csv(const std::string& text);
void emit_csv(std::span<const SweepRow> rows, const std::filesystem::path& path);
std::vector<SweepRow> read_csv(const std::filesystem::path& path);

struct DominanceRow {
  std::int64_t n = 0;
  std::int64_t p = 0;
  StrategyKind strategy = StrategyKind::Sequential;
  bool on_front = false;
};

// For every p in [0..n] and every listed strategy, whether it sits on the
// Pareto front of the listed strategies' frustration measures at that p.
std::vector<DominanceRow> dominance_table(std::int64_t n, std::span<const StrategyKind> strategies = kAllStrategies);
std::string format_dominance_csv(std::span<const DominanceRow> rows);
void emit_dominance(std::int64_t n, const std::filesystem::path& path);

struct PropertyResult {
  std::string name;
  bool passed = true;
  std::int64_t cases = 0;
  std::optional<std::string> counterexample;
};

struct VerifyReport {
  std::vector<PropertyResult> properties;
  bool passed() const;
  std::string to_text() const;
};

struct VerifyOptions {
  SearchOptions search;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

// Runs every strategy and analysis property. Throws std::domain_error for n_max < 16.
VerifyReport verify(std::int64_t n_max, const VerifyOptions& options = {});

// "fun n=16 p=5: 1P 2P 4P 8F 5P 6F"
std::string describe_trace(StrategyKind kind, std::int64_t n, std::int64_t p, const RunTrace& trace);

struct MonteCarloRun {
  std::int64_t run = 0;
  std::int64_t found_p = 0;
  FrustrationMeasure frustration;
};

struct MonteCarloResult {
  StrategyKind strategy = StrategyKind::Sequential;
  std::vector<std::int64_t> histogram;  // index = found_p
  double mean_negatives = 0.0;
  double mean_total = 0.0;
  std::vector<MonteCarloRun> runs;

  std::int64_t modal_found_p() const;
};

// Seed of run r is hash_combine(master_seed, r); its probes use session id r.
std::uint64_t run_seed(std::uint64_t master_seed, std::int64_t run);

MonteCarloResult monte_carlo(StrategyKind strategy, const StochasticProfile& profile, std::int64_t runs,
                             std::uint64_t master_seed);

std::string format_monte_carlo_csv(std::span<const MonteCarloResult> results);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace cat
