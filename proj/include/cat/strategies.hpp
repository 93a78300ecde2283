// The five adaptive search strategies as resumable state machines.
//
// A session searches for the subject's threshold p in [0..n]. It keeps an
// open interval (lo, hi) with lo the largest level known to pass (0 when none)
// and hi the smallest level known to fail (n+1 when none). The caller drives
// it: next_probe() proposes a level, observe() feeds back the answer, and the
// session is Done once hi - lo == 1, with result lo. The one exception is an
// up-gallop, which keeps going until its first Fail.
//
// Every probe is a fresh test. Fun may re-probe the current hi and
// Frustrating may re-probe the current lo; both count as tests.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cat/subject_model.hpp"

namespace cat {

enum class StrategyKind : std::uint8_t { Sequential, Binary, Doubling, Fun, Frustrating };

inline constexpr std::array<StrategyKind, 5> kAllStrategies = {
    StrategyKind::Sequential, StrategyKind::Binary, StrategyKind::Doubling, StrategyKind::Fun,
    StrategyKind::Frustrating};

// Lowercase ASCII names: sequential, binary, doubling, fun, frustrating.
std::string_view to_string(StrategyKind kind);
StrategyKind parse_strategy(std::string_view name);  // throws std::invalid_argument

enum class SessionStatus : std::uint8_t { ReadyToProbe, AwaitingOutcome, Done };
std::string_view to_string(SessionStatus status);

// Thrown when an operation is called in the wrong session status.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct SearchOptions {
  // Gallops probe origin +/- base^k for k = 0, 1, 2, ...
  std::int64_t gallop_base = 2;
  friend bool operator==(const SearchOptions&, const SearchOptions&) = default;
};

class SearchSession {
 public:
  static constexpr int kFormatVersion = 1;

  // Throws std::domain_error for n < 1 or gallop_base < 2.
  static SearchSession start(StrategyKind kind, std::int64_t n, SearchOptions options = {});

  // Proposes the next level. Throws StateError unless ReadyToProbe.
  Level next_probe();
  // Records the answer to the pending probe. Throws StateError unless AwaitingOutcome.
  SessionStatus observe(Outcome outcome);

  StrategyKind kind() const { return kind_; }
  std::int64_t n() const { return n_; }
  std::int64_t lo() const { return lo_; }
  std::int64_t hi() const { return hi_; }
  SessionStatus status() const { return status_; }
  bool done() const { return status_ == SessionStatus::Done; }
  std::optional<Level> pending() const;
  const RunTrace& trace() const { return trace_; }
  // Number of completed phases (gallops, bisection steps, scan steps).
  std::int64_t phase() const { return phase_; }
  const SearchOptions& options() const { return options_; }
  // Throws StateError unless Done.
  std::int64_t result() const;

  nlohmann::json to_json() const;
  // Throws std::invalid_argument on malformed or inconsistent state.
  static SearchSession from_json(const nlohmann::json& doc);

  friend bool operator==(const SearchSession&, const SearchSession&) = default;

 private:
  enum class Stage : std::uint8_t { Scan, Bisect, UpGallop, DownGallop };

  SearchSession() = default;

  Level compute_probe() const;
  std::int64_t gallop_offset(std::int64_t exponent) const;
  void begin_up_gallop(std::int64_t origin);
  void begin_down_gallop();
  void end_down_phase();
  void apply_up_gallop(Level level, Outcome outcome);
  void apply_down_gallop(Level level, Outcome outcome);

  StrategyKind kind_ = StrategyKind::Sequential;
  std::int64_t n_ = 0;
  SearchOptions options_;
  std::int64_t lo_ = 0;
  std::int64_t hi_ = 0;
  Stage stage_ = Stage::Scan;
  std::int64_t origin_ = 0;
  std::int64_t exponent_ = 0;
  // Smallest failed level above lo seen in the current down phase; 0 if none.
  std::int64_t phase_min_fail_ = 0;
  std::int64_t last_probe_ = 0;
  std::int64_t phase_ = 0;
  SessionStatus status_ = SessionStatus::ReadyToProbe;
  Level pending_ = 0;
  RunTrace trace_;

  friend std::string_view stage_name(Stage stage);
};

struct SearchResult {
  std::int64_t found_p = 0;
  RunTrace trace;
};

// Drives a session against a simulated subject until Done. The profile's
// domain size must equal n; External profiles throw std::domain_error.
SearchResult run_to_completion(StrategyKind kind, std::int64_t n, const AbilityProfile& profile,
                               const StreamContext& ctx = {}, SearchOptions options = {});

}  // namespace cat
