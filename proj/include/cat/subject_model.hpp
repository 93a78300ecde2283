// Difficulty axis, hidden subjects and probe answering.
//
// Levels are numbered 1..n (1 = easiest). A subject's ability is the number
// of levels it passes, p in [0..n]. Level 0 is a virtual always-pass sentinel
// and level n+1 a virtual always-fail sentinel; neither is ever probed.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace cat {

using Level = std::int64_t;

enum class Outcome : std::uint8_t { Pass, Fail };

std::string_view to_string(Outcome outcome);
// Accepts "pass"/"fail" (case-sensitive) and "P"/"F". Throws std::invalid_argument.
Outcome parse_outcome(std::string_view text);

struct ProbeRecord {
  std::int64_t sequence_no = 0;
  Level level = 0;
  Outcome outcome = Outcome::Fail;

  friend bool operator==(const ProbeRecord&, const ProbeRecord&) = default;
};

using RunTrace = std::vector<ProbeRecord>;

struct DeterministicProfile {
  std::int64_t n = 0;
  std::int64_t threshold = 0;
};

// One column of a difficulty matrix: q[i] is the chance to succeed at level i+1.
// A probe is a block of `block_size` trials, passed iff the success rate
// reaches `target_rate`.
struct StochasticProfile {
  std::vector<double> success_probs;
  double target_rate = 0.8;
  std::int64_t block_size = 1;

  std::int64_t n() const { return static_cast<std::int64_t>(success_probs.size()); }
};

// Answers come from outside (a human experimenter).
struct ExternalProfile {};

using AbilityProfile = std::variant<DeterministicProfile, StochasticProfile, ExternalProfile>;

// Throws std::domain_error when the profile breaks its invariants.
void validate(const AbilityProfile& profile);
// n of the profile's difficulty axis; 0 for External.
std::int64_t domain_size(const AbilityProfile& profile);

// {"p": 5, "n": 16} or {"q": [...], "t": 0.8, "k": 200}.
AbilityProfile profile_from_json(const nlohmann::json& doc);
nlohmann::json profile_to_json(const AbilityProfile& profile);
AbilityProfile load_profile(const std::string& path);

// Pass iff level <= threshold. Throws std::domain_error if level is outside [1..n].
Outcome answer_deterministic(std::int64_t threshold, Level level, std::int64_t n);

// Key of an independent random stream. Equal keys give equal streams,
// whatever order the probes are evaluated in.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t session = 0;
  std::uint64_t sequence = 0;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);
std::uint64_t stream_seed(const StreamKey& key);

// Draws `block_size` Bernoulli(success_prob) trials from the stream and passes
// iff successes / block_size >= target_rate.
Outcome block_probe(double success_prob, double target_rate, std::int64_t block_size,
                    const StreamKey& key);
Outcome block_probe(const StochasticProfile& profile, Level level, const StreamKey& key);

// Length of the longest prefix of q whose entries all reach the target rate.
std::int64_t insertion_rank(std::span<const double> success_probs, double target_rate);

// Randomness context for oracles that need one; ignored by deterministic profiles.
struct StreamContext {
  std::uint64_t seed = 0;
  std::uint64_t session = 0;
};

// Answers a probe on behalf of a simulated subject. External profiles throw
// std::logic_error.
Outcome answer(const AbilityProfile& profile, Level level, const StreamContext& ctx,
               std::int64_t sequence_no);

}  // namespace cat
