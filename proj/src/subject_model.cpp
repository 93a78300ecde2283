#include "cat/subject_model.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace cat {

std::string_view to_string(Outcome outcome) {
  return outcome == Outcome::Pass ? "pass" : "fail";
}

Outcome parse_outcome(std::string_view text) {
  if (text == "pass" || text == "P") return Outcome::Pass;
  if (text == "fail" || text == "F") return Outcome::Fail;
  throw std::invalid_argument("unknown outcome '" + std::string(text) + "'");
}

namespace {

struct Validator {
  void operator()(const DeterministicProfile& d) const {
    if (d.n < 1) throw std::domain_error("deterministic profile needs n >= 1");
    if (d.threshold < 0 || d.threshold > d.n)
      throw std::domain_error("threshold p must lie in [0..n]");
  }
  void operator()(const StochasticProfile& s) const {
    if (s.success_probs.empty()) throw std::domain_error("stochastic profile needs a non-empty q");
    for (double q : s.success_probs) {
      if (!(q >= 0.0 && q <= 1.0)) throw std::domain_error("success probabilities must lie in [0,1]");
    }
    if (!(s.target_rate >= 0.0 && s.target_rate <= 1.0))
      throw std::domain_error("target rate t must lie in [0,1]");
    if (s.block_size < 1) throw std::domain_error("block size k must be >= 1");
  }
  void operator()(const ExternalProfile&) const {}
};

}  // namespace

void validate(const AbilityProfile& profile) { std::visit(Validator{}, profile); }

std::int64_t domain_size(const AbilityProfile& profile) {
  if (const auto* d = std::get_if<DeterministicProfile>(&profile)) return d->n;
  if (const auto* s = std::get_if<StochasticProfile>(&profile)) return s->n();
  return 0;
}

AbilityProfile profile_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("profile must be a JSON object");
  AbilityProfile profile;
  try {
    if (doc.contains("q")) {
      StochasticProfile s;
      s.success_probs = doc.at("q").get<std::vector<double>>();
      s.target_rate = doc.value("t", 0.8);
      s.block_size = doc.value("k", std::int64_t{1});
      profile = std::move(s);
    } else if (doc.contains("p")) {
      profile = DeterministicProfile{doc.at("n").get<std::int64_t>(), doc.at("p").get<std::int64_t>()};
    } else {
      throw std::invalid_argument("profile needs either \"q\" or \"p\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed profile: ") + e.what());
  }
  validate(profile);
  return profile;
}

nlohmann::json profile_to_json(const AbilityProfile& profile) {
  if (const auto* d = std::get_if<DeterministicProfile>(&profile)) {
    return {{"p", d->threshold}, {"n", d->n}};
  }
  if (const auto* s = std::get_if<StochasticProfile>(&profile)) {
    return {{"q", s->success_probs}, {"t", s->target_rate}, {"k", s->block_size}};
  }
  return nullptr;
}

AbilityProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profile '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("profile '" + path + "': " + e.what());
  }
  return profile_from_json(doc);
}

Outcome answer_deterministic(std::int64_t threshold, Level level, std::int64_t n) {
  if (level < 1 || level > n) {
    throw std::domain_error("level " + std::to_string(level) + " outside [1.." + std::to_string(n) + "]");
  }
  return level <= threshold ? Outcome::Pass : Outcome::Fail;
}

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) { return mix64(mix64(a) ^ b); }

std::uint64_t stream_seed(const StreamKey& key) {
  return hash_combine(hash_combine(key.seed, key.session), key.sequence);
}

Outcome block_probe(double success_prob, double target_rate, std::int64_t block_size,
                    const StreamKey& key) {
  if (block_size < 1) throw std::domain_error("block size k must be >= 1");
  std::mt19937_64 gen(stream_seed(key));
  std::int64_t successes = 0;
  for (std::int64_t i = 0; i < block_size; ++i) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    if (u < success_prob) ++successes;
  }
  const double rate = static_cast<double>(successes) / static_cast<double>(block_size);
  return rate >= target_rate ? Outcome::Pass : Outcome::Fail;
}

Outcome block_probe(const StochasticProfile& profile, Level level, const StreamKey& key) {
  if (level < 1 || level > profile.n()) {
    throw std::domain_error("level " + std::to_string(level) + " outside [1.." +
                            std::to_string(profile.n()) + "]");
  }
  return block_probe(profile.success_probs[static_cast<std::size_t>(level - 1)], profile.target_rate,
                     profile.block_size, key);
}

std::int64_t insertion_rank(std::span<const double> success_probs, double target_rate) {
  std::int64_t rank = 0;
  for (double q : success_probs) {
    if (q < target_rate) break;
    ++rank;
  }
  return rank;
}

Outcome answer(const AbilityProfile& profile, Level level, const StreamContext& ctx,
               std::int64_t sequence_no) {
  if (const auto* d = std::get_if<DeterministicProfile>(&profile)) {
    return answer_deterministic(d->threshold, level, d->n);
  }
  if (const auto* s = std::get_if<StochasticProfile>(&profile)) {
    return block_probe(*s, level, StreamKey{ctx.seed, ctx.session, static_cast<std::uint64_t>(sequence_no)});
  }
  throw std::logic_error("external profiles are answered from outside");
}

}  // namespace cat
