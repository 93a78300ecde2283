#include "cat/strategies.hpp"

#include <algorithm>

namespace cat {

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Sequential:
      return "sequential";
    case StrategyKind::Binary:
      return "binary";
    case StrategyKind::Doubling:
      return "doubling";
    case StrategyKind::Fun:
      return "fun";
    case StrategyKind::Frustrating:
      return "frustrating";
  }
  return "sequential";
}

StrategyKind parse_strategy(std::string_view name) {
  for (StrategyKind kind : kAllStrategies) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::ReadyToProbe:
      return "ready";
    case SessionStatus::AwaitingOutcome:
      return "awaiting";
    case SessionStatus::Done:
      return "done";
  }
  return "ready";
}

std::string_view stage_name(SearchSession::Stage stage) {
  switch (stage) {
    case SearchSession::Stage::Scan:
      return "scan";
    case SearchSession::Stage::Bisect:
      return "bisect";
    case SearchSession::Stage::UpGallop:
      return "up_gallop";
    case SearchSession::Stage::DownGallop:
      return "down_gallop";
  }
  return "scan";
}

SearchSession SearchSession::start(StrategyKind kind, std::int64_t n, SearchOptions options) {
  if (n < 1) throw std::domain_error("domain size n must be >= 1");
  if (options.gallop_base < 2) throw std::domain_error("gallop base must be >= 2");
  SearchSession s;
  s.kind_ = kind;
  s.n_ = n;
  s.options_ = options;
  s.lo_ = 0;
  s.hi_ = n + 1;
  switch (kind) {
    case StrategyKind::Sequential:
      s.stage_ = Stage::Scan;
      break;
    case StrategyKind::Binary:
      s.stage_ = Stage::Bisect;
      break;
    case StrategyKind::Doubling:
    case StrategyKind::Fun:
    case StrategyKind::Frustrating:
      s.begin_up_gallop(0);
      break;
  }
  return s;
}

std::optional<Level> SearchSession::pending() const {
  if (status_ != SessionStatus::AwaitingOutcome) return std::nullopt;
  return pending_;
}

std::int64_t SearchSession::result() const {
  if (status_ != SessionStatus::Done) throw StateError("search is not finished");
  return lo_;
}

// base^k, saturated just above n so that it never overflows.
std::int64_t SearchSession::gallop_offset(std::int64_t exponent) const {
  std::int64_t offset = 1;
  for (std::int64_t i = 0; i < exponent && offset <= n_; ++i) offset *= options_.gallop_base;
  return std::min(offset, n_ + 1);
}

void SearchSession::begin_up_gallop(std::int64_t origin) {
  stage_ = Stage::UpGallop;
  origin_ = origin;
  exponent_ = 0;
}

void SearchSession::begin_down_gallop() {
  stage_ = Stage::DownGallop;
  origin_ = hi_;
  exponent_ = 0;
  phase_min_fail_ = 0;
  last_probe_ = 0;
}

Level SearchSession::compute_probe() const {
  switch (stage_) {
    case Stage::Scan:
      return lo_ + 1;
    case Stage::Bisect:
      return (lo_ + hi_) / 2;
    case Stage::UpGallop:
      return std::min({origin_ + gallop_offset(exponent_), hi_, n_});
    case Stage::DownGallop: {
      const std::int64_t offset = gallop_offset(exponent_);
      return offset >= origin_ - lo_ ? lo_ : origin_ - offset;
    }
  }
  return lo_ + 1;
}

Level SearchSession::next_probe() {
  if (status_ == SessionStatus::AwaitingOutcome) throw StateError("a probe is already pending");
  if (status_ == SessionStatus::Done) throw StateError("search is finished");
  pending_ = compute_probe();
  status_ = SessionStatus::AwaitingOutcome;
  return pending_;
}

void SearchSession::apply_up_gallop(Level level, Outcome outcome) {
  if (outcome == Outcome::Pass) {
    // Only reachable by a noisy subject passing a level that failed before.
    if (level >= hi_) hi_ = n_ + 1;
    lo_ = level;
    ++exponent_;
    return;
  }
  hi_ = level;
  ++phase_;
  switch (kind_) {
    case StrategyKind::Doubling:
      stage_ = Stage::Bisect;
      break;
    case StrategyKind::Frustrating:
      begin_down_gallop();
      break;
    default:
      begin_up_gallop(lo_);
      break;
  }
}

void SearchSession::end_down_phase() {
  if (phase_min_fail_ != 0) hi_ = std::min(hi_, phase_min_fail_);
  ++phase_;
  begin_down_gallop();
}

void SearchSession::apply_down_gallop(Level level, Outcome outcome) {
  last_probe_ = level;
  if (outcome == Outcome::Pass) {
    lo_ = std::max(lo_, level);
    end_down_phase();
    return;
  }
  if (level > lo_ && (phase_min_fail_ == 0 || level < phase_min_fail_)) phase_min_fail_ = level;
  ++exponent_;
  if (compute_probe() == last_probe_) end_down_phase();
}

SessionStatus SearchSession::observe(Outcome outcome) {
  if (status_ != SessionStatus::AwaitingOutcome) throw StateError("no probe is pending");
  const Level level = pending_;
  trace_.push_back(ProbeRecord{static_cast<std::int64_t>(trace_.size()) + 1, level, outcome});
  pending_ = 0;

  switch (stage_) {
    case Stage::Scan:
    case Stage::Bisect:
      (outcome == Outcome::Pass ? lo_ : hi_) = level;
      ++phase_;
      break;
    case Stage::UpGallop:
      apply_up_gallop(level, outcome);
      break;
    case Stage::DownGallop:
      apply_down_gallop(level, outcome);
      break;
  }

  // An up-gallop runs until its first Fail even once the interval is tight.
  const bool mid_gallop = stage_ == Stage::UpGallop && outcome == Outcome::Pass && level < n_;
  status_ = hi_ - lo_ == 1 && !mid_gallop ? SessionStatus::Done : SessionStatus::ReadyToProbe;
  return status_;
}

nlohmann::json SearchSession::to_json() const {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& rec : trace_) {
    trace.push_back({{"seq", rec.sequence_no}, {"level", rec.level}, {"outcome", to_string(rec.outcome)}});
  }
  nlohmann::json pending = nullptr;
  if (status_ == SessionStatus::AwaitingOutcome) pending = pending_;
  return {
      {"v", kFormatVersion},
      {"strategy", to_string(kind_)},
      {"n", n_},
      {"gallop_base", options_.gallop_base},
      {"lo", lo_},
      {"hi", hi_},
      {"stage", stage_name(stage_)},
      {"origin", origin_},
      {"exponent", exponent_},
      {"phase_min_fail", phase_min_fail_},
      {"last_probe", last_probe_},
      {"phase", phase_},
      {"status", to_string(status_)},
      {"pending", pending},
      {"trace", trace},
  };
}

SearchSession SearchSession::from_json(const nlohmann::json& doc) {
  auto fail = [](const std::string& what) -> SearchSession {
    throw std::invalid_argument("invalid session state: " + what);
  };
  try {
    if (!doc.is_object()) return fail("not an object");
    if (doc.at("v").get<int>() != kFormatVersion) return fail("unsupported version");
    SearchSession s;
    s.kind_ = parse_strategy(doc.at("strategy").get<std::string>());
    s.n_ = doc.at("n").get<std::int64_t>();
    s.options_.gallop_base = doc.at("gallop_base").get<std::int64_t>();
    s.lo_ = doc.at("lo").get<std::int64_t>();
    s.hi_ = doc.at("hi").get<std::int64_t>();
    const auto stage = doc.at("stage").get<std::string>();
    bool stage_ok = false;
    for (Stage candidate : {Stage::Scan, Stage::Bisect, Stage::UpGallop, Stage::DownGallop}) {
      if (stage_name(candidate) == stage) {
        s.stage_ = candidate;
        stage_ok = true;
      }
    }
    if (!stage_ok) return fail("unknown stage '" + stage + "'");
    s.origin_ = doc.at("origin").get<std::int64_t>();
    s.exponent_ = doc.at("exponent").get<std::int64_t>();
    s.phase_min_fail_ = doc.at("phase_min_fail").get<std::int64_t>();
    s.last_probe_ = doc.at("last_probe").get<std::int64_t>();
    s.phase_ = doc.at("phase").get<std::int64_t>();
    const auto status = doc.at("status").get<std::string>();
    if (status == "ready") {
      s.status_ = SessionStatus::ReadyToProbe;
    } else if (status == "awaiting") {
      s.status_ = SessionStatus::AwaitingOutcome;
      s.pending_ = doc.at("pending").get<std::int64_t>();
    } else if (status == "done") {
      s.status_ = SessionStatus::Done;
    } else {
      return fail("unknown status '" + status + "'");
    }
    for (const auto& rec : doc.at("trace")) {
      s.trace_.push_back(ProbeRecord{rec.at("seq").get<std::int64_t>(), rec.at("level").get<std::int64_t>(),
                                     parse_outcome(rec.at("outcome").get<std::string>())});
    }
    if (s.n_ < 1 || s.options_.gallop_base < 2) return fail("bad domain size or gallop base");
    if (!(0 <= s.lo_ && s.lo_ < s.hi_ && s.hi_ <= s.n_ + 1)) return fail("interval out of range");
    const bool tight = s.hi_ - s.lo_ == 1;
    if (s.status_ == SessionStatus::Done ? !tight : tight && s.stage_ != Stage::UpGallop)
      return fail("status disagrees with interval");
    if (s.status_ == SessionStatus::AwaitingOutcome && (s.pending_ < 1 || s.pending_ > s.n_))
      return fail("pending level out of range");
    for (std::size_t i = 0; i < s.trace_.size(); ++i) {
      if (s.trace_[i].sequence_no != static_cast<std::int64_t>(i) + 1) return fail("trace sequence gap");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    return fail(e.what());
  }
}

SearchResult run_to_completion(StrategyKind kind, std::int64_t n, const AbilityProfile& profile,
                               const StreamContext& ctx, SearchOptions options) {
  if (std::holds_alternative<ExternalProfile>(profile)) {
    throw std::domain_error("external profiles cannot be simulated");
  }
  validate(profile);
  if (domain_size(profile) != n) throw std::domain_error("profile domain size differs from n");
  auto session = SearchSession::start(kind, n, options);
  while (!session.done()) {
    const Level level = session.next_probe();
    session.observe(answer(profile, level, ctx, static_cast<std::int64_t>(session.trace().size()) + 1));
  }
  return SearchResult{session.result(), session.trace()};
}

}  // namespace cat
