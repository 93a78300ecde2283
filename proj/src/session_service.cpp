#include "cat/session_service.hpp"

#include <chrono>
#include <ctime>
#include <sstream>

#include "cat/analysis.hpp"

namespace cat::service {

using nlohmann::json;

std::string_view to_string(SessionMode mode) {
  switch (mode) {
    case SessionMode::Live:
      return "live";
    case SessionMode::Deterministic:
      return "deterministic";
    case SessionMode::Stochastic:
      return "stochastic";
  }
  return "live";
}

SessionMode parse_mode(std::string_view name) {
  for (SessionMode mode : {SessionMode::Live, SessionMode::Deterministic, SessionMode::Stochastic}) {
    if (to_string(mode) == name) return mode;
  }
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t secs = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof(out), "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

json session_view(const SessionRecord& record) {
  const auto& state = record.state;
  json history = json::array();
  for (const auto& r : state.trace()) {
    history.push_back({{"seq", r.sequence_no}, {"level", r.level}, {"outcome", to_string(r.outcome)}});
  }
  const auto phi = measure(state.trace());
  json pending = nullptr;
  if (auto level = state.pending()) pending = *level;
  json result = nullptr;
  if (state.done()) result = state.result();
  return {
      {"id", record.id},
      {"strategy", to_string(record.strategy)},
      {"n", record.n},
      {"mode", to_string(record.mode)},
      {"status", to_string(state.status())},
      {"pending_probe", pending},
      {"history", history},
      {"frustration", {{"negatives", phi.negatives}, {"total", phi.total}}},
      {"done", state.done()},
      {"result", result},
      {"created_at", record.created_at},
      {"updated_at", record.updated_at},
      {"state", state.to_json()},
  };
}

EventLog::EventLog(std::filesystem::path path) : path_(std::move(path)) {
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw IoError("cannot open event log '" + path_.string() + "' for append");
}

void EventLog::append(const json& event) {
  out_ << event.dump() << '\n';
  out_.flush();
  if (!out_) throw IoError("failed while writing event log '" + path_.string() + "'");
}

namespace {

SessionRecord record_from_created(const json& event) {
  const auto& payload = event.at("payload");
  SessionRecord rec;
  rec.id = event.at("session_id").get<std::string>();
  rec.strategy = parse_strategy(payload.at("strategy").get<std::string>());
  rec.n = payload.at("n").get<std::int64_t>();
  rec.mode = parse_mode(payload.at("mode").get<std::string>());
  const auto& profile = payload.at("profile");
  rec.profile = profile.is_null() ? AbilityProfile{ExternalProfile{}} : profile_from_json(profile);
  rec.seed = payload.at("seed").get<std::uint64_t>();
  rec.stream_session = payload.at("stream_session").get<std::uint64_t>();
  rec.state = SearchSession::start(rec.strategy, rec.n);
  if (payload.contains("state") && payload.at("state") != rec.state.to_json()) {
    throw std::invalid_argument("initial state differs from the recorded one");
  }
  rec.created_at = rec.updated_at = event.at("ts").get<std::string>();
  return rec;
}

void apply_to_record(SessionRecord& rec, const json& event) {
  const auto kind = event.at("event").get<std::string>();
  const auto& payload = event.at("payload");
  auto& state = rec.state;
  if (kind == "probe_issued") {
    if (state.status() != SessionStatus::ReadyToProbe) throw std::invalid_argument("probe issued while not ready");
    const Level level = state.next_probe();
    if (level != payload.at("level").get<Level>()) {
      throw std::invalid_argument("recorded probe " + payload.at("level").dump() + " but the strategy proposes " +
                                  std::to_string(level));
    }
  } else if (kind == "answer_recorded") {
    const auto pending = state.pending();
    if (!pending || *pending != payload.at("level").get<Level>()) {
      throw std::invalid_argument("answer recorded for a probe that is not pending");
    }
    state.observe(parse_outcome(payload.at("outcome").get<std::string>()));
    if (payload.contains("state") && payload.at("state") != state.to_json()) {
      throw std::invalid_argument("replayed state differs from the recorded one");
    }
  } else if (kind == "finished") {
    if (!state.done() || state.result() != payload.at("result").get<std::int64_t>()) {
      throw std::invalid_argument("finished event disagrees with the session");
    }
  } else {
    throw std::invalid_argument("unknown event '" + kind + "'");
  }
  rec.updated_at = event.at("ts").get<std::string>();
}

}  // namespace

void apply_event(std::map<std::string, SessionRecord>& sessions, const json& event) {
  const auto id = event.at("session_id").get<std::string>();
  if (event.at("event").get<std::string>() == "created") {
    if (sessions.count(id) != 0) throw std::invalid_argument("session '" + id + "' created twice");
    sessions.emplace(id, record_from_created(event));
    return;
  }
  const auto it = sessions.find(id);
  if (it == sessions.end()) throw std::invalid_argument("event for unknown session '" + id + "'");
  apply_to_record(it->second, event);
}

ReplayResult replay(std::istream& in) {
  ReplayResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const bool complete = !in.eof();
    if (line.empty()) {
      result.consistent_bytes += complete ? 1 : 0;
      continue;
    }
    json event;
    try {
      event = json::parse(line);
    } catch (const json::parse_error& e) {
      if (!complete) {
        result.truncated_tail = true;
        break;
      }
      throw ReplayError(line_no, std::string("malformed event: ") + e.what());
    }
    try {
      apply_event(result.sessions, event);
    } catch (const std::exception& e) {
      throw ReplayError(line_no, e.what());
    }
    ++result.events;
    result.consistent_bytes += line.size() + (complete ? 1 : 0);
  }
  return result;
}

ReplayResult replay(const std::filesystem::path& log_path) {
  std::ifstream in(log_path, std::ios::binary);
  if (!in) throw IoError("cannot open event log '" + log_path.string() + "'");
  return replay(in);
}

SessionService::SessionService(ServiceConfig config) : config_(std::move(config)) {
  if (!config_.clock) config_.clock = utc_timestamp;
  std::error_code ec;
  if (std::filesystem::exists(config_.log_path, ec)) {
    auto existing = replay(config_.log_path);
    if (existing.truncated_tail) std::filesystem::resize_file(config_.log_path, existing.consistent_bytes);
    for (auto& [id, rec] : existing.sessions) {
      auto e = std::make_unique<Entry>();
      next_id_ = std::max(next_id_, rec.stream_session + 1);
      e->record = std::move(rec);
      sessions_.emplace(id, std::move(e));
    }
    if (std::filesystem::file_size(config_.log_path, ec) > 0) {
      std::ifstream tail(config_.log_path, std::ios::binary);
      tail.seekg(-1, std::ios::end);
      const bool newline = tail.get() == '\n';
      tail.close();
      if (!newline) std::ofstream(config_.log_path, std::ios::binary | std::ios::app) << '\n';
    }
  }
  log_ = std::make_unique<EventLog>(config_.log_path);
}

json SessionService::make_event(const std::string& id, std::string_view kind, json payload) const {
  return {{"ts", config_.clock()}, {"session_id", id}, {"event", kind}, {"payload", std::move(payload)}};
}

void SessionService::commit(SessionRecord& record, const json& event) {
  SessionRecord next = record;
  apply_to_record(next, event);
  {
    std::lock_guard lock(log_mutex_);
    try {
      log_->append(event);
    } catch (const IoError& e) {
      throw ServiceError(500, e.what());
    }
  }
  record = std::move(next);
}

SessionService::Entry& SessionService::entry(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "unknown session '" + id + "'");
  return *it->second;
}

json SessionService::create_session(const json& request) {
  if (!request.is_object()) throw ServiceError(400, "request body must be a JSON object");
  StrategyKind strategy;
  std::int64_t n = 0;
  SessionMode mode = SessionMode::Live;
  json profile_doc = nullptr;
  try {
    strategy = parse_strategy(request.at("strategy").get<std::string>());
    if (!request.at("n").is_number_integer()) throw std::invalid_argument("n must be an integer");
    n = request.at("n").get<std::int64_t>();
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (request.contains("mode")) mode = parse_mode(request.at("mode").get<std::string>());
    const bool has_profile = request.contains("profile") && !request.at("profile").is_null();
    if (mode == SessionMode::Live && has_profile) throw std::invalid_argument("live sessions take no profile");
    if (mode != SessionMode::Live) {
      if (!has_profile) throw std::invalid_argument("mode '" + std::string(to_string(mode)) + "' needs a profile");
      profile_doc = request.at("profile");
      if (profile_doc.is_object() && profile_doc.contains("p") && !profile_doc.contains("n")) profile_doc["n"] = n;
      const auto profile = profile_from_json(profile_doc);
      const bool kind_ok = mode == SessionMode::Deterministic ? std::holds_alternative<DeterministicProfile>(profile)
                                                               : std::holds_alternative<StochasticProfile>(profile);
      if (!kind_ok) throw std::invalid_argument("profile does not match mode");
      if (domain_size(profile) != n) throw std::invalid_argument("profile size differs from n");
      profile_doc = profile_to_json(profile);
    }
  } catch (const ServiceError&) {
    throw;
  } catch (const std::exception& e) {
    throw ServiceError(400, e.what());
  }

  std::unique_lock lock(sessions_mutex_);
  const std::uint64_t number = next_id_;
  char id_buf[32];
  std::snprintf(id_buf, sizeof(id_buf), "s%06llu", static_cast<unsigned long long>(number));
  const std::string id = id_buf;
  json payload = {{"strategy", to_string(strategy)},
                  {"n", n},
                  {"mode", to_string(mode)},
                  {"profile", profile_doc},
                  {"seed", config_.seed},
                  {"stream_session", number},
                  {"state", SearchSession::start(strategy, n).to_json()}};
  const json event = make_event(id, "created", std::move(payload));
  auto e = std::make_unique<Entry>();
  e->record = record_from_created(event);
  {
    std::lock_guard log_lock(log_mutex_);
    try {
      log_->append(event);
    } catch (const IoError& err) {
      throw ServiceError(500, err.what());
    }
  }
  ++next_id_;
  json view = session_view(e->record);
  sessions_.emplace(id, std::move(e));
  return view;
}

json SessionService::issue_probe(SessionRecord& record) {
  SearchSession preview = record.state;
  const Level level = preview.next_probe();
  const auto seq = static_cast<std::int64_t>(record.state.trace().size()) + 1;
  commit(record, make_event(record.id, "probe_issued", {{"level", level}, {"seq", seq}}));
  return {{"probe", level}};
}

void SessionService::record_answer(SessionRecord& record, Outcome outcome) {
  const Level level = *record.state.pending();
  const auto seq = static_cast<std::int64_t>(record.state.trace().size()) + 1;
  SearchSession after = record.state;
  after.observe(outcome);
  commit(record, make_event(record.id, "answer_recorded",
                            {{"level", level}, {"seq", seq}, {"outcome", to_string(outcome)}, {"state", after.to_json()}}));
  if (record.state.done()) {
    const auto phi = measure(record.state.trace());
    commit(record, make_event(record.id, "finished",
                              {{"result", record.state.result()}, {"negatives", phi.negatives}, {"total", phi.total}}));
  }
}

namespace {

json done_response(const SessionRecord& record) {
  const auto phi = measure(record.state.trace());
  return {{"done", true},
          {"result", record.state.result()},
          {"frustration", {{"negatives", phi.negatives}, {"total", phi.total}}}};
}

}  // namespace

json SessionService::next(const std::string& id) {
  Entry& e = entry(id);
  std::lock_guard lock(e.mutex);
  auto& rec = e.record;
  if (rec.state.done()) return done_response(rec);
  if (rec.mode == SessionMode::Live) {
    if (auto level = rec.state.pending()) return {{"probe", *level}};
    return issue_probe(rec);
  }
  // Simulated subjects answer at once; a probe left pending by a crash is answered now.
  json response = rec.state.pending() ? json{{"probe", *rec.state.pending()}} : issue_probe(rec);
  const Level level = *rec.state.pending();
  const auto seq = static_cast<std::int64_t>(rec.state.trace().size()) + 1;
  const Outcome outcome = cat::answer(rec.profile, level, StreamContext{rec.seed, rec.stream_session}, seq);
  record_answer(rec, outcome);
  response["outcome"] = to_string(outcome);
  response["status"] = to_string(rec.state.status());
  return response;
}

json SessionService::answer(const std::string& id, const json& body) {
  Outcome outcome;
  if (!body.is_object() || !body.contains("outcome") || !body.at("outcome").is_string()) {
    throw ServiceError(400, "body must be {\"outcome\": \"pass\"|\"fail\"}");
  }
  const auto text = body.at("outcome").get<std::string>();
  if (text == "pass") {
    outcome = Outcome::Pass;
  } else if (text == "fail") {
    outcome = Outcome::Fail;
  } else {
    throw ServiceError(400, "outcome must be \"pass\" or \"fail\", got '" + text + "'");
  }
  Entry& e = entry(id);
  std::lock_guard lock(e.mutex);
  auto& rec = e.record;
  if (rec.mode != SessionMode::Live) throw ServiceError(409, "simulated sessions answer their own probes");
  if (!rec.state.pending()) throw ServiceError(409, "no probe is pending");
  record_answer(rec, outcome);
  const auto phi = measure(rec.state.trace());
  json response = {{"status", to_string(rec.state.status())},
                   {"done", rec.state.done()},
                   {"frustration", {{"negatives", phi.negatives}, {"total", phi.total}}}};
  if (rec.state.done()) response["result"] = rec.state.result();
  return response;
}

json SessionService::get(const std::string& id) const {
  Entry& e = entry(id);
  std::lock_guard lock(e.mutex);
  return session_view(e.record);
}

std::optional<SessionRecord> SessionService::record(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  std::lock_guard entry_lock(it->second->mutex);
  return it->second->record;
}

std::size_t SessionService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

}  // namespace cat::service
