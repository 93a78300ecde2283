// Live adaptive-testing sessions with an append-only JSONL event log.
//
// Each state change is written to the log (and flushed) before it is applied
// in memory and acknowledged. Replaying the log alone rebuilds every session;
// answer events carry the serialized state they produced, so replay checks
// its reconstruction byte for byte.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cat/errors.hpp"
#include "cat/strategies.hpp"
#include "cat/subject_model.hpp"

namespace cat::service {

enum class SessionMode : std::uint8_t { Live, Deterministic, Stochastic };
std::string_view to_string(SessionMode mode);
SessionMode parse_mode(std::string_view name);  // throws std::invalid_argument

// Carries the HTTP-style status the failure maps to.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct SessionRecord {
  std::string id;
  StrategyKind strategy = StrategyKind::Sequential;
  std::int64_t n = 0;
  SessionMode mode = SessionMode::Live;
  AbilityProfile profile = ExternalProfile{};
  std::uint64_t seed = 0;
  std::uint64_t stream_session = 0;
  SearchSession state = SearchSession::start(StrategyKind::Sequential, 1);
  std::string created_at;
  std::string updated_at;
};

// Snapshot of a session as served by GET /sessions/{id}.
nlohmann::json session_view(const SessionRecord& record);

class EventLog {
 public:
  // Opens for append, creating the file if needed. Throws IoError.
  explicit EventLog(std::filesystem::path path);
  void append(const nlohmann::json& event);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

// Thrown on a corrupt or inconsistent log; the message names the line.
class ReplayError : public std::runtime_error {
 public:
  ReplayError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ReplayResult {
  std::map<std::string, SessionRecord> sessions;
  std::size_t events = 0;
  // A final line cut short by an interrupted write was dropped.
  bool truncated_tail = false;
  // Bytes of the log covered by complete events.
  std::uintmax_t consistent_bytes = 0;
};

ReplayResult replay(std::istream& in);
ReplayResult replay(const std::filesystem::path& log_path);

// Applies one event to the session map. Shared by live operation and replay.
void apply_event(std::map<std::string, SessionRecord>& sessions, const nlohmann::json& event);

struct ServiceConfig {
  std::filesystem::path log_path;
  std::uint64_t seed = 0;
  // Timestamp source; defaults to UTC ISO-8601 with milliseconds.
  std::function<std::string()> clock;
};

class SessionService {
 public:
  // Replays an existing log before accepting calls; a torn final line is cut off.
  explicit SessionService(ServiceConfig config);

  // {"strategy", "n", "mode", "profile"?}; returns the session view.
  nlohmann::json create_session(const nlohmann::json& request);
  // {"probe": level} while searching, {"done": true, "result", "frustration"} when finished.
  // Simulated sessions answer the issued probe themselves and add "outcome".
  nlohmann::json next(const std::string& id);
  // {"outcome": "pass"|"fail"}; returns the session status.
  nlohmann::json answer(const std::string& id, const nlohmann::json& body);
  nlohmann::json get(const std::string& id) const;

  std::optional<SessionRecord> record(const std::string& id) const;
  std::size_t session_count() const;
  const std::filesystem::path& log_path() const { return log_->path(); }

 private:
  struct Entry {
    mutable std::mutex mutex;
    SessionRecord record;
  };

  Entry& entry(const std::string& id) const;
  // Persists the event, then applies it to `record`.
  void commit(SessionRecord& record, const nlohmann::json& event);
  nlohmann::json make_event(const std::string& id, std::string_view kind, nlohmann::json payload) const;
  nlohmann::json issue_probe(SessionRecord& record);
  void record_answer(SessionRecord& record, Outcome outcome);

  ServiceConfig config_;
  std::unique_ptr<EventLog> log_;
  std::mutex log_mutex_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::unique_ptr<Entry>> sessions_;
  std::uint64_t next_id_ = 1;
};

std::string utc_timestamp();

}  // namespace cat::service
