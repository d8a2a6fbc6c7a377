// service.hpp
// Gambling session service. SessionService holds the per-instance session
// store and answers every endpoint as JSON; mount() binds it to an
// httplib::Server.
//
// Endpoints:
//   POST /sessions                  {R, human_role, opponent_policy, noise_e, seed?, max_rounds?}
//   POST /sessions/{id}/rounds      {epsilon | eta, bet?}
//   POST /sessions/{id}/close
//   GET  /sessions/{id}
//   GET  /sessions/{id}/ledger
//   GET  /analysis/distribution?epsilon&eta
//   GET  /analysis/gain?epsilon&eta&R
//   GET  /analysis/equilibrium?R[&tol]
//   GET  /analysis/sweep?kind&grid&R

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "qgamble/game_engine.hpp"

namespace httplib {
class Server;
}

namespace qgamble {

using json = nlohmann::json;

/// Error carrying an HTTP status class and, for 400s, the offending field.
class ApiError : public std::runtime_error {
 public:
  ApiError(int status, std::string field, const std::string& message)
      : std::runtime_error(message), status_(status), field_(std::move(field)) {}
  int status() const noexcept { return status_; }
  const std::string& field() const noexcept { return field_; }

 private:
  int status_;
  std::string field_;
};

enum class HumanRole { Alice, Bob, None };

/// Machine policy. `fair` and `equilibrium` resolve per role; `cheat` only
/// applies to a machine playing Alice.
struct OpponentPolicy {
  enum class Kind { Fair, Equilibrium, Fixed, Cheat };
  Kind kind;
  double value = 0.0;

  static OpponentPolicy parse(std::string_view text);
  std::string to_string() const;
};

/// SHA-256 of `payload`, lowercase hex.
std::string sha256_hex(std::string_view payload);

class SessionService {
 public:
  explicit SessionService(std::uint64_t id_seed = std::random_device{}());
  ~SessionService();

  json create_session(const json& body);
  json play_round(const std::string& id, const json& body);
  json close_session(const std::string& id);
  json session_summary(const std::string& id);
  json session_ledger(const std::string& id);

  // Stateless analysis queries. Parameters arrive as query-string text.
  using Query = std::map<std::string, std::string>;
  static json analysis_distribution(const Query& query);
  static json analysis_gain(const Query& query);
  static json analysis_equilibrium(const Query& query);
  static json analysis_sweep(const Query& query);

  static constexpr int kMaxSweepGrid = 1001;

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id);

  std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex id_mutex_;
  Rng id_rng_;
  std::uint64_t next_serial_ = 1;
};

/// Registers all routes on `server`. The service must outlive the server.
void mount(httplib::Server& server, SessionService& service);

/// Port from QGAMBLE_PORT, else 8080.
int default_port();

}  // namespace qgamble
