#include "qgamble/service.hpp"

#include <charconv>
#include <cstdlib>
#include <vector>

#include <fmt/format.h>
#include <httplib.h>
#include <openssl/evp.h>

#include "qgamble/equilibrium.hpp"
#include "qgamble/io.hpp"

namespace qgamble {

namespace {

constexpr const char* kJsonType = "application/json";

bool is_non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::string_view to_string(HumanRole role) {
  switch (role) {
    case HumanRole::Alice: return "alice";
    case HumanRole::Bob: return "bob";
    case HumanRole::None: return "none";
  }
  return "none";
}

HumanRole parse_role(std::string_view text) {
  if (text == "alice") return HumanRole::Alice;
  if (text == "bob") return HumanRole::Bob;
  if (text == "none") return HumanRole::None;
  throw ApiError(400, "human_role", "human_role must be one of alice, bob, none");
}

double query_number(const SessionService::Query& query, const std::string& field) {
  const auto it = query.find(field);
  if (it == query.end()) throw ApiError(400, field, "missing query parameter '" + field + "'");
  try {
    return parse_double(it->second);
  } catch (const std::runtime_error&) {
    throw ApiError(400, field, "query parameter '" + field + "' is not a number");
  }
}

double body_number(const json& body, const std::string& field) {
  if (!body.is_object() || !body.contains(field))
    throw ApiError(400, field, "missing field '" + field + "'");
  const auto& v = body.at(field);
  if (!v.is_number()) throw ApiError(400, field, "field '" + field + "' must be a number");
  return v.get<double>();
}

json distribution_json(const OutcomeDistribution<double>& d) {
  return {{"p1", d.p1}, {"p2", d.p2}, {"p3", d.p3}};
}

json cheat_json(const SessionLedger& ledger) {
  if (ledger.empty()) return {{"available", false}, {"reason", "no rounds played"}};
  const double eta = ledger.rounds().front().eta_used;
  for (const auto& r : ledger.rounds())
    if (r.eta_used != eta)
      return {{"available", false}, {"reason", "eta varied across rounds"}};
  const auto t = detect_cheating(ledger, eta, ledger.noise());
  return {{"available", true},
          {"d3_count", t.d3_count},
          {"rounds_observed", t.rounds_observed},
          {"expected_noise_rate", t.expected_noise_rate},
          {"p_value", t.p_value},
          {"significance", t.significance},
          {"flagged", t.flagged}};
}

template <typename F>
auto as_api(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw ApiError(400, e.field(), e.what());
  }
}

}  // namespace

OpponentPolicy OpponentPolicy::parse(std::string_view text) {
  if (text == "fair") return {Kind::Fair};
  if (text == "equilibrium") return {Kind::Equilibrium};
  const auto colon = text.find(':');
  if (colon != std::string_view::npos) {
    const auto head = text.substr(0, colon);
    double value = 0.0;
    try {
      value = parse_double(text.substr(colon + 1));
    } catch (const std::runtime_error&) {
      throw ApiError(400, "opponent_policy", "opponent_policy value is not a number");
    }
    if (head == "fixed") return {Kind::Fixed, value};
    if (head == "cheat") return {Kind::Cheat, value};
  }
  throw ApiError(400, "opponent_policy",
                 "opponent_policy must be fair, equilibrium, fixed:<value> or cheat:<value>");
}

std::string OpponentPolicy::to_string() const {
  switch (kind) {
    case Kind::Fair: return "fair";
    case Kind::Equilibrium: return "equilibrium";
    case Kind::Fixed: return "fixed:" + format_exact(value);
    case Kind::Cheat: return "cheat:" + format_exact(value);
  }
  return "fair";
}

std::string sha256_hex(std::string_view payload) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(payload.data(), payload.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

struct SessionService::Session {
  struct Commitment {
    std::string nonce;
    std::string payload;
    std::string hash;
  };

  Session(std::string id_, GameConfig<double> config_, HumanRole human_, OpponentPolicy policy_,
          NoiseModel<double> noise_, std::uint64_t seed_, std::optional<std::size_t> max_rounds_)
      : id(std::move(id_)),
        config(config_),
        human(human_),
        policy(policy_),
        noise(noise_),
        seed(seed_),
        max_rounds(max_rounds_),
        ledger(config_, seed_, noise_),
        outcome_rng(seed_, 0),
        nonce_rng(seed_, 1) {}

  std::string machine_description() const {
    switch (human) {
      case HumanRole::Alice: return "eta=" + format_exact(machine_eta);
      case HumanRole::Bob: return "epsilon=" + format_exact(machine_epsilon);
      case HumanRole::None:
        return "epsilon=" + format_exact(machine_epsilon) + ";eta=" + format_exact(machine_eta);
    }
    return {};
  }

  // Drawn before the human's next input is read.
  void commit_next() {
    const std::string nonce = fmt::format("{:016x}{:016x}", nonce_rng.next_u64(), nonce_rng.next_u64());
    const std::string payload =
        fmt::format("{}|{}|{}|{}", id, ledger.size(), machine_description(), nonce);
    pending = {nonce, payload, sha256_hex(payload)};
  }

  std::mutex mutex;
  const std::string id;
  const GameConfig<double> config;
  const HumanRole human;
  const OpponentPolicy policy;
  const NoiseModel<double> noise;
  const std::uint64_t seed;
  const std::optional<std::size_t> max_rounds;
  SessionLedger ledger;
  Rng outcome_rng;
  Rng nonce_rng;
  bool open = true;
  double machine_epsilon = 0.0;
  double machine_eta = 0.0;
  std::vector<Commitment> revealed;
  Commitment pending;
};

SessionService::SessionService(std::uint64_t id_seed) : id_rng_(id_seed, 7) {}
SessionService::~SessionService() = default;

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ApiError(404, "session_id", "unknown session '" + id + "'");
  return it->second;
}

json SessionService::create_session(const json& body) {
  if (!body.is_object()) throw ApiError(400, "body", "request body must be a JSON object");
  const GameConfig<double> config = as_api([&] { return GameConfig<double>(body_number(body, "R")); });

  const auto role_text = body.value("human_role", std::string("bob"));
  const HumanRole human = parse_role(role_text);
  const OpponentPolicy policy = OpponentPolicy::parse(body.value("opponent_policy", std::string("fair")));
  const double noise_e = body.contains("noise_e") ? body_number(body, "noise_e") : 0.0;
  const NoiseModel<double> noise = as_api([&] { return NoiseModel<double>(noise_e); });

  std::uint64_t seed = 0;
  if (body.contains("seed")) {
    if (!is_non_negative_integer(body.at("seed")))
      throw ApiError(400, "seed", "seed must be a non-negative integer");
    seed = body.at("seed").get<std::uint64_t>();
  } else {
    seed = (std::uint64_t{std::random_device{}()} << 32) ^ std::random_device{}();
  }

  std::optional<std::size_t> max_rounds;
  if (body.contains("max_rounds")) {
    if (!is_non_negative_integer(body.at("max_rounds")) || body.at("max_rounds").get<std::size_t>() == 0)
      throw ApiError(400, "max_rounds", "max_rounds must be a positive integer");
    max_rounds = body.at("max_rounds").get<std::size_t>();
  }

  // Resolve the machine's parameters for whichever roles it plays.
  double machine_epsilon = 0.0;
  double machine_eta = 0.0;
  const bool machine_alice = human != HumanRole::Alice;
  const bool machine_bob = human != HumanRole::Bob;
  try {
    if (machine_alice) {
      if (policy.kind == OpponentPolicy::Kind::Fixed || policy.kind == OpponentPolicy::Kind::Cheat)
        machine_epsilon = PreparationChoice<double>(policy.value).epsilon();
    }
    if (machine_bob) {
      const bool policy_for_bob = human == HumanRole::Alice;
      if (!policy_for_bob || policy.kind == OpponentPolicy::Kind::Equilibrium)
        machine_eta = bob_optimal_eta(config).eta_tilde;
      else if (policy.kind == OpponentPolicy::Kind::Fixed)
        machine_eta = SplittingChoice<double>(policy.value).eta();
      else if (policy.kind == OpponentPolicy::Kind::Cheat)
        throw ApiError(400, "opponent_policy", "cheat policies apply only to a machine playing Alice");
    }
  } catch (const DomainError& e) {
    throw ApiError(400, "opponent_policy", std::string("opponent_policy: ") + e.what());
  }

  std::string id;
  {
    std::lock_guard lock(id_mutex_);
    id = fmt::format("s{}-{:012x}", next_serial_++, id_rng_.next_u64() & 0xffffffffffffULL);
  }
  auto session = std::make_shared<Session>(id, config, human, policy, noise, seed, max_rounds);
  session->machine_epsilon = machine_epsilon;
  session->machine_eta = machine_eta;
  session->commit_next();
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(id, session);
  }
  return session_summary(id);
}

json SessionService::play_round(const std::string& id, const json& body) {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  if (!session->open) throw ApiError(409, "session_id", "session '" + id + "' is closed");
  if (body.is_object() && body.contains("bet")) {
    if (!body.at("bet").is_number() || body.at("bet").get<double>() != GameConfig<double>::bet())
      throw ApiError(400, "bet", "the bet is fixed at 1 coin");
  }

  double epsilon = session->machine_epsilon;
  double eta = session->machine_eta;
  if (session->human == HumanRole::Alice) epsilon = body_number(body, "epsilon");
  if (session->human == HumanRole::Bob) eta = body_number(body, "eta");
  const auto [prep, splitting] = as_api([&] {
    return std::pair{PreparationChoice<double>(epsilon), SplittingChoice<double>(eta)};
  });

  const auto dist = round_distribution(prep, splitting, session->noise);
  const Detector detector = sample_detector(dist, session->outcome_rng.uniform());
  auto& ledger = session->ledger;
  const RoundOutcome outcome{detector, payoff_for(detector, session->config), ledger.size(), epsilon, eta};
  ledger.append(outcome);

  const auto revealed = session->pending;
  session->revealed.push_back(revealed);
  if (session->max_rounds && ledger.size() >= *session->max_rounds) session->open = false;
  if (session->open) session->commit_next();

  json response = {{"session_id", id},
                   {"round_index", outcome.round_index},
                   {"bet", GameConfig<double>::bet()},
                   {"epsilon", epsilon},
                   {"eta", eta},
                   {"detector", std::string(to_string(detector))},
                   {"payoff", outcome.payoff},
                   {"bankroll", ledger.bob_bankroll()},
                   {"alice_bankroll", ledger.alice_bankroll()},
                   {"machine_parameter", session->machine_description()},
                   {"commitment", revealed.hash},
                   {"commitment_payload", revealed.payload},
                   {"nonce", revealed.nonce},
                   {"cheat_test", cheat_json(ledger)},
                   {"status", session->open ? "open" : "closed"}};
  if (session->open) response["next_commitment"] = session->pending.hash;
  return response;
}

json SessionService::close_session(const std::string& id) {
  {
    auto session = find(id);
    std::lock_guard lock(session->mutex);
    session->open = false;
  }
  return session_summary(id);
}

json SessionService::session_summary(const std::string& id) {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  const auto& ledger = session->ledger;
  std::array<std::size_t, 3> counts{};
  for (const auto& r : ledger.rounds()) ++counts[static_cast<int>(r.detector)];
  json summary = {{"session_id", id},
                  {"R", session->config.punishment()},
                  {"bet", GameConfig<double>::bet()},
                  {"human_role", std::string(to_string(session->human))},
                  {"opponent_policy", session->policy.to_string()},
                  {"noise_e", session->noise.error_rate()},
                  {"seed", session->seed},
                  {"status", session->open ? "open" : "closed"},
                  {"rounds", ledger.size()},
                  {"bankroll", ledger.bob_bankroll()},
                  {"alice_bankroll", ledger.alice_bankroll()},
                  {"counts", {{"D1", counts[0]}, {"D2", counts[1]}, {"D3", counts[2]}}},
                  {"cheat_test", cheat_json(ledger)}};
  if (session->max_rounds) summary["max_rounds"] = *session->max_rounds;
  if (session->open) summary["next_commitment"] = session->pending.hash;
  return summary;
}

json SessionService::session_ledger(const std::string& id) {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  const auto& ledger = session->ledger;
  json rounds = json::array();
  for (std::size_t k = 0; k < ledger.size(); ++k) {
    const auto& r = ledger.rounds()[k];
    const auto& c = session->revealed[k];
    rounds.push_back({{"index", r.round_index},
                      {"epsilon", r.epsilon_used},
                      {"eta", r.eta_used},
                      {"detector", std::string(to_string(r.detector))},
                      {"payoff", r.payoff},
                      {"bankroll", ledger.bankroll()[k]},
                      {"commitment", c.hash},
                      {"commitment_payload", c.payload},
                      {"nonce", c.nonce}});
  }
  return {{"session_id", id}, {"R", session->config.punishment()}, {"rounds", std::move(rounds)}};
}

json SessionService::analysis_distribution(const Query& query) {
  const double epsilon = query_number(query, "epsilon");
  const double eta = query_number(query, "eta");
  const auto d = as_api([&] { return outcome_distribution(epsilon, eta); });
  json out = distribution_json(d);
  out["epsilon"] = epsilon;
  out["eta"] = eta;
  return out;
}

json SessionService::analysis_gain(const Query& query) {
  const double epsilon = query_number(query, "epsilon");
  const double eta = query_number(query, "eta");
  const double r = query_number(query, "R");
  const double gain = as_api([&] { return expected_gain(epsilon, eta, r); });
  return {{"epsilon", epsilon}, {"eta", eta}, {"R", r}, {"gain", gain}, {"alice_gain", -gain}};
}

json SessionService::analysis_equilibrium(const Query& query) {
  const double r = query_number(query, "R");
  const double tol = query.count("tol") ? query_number(query, "tol") : 1e-4;
  const auto eq = as_api([&] { return bob_optimal_eta(GameConfig<double>(r), tol); });
  return {{"R", r},
          {"eta_tilde", eq.eta_tilde},
          {"guaranteed_gain", eq.guaranteed_gain},
          {"alice_best_epsilon", eq.alice_best_epsilon},
          {"tolerance", eq.tolerance}};
}

json SessionService::analysis_sweep(const Query& query) {
  const auto kind_it = query.find("kind");
  const std::string kind = kind_it == query.end() ? "dist" : kind_it->second;
  if (kind != "dist" && kind != "gain") throw ApiError(400, "kind", "kind must be dist or gain");
  int grid = 101;
  if (const auto it = query.find("grid"); it != query.end()) {
    const auto& text = it->second;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), grid);
    if (ec != std::errc{} || ptr != text.data() + text.size())
      throw ApiError(400, "grid", "grid must be an integer");
  }
  if (grid < 2 || grid > kMaxSweepGrid)
    throw ApiError(400, "grid", fmt::format("grid must lie in [2, {}]", kMaxSweepGrid));

  const auto table = as_api([&] {
    return kind == "gain" ? sweep_gain(query_number(query, "R"), grid) : sweep_distribution(grid);
  });
  auto rows = [](const Grid<double>& g) {
    json out = json::array();
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < g.cols(); ++j) row.push_back(g(i, j));
      out.push_back(std::move(row));
    }
    return out;
  };
  json out = {{"kind", kind},      {"grid", grid},          {"epsilon", table.epsilon},
              {"eta", table.eta},  {"p1", rows(table.p1)},  {"p2", rows(table.p2)},
              {"p3", rows(table.p3)}};
  if (table.has_gain()) {
    out["R"] = query_number(query, "R");
    out["gain"] = rows(table.gain);
  }
  return out;
}

namespace {

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJsonType);
}

template <typename F>
void respond(httplib::Response& res, F&& handler, int success = 200) {
  try {
    send(res, success, handler());
  } catch (const ApiError& e) {
    send(res, e.status(), {{"error", e.what()}, {"field", e.field()}, {"status", e.status()}});
  } catch (const DomainError& e) {
    send(res, 400, {{"error", e.what()}, {"field", e.field()}, {"status", 400}});
  } catch (const json::exception& e) {
    send(res, 400, {{"error", e.what()}, {"field", "body"}, {"status", 400}});
  } catch (const std::exception& e) {
    send(res, 500, {{"error", e.what()}, {"status", 500}});
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

SessionService::Query to_query(const httplib::Request& req) {
  SessionService::Query q;
  for (const auto& [k, v] : req.params) q[k] = v;
  return q;
}

}  // namespace

void mount(httplib::Server& server, SessionService& service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return service.create_session(parse_body(req)); }, 201);
  });
  server.Post(R"(/sessions/([^/]+)/rounds)", [&service](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return service.play_round(req.matches[1], parse_body(req)); });
  });
  server.Post(R"(/sessions/([^/]+)/close)", [&service](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return service.close_session(req.matches[1]); });
  });
  server.Get(R"(/sessions/([^/]+)/ledger)", [&service](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return service.session_ledger(req.matches[1]); });
  });
  server.Get(R"(/sessions/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return service.session_summary(req.matches[1]); });
  });

  server.Get("/analysis/distribution", [](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return SessionService::analysis_distribution(to_query(req)); });
  });
  server.Get("/analysis/gain", [](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return SessionService::analysis_gain(to_query(req)); });
  });
  server.Get("/analysis/equilibrium", [](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return SessionService::analysis_equilibrium(to_query(req)); });
  });
  server.Get("/analysis/sweep", [](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return SessionService::analysis_sweep(to_query(req)); });
  });
}

int default_port() {
  if (const char* env = std::getenv("QGAMBLE_PORT")) {
    int port = 0;
    const std::string_view text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), port);
    if (ec == std::errc{} && ptr == text.data() + text.size() && port > 0 && port < 65536) return port;
  }
  return 8080;
}

}  // namespace qgamble
