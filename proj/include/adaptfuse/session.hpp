#pragma once

// Live sessions: a human (or an attached simulated user) plays the user,
// one round at a time. All payloads are JSON with snake_case fields and
// 1-based option indices.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adaptfuse/agent.hpp"
#include "adaptfuse/http_sampler.hpp"
#include "adaptfuse/synthetic_sampler.hpp"
#include "adaptfuse/tasks.hpp"

namespace adaptfuse {

/// Error carrying an HTTP-style status: 400 bad request, 404 unknown
/// session, 409 conflicting state.
class SessionError : public std::runtime_error {
 public:
  SessionError(int status, const std::string& msg, std::string field = {})
      : std::runtime_error(msg), status_(status), field_(std::move(field)) {}
  int status() const { return status_; }
  const std::string& field() const { return field_; }

 private:
  int status_;
  std::string field_;
};

struct SessionServiceConfig {
  Backend backend = Backend::kSynthetic;
  HttpSamplerConfig http{};
  SyntheticSamplerConfig synthetic{};
  AgentConfig agent{};
  std::chrono::seconds idle_ttl{30 * 60};
  std::size_t top_k = 5;
};

struct SessionRoundTrace {
  std::size_t round = 0;  // 1-based
  std::vector<std::string> option_texts;
  std::size_t recommendation = 0;  // 0-based
  std::size_t choice = 0;          // 0-based
  FusionDiagnostics diagnostics;
  std::vector<double> fused;
};

class Session {
 public:
  using Clock = std::chrono::steady_clock;

  Session(std::string id, EpisodeSpec spec, bool demo_user, const SessionServiceConfig& cfg)
      : id_(std::move(id)), spec_(spec), schema_(spec.schema()), cfg_(cfg.agent), top_k_(cfg.top_k) {
    option_rng_ = make_rng(spec.seed, Stream::kEpisode);
    user_rng_ = make_rng(spec.seed, Stream::kUser);
    // The synthetic sampler answers relative to a persona: the demo user's
    // preference when one is attached, otherwise a seeded draw.
    persona_ = draw_true_preference(schema_.dim(), true, option_rng_);
    hypotheses_ = build_hypothesis_set(schema_);
    if (spec.max_hypotheses && *spec.max_hypotheses < hypotheses_.size()) {
      Rng hyp_rng = make_rng(spec.seed, Stream::kHypothesis);
      hypotheses_ = subsample_hypotheses(hypotheses_, *spec.max_hypotheses, hyp_rng, hypotheses_.find(persona_));
    }
    if (demo_user) demo_user_ = SimulatedUser{persona_, spec.beta_user, spec.deterministic_user};
    if (cfg.backend == Backend::kHttp) {
      HttpSamplerConfig h = cfg.http;
      h.item_noun = schema_.item_noun;
      sampler_ = std::make_unique<HttpChatSampler>(h);
    } else {
      sampler_ = std::make_unique<SyntheticSampler>(cfg.synthetic, persona_, make_rng(spec.seed, Stream::kSampler));
    }
    state_ = initial_state(cfg_, AgentVariant{}, hypotheses_.size());
    created_ = last_active_ = Clock::now();
    start_round();
  }

  const std::string& id() const { return id_; }
  std::size_t completed_rounds() const {
    std::lock_guard lk(mu_);
    return trace_.size();
  }
  bool is_complete() const {
    std::lock_guard lk(mu_);
    return done();
  }
  Clock::time_point last_active() const {
    std::lock_guard lk(mu_);
    return last_active_;
  }
  std::uint64_t checksum() const {
    std::lock_guard lk(mu_);
    return state_.checksum();
  }

  /// Payload returned by create: the first option set and recommendation.
  nlohmann::json open_payload() const {
    std::lock_guard lk(mu_);
    return round_payload_locked();
  }

  /// Applies a 1-based choice (or, with auto_choice, the demo user's pick).
  nlohmann::json submit(std::optional<std::size_t> choice_1based, bool auto_choice) {
    std::lock_guard lk(mu_);
    last_active_ = Clock::now();
    if (done()) throw SessionError(409, "session is already complete");
    std::size_t y = 0;
    if (auto_choice) {
      if (!demo_user_) throw SessionError(400, "auto choice needs a session created with demo_user", "auto");
      y = demo_user_->choose(*current_options_, user_rng_);
    } else {
      if (!choice_1based) throw SessionError(400, "missing field 'choice'", "choice");
      if (*choice_1based < 1 || *choice_1based > current_options_->size())
        throw SessionError(400, "choice must be in [1, " + std::to_string(current_options_->size()) + "]", "choice");
      y = *choice_1based - 1;
    }

    const auto parsed = parse_option_set(schema_, current_options_->raw_texts());
    state_ = commit_round(cfg_, state_, *current_pred_, hypotheses_, parsed, y);
    history_.append(*current_options_, y);
    trace_.push_back(SessionRoundTrace{trace_.size() + 1, current_options_->raw_texts(), current_pred_->chosen, y,
                                       current_pred_->diagnostics,
                                       {current_pred_->fused.probs().begin(), current_pred_->fused.probs().end()}});

    if (done()) {
      current_options_.reset();
      current_pred_.reset();
      nlohmann::json out = snapshot_locked();
      out["summary"] = trace_json_locked();
      return out;
    }
    start_round();
    return round_payload_locked();
  }

  /// Read-only view of the session.
  nlohmann::json state() const {
    std::lock_guard lk(mu_);
    return snapshot_locked();
  }

 private:
  bool done() const { return trace_.size() >= spec_.T; }

  void start_round() {
    current_options_ = generate_option_set(schema_, spec_.K, option_rng_);
    const auto parsed = parse_option_set(schema_, current_options_->raw_texts());
    const auto batch = sample_batch(*sampler_, *current_options_, history_, cfg_.sampler);
    current_pred_ = predict(cfg_, AgentVariant{}, state_, hypotheses_, parsed, spec_.K, &batch);
  }

  static nlohmann::json probs(const OptionDistribution& d) { return nlohmann::json(d.vec()); }

  nlohmann::json top_hypotheses_locked() const {
    const auto mass = state_.belief.masses();
    std::vector<std::size_t> idx(mass.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t k = std::min(top_k_, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) { return mass[a] > mass[b] || (mass[a] == mass[b] && a < b); });
    auto arr = nlohmann::json::array();
    for (std::size_t r = 0; r < k; ++r) {
      const auto& h = hypotheses_[idx[r]];
      nlohmann::json named = nlohmann::json::object();
      for (std::size_t j = 0; j < h.weights.size(); ++j) named[schema_.attributes[j].name] = h.weights[j];
      arr.push_back({{"rank", r + 1}, {"id", h.id + 1}, {"mass", mass[idx[r]]}, {"weights", h.weights},
                     {"named_weights", named}});
    }
    return arr;
  }

  static nlohmann::json diagnostics_json(const FusionDiagnostics& d) {
    return {{"w_llm", d.w_llm},         {"w_sym", d.w_sym},           {"llm_share", d.llm_share},
            {"bound", d.bound},         {"entropy_llm", d.entropy_llm}, {"entropy_sym", d.entropy_sym}};
  }

  nlohmann::json round_payload_locked() const {
    nlohmann::json opts = nlohmann::json::array();
    for (std::size_t i = 0; i < current_options_->size(); ++i)
      opts.push_back({{"index", i + 1}, {"text", current_options_->raw_texts()[i]}});
    const auto& p = *current_pred_;
    nlohmann::json rec{{"index", p.chosen + 1},
                       {"fused", probs(p.fused)},
                       {"pi_sym", probs(p.pi_sym)},
                       {"pi_llm", p.pi_llm ? probs(*p.pi_llm) : nlohmann::json(nullptr)},
                       {"pi_llm_raw", p.pi_llm_raw ? probs(*p.pi_llm_raw) : nlohmann::json(nullptr)},
                       {"features_ok", p.features_ok}};
    rec.update(diagnostics_json(p.diagnostics));
    return {{"session_id", id_},
            {"domain", to_string(spec_.domain)},
            {"round", trace_.size() + 1},
            {"T", spec_.T},
            {"K", spec_.K},
            {"complete", false},
            {"options", opts},
            {"recommendation", rec},
            {"top_hypotheses", top_hypotheses_locked()},
            {"belief_entropy", state_.belief.entropy()}};
  }

  nlohmann::json trace_json_locked() const {
    auto arr = nlohmann::json::array();
    for (const auto& r : trace_) {
      nlohmann::json j{{"round", r.round},
                       {"option_texts", r.option_texts},
                       {"recommendation", r.recommendation + 1},
                       {"choice", r.choice + 1},
                       {"fused", r.fused}};
      j.update(diagnostics_json(r.diagnostics));
      arr.push_back(std::move(j));
    }
    return arr;
  }

  nlohmann::json snapshot_locked() const {
    const auto mass = state_.belief.masses();
    double total = 0.0;
    for (double m : mass) total += m;
    nlohmann::json j{{"session_id", id_},
                     {"domain", to_string(spec_.domain)},
                     {"T", spec_.T},
                     {"K", spec_.K},
                     {"completed_rounds", trace_.size()},
                     {"complete", done()},
                     {"history", trace_json_locked()},
                     {"top_hypotheses", top_hypotheses_locked()},
                     {"belief_entropy", state_.belief.entropy()},
                     {"belief_total_mass", total},
                     {"hypothesis_count", hypotheses_.size()},
                     {"demo_user", demo_user_.has_value()}};
    if (!done()) j["current"] = round_payload_locked();
    return j;
  }

  std::string id_;
  EpisodeSpec spec_;
  DomainSchema schema_;
  AgentConfig cfg_;
  std::size_t top_k_;
  HypothesisSet hypotheses_;
  Rng option_rng_;
  Rng user_rng_;
  std::vector<double> persona_;
  std::optional<SimulatedUser> demo_user_;
  std::unique_ptr<SemanticSampler> sampler_;
  AgentState state_;
  InteractionHistory history_;
  std::optional<OptionSet> current_options_;
  std::optional<Prediction> current_pred_;
  std::vector<SessionRoundTrace> trace_;
  Clock::time_point created_, last_active_;
  mutable std::mutex mu_;
};

/// Owns all live sessions. Operations on one session are serialized by that
/// session's mutex; the map itself is guarded by a shared mutex.
class SessionManager {
 public:
  explicit SessionManager(SessionServiceConfig cfg) : cfg_(std::move(cfg)), id_rng_(std::random_device{}()) {}

  /// Validates the request body and opens a session.
  nlohmann::json create(const nlohmann::json& body) {
    EpisodeSpec spec;
    try {
      spec = episode_spec_from_json(body.is_null() ? nlohmann::json::object() : body);
    } catch (const ConfigError& e) {
      throw SessionError(400, e.what(), e.field());
    }
    if (spec.K > 26) throw SessionError(400, "K must be <= 26", "K");
    if (spec.T > 100) throw SessionError(400, "T must be <= 100", "T");
    if (body.contains("backend")) {
      const auto& b = body.at("backend");
      const bool ok = b.is_string() && ((b == "synthetic" && cfg_.backend == Backend::kSynthetic) ||
                                         (b == "http" && cfg_.backend == Backend::kHttp));
      if (!ok) throw SessionError(400, "backend must match the service backend", "backend");
    }
    bool demo = false;
    if (body.contains("demo_user")) {
      if (!body.at("demo_user").is_boolean()) throw SessionError(400, "demo_user must be a boolean", "demo_user");
      demo = body.at("demo_user").get<bool>();
    }
    sweep();
    auto s = std::make_shared<Session>(new_id(), spec, demo, cfg_);
    auto payload = s->open_payload();
    std::unique_lock lk(mu_);
    sessions_.emplace(s->id(), std::move(s));
    return payload;
  }

  nlohmann::json submit(const std::string& id, const nlohmann::json& body) {
    auto s = find(id);
    std::optional<std::size_t> choice;
    bool auto_choice = false;
    if (body.is_object() && body.contains("auto")) {
      if (!body.at("auto").is_boolean()) throw SessionError(400, "auto must be a boolean", "auto");
      auto_choice = body.at("auto").get<bool>();
    }
    if (!auto_choice) {
      if (!body.is_object() || !body.contains("choice")) throw SessionError(400, "missing field 'choice'", "choice");
      const auto& c = body.at("choice");
      if (!c.is_number_integer()) throw SessionError(400, "choice must be an integer", "choice");
      const auto v = c.get<long long>();
      if (v < 1) throw SessionError(400, "choice must be >= 1", "choice");
      choice = static_cast<std::size_t>(v);
    }
    return s->submit(choice, auto_choice);
  }

  nlohmann::json state(const std::string& id) const { return find(id)->state(); }

  std::size_t size() const {
    std::shared_lock lk(mu_);
    return sessions_.size();
  }

  /// Drops sessions idle longer than the configured TTL.
  std::size_t sweep() {
    const auto now = Session::Clock::now();
    std::unique_lock lk(mu_);
    std::size_t n = 0;
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (now - it->second->last_active() > cfg_.idle_ttl) {
        it = sessions_.erase(it);
        ++n;
      } else {
        ++it;
      }
    }
    return n;
  }

  /// Writes every session's state snapshot to one JSON file.
  void snapshot_to(const std::filesystem::path& path) const {
    nlohmann::json all = nlohmann::json::array();
    {
      std::shared_lock lk(mu_);
      for (const auto& [id, s] : sessions_) all.push_back(s->state());
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write snapshot " + path.string());
    f << all.dump(2) << '\n';
  }

  const SessionServiceConfig& config() const { return cfg_; }

 private:
  std::shared_ptr<Session> find(const std::string& id) const {
    std::shared_lock lk(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw SessionError(404, "unknown session '" + id + "'");
    return it->second;
  }

  std::string new_id() {
    std::lock_guard lk(id_mu_);
    static const char* hex = "0123456789abcdef";
    std::string s(32, '0');
    for (auto& c : s) c = hex[id_rng_() & 15u];
    return s;
  }

  SessionServiceConfig cfg_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex id_mu_;
  std::mt19937_64 id_rng_;
};

}  // namespace adaptfuse
