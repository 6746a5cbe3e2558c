#pragma once

// Episode runner, experiment suites, persisted records and summary tables.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "adaptfuse/agent.hpp"
#include "adaptfuse/http_sampler.hpp"
#include "adaptfuse/stats.hpp"
#include "adaptfuse/synthetic_sampler.hpp"
#include "adaptfuse/tasks.hpp"

namespace adaptfuse {

// ---------------------------------------------------------------------------
// Records

struct RoundRecord {
  std::size_t round = 0;       // 1-based
  std::size_t prediction = 0;  // 0-based
  std::size_t truth = 0;       // user's choice, 0-based
  std::vector<std::string> option_texts;
  std::vector<double> pi_sym;
  std::vector<double> pi_llm_raw;  // empty for variants without the sampler
  std::vector<double> pi_llm;
  std::vector<double> fused;
  double w_llm = 0.0;
  double w_sym = 0.0;
  double llm_share = 0.0;
  double bound = 0.0;
  double belief_entropy = 0.0;  // after this round's update, nats
  double true_mass = -1.0;      // posterior mass on h* after the update; -1 when h* is not in the set
  double h_star_entropy = 0.0;  // normalized entropy of h*'s choice distribution on this round
  bool features_ok = true;
  SampleBatch batch;
  double heldout_accuracy = 0.0;
  std::uint64_t checksum_before = 0;  // agent state before the held-out block
  std::uint64_t checksum_after = 0;

  bool heldout_isolated() const { return checksum_before == checksum_after; }
};

struct EpisodeRecord {
  EpisodeSpec spec;
  std::string variant;
  std::vector<double> true_preference;
  bool true_in_set = false;
  std::size_t hypothesis_count = 0;
  std::vector<RoundRecord> rounds;
};

// ---------------------------------------------------------------------------
// Running one episode

/// An episode with every option description already run through the parser.
struct PreparedEpisode {
  Episode episode;
  std::vector<std::optional<OptionSet>> parsed_rounds;
  std::vector<std::optional<OptionSet>> parsed_held_out;
};

inline PreparedEpisode prepare_episode(Episode ep) {
  PreparedEpisode p;
  for (const auto& x : ep.rounds) p.parsed_rounds.push_back(parse_option_set(ep.schema, x.raw_texts()));
  for (const auto& x : ep.held_out) p.parsed_held_out.push_back(parse_option_set(ep.schema, x.raw_texts()));
  p.episode = std::move(ep);
  return p;
}

inline PreparedEpisode prepare_episode(const EpisodeSpec& spec) { return prepare_episode(generate_episode(spec)); }

inline std::vector<double> copy_probs(const OptionDistribution& d) { return {d.probs().begin(), d.probs().end()}; }

/// Held-out accuracy with a frozen belief and read-only memory.
inline double evaluate_held_out(const AgentConfig& cfg, const AgentVariant& v, const AgentState& state,
                                const PreparedEpisode& pe, const InteractionHistory& history,
                                SemanticSampler* sampler) {
  const auto& ep = pe.episode;
  if (ep.held_out.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t s = 0; s < ep.held_out.size(); ++s) {
    const OptionSet& x = ep.held_out[s];
    std::optional<SampleBatch> batch;
    if (v.uses_sampler()) batch = sample_batch(*sampler, x, history, cfg.sampler);
    const auto p = predict(cfg, v, state, ep.hypotheses, pe.parsed_held_out[s], x.size(), batch ? &*batch : nullptr);
    if (p.chosen == ep.user.preferred(x)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ep.held_out.size());
}

/// Runs the interaction rounds of one episode and evaluates the held-out
/// sets after each round. `sampler` may be null for variants that do not
/// use it.
inline EpisodeRecord run_episode(const PreparedEpisode& pe, const AgentVariant& v, SemanticSampler* sampler,
                                 const AgentConfig& cfg) {
  const auto& ep = pe.episode;
  require(!v.uses_sampler() || sampler != nullptr, "run_episode: variant needs a sampler");
  EpisodeRecord rec;
  rec.spec = ep.spec;
  rec.variant = v.tag();
  rec.true_preference = ep.user.weights;
  rec.true_in_set = ep.true_index.has_value();
  rec.hypothesis_count = ep.hypotheses.size();

  AgentState state = initial_state(cfg, v, ep.hypotheses.size());
  InteractionHistory history;
  for (std::size_t t = 0; t < ep.rounds.size(); ++t) {
    const OptionSet& x = ep.rounds[t];
    const auto& parsed = pe.parsed_rounds[t];
    std::optional<SampleBatch> batch;
    if (v.uses_sampler()) batch = sample_batch(*sampler, x, history, cfg.sampler);
    const Prediction pred = predict(cfg, v, state, ep.hypotheses, parsed, x.size(), batch ? &*batch : nullptr);

    const std::size_t y = ep.choices[t];
    state = commit_round(cfg, state, pred, ep.hypotheses, parsed, y);
    history.append(x, y);

    RoundRecord r;
    r.round = t + 1;
    r.prediction = pred.chosen;
    r.truth = y;
    r.option_texts = x.raw_texts();
    r.pi_sym = copy_probs(pred.pi_sym);
    if (pred.pi_llm_raw) r.pi_llm_raw = copy_probs(*pred.pi_llm_raw);
    if (pred.pi_llm) r.pi_llm = copy_probs(*pred.pi_llm);
    r.fused = copy_probs(pred.fused);
    r.w_llm = pred.diagnostics.w_llm;
    r.w_sym = pred.diagnostics.w_sym;
    r.llm_share = pred.diagnostics.llm_share;
    r.bound = pred.diagnostics.bound;
    r.belief_entropy = state.belief.entropy();
    if (ep.true_index) r.true_mass = state.belief.mass(*ep.true_index);
    r.h_star_entropy = normalized_entropy(choice_likelihood(cfg.engine.choice, ep.user.weights, x));
    r.features_ok = pred.features_ok;
    if (batch) r.batch = std::move(*batch);

    r.checksum_before = state.checksum();
    r.heldout_accuracy = evaluate_held_out(cfg, v, state, pe, history, sampler);
    r.checksum_after = state.checksum();
    rec.rounds.push_back(std::move(r));
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Record persistence (newline-delimited JSON)

namespace detail {

inline std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::uint64_t parse_hex64(const std::string& s) { return std::stoull(s, nullptr, 16); }

inline nlohmann::json batch_to_json(const SampleBatch& b) {
  auto arr = nlohmann::json::array();
  for (const auto& s : b.samples) {
    if (s.valid())
      arr.push_back({{"prediction", *s.prediction + 1}, {"confidence", s.confidence}});
    else
      arr.push_back({{"prediction", nullptr}, {"confidence", nullptr}});
  }
  return arr;
}

inline SampleBatch batch_from_json(const nlohmann::json& j) {
  SampleBatch b;
  for (const auto& s : j) {
    Sample x;
    if (!s.at("prediction").is_null()) {
      x.prediction = s.at("prediction").get<std::size_t>() - 1;
      x.confidence = s.at("confidence").get<double>();
    }
    b.samples.push_back(x);
  }
  return b;
}

}  // namespace detail

inline nlohmann::json to_json(const RoundRecord& r) {
  return {{"type", "round"},
          {"round", r.round},
          {"prediction", r.prediction + 1},
          {"truth", r.truth + 1},
          {"option_texts", r.option_texts},
          {"pi_sym", r.pi_sym},
          {"pi_llm_raw", r.pi_llm_raw},
          {"pi_llm", r.pi_llm},
          {"fused", r.fused},
          {"w_llm", r.w_llm},
          {"w_sym", r.w_sym},
          {"llm_share", r.llm_share},
          {"bound", r.bound},
          {"belief_entropy", r.belief_entropy},
          {"true_mass", r.true_mass},
          {"h_star_entropy", r.h_star_entropy},
          {"features_ok", r.features_ok},
          {"samples", detail::batch_to_json(r.batch)},
          {"heldout_accuracy", r.heldout_accuracy},
          {"checksum_before", detail::hex64(r.checksum_before)},
          {"checksum_after", detail::hex64(r.checksum_after)}};
}

inline RoundRecord round_record_from_json(const nlohmann::json& j) {
  RoundRecord r;
  r.round = j.at("round").get<std::size_t>();
  r.prediction = j.at("prediction").get<std::size_t>() - 1;
  r.truth = j.at("truth").get<std::size_t>() - 1;
  r.option_texts = j.at("option_texts").get<std::vector<std::string>>();
  r.pi_sym = j.at("pi_sym").get<std::vector<double>>();
  r.pi_llm_raw = j.at("pi_llm_raw").get<std::vector<double>>();
  r.pi_llm = j.at("pi_llm").get<std::vector<double>>();
  r.fused = j.at("fused").get<std::vector<double>>();
  r.w_llm = j.at("w_llm").get<double>();
  r.w_sym = j.at("w_sym").get<double>();
  r.llm_share = j.at("llm_share").get<double>();
  r.bound = j.at("bound").get<double>();
  r.belief_entropy = j.at("belief_entropy").get<double>();
  r.true_mass = j.at("true_mass").get<double>();
  r.h_star_entropy = j.at("h_star_entropy").get<double>();
  r.features_ok = j.at("features_ok").get<bool>();
  r.batch = detail::batch_from_json(j.at("samples"));
  r.heldout_accuracy = j.at("heldout_accuracy").get<double>();
  r.checksum_before = detail::parse_hex64(j.at("checksum_before").get<std::string>());
  r.checksum_after = detail::parse_hex64(j.at("checksum_after").get<std::string>());
  return r;
}

/// First line: episode header. Then one line per interaction round.
inline std::string to_ndjson(const EpisodeRecord& rec) {
  std::string out = nlohmann::json{{"type", "episode"},
                                   {"variant", rec.variant},
                                   {"seed", rec.spec.seed},
                                   {"spec", to_json(rec.spec)},
                                   {"true_preference", rec.true_preference},
                                   {"true_in_set", rec.true_in_set},
                                   {"hypothesis_count", rec.hypothesis_count}}
                        .dump();
  out += '\n';
  for (const auto& r : rec.rounds) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

inline EpisodeRecord episode_record_from_ndjson(std::istream& in) {
  EpisodeRecord rec;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const auto type = j.at("type").get<std::string>();
    if (type == "episode") {
      rec.spec = episode_spec_from_json(j.at("spec"));
      rec.variant = j.at("variant").get<std::string>();
      rec.true_preference = j.at("true_preference").get<std::vector<double>>();
      rec.true_in_set = j.at("true_in_set").get<bool>();
      rec.hypothesis_count = j.at("hypothesis_count").get<std::size_t>();
      header = true;
    } else if (type == "round") {
      rec.rounds.push_back(round_record_from_json(j));
    }
  }
  if (!header) throw std::runtime_error("episode record has no header line");
  return rec;
}

inline std::string record_file_name(const std::string& variant, std::uint64_t seed) {
  std::string v;
  for (char c : variant) v += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_') ? c : '_';
  while (!v.empty() && v.back() == '_') v.pop_back();
  return v + "__seed" + std::to_string(seed) + ".ndjson";
}

inline std::vector<EpisodeRecord> read_records(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::path recdir = fs::exists(dir / "records") ? dir / "records" : dir;
  if (!fs::is_directory(recdir)) throw std::runtime_error("no record directory at " + recdir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(recdir))
    if (e.is_regular_file() && e.path().extension() == ".ndjson") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<EpisodeRecord> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw std::runtime_error("cannot open " + f.string());
    out.push_back(episode_record_from_ndjson(in));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Summaries

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RoundStat {
  std::size_t round = 0;  // 1-based
  double mean_acc = 0.0;
  double stderr_acc = 0.0;
  std::size_t n = 0;
};

struct VariantSummary {
  std::string variant;
  std::vector<RoundStat> rounds;

  const RoundStat& first() const { return rounds.front(); }
  const RoundStat& final() const { return rounds.back(); }
};

struct RunSummary {
  std::vector<VariantSummary> variants;  // in first-seen order

  const VariantSummary* find(const std::string& tag) const {
    for (const auto& v : variants)
      if (v.variant == tag) return &v;
    return nullptr;
  }
};

/// Per-variant, per-round mean and standard error of held-out accuracy
/// across seeds. Requires at least three episodes per variant.
inline RunSummary summarize(const std::vector<EpisodeRecord>& records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const EpisodeRecord*>> by;
  for (const auto& r : records) {
    if (!by.count(r.variant)) order.push_back(r.variant);
    by[r.variant].push_back(&r);
  }
  RunSummary s;
  for (const auto& tag : order) {
    const auto& eps = by[tag];
    if (eps.size() < 3)
      throw std::runtime_error("variant '" + tag + "' has " + std::to_string(eps.size()) +
                               " episodes; standard errors need at least 3 seeds");
    const std::size_t T = eps.front()->rounds.size();
    VariantSummary vs{tag, {}};
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> acc;
      for (const auto* e : eps) {
        if (e->rounds.size() != T) throw std::runtime_error("variant '" + tag + "' mixes episode lengths");
        acc.push_back(e->rounds[t].heldout_accuracy);
      }
      vs.rounds.push_back({t + 1, stats::mean(acc), stats::standard_error(acc), acc.size()});
    }
    s.variants.push_back(std::move(vs));
  }
  return s;
}

inline std::string summary_csv(const RunSummary& s) {
  std::string out = "variant,round,mean_acc,stderr\n";
  for (const auto& v : s.variants)
    for (const auto& r : v.rounds)
      out += v.variant + "," + std::to_string(r.round) + "," + fmt17(r.mean_acc) + "," + fmt17(r.stderr_acc) + "\n";
  return out;
}

/// First- and final-round columns per variant.
inline std::string rounds_table_csv(const RunSummary& s) {
  std::string out = "variant,n_seeds,first_round_mean,first_round_stderr,final_round_mean,final_round_stderr\n";
  for (const auto& v : s.variants)
    out += v.variant + "," + std::to_string(v.first().n) + "," + fmt17(v.first().mean_acc) + "," +
           fmt17(v.first().stderr_acc) + "," + fmt17(v.final().mean_acc) + "," + fmt17(v.final().stderr_acc) + "\n";
  return out;
}

/// Ablation layout: one row per variant with its final-round gap to the
/// full method.
inline std::string ablation_table_csv(const RunSummary& s, const std::string& full = "adaptfuse") {
  const auto* ref = s.find(full);
  std::string out = "variant,first_round_mean,final_round_mean,final_round_stderr,delta_final_vs_full\n";
  for (const auto& v : s.variants)
    out += v.variant + "," + fmt17(v.first().mean_acc) + "," + fmt17(v.final().mean_acc) + "," +
           fmt17(v.final().stderr_acc) + "," + (ref ? fmt17(v.final().mean_acc - ref->final().mean_acc) : "") + "\n";
  return out;
}

struct ScheduleRow {
  std::size_t round = 0;
  double mean_w_sym = 0.0;
  double mean_w_llm = 0.0;
  double mean_llm_share = 0.0;
  double mean_h_star_entropy = 0.0;
  std::size_t n = 0;
};

/// Per-round mean fusion weights over the records of one variant.
inline std::vector<ScheduleRow> fusion_schedule_report(const std::vector<EpisodeRecord>& records,
                                                       const std::string& variant = "adaptfuse") {
  std::vector<ScheduleRow> rows;
  for (const auto& e : records) {
    if (e.variant != variant) continue;
    if (rows.size() < e.rounds.size()) rows.resize(e.rounds.size());
    for (std::size_t t = 0; t < e.rounds.size(); ++t) {
      auto& row = rows[t];
      row.round = t + 1;
      row.mean_w_sym += e.rounds[t].w_sym;
      row.mean_w_llm += e.rounds[t].w_llm;
      row.mean_llm_share += e.rounds[t].llm_share;
      row.mean_h_star_entropy += e.rounds[t].h_star_entropy;
      ++row.n;
    }
  }
  for (auto& row : rows) {
    if (row.n == 0) continue;
    const double n = static_cast<double>(row.n);
    row.mean_w_sym /= n;
    row.mean_w_llm /= n;
    row.mean_llm_share /= n;
    row.mean_h_star_entropy /= n;
  }
  return rows;
}

inline std::string schedule_csv(const std::vector<ScheduleRow>& rows) {
  std::string out = "round,mean_w_sym,mean_w_llm,mean_llm_share,mean_h_star_entropy,n\n";
  for (const auto& r : rows)
    out += std::to_string(r.round) + "," + fmt17(r.mean_w_sym) + "," + fmt17(r.mean_w_llm) + "," +
           fmt17(r.mean_llm_share) + "," + fmt17(r.mean_h_star_entropy) + "," + std::to_string(r.n) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Suites

struct SuiteConfig {
  EpisodeSpec base;  // seed is replaced per run
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<AgentVariant> variants{AgentVariant{}};
  Backend backend = Backend::kSynthetic;
  SyntheticSamplerConfig synthetic{};
  HttpSamplerConfig http{};
  AgentConfig agent{};
  std::size_t jobs = 1;
};

namespace detail {

inline const nlohmann::json* child(const nlohmann::json& j, const char* key, const std::string& path) {
  if (!j.contains(key) || j.at(key).is_null()) return nullptr;
  if (!j.at(key).is_object()) throw ConfigError(path + key, "expected an object");
  return &j.at(key);
}

inline BetaParams beta_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(field, "expected [a, b]");
  BetaParams b{j[0].get<double>(), j[1].get<double>()};
  if (!(b.a > 0.0 && b.b > 0.0)) throw ConfigError(field, "Beta parameters must be > 0");
  return b;
}

}  // namespace detail

/// Reads a suite configuration; errors name the offending field.
inline SuiteConfig suite_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "expected an object");
  SuiteConfig c;
  c.base = episode_spec_from_json(j);

  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    if (!s.is_array() || s.empty()) throw ConfigError("seeds", "expected a nonempty array of integers");
    c.seeds.clear();
    for (const auto& v : s) {
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
        throw ConfigError("seeds", "expected nonnegative integers");
      c.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  if (j.contains("variants")) {
    const auto& vs = j.at("variants");
    if (!vs.is_array() || vs.empty()) throw ConfigError("variants", "expected a nonempty array of variant tags");
    c.variants.clear();
    for (const auto& v : vs) {
      if (!v.is_string()) throw ConfigError("variants", "expected strings");
      auto parsed = AgentVariant::parse(v.get<std::string>());
      if (!parsed) throw ConfigError("variants", "unknown variant '" + v.get<std::string>() + "'");
      c.variants.push_back(*parsed);
    }
  }
  const std::string backend = detail::get_field<std::string>(j, "backend", "", "synthetic");
  if (backend == "synthetic") c.backend = Backend::kSynthetic;
  else if (backend == "http") c.backend = Backend::kHttp;
  else throw ConfigError("backend", "expected 'synthetic' or 'http'");
  c.jobs = static_cast<std::size_t>(std::max<long long>(1, detail::get_field<long long>(j, "jobs", "", 1)));

  if (const auto* s = detail::child(j, "sampler", "")) {
    auto& sc = c.agent.sampler;
    const auto n = detail::get_field<long long>(*s, "n_samples", "sampler.", static_cast<long long>(sc.n_samples));
    if (n < 1) throw ConfigError("sampler.n_samples", "must be >= 1");
    sc.n_samples = static_cast<std::size_t>(n);
    sc.temperature_pool = detail::get_field<std::vector<double>>(*s, "temperatures", "sampler.", sc.temperature_pool);
    sc.hint_pool = detail::get_field<std::vector<std::string>>(*s, "hints", "sampler.", sc.hint_pool);
    if (sc.temperature_pool.empty()) throw ConfigError("sampler.temperatures", "must be nonempty");
    for (double t : sc.temperature_pool)
      if (!(t > 0.0)) throw ConfigError("sampler.temperatures", "temperatures must be > 0");
    if (sc.hint_pool.empty()) throw ConfigError("sampler.hints", "must be nonempty");

    auto& syn = c.synthetic;
    if (s->contains("accuracy")) {
      const auto& a = s->at("accuracy");
      if (a.is_number()) syn.accuracy = {a.get<double>()};
      else if (a.is_array()) syn.accuracy = a.get<std::vector<double>>();
      else throw ConfigError("sampler.accuracy", "expected a number or an array");
      for (double p : syn.accuracy)
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("sampler.accuracy", "must be in [0,1]");
      if (syn.accuracy.empty()) throw ConfigError("sampler.accuracy", "must be nonempty");
    }
    if (s->contains("correct_confidence"))
      syn.correct_confidence = detail::beta_from_json(s->at("correct_confidence"), "sampler.correct_confidence");
    if (s->contains("incorrect_confidence"))
      syn.incorrect_confidence = detail::beta_from_json(s->at("incorrect_confidence"), "sampler.incorrect_confidence");
    syn.failure_rate = detail::get_field<double>(*s, "failure_rate", "sampler.", syn.failure_rate);
    if (!(syn.failure_rate >= 0.0 && syn.failure_rate <= 1.0))
      throw ConfigError("sampler.failure_rate", "must be in [0,1]");
  }
  if (const auto* h = detail::child(j, "http", "")) {
    auto& hc = c.http;
    hc.base_url = detail::get_field<std::string>(*h, "base_url", "http.", hc.base_url);
    hc.model = detail::get_field<std::string>(*h, "model", "http.", hc.model);
    hc.max_tokens = detail::get_field<int>(*h, "max_tokens", "http.", hc.max_tokens);
    hc.timeout_seconds = detail::get_field<double>(*h, "timeout_seconds", "http.", hc.timeout_seconds);
    hc.retries = detail::get_field<int>(*h, "retries", "http.", hc.retries);
    if (hc.max_tokens < 1) throw ConfigError("http.max_tokens", "must be >= 1");
    if (!(hc.timeout_seconds > 0.0)) throw ConfigError("http.timeout_seconds", "must be > 0");
    if (hc.retries < 0) throw ConfigError("http.retries", "must be >= 0");
  }
  if (const auto* e = detail::child(j, "engine", "")) {
    auto& a = c.agent;
    a.engine.choice.beta = detail::get_field<double>(*e, "beta", "engine.", a.engine.choice.beta);
    a.engine.likelihood_floor = detail::get_field<double>(*e, "likelihood_floor", "engine.", a.engine.likelihood_floor);
    a.alpha0 = detail::get_field<double>(*e, "alpha0", "engine.", a.alpha0);
    a.momentum = detail::get_field<double>(*e, "momentum", "engine.", a.momentum);
    a.fusion.weight_floor = detail::get_field<double>(*e, "weight_floor", "engine.", a.fusion.weight_floor);
    if (!(a.engine.choice.beta > 0.0)) throw ConfigError("engine.beta", "must be > 0");
    if (!(a.engine.likelihood_floor > 0.0 && a.engine.likelihood_floor < 1.0 / static_cast<double>(c.base.K)))
      throw ConfigError("engine.likelihood_floor", "must be in (0, 1/K)");
    if (!(a.alpha0 > 0.0)) throw ConfigError("engine.alpha0", "must be > 0");
    if (!(a.momentum >= 0.0 && a.momentum < 1.0)) throw ConfigError("engine.momentum", "must be in [0,1)");
    if (!(a.fusion.weight_floor > 0.0 && a.fusion.weight_floor <= 1.0))
      throw ConfigError("engine.weight_floor", "must be in (0,1]");
  }
  c.http.item_noun = c.base.schema().item_noun;
  return c;
}

inline SuiteConfig load_suite_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("<root>", "file is not valid JSON");
  return suite_config_from_json(j);
}

/// Builds the sampler a variant uses on one episode. Every sampler-using
/// variant on a given seed gets an identically seeded stream.
inline std::unique_ptr<SemanticSampler> make_sampler(const SuiteConfig& c, const Episode& ep) {
  if (c.backend == Backend::kHttp) {
    HttpSamplerConfig h = c.http;
    h.item_noun = ep.schema.item_noun;
    return std::make_unique<HttpChatSampler>(h);
  }
  return std::make_unique<SyntheticSampler>(c.synthetic, ep.user.weights, make_rng(ep.spec.seed, Stream::kSampler));
}

/// Runs every (seed, variant) pair. Episodes are generated once per seed and
/// shared across variants. Results come back ordered by variant, then seed.
inline std::vector<EpisodeRecord> run_records(const SuiteConfig& c) {
  const std::size_t ns = c.seeds.size();
  const std::size_t nv = c.variants.size();
  std::vector<EpisodeRecord> out(ns * nv);
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr err;

  auto worker = [&] {
    for (;;) {
      const std::size_t si = next.fetch_add(1);
      if (si >= ns) return;
      try {
        EpisodeSpec spec = c.base;
        spec.seed = c.seeds[si];
        const PreparedEpisode pe = prepare_episode(spec);
        for (std::size_t vi = 0; vi < nv; ++vi) {
          std::unique_ptr<SemanticSampler> sampler;
          if (c.variants[vi].uses_sampler()) sampler = make_sampler(c, pe.episode);
          out[vi * ns + si] = run_episode(pe, c.variants[vi], sampler.get(), c.agent);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(c.jobs, ns));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
  return out;
}

/// Runs a suite, writes one record file per (variant, seed) under
/// out/records and the summary CSV to out/summary.csv.
inline RunSummary run_suite(const SuiteConfig& c, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  if (c.seeds.size() < 3) throw ConfigError("seeds", "at least 3 seeds are required for standard errors");
  const auto records = run_records(c);
  const RunSummary summary = summarize(records);

  fs::create_directories(out_dir / "records");
  for (const auto& r : records) {
    std::ofstream f(out_dir / "records" / record_file_name(r.variant, r.spec.seed), std::ios::binary);
    if (!f) throw std::runtime_error("cannot write record file in " + (out_dir / "records").string());
    f << to_ndjson(r);
  }
  std::ofstream f(out_dir / "summary.csv", std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + (out_dir / "summary.csv").string());
  f << summary_csv(summary);
  return summary;
}

}  // namespace adaptfuse
