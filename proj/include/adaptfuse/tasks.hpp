#pragma once

// Task domains (flight, hotel, synthetic d-attribute items): option
// generation, text rendering and deterministic parsing, feature
// normalization, the preference-grid hypothesis set and the simulated user.
//
// Raw attribute values are generated on the same decimal grid the text
// templates print, so parse(render(x)) reproduces the generator's features
// bit for bit.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adaptfuse/choice_model.hpp"
#include "adaptfuse/core.hpp"
#include "adaptfuse/rng.hpp"

namespace adaptfuse {

enum class Domain { kFlight, kHotel, kSynthetic };

inline std::string to_string(Domain d) {
  switch (d) {
    case Domain::kFlight: return "flight";
    case Domain::kHotel: return "hotel";
    case Domain::kSynthetic: return "synthetic";
  }
  return "?";
}

inline std::optional<Domain> domain_from_string(const std::string& s) {
  if (s == "flight") return Domain::kFlight;
  if (s == "hotel") return Domain::kHotel;
  if (s == "synthetic") return Domain::kSynthetic;
  return std::nullopt;
}

/// One attribute: raw integer ticks in [tick_lo, tick_hi], a raw value of
/// ticks / tick_div, and a normalization range [lo, hi] on that value.
struct Attribute {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  long tick_lo = 0;
  long tick_hi = 1;
  double tick_div = 1.0;
  int direction = +1;  // normalized value increases with the raw value

  double value_of(long ticks) const { return static_cast<double>(ticks) / tick_div; }
  double normalize(double value) const { return std::clamp((value - lo) / (hi - lo), 0.0, 1.0); }
  bool in_range(double value) const { return value >= lo && value <= hi; }
};

struct DomainSchema {
  Domain domain = Domain::kFlight;
  std::vector<Attribute> attributes;
  std::string item_noun;  // "Flight", "Hotel", "Item"

  std::size_t dim() const { return attributes.size(); }
  std::string name() const { return to_string(domain); }
};

inline DomainSchema flight_schema() {
  return DomainSchema{Domain::kFlight,
                      {
                          {"departure_time", 6.0, 22.0, 6 * 60, 22 * 60, 60.0, +1},  // hours
                          {"duration", 0.5, 20.0, 30, 20 * 60, 60.0, +1},            // hours
                          {"stops", 0.0, 2.0, 0, 2, 1.0, +1},
                          {"price", 100.0, 1000.0, 100, 1000, 1.0, +1},  // USD
                      },
                      "Flight"};
}

inline DomainSchema hotel_schema() {
  return DomainSchema{Domain::kHotel,
                      {
                          {"distance", 0.5, 20.0, 5, 200, 10.0, +1},  // km, one decimal
                          {"price", 50.0, 500.0, 50, 500, 1.0, +1},   // USD per night
                          {"rating", 1.0, 5.0, 1, 5, 1.0, +1},
                          {"amenities", 0.0, 10.0, 0, 10, 1.0, +1},
                      },
                      "Hotel"};
}

/// d attributes attr_1..attr_d with values on a 1e-4 grid in [0,1].
inline DomainSchema synthetic_schema(std::size_t d) {
  require(d >= 2 && d <= 8, "synthetic_schema: d must be in [2,8]");
  DomainSchema s{Domain::kSynthetic, {}, "Item"};
  for (std::size_t j = 1; j <= d; ++j)
    s.attributes.push_back({"attr_" + std::to_string(j), 0.0, 1.0, 0, 10000, 10000.0, +1});
  return s;
}

inline DomainSchema make_schema(Domain domain, std::size_t d = 4) {
  switch (domain) {
    case Domain::kFlight: return flight_schema();
    case Domain::kHotel: return hotel_schema();
    case Domain::kSynthetic: return synthetic_schema(d);
  }
  throw ContractViolation("make_schema: unknown domain");
}

// ---------------------------------------------------------------------------
// Rendering

namespace detail {

inline std::string clock_12h(long minutes) {
  const long h24 = (minutes / 60) % 24;
  const long mm = minutes % 60;
  const long h12 = h24 % 12 == 0 ? 12 : h24 % 12;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02ld:%02ld %s", h12, mm, h24 < 12 ? "AM" : "PM");
  return buf;
}

}  // namespace detail

/// Renders one option from raw ticks. `position` is 1-based.
inline std::string render_option(const DomainSchema& schema, std::size_t position,
                                 const std::vector<long>& ticks) {
  require(ticks.size() == schema.dim(), "render_option: tick count != d");
  char buf[512];
  switch (schema.domain) {
    case Domain::kFlight:
      std::snprintf(buf, sizeof buf,
                    "Flight %zu: Departure time: %s, Duration: %ldhr %ldmin, Number of stops: %ld, Price: $%ld",
                    position, detail::clock_12h(ticks[0]).c_str(), ticks[1] / 60, ticks[1] % 60, ticks[2],
                    ticks[3]);
      return buf;
    case Domain::kHotel:
      std::snprintf(buf, sizeof buf,
                    "Hotel %zu: Distance to downtown: %ld.%ld km, Price: $%ld/night, Rating: %ld stars, "
                    "Amenities: %ld",
                    position, ticks[0] / 10, ticks[0] % 10, ticks[1], ticks[2], ticks[3]);
      return buf;
    case Domain::kSynthetic: {
      std::string out = "Item " + std::to_string(position) + ":";
      for (std::size_t j = 0; j < ticks.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%s attr_%zu: %ld.%04ld", j == 0 ? "" : ",", j + 1, ticks[j] / 10000,
                      ticks[j] % 10000);
        out += buf;
      }
      return out;
    }
  }
  return {};
}

inline FeatureVector features_from_ticks(const DomainSchema& schema, const std::vector<long>& ticks) {
  require(ticks.size() == schema.dim(), "features_from_ticks: tick count != d");
  std::vector<double> v(ticks.size());
  for (std::size_t j = 0; j < ticks.size(); ++j) {
    const auto& a = schema.attributes[j];
    v[j] = a.normalize(a.value_of(ticks[j]));
  }
  return FeatureVector(std::move(v));
}

// ---------------------------------------------------------------------------
// Parsing

struct ParsedOption {
  std::optional<FeatureVector> features;
  std::vector<std::string> notes;  // range clamps and other non-fatal remarks
  std::string error;               // set when features is empty

  bool ok() const { return features.has_value(); }
};

namespace detail {

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n.");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n.");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Counts the items of "wifi, pool, and gym" / "free parking and free breakfast".
inline std::optional<double> amenity_count(const std::string& field) {
  const std::string t = trim(field);
  if (t.empty()) return std::nullopt;
  if (std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); })) return to_double(t);
  if (t == "none" || t == "no amenities") return 0.0;
  static const std::regex sep(R"(\s*,\s*(?:and\s+)?|\s+and\s+)");
  double n = 0.0;
  for (std::sregex_token_iterator it(t.begin(), t.end(), sep, -1), end; it != end; ++it)
    if (!trim(it->str()).empty()) n += 1.0;
  return n > 0.0 ? std::optional<double>(n) : std::nullopt;
}

inline std::optional<double> match_number(const std::string& text, const std::regex& re) {
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  return to_double(m[1].str());
}

inline std::optional<double> parse_departure_hours(const std::string& text) {
  static const std::regex re(R"(departure(?: time)?\s*:\s*(\d{1,2}):(\d{2})\s*([ap])\.?m\.?)");
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  const long h = std::stol(m[1].str());
  const long mm = std::stol(m[2].str());
  if (h < 1 || h > 12 || mm > 59) return std::nullopt;
  long h24 = h % 12;
  if (m[3].str() == "p") h24 += 12;
  return static_cast<double>(h24 * 60 + mm) / 60.0;
}

inline std::optional<double> parse_duration_hours(const std::string& text) {
  static const std::regex field(R"(duration\s*:\s*([^,]*))");
  static const std::regex hours(R"((\d+)\s*(?:hrs?|hours?|h)\b)");
  static const std::regex mins(R"((\d+)\s*(?:mins?|minutes?|m)\b)");
  std::smatch f;
  if (!std::regex_search(text, f, field)) return std::nullopt;
  const std::string body = f[1].str();
  std::smatch mh, mm;
  const bool has_h = std::regex_search(body, mh, hours);
  const bool has_m = std::regex_search(body, mm, mins);
  if (!has_h && !has_m) return std::nullopt;
  const long total = (has_h ? std::stol(mh[1].str()) * 60 : 0) + (has_m ? std::stol(mm[1].str()) : 0);
  return static_cast<double>(total) / 60.0;
}

inline std::optional<double> parse_distance_km(const std::string& text) {
  static const std::regex re(R"(distance(?: to downtown)?\s*:\s*(\d+(?:\.\d+)?)\s*(km|kilometers?|kilometres?|mi|miles?)\b)");
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  auto v = to_double(m[1].str());
  if (!v) return std::nullopt;
  if (m[2].str()[0] == 'm') *v *= 1.609344;
  return v;
}

}  // namespace detail

/// Extracts and normalizes the d attributes of one option description.
/// Out-of-range values are clamped to the range boundary and noted; a
/// missing or malformed attribute makes the whole option a parse failure.
inline ParsedOption parse_option(const DomainSchema& schema, const std::string& text) {
  using namespace detail;
  ParsedOption out;
  const std::string t = lower(text);
  if (trim(t).empty()) {
    out.error = "empty description";
    return out;
  }

  std::vector<std::optional<double>> raw(schema.dim());
  switch (schema.domain) {
    case Domain::kFlight: {
      static const std::regex stops(R"((?:number of )?stops\s*:\s*(\d+))");
      static const std::regex price(R"(price\s*:\s*\$?\s*(\d+(?:\.\d+)?))");
      raw[0] = parse_departure_hours(t);
      raw[1] = parse_duration_hours(t);
      raw[2] = match_number(t, stops);
      raw[3] = match_number(t, price);
      break;
    }
    case Domain::kHotel: {
      static const std::regex price(R"(price(?: per night)?\s*:\s*\$?\s*(\d+(?:\.\d+)?))");
      static const std::regex rating(R"(rating\s*:\s*(\d+(?:\.\d+)?)\s*(?:stars?)?)");
      static const std::regex amenities(R"(amenities\s*:\s*(.*)$)");
      raw[0] = parse_distance_km(t);
      raw[1] = match_number(t, price);
      raw[2] = match_number(t, rating);
      std::smatch m;
      if (std::regex_search(t, m, amenities)) raw[3] = amenity_count(m[1].str());
      break;
    }
    case Domain::kSynthetic: {
      static const std::regex attr(R"(attr_(\d+)\s*:\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:e[+-]?\d+)?))");
      for (auto it = std::sregex_iterator(t.begin(), t.end(), attr); it != std::sregex_iterator(); ++it) {
        const unsigned long j = std::stoul((*it)[1].str());
        if (j < 1 || j > raw.size()) continue;
        if (raw[j - 1]) {
          out.error = "duplicate attribute attr_" + std::to_string(j);
          return out;
        }
        raw[j - 1] = to_double((*it)[2].str());
      }
      break;
    }
  }

  std::vector<double> features(schema.dim());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    const auto& a = schema.attributes[j];
    if (!raw[j]) {
      out.error = "missing or malformed attribute '" + a.name + "'";
      return out;
    }
    if (!a.in_range(*raw[j]))
      out.notes.push_back(a.name + " value " + std::to_string(*raw[j]) + " outside [" + std::to_string(a.lo) +
                          ", " + std::to_string(a.hi) + "], clamped");
    features[j] = a.normalize(*raw[j]);
  }
  out.features = FeatureVector(std::move(features));
  return out;
}

/// Parses every description of a decision point; nullopt when any fails.
inline std::optional<OptionSet> parse_option_set(const DomainSchema& schema, const std::vector<std::string>& texts) {
  std::vector<FeatureVector> xs;
  xs.reserve(texts.size());
  for (const auto& t : texts) {
    auto p = parse_option(schema, t);
    if (!p.ok()) return std::nullopt;
    xs.push_back(std::move(*p.features));
  }
  return OptionSet(std::move(xs), texts);
}

// ---------------------------------------------------------------------------
// Generation

/// K options with raw values uniform over each attribute's tick range.
inline OptionSet generate_option_set(const DomainSchema& schema, std::size_t k, Rng& rng) {
  require(k >= 2, "generate_option_set: K must be >= 2");
  std::vector<FeatureVector> xs;
  std::vector<std::string> texts;
  xs.reserve(k);
  texts.reserve(k);
  std::vector<long> ticks(schema.dim());
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < ticks.size(); ++j)
      ticks[j] = uniform_int(rng, schema.attributes[j].tick_lo, schema.attributes[j].tick_hi);
    texts.push_back(render_option(schema, i + 1, ticks));
    xs.push_back(features_from_ticks(schema, ticks));
  }
  return OptionSet(std::move(xs), std::move(texts));
}

inline const std::array<double, 5>& preference_levels() {
  static const std::array<double, 5> levels{-1.0, -0.5, 0.0, 0.5, 1.0};
  return levels;
}

/// Full grid {-1, -0.5, 0, 0.5, 1}^d in lexicographic order (M = 5^d).
inline HypothesisSet build_hypothesis_set(std::size_t d) {
  require(d >= 1 && d <= 8, "build_hypothesis_set: d must be in [1,8]");
  const auto& lv = preference_levels();
  std::size_t m = 1;
  for (std::size_t j = 0; j < d; ++j) m *= lv.size();
  std::vector<std::vector<double>> rows(m, std::vector<double>(d));
  for (std::size_t r = 0; r < m; ++r) {
    std::size_t code = r;
    for (std::size_t j = d; j-- > 0;) {
      rows[r][j] = lv[code % lv.size()];
      code /= lv.size();
    }
  }
  return HypothesisSet(std::move(rows));
}

inline HypothesisSet build_hypothesis_set(const DomainSchema& schema) { return build_hypothesis_set(schema.dim()); }

/// Random subset of size max_m. `keep` (when given) is retained; `drop` is
/// always excluded.
inline HypothesisSet subsample_hypotheses(const HypothesisSet& full, std::size_t max_m, Rng& rng,
                                          std::optional<std::size_t> keep = std::nullopt,
                                          std::optional<std::size_t> drop = std::nullopt) {
  require(max_m >= 1, "subsample_hypotheses: max_m must be >= 1");
  std::vector<std::size_t> pool;
  for (std::size_t m = 0; m < full.size(); ++m)
    if (m != keep && m != drop) pool.push_back(m);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<std::size_t> chosen;
  if (keep) chosen.push_back(*keep);
  for (std::size_t i = 0; i < pool.size() && chosen.size() < max_m; ++i) chosen.push_back(pool[i]);
  std::sort(chosen.begin(), chosen.end());
  std::vector<std::vector<double>> rows;
  rows.reserve(chosen.size());
  for (std::size_t m : chosen) rows.push_back(full[m].weights);
  return HypothesisSet(std::move(rows));
}

/// A user with a fixed latent preference who chooses via the Luce model.
struct SimulatedUser {
  std::vector<double> weights;  // h*
  double beta = 6.0;
  bool deterministic = false;   // beta -> infinity: always the best option

  std::size_t choose(const OptionSet& x, Rng& rng) const {
    if (deterministic) return best_option(weights, x);
    const auto p = softmax(utilities(weights, x), beta);
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc += p[i];
      if (u < acc) return i;
    }
    return p.size() - 1;
  }

  /// The item this user prefers: highest utility, lowest index on ties.
  std::size_t preferred(const OptionSet& x) const { return best_option(weights, x); }
};

// ---------------------------------------------------------------------------
// Episode specification

struct EpisodeSpec {
  Domain domain = Domain::kFlight;
  std::size_t d = 4;  // only read for the synthetic domain
  std::uint64_t seed = 0;
  std::size_t T = 5;
  std::size_t K = 3;
  std::size_t held_out_count = 50;
  bool well_specified = true;
  double beta_user = 6.0;
  bool deterministic_user = false;
  std::optional<std::size_t> max_hypotheses;

  DomainSchema schema() const { return make_schema(domain, d); }

  void validate() const {
    require(T >= 1, "EpisodeSpec: T must be >= 1");
    require(K >= 2, "EpisodeSpec: K must be >= 2");
    require(beta_user > 0.0, "EpisodeSpec: beta_user must be > 0");
    if (domain == Domain::kSynthetic) require(d >= 2 && d <= 8, "EpisodeSpec: d must be in [2,8]");
    if (max_hypotheses) require(*max_hypotheses >= 2, "EpisodeSpec: max_hypotheses must be >= 2");
  }
};

/// Error raised while reading configuration; names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& why)
      : std::runtime_error("config field '" + field + "': " + why), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

namespace detail {

template <class T>
T get_field(const nlohmann::json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + key, "wrong type");
  }
}

}  // namespace detail

inline EpisodeSpec episode_spec_from_json(const nlohmann::json& j, const std::string& path = "") {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  EpisodeSpec s;
  const std::string dom = detail::get_field<std::string>(j, "domain", path, "flight");
  const auto parsed = domain_from_string(dom);
  if (!parsed) throw ConfigError(path + "domain", "unknown domain '" + dom + "'");
  s.domain = *parsed;
  const auto nonneg = [&](const char* key, long long fallback) {
    const auto v = detail::get_field<long long>(j, key, path, fallback);
    if (v < 0) throw ConfigError(path + key, "must be nonnegative");
    return static_cast<std::size_t>(v);
  };
  s.d = nonneg("d", 4);
  s.seed = detail::get_field<std::uint64_t>(j, "seed", path, 0);
  s.T = nonneg("T", 5);
  s.K = nonneg("K", 3);
  s.held_out_count = nonneg("held_out_count", 50);
  s.well_specified = detail::get_field<bool>(j, "well_specified", path, true);
  s.beta_user = detail::get_field<double>(j, "beta_user", path, 6.0);
  s.deterministic_user = detail::get_field<bool>(j, "deterministic_user", path, false);
  if (j.contains("max_hypotheses") && !j.at("max_hypotheses").is_null())
    s.max_hypotheses = nonneg("max_hypotheses", 0);

  if (s.T < 1) throw ConfigError(path + "T", "must be >= 1");
  if (s.K < 2) throw ConfigError(path + "K", "must be >= 2");
  if (!(s.beta_user > 0.0)) throw ConfigError(path + "beta_user", "must be > 0");
  if (s.domain == Domain::kSynthetic && (s.d < 2 || s.d > 8)) throw ConfigError(path + "d", "must be in [2,8]");
  if (s.domain != Domain::kSynthetic && j.contains("d") && s.d != 4)
    throw ConfigError(path + "d", "flight and hotel domains have d = 4");
  if (s.max_hypotheses && *s.max_hypotheses < 2) throw ConfigError(path + "max_hypotheses", "must be >= 2");
  return s;
}

inline nlohmann::json to_json(const EpisodeSpec& s) {
  nlohmann::json j{{"domain", to_string(s.domain)},
                   {"d", s.domain == Domain::kSynthetic ? s.d : std::size_t{4}},
                   {"seed", s.seed},
                   {"T", s.T},
                   {"K", s.K},
                   {"held_out_count", s.held_out_count},
                   {"well_specified", s.well_specified},
                   {"beta_user", s.beta_user},
                   {"deterministic_user", s.deterministic_user}};
  if (s.max_hypotheses) j["max_hypotheses"] = *s.max_hypotheses;
  return j;
}

/// Everything about one episode that does not depend on the agent: the
/// hypothesis set, the user, the interaction option sets, the user's
/// choices and the held-out sets. A pure function of (spec, seed).
struct Episode {
  EpisodeSpec spec;
  DomainSchema schema;
  HypothesisSet hypotheses;
  SimulatedUser user;
  std::optional<std::size_t> true_index;  // row of h* in `hypotheses`, if present
  std::vector<OptionSet> rounds;
  std::vector<std::size_t> choices;  // 0-based
  std::vector<OptionSet> held_out;
};

/// Draws h*: a nonzero grid point in the well-specified case, otherwise a
/// continuous vector in [-1,1]^d that is not on the grid.
inline std::vector<double> draw_true_preference(std::size_t d, bool well_specified, Rng& rng) {
  const auto& lv = preference_levels();
  std::vector<double> h(d);
  for (;;) {
    if (well_specified) {
      for (auto& w : h) w = lv[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(lv.size()) - 1))];
      if (std::any_of(h.begin(), h.end(), [](double w) { return w != 0.0; })) return h;
    } else {
      for (auto& w : h) w = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
      const bool on_grid = std::all_of(h.begin(), h.end(), [&](double w) {
        return std::find(lv.begin(), lv.end(), w) != lv.end();
      });
      if (!on_grid) return h;
    }
  }
}

inline Episode generate_episode(const EpisodeSpec& spec) {
  spec.validate();
  Episode ep;
  ep.spec = spec;
  ep.schema = spec.schema();
  Rng episode_rng = make_rng(spec.seed, Stream::kEpisode);
  Rng user_rng = make_rng(spec.seed, Stream::kUser);

  ep.user = SimulatedUser{draw_true_preference(ep.schema.dim(), spec.well_specified, episode_rng), spec.beta_user,
                          spec.deterministic_user};
  HypothesisSet full = build_hypothesis_set(ep.schema);
  const std::size_t star = full.find(ep.user.weights);
  if (spec.max_hypotheses && *spec.max_hypotheses < full.size()) {
    Rng hyp_rng = make_rng(spec.seed, Stream::kHypothesis);
    const bool present = star < full.size();
    ep.hypotheses = subsample_hypotheses(full, *spec.max_hypotheses, hyp_rng,
                                         present && spec.well_specified ? std::optional<std::size_t>(star) : std::nullopt,
                                         present && !spec.well_specified ? std::optional<std::size_t>(star) : std::nullopt);
  } else {
    ep.hypotheses = std::move(full);
  }
  const std::size_t idx = ep.hypotheses.find(ep.user.weights);
  if (idx < ep.hypotheses.size()) ep.true_index = idx;

  for (std::size_t t = 0; t < spec.T; ++t) {
    ep.rounds.push_back(generate_option_set(ep.schema, spec.K, episode_rng));
    ep.choices.push_back(ep.user.choose(ep.rounds.back(), user_rng));
  }
  for (std::size_t s = 0; s < spec.held_out_count; ++s)
    ep.held_out.push_back(generate_option_set(ep.schema, spec.K, episode_rng));
  return ep;
}

}  // namespace adaptfuse
