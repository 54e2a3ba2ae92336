#include "passlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

#include "passlab/errors.hpp"

namespace passlab {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

template <typename Int>
Int to_int(const std::string& s) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("not a boolean: '" + s + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& s, F conv) {
  std::vector<T> out;
  for (const auto& item : split_list(s)) out.push_back(conv(item));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += fmt::format("{}{}", i ? "," : "", v[i]);
  return out;
}

struct Key {
  std::string name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define PASSLAB_DOUBLE(key, member) \
  Key{key, [](const RunConfig& c) { return fmt::format("{}", c.member); }, \
      [](RunConfig& c, const std::string& v) { c.member = to_double(v); }}
#define PASSLAB_INT(key, member, type) \
  Key{key, [](const RunConfig& c) { return fmt::format("{}", c.member); }, \
      [](RunConfig& c, const std::string& v) { c.member = to_int<type>(v); }}
#define PASSLAB_BOOL(key, member) \
  Key{key, [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }, \
      [](RunConfig& c, const std::string& v) { c.member = to_bool(v); }}
#define PASSLAB_STRING(key, member) \
  Key{key, [](const RunConfig& c) { return c.member; }, [](RunConfig& c, const std::string& v) { c.member = v; }}

const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      PASSLAB_DOUBLE("pitch.length", features.pitch.length),
      PASSLAB_DOUBLE("pitch.width", features.pitch.width),
      PASSLAB_DOUBLE("pitch.grid_cell", features.pitch.grid_cell),
      PASSLAB_DOUBLE("motion.reaction_time", features.motion.reaction_time),
      PASSLAB_DOUBLE("motion.max_speed", features.motion.max_speed),
      PASSLAB_DOUBLE("weight.beta", features.weight.beta),
      PASSLAB_INT("feature.n", n, int),
      Key{"feature.ranking", [](const RunConfig& c) { return std::string(to_string(c.ranking)); },
          [](RunConfig& c, const std::string& v) { c.ranking = parse_ranking_variable(v); }},
      Key{"feature.fast_space",
          [](const RunConfig& c) {
            return std::string(c.features.fast_space == FastSpaceMode::current ? "current" : "best_move");
          },
          [](RunConfig& c, const std::string& v) {
            if (v == "current") c.features.fast_space = FastSpaceMode::current;
            else if (v == "best_move") c.features.fast_space = FastSpaceMode::best_move;
            else throw std::invalid_argument("expected current or best_move");
          }},
      Key{"feature.inf_ranking",
          [](const RunConfig& c) { return std::string(c.inf_ranking == InfRanking::first ? "first" : "last"); },
          [](RunConfig& c, const std::string& v) {
            if (v == "first") c.inf_ranking = InfRanking::first;
            else if (v == "last") c.inf_ranking = InfRanking::last;
            else throw std::invalid_argument("expected first or last");
          }},
      Key{"model.n_trees", [](const RunConfig& c) { return join(c.grid.n_trees); },
          [](RunConfig& c, const std::string& v) { c.grid.n_trees = to_list<int>(v, to_int<int>); }},
      Key{"model.max_depth", [](const RunConfig& c) { return join(c.grid.max_depth); },
          [](RunConfig& c, const std::string& v) { c.grid.max_depth = to_list<int>(v, to_int<int>); }},
      Key{"model.learning_rate", [](const RunConfig& c) { return join(c.grid.learning_rate); },
          [](RunConfig& c, const std::string& v) { c.grid.learning_rate = to_list<double>(v, to_double); }},
      Key{"model.min_child_weight", [](const RunConfig& c) { return join(c.grid.min_child_weight); },
          [](RunConfig& c, const std::string& v) { c.grid.min_child_weight = to_list<double>(v, to_double); }},
      Key{"model.l2_lambda", [](const RunConfig& c) { return join(c.grid.l2_lambda); },
          [](RunConfig& c, const std::string& v) { c.grid.l2_lambda = to_list<double>(v, to_double); }},
      Key{"model.gamma", [](const RunConfig& c) { return join(c.grid.gamma); },
          [](RunConfig& c, const std::string& v) { c.grid.gamma = to_list<double>(v, to_double); }},
      Key{"model.subsample", [](const RunConfig& c) { return join(c.grid.subsample); },
          [](RunConfig& c, const std::string& v) { c.grid.subsample = to_list<double>(v, to_double); }},
      PASSLAB_INT("model.seed", grid.seed, std::uint64_t),
      PASSLAB_DOUBLE("model.threshold", threshold),
      PASSLAB_INT("cv.k", cv_k, int),
      PASSLAB_INT("cv.seed", seed, std::uint64_t),
      PASSLAB_INT("synth.passes", synth.passes, int),
      PASSLAB_INT("synth.attackers", synth.attackers, int),
      PASSLAB_INT("synth.defenders", synth.defenders, int),
      PASSLAB_DOUBLE("synth.position_noise", synth.position_noise),
      PASSLAB_DOUBLE("synth.velocity_sd", synth.velocity_sd),
      PASSLAB_DOUBLE("synth.receiver_scale", synth.receiver_scale),
      PASSLAB_DOUBLE("synth.empty_defence_rate", synth.empty_defence_rate),
      PASSLAB_DOUBLE("synth.fps", synth.fps),
      PASSLAB_DOUBLE("synth.pass_interval", synth.pass_interval),
      PASSLAB_INT("synth.possession_min", synth.possession_min, int),
      PASSLAB_INT("synth.possession_max", synth.possession_max, int),
      PASSLAB_INT("synth.event_clock_offset", synth.event_clock_offset, long),
      PASSLAB_DOUBLE("synth.rule.intercept", synth.rule.intercept),
      PASSLAB_DOUBLE("synth.rule.fast_space_vel", synth.rule.fast_space_vel),
      PASSLAB_DOUBLE("synth.rule.dist_ball", synth.rule.dist_ball),
      PASSLAB_DOUBLE("synth.rule.time_to_player", synth.rule.time_to_player),
      PASSLAB_DOUBLE("synth.rule.time_to_passline", synth.rule.time_to_passline),
      PASSLAB_DOUBLE("synth.rule.time_cap", synth.rule.time_cap),
      PASSLAB_BOOL("render.boundaries", render.show_voronoi_boundaries),
      PASSLAB_BOOL("render.scores", render.show_scores),
      Key{"render.color_min", [](const RunConfig& c) { return c.render.colors ? fmt::format("{}", c.render.colors->min) : std::string(); },
          [](RunConfig& c, const std::string& v) {
            if (v.empty()) return;
            ColorRange r = c.render.colors.value_or(ColorRange{0.0, std::numeric_limits<double>::infinity()});
            r.min = to_double(v);
            c.render.colors = r;
          }},
      Key{"render.color_max", [](const RunConfig& c) { return c.render.colors ? fmt::format("{}", c.render.colors->max) : std::string(); },
          [](RunConfig& c, const std::string& v) {
            if (v.empty()) return;
            ColorRange r = c.render.colors.value_or(ColorRange{-std::numeric_limits<double>::infinity(), 0.0});
            r.max = to_double(v);
            c.render.colors = r;
          }},
      PASSLAB_DOUBLE("render.pixels_per_metre", render.pixels_per_metre),
      PASSLAB_DOUBLE("render.seconds_per_frame", render.seconds_per_frame),
      PASSLAB_STRING("paths.matches", matches_path),
      PASSLAB_STRING("paths.features", features_path),
      PASSLAB_STRING("paths.model", model_path),
      PASSLAB_STRING("paths.out", out_path),
  };
  return k;
}

#undef PASSLAB_DOUBLE
#undef PASSLAB_INT
#undef PASSLAB_BOOL
#undef PASSLAB_STRING

}  // namespace

void RunConfig::validate() const {
  features.pitch.validate();
  features.motion.validate();
  features.weight.validate();
  if (n < 1) throw std::invalid_argument("feature.n must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("model.threshold must be in (0, 1)");
  if (cv_k < 2) throw std::invalid_argument("cv.k must be >= 2");
  grid.expand();  // validates every combination
  SynthConfig s = synth;
  s.features = features;
  s.validate();
  if (render.colors) render.colors->validate();
  if (!(render.pixels_per_metre > 0.0)) throw std::invalid_argument("render.pixels_per_metre must be > 0");
  if (!(render.seconds_per_frame > 0.0)) throw std::invalid_argument("render.seconds_per_frame must be > 0");
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& k : keys()) out += k.name + " = " + k.get(*this) + "\n";
  return out;
}

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw DataError(fmt::format("config line {}: expected key = value", lineno));
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    const auto& ks = keys();
    const auto it = std::find_if(ks.begin(), ks.end(), [&](const Key& k) { return k.name == key; });
    if (it == ks.end()) throw DataError(fmt::format("config line {}: unknown key '{}'", lineno, key));
    try {
      it->set(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw DataError(fmt::format("config line {}: {}: {}", lineno, key, e.what()));
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  cfg.synth.features = cfg.features;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  return parse_config(in);
}

}  // namespace passlab
