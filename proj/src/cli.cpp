#include "passlab/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "passlab/config.hpp"
#include "passlab/errors.hpp"
#include "passlab/ingest.hpp"
#include "passlab/render.hpp"
#include "passlab/shap.hpp"
#include "passlab/sync.hpp"
#include "passlab/synth.hpp"
#include "passlab/validation.hpp"

namespace fs = std::filesystem;

namespace passlab {

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

namespace {

// Shared state of one invocation.
struct Run {
  std::ostream& out;
  std::ostream& err;
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed_flag;
  std::string out_path;
  bool verbose = false;
  RunConfig cfg;
  std::uint64_t seed = 0;
  // Keyed by file name so the manifest does not depend on where a run lives.
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;

  void log(const std::string& msg) const {
    if (verbose) err << "passlab " << command << ": " << msg << '\n';
  }
  void warnings(const std::vector<std::string>& w) const {
    if (w.empty()) return;
    err << "passlab " << command << ": " << w.size() << " warning(s)\n";
    if (verbose) {
      for (const auto& m : w) err << "  warning: " << m << '\n';
    }
  }
  void input(const fs::path& p) { inputs[p.filename().string()] = sha256_file(p.string()); }
  void input_dir(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (e.is_regular_file() && (e.path().filename() == "tracking.jsonl" || e.path().filename() == "events.jsonl")) {
        files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) inputs[fs::relative(f, dir).generic_string()] = sha256_file(f.string());
  }
  void write(const fs::path& p, const std::string& bytes) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream o(p, std::ios::binary);
    if (!o) throw DataError("cannot write " + p.string());
    o << bytes;
    if (!o) throw DataError("write failed: " + p.string());
    outputs[p.filename().string()] = sha256_hex(bytes);
    log("wrote " + p.string());
  }
  void write_manifest(const fs::path& where) const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config_sha256"] = sha256_hex(cfg.to_text());
    j["config"] = cfg.to_text();
    j["seed"] = seed;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    if (where.has_parent_path()) fs::create_directories(where.parent_path());
    std::ofstream o(where, std::ios::binary);
    if (!o) throw DataError("cannot write " + where.string());
    o << j.dump(2) << '\n';
  }
};

std::string require(const std::string& value, const std::string& config_fallback, const char* what) {
  if (!value.empty()) return value;
  if (!config_fallback.empty()) return config_fallback;
  throw CLI::RequiredError(what);
}

template <typename Fn>
std::string to_text(Fn&& fn) {
  std::ostringstream ss;
  fn(ss);
  return ss.str();
}

Match load_one(Run& run, const fs::path& dir) {
  LoadReport report;
  Match m = load_match(dir / "tracking.jsonl", dir / "events.jsonl", &report);
  run.input(dir / "tracking.jsonl");
  run.input(dir / "events.jsonl");
  run.warnings(report.warnings);
  return m;
}

// Loads every match below `dir` with events moved into the tracking clock.
std::vector<Match> load_synced(Run& run, const fs::path& dir) {
  LoadReport report;
  std::vector<Match> matches = load_match_dir(dir, &report);
  run.input_dir(dir);
  std::vector<std::string> warnings = report.warnings;
  for (auto& m : matches) {
    SyncResult s = synchronize_events(m, &warnings);
    for (const auto& sh : s.shifts) run.log(fmt::format("period {} shift {} frames", sh.period, sh.shift()));
    m.events = std::move(s.events);
  }
  run.warnings(warnings);
  run.log(fmt::format("loaded {} match(es)", matches.size()));
  return matches;
}

void cmd_synth(Run& run) {
  const fs::path dir = require(run.out_path, run.cfg.out_path, "--out");
  SynthConfig sc = run.cfg.synth;
  sc.features = run.cfg.features;
  run.log(fmt::format("generating {} passes, seed {}", sc.passes, run.seed));
  const SynthMatch sm = synthesize_match(sc, run.seed);
  run.write(dir / "tracking.jsonl", to_text([&](std::ostream& o) { write_tracking(o, sm.match.frames); }));
  run.write(dir / "events.jsonl", to_text([&](std::ostream& o) { write_events(o, sm.match.events); }));
  run.write(dir / "ground_truth.jsonl", to_text([&](std::ostream& o) { write_ground_truth(o, sm.ground_truth); }));
  run.write_manifest(dir / "manifest.json");
  run.out << fmt::format("synthesized {} frames, {} events into {}\n", sm.match.frames.size(),
                         sm.match.events.size(), dir.string());
}

void cmd_sync(Run& run, const std::string& match_dir) {
  const Match m = load_one(run, require(match_dir, run.cfg.matches_path, "--match"));
  std::vector<std::string> warnings;
  const SyncResult s = synchronize_events(m, &warnings);
  run.warnings(warnings);
  for (const auto& sh : s.shifts) {
    run.out << fmt::format("period {}: event kickoff {} tracking kickoff {} (impulse {}) shift {}\n", sh.period,
                           sh.event_kickoff, sh.detection.frame_index, sh.detection.impulse_frame, sh.shift());
  }
  const fs::path out = require(run.out_path, run.cfg.out_path, "--out");
  run.write(out, to_text([&](std::ostream& o) { write_events(o, s.events); }));
  run.write_manifest(out.string() + ".manifest.json");
}

void cmd_segment(Run& run, const std::string& match_dir) {
  Match m = load_one(run, require(match_dir, run.cfg.matches_path, "--match"));
  std::vector<std::string> warnings;
  m.events = synchronize_events(m, &warnings).events;
  const Segmentation seg = segment_attack_sequences(m.events, m.frames);
  warnings.insert(warnings.end(), seg.warnings.begin(), seg.warnings.end());
  run.warnings(warnings);
  nlohmann::ordered_json j;
  j["sequences"] = nlohmann::ordered_json::array();
  for (const auto& s : seg.sequences) {
    j["sequences"].push_back({{"sequence_id", s.sequence_id},
                              {"team", s.team},
                              {"start_frame", s.start_frame},
                              {"end_frame", s.end_frame},
                              {"event_ids", s.event_ids}});
  }
  j["dropped"] = nlohmann::ordered_json::array();
  for (const auto& d : seg.dropped) j["dropped"].push_back({{"reason", d.reason}, {"event_ids", d.event_ids}});
  run.out << fmt::format("{} sequences, {} dropped groups\n", seg.sequences.size(), seg.dropped.size());
  const fs::path out = require(run.out_path, run.cfg.out_path, "--out");
  run.write(out, j.dump(2) + "\n");
  run.write_manifest(out.string() + ".manifest.json");
}

void cmd_features(Run& run, const std::string& matches_dir) {
  const auto matches = load_synced(run, require(matches_dir, run.cfg.matches_path, "--matches"));
  std::vector<std::string> warnings;
  const Dataset ds = build_dataset(matches, run.cfg.n, run.cfg.ranking, run.cfg.features, run.cfg.inf_ranking,
                                   &warnings);
  run.warnings(warnings);
  const fs::path out = require(run.out_path, run.cfg.features_path, "--out");
  run.write(out, to_text([&](std::ostream& o) { write_feature_csv(o, ds.table); }));
  run.write(out.string() + ".medians.json", to_text([&](std::ostream& o) { write_medians_json(o, ds.medians); }));
  run.write_manifest(out.string() + ".manifest.json");
  run.out << fmt::format("{} passes x {} columns (top-{} by {})\n", ds.table.rows.size(), ds.table.width(),
                         run.cfg.n, to_string(run.cfg.ranking));
}

FeatureTable load_features(Run& run, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  run.input(path);
  return read_feature_csv(in, path);
}

GbdtModel load_model_file(Run& run, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  run.input(path);
  return load_model(in);
}

void cmd_train(Run& run, const std::string& features_path) {
  const FeatureTable table = load_features(run, require(features_path, run.cfg.features_path, "--features"));
  const auto grid = run.cfg.grid.expand();
  run.log(fmt::format("grid search over {} configurations, {}-fold", grid.size(), run.cfg.cv_k));
  const GridSearchResult gs = grid_search_cv(table, grid, run.cfg.cv_k, run.seed, run.cfg.threshold);
  for (std::size_t i = 0; i < gs.results.size(); ++i) {
    run.out << fmt::format("{} {} mean_accuracy={:.4f}\n", i == gs.best_index ? "*" : " ",
                           describe(gs.results[i].hyper), gs.results[i].mean_accuracy);
  }
  const ColumnMedians medians = compute_medians(table);
  TrainingTrace trace;
  const GbdtModel model = train_on_table(table, medians, gs.best, &trace);
  run.log(fmt::format("final training logloss {:.6f}", trace.logloss.back()));
  const fs::path out = require(run.out_path, run.cfg.model_path, "--out");
  run.write(out, to_text([&](std::ostream& o) { save_model(o, model); }));
  run.write_manifest(out.string() + ".manifest.json");
}

void cmd_eval(Run& run, const std::string& model_path, const std::string& features_path) {
  const GbdtModel model = load_model_file(run, require(model_path, run.cfg.model_path, "--model"));
  const FeatureTable table = load_features(run, require(features_path, run.cfg.features_path, "--features"));
  if (table.columns != model.feature_names) throw DataError("feature columns do not match the model");
  std::vector<double> probs;
  for (const auto& r : table.rows) probs.push_back(predict_proba(model, r.values));
  const MetricsReport rep = classification_metrics(table.labels(), probs, run.cfg.threshold);
  const std::vector<MetricsRow> rows{{fmt::format("n={}", table.width() / kReceiverVariables.size()), rep}};
  std::string text;
  text += fmt::format("threshold {} rows {} tp {} fp {} fn {} tn {}\n", rep.threshold, rep.total(), rep.tp, rep.fp,
                      rep.fn, rep.tn);
  text += "\nsuccess class\n" + format_metrics_table(rows, MetricAveraging::positive);
  text += "\nfailure class\n" + format_metrics_table(rows, MetricAveraging::negative);
  text += "\nmacro average\n" + format_metrics_table(rows, MetricAveraging::macro);
  run.out << text;
  const fs::path out = run.out_path.empty() ? fs::path("eval_report.txt") : fs::path(run.out_path);
  run.write(out, text);
  run.write_manifest(out.string() + ".manifest.json");
}

void cmd_explain(Run& run, const std::string& model_path, const std::string& features_path) {
  const GbdtModel model = load_model_file(run, require(model_path, run.cfg.model_path, "--model"));
  const FeatureTable table = load_features(run, require(features_path, run.cfg.features_path, "--features"));
  if (table.columns != model.feature_names) throw DataError("feature columns do not match the model");
  if (table.rows.empty()) throw DataError("feature table has no rows");
  const auto rows = explain_rows(model, table);
  const ImportanceSummary summary = shap_summary(model, table);
  const fs::path dir = require(run.out_path, run.cfg.out_path, "--out");
  run.write(dir / "shap_summary.csv", to_text([&](std::ostream& o) { write_shap_summary_csv(o, summary); }));
  run.write(dir / "shap_rows.csv", to_text([&](std::ostream& o) { write_shap_rows_csv(o, table, rows); }));
  run.write_manifest(dir / "manifest.json");
  run.out << "rank feature mean|phi| (log-odds)\n";
  for (std::size_t j : summary.by_rank()) {
    const auto& f = summary.features[j];
    run.out << fmt::format("{:>4} {:<24} {:.4f}\n", f.rank, f.name, f.mean_abs);
  }
}

void cmd_compare(Run& run, const std::string& matches_dir) {
  const auto matches = load_synced(run, require(matches_dir, run.cfg.matches_path, "--matches"));
  std::vector<std::string> warnings;
  const auto passes = extract_candidates(matches, run.cfg.features, &warnings);
  run.warnings(warnings);
  const auto grid = run.cfg.grid.expand();
  const RankingReport rep = compare_ranking_variables(passes, run.cfg.n, grid, run.cfg.cv_k, run.seed);
  const std::string text = rep.format();
  run.out << text;
  const fs::path out = run.out_path.empty() ? fs::path("ranking_report.txt") : fs::path(run.out_path);
  run.write(out, text);
  run.write_manifest(out.string() + ".manifest.json");
}

struct RenderArgs {
  std::string match;
  std::vector<long> frames;
  std::optional<long> from, to;
  std::string team;
  bool animate = false;
};

void cmd_render(Run& run, const RenderArgs& a) {
  Match m = load_one(run, require(a.match, run.cfg.matches_path, "--match"));
  m.events = synchronize_events(m).events;
  RenderOptions opts = run.cfg.render;
  if (a.from) opts.frame_begin = a.from;
  if (a.to) opts.frame_end = a.to;
  std::vector<const TrackedFrame*> chosen;
  for (long f : a.frames) {
    const TrackedFrame* fr = m.frame_at(f);
    if (fr == nullptr) throw DataError(fmt::format("no tracking frame {}", f));
    chosen.push_back(fr);
  }
  if (opts.frame_begin || opts.frame_end) {
    const long lo = opts.frame_begin.value_or(m.frames.front().frame_index);
    const long hi = opts.frame_end.value_or(m.frames.back().frame_index);
    if (lo > hi) throw DataError(fmt::format("empty frame range {}..{}", lo, hi));
    for (const auto& fr : m.frames) {
      if (fr.frame_index >= lo && fr.frame_index <= hi) chosen.push_back(&fr);
    }
  }
  if (chosen.empty()) throw CLI::ValidationError("render", "select frames with --frame or --from/--to");
  std::sort(chosen.begin(), chosen.end(),
            [](const TrackedFrame* x, const TrackedFrame* y) { return x->frame_index < y->frame_index; });
  chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());

  std::vector<FrameScene> scenes;
  for (const TrackedFrame* fr : chosen) {
    TeamId team = a.team;
    if (team.empty()) {
      // Possession from the latest event at or before the frame.
      for (const auto& e : m.events) {
        if (e.frame <= fr->frame_index) team = e.team;
      }
    }
    if (team.empty()) team = infer_attacking_team(*fr);
    scenes.push_back(prepare_scene(*fr, team, run.cfg.features));
  }
  if (!opts.colors) {
    std::vector<SpaceScoreTable> tables;
    for (const auto& s : scenes) tables.push_back(s.scores);
    opts.colors = default_color_range(tables);
  }
  const fs::path dir = require(run.out_path, run.cfg.out_path, "--out");
  if (a.animate) {
    run.write(dir / "animation.svg", render_animation_svg(scenes, opts));
  } else {
    for (const auto& s : scenes) {
      run.write(dir / fmt::format("frame_{:06d}.svg", s.frame.frame_index),
                render_frame_svg(s.frame, s.scores, s.field, opts));
    }
  }
  run.write_manifest(dir / "manifest.json");
  run.out << fmt::format("rendered {} frame(s) into {}\n", scenes.size(), dir.string());
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pass-success modelling from tracking and event data", "passlab"};
  app.require_subcommand(1);
  Run run{out, err};
  app.add_option("--config", run.config_path, "Run configuration file (key = value)");
  app.add_option("--seed", run.seed_flag, "Seed for generation and cross-validation");
  app.add_option("--out", run.out_path, "Output file or directory");
  app.add_flag("-v,--verbose", run.verbose, "Progress logs on stderr");

  std::string match, matches, features, model;
  std::optional<int> n;
  std::optional<std::string> ranking;
  RenderArgs ra;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic match");
  auto* sync = app.add_subcommand("sync", "Align event frames to the tracking clock");
  sync->add_option("--match", match, "Match directory");
  auto* segment = app.add_subcommand("segment", "Split events into attack sequences");
  segment->add_option("--match", match, "Match directory");
  auto* feat = app.add_subcommand("features", "Build the pass feature table");
  feat->add_option("--matches", matches, "Match directory or directory of matches");
  feat->add_option("--n", n, "Candidate receivers per pass");
  feat->add_option("--ranking", ranking, "fast_space_vel, dist_ball, time_to_player or time_to_passline");
  auto* train = app.add_subcommand("train", "Grid-search and train the classifier");
  train->add_option("--features", features, "Feature CSV");
  auto* eval = app.add_subcommand("eval", "Classification metrics of a model");
  eval->add_option("--model", model, "Model file");
  eval->add_option("--features", features, "Feature CSV");
  auto* explain = app.add_subcommand("explain", "Shapley attributions and importance summary");
  explain->add_option("--model", model, "Model file");
  explain->add_option("--features", features, "Feature CSV");
  auto* compare = app.add_subcommand("compare-rankings", "CV accuracy of each receiver ranking variable");
  compare->add_option("--matches", matches, "Match directory or directory of matches");
  compare->add_option("--n", n, "Candidate receivers per pass");
  auto* render = app.add_subcommand("render", "Space-score frames as SVG");
  render->add_option("--match", ra.match, "Match directory");
  render->add_option("--frame", ra.frames, "Frame index (repeatable)");
  render->add_option("--from", ra.from, "First frame of a range");
  render->add_option("--to", ra.to, "Last frame of a range");
  render->add_option("--team", ra.team, "Attacking team (default: team of the latest event)");
  render->add_flag("--animate", ra.animate, "One animated SVG instead of one file per frame");
  for (auto* sub : app.get_subcommands([](CLI::App*) { return true; })) sub->fallthrough();

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());  // CLI11 consumes the vector from the back
  try {
    try {
      app.parse(args);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kExitOk : kExitUsage;
    }
    CLI::App* sub = app.get_subcommands().front();
    run.command = sub->get_name();
    if (!run.config_path.empty()) {
      run.cfg = load_config(run.config_path);
      run.input(run.config_path);
    }
    if (n) run.cfg.n = *n;
    if (ranking) run.cfg.ranking = parse_ranking_variable(*ranking);
    run.seed = run.seed_flag.value_or(run.cfg.seed);
    run.cfg.seed = run.seed;
    run.cfg.validate();

    if (sub == synth) cmd_synth(run);
    else if (sub == sync) cmd_sync(run, match);
    else if (sub == segment) cmd_segment(run, match);
    else if (sub == feat) cmd_features(run, matches);
    else if (sub == train) cmd_train(run, features);
    else if (sub == eval) cmd_eval(run, model, features);
    else if (sub == explain) cmd_explain(run, model, features);
    else if (sub == compare) cmd_compare(run, matches);
    else if (sub == render) cmd_render(run, ra);
    return kExitOk;
  } catch (const CLI::Error& e) {
    err << "passlab: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const DataError& e) {
    err << "passlab: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "passlab: invalid input: " << e.what() << '\n';
    return kExitData;
  } catch (const std::domain_error& e) {
    err << "passlab: invalid input: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "passlab: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "passlab: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

int cli_dispatch(int argc, const char* const* argv) {
  return cli_dispatch(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace passlab
