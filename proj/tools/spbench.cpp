// Copyright 2026 the streamprofile authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// spbench: command-line entry points for the benchmark pipeline stages.

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "streamprofile.hpp"

namespace fs = std::filesystem;
using namespace streamprofile;

namespace {

constexpr const char* kApiKeyEnv = "SP_API_KEY";
constexpr const char* kSaltEnv = "SP_HASH_SALT";

// Run configuration ------------------------------------------------------------

/// One structured file per run; every section is optional.
struct RunConfig {
  Json raw = Json::object();
  std::optional<std::uint64_t> seed;

  static RunConfig load(const std::string& path) {
    RunConfig c;
    if (!path.empty()) {
      try {
        c.raw = io::read_json(path);
      } catch (const DataError& e) {
        throw InvalidInput(std::string("config: ") + e.what());
      }
      if (!c.raw.is_object()) throw InvalidInput("config " + path + " must be a JSON object");
    }
    if (c.raw.contains("seed")) c.seed = c.raw["seed"].get<std::uint64_t>();
    return c;
  }

  const Json& section(const char* name) const {
    static const Json empty = Json::object();
    auto it = raw.find(name);
    return it == raw.end() ? empty : *it;
  }

  template <typename T>
  T parse(const char* name, T value) const {
    try {
      from_json(section(name), value);
    } catch (const Json::exception& e) {
      throw InvalidInput(std::string("config section '") + name + "': " + e.what());
    }
    return value;
  }

  pipeline::PipelineConfig pipeline(const std::optional<std::string>& platform) const {
    pipeline::PipelineConfig p;
    Json j = section("pipeline");
    if (platform) j["platform"] = *platform;
    try {
      from_json(j, p);
    } catch (const Json::exception& e) {
      throw InvalidInput(std::string("config section 'pipeline': ") + e.what());
    }
    if (seed && !j.contains("seed")) p.seed = *seed;
    return p;
  }

  synth::DriftConfig drift() const {
    auto d = parse("synth", synth::DriftConfig{});
    if (seed && !section("synth").contains("seed")) d.seed = *seed;
    return d;
  }

  chat::ModelClientConfig model() const {
    auto m = chat::client_config_from_json(section("model"));
    m.api_key = chat::env_or(kApiKeyEnv);
    return m;
  }

  harness::RunMode mode() const {
    harness::RunMode m;
    const auto& j = section("mode");
    try {
      streamprofile::detail::get_opt(j, "persona", m.persona);
      streamprofile::detail::get_opt(j, "history", m.history);
      streamprofile::detail::get_opt(j, "granularity", m.granularity);
    } catch (const Json::exception& e) {
      throw InvalidInput(std::string("config section 'mode': ") + e.what());
    }
    return m;
  }
};

// Manifest -------------------------------------------------------------------------

class Stage {
 public:
  Stage(std::string command, fs::path out, const RunConfig& cfg)
      : out_(std::move(out)), begin_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    manifest_.config_digest = report::config_digest(cfg.raw);
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    manifest_.started = buf;
  }

  report::RunManifest& manifest() { return manifest_; }
  const fs::path& out() const { return out_; }
  fs::path operator/(const std::string& name) const { return out_ / name; }

  void input(const std::string& name, const fs::path& p) { manifest_.inputs[name] = p.string(); }

  void finish() {
    manifest_.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - begin_).count();
    report::write_manifest(out_, manifest_);
  }

 private:
  fs::path out_;
  report::RunManifest manifest_;
  std::chrono::steady_clock::time_point begin_;
};

void require_dir(const fs::path& p, const char* what) {
  if (!fs::is_directory(p)) throw InvalidInput(std::string(what) + " directory not found: " + p.string());
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw InvalidInput("missing input file: " + p.string());
}

std::vector<UserStream> load_streams(const fs::path& dir, const std::string& prefix = "") {
  auto ugc = dir / (prefix + "ugc.jsonl");
  auto meta = dir / (prefix + "users.jsonl");
  require_file(ugc);
  auto res = load_user_stream(ugc, fs::exists(meta) ? std::optional<fs::path>(meta) : std::nullopt);
  if (!res.errors.empty()) {
    const auto& e = res.errors.front();
    throw DataError(e.file + ":" + std::to_string(e.line) + ": " + e.message + " (run ingest to quarantine bad lines)");
  }
  return std::move(res.users);
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(io::read_file(p));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::string lines(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += x + "\n";
  return s;
}

// Buffered users ---------------------------------------------------------------------

Json buffered_json(const pipeline::BufferedUser& u) { return Json{{"meta", u.meta}, {"batches", u.batches}}; }

pipeline::BufferedUser buffered_from(const Json& j) {
  return {j.at("meta").get<UserMeta>(), j.at("batches").get<std::vector<StreamBatch>>()};
}

// Tasks on disk ------------------------------------------------------------------------

std::vector<std::vector<tasks::StepTask>> load_tasks(const fs::path& dir) {
  require_file(dir / "tasks.jsonl");
  require_file(dir / "answers.jsonl");
  auto views = io::read_jsonl<Json>(dir / "tasks.jsonl");
  auto keys = io::read_jsonl<Json>(dir / "answers.jsonl");
  if (views.size() != keys.size()) throw DataError("tasks.jsonl and answers.jsonl differ in length");
  std::vector<std::vector<tasks::StepTask>> users;
  for (std::size_t i = 0; i < views.size(); ++i) {
    auto t = tasks::join(views[i], keys[i]);
    if (users.empty() || users.back().front().user.user_id != t.user.user_id) users.emplace_back();
    users.back().push_back(std::move(t));
  }
  return users;
}

void write_tables(const fs::path& dir, const std::vector<metrics::AggregateReport>& reports) {
  io::write_file_atomic(dir / "recall.tsv", report::recall_table(reports));
  io::write_file_atomic(dir / "f1_ns.tsv", report::f1_table(reports));
  io::write_file_atomic(dir / "decomposition.tsv", report::decomposition_table(reports));
  io::write_file_atomic(dir / "errors.tsv", report::error_table(reports));
}

// Commands -------------------------------------------------------------------------------

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> platform;

  RunConfig load() const {
    auto c = RunConfig::load(config);
    if (seed) {
      c.seed = *seed;
      c.raw["seed"] = *seed;
    }
    return c;
  }
};

void cmd_synth(const Common& o) {
  auto cfg = o.load();
  auto drift = cfg.drift();
  if (o.platform) drift.platform_id = *o.platform;
  auto corpus = synth::generate_stream(drift);
  Stage st("synth", o.out, cfg);
  write_user_streams(st / "users.jsonl", st / "ugc.jsonl", corpus.all());
  io::write_json(st / "synth_config.json", Json(drift));
  io::write_json(st / "pipeline_config.json", Json(synth::pipeline_config(drift)));
  st.manifest().seeds["synth"] = drift.seed;
  st.finish();
}

void cmd_ingest(const Common& o, const std::string& in, bool strict) {
  auto cfg = o.load();
  auto ugc = fs::path(in) / "ugc.jsonl";
  auto meta = fs::path(in) / "users.jsonl";
  require_file(ugc);
  auto res = load_user_stream(ugc, fs::exists(meta) ? std::optional<fs::path>(meta) : std::nullopt);
  if (strict && !res.errors.empty()) {
    const auto& e = res.errors.front();
    throw DataError(e.file + ":" + std::to_string(e.line) + ": " + e.message);
  }
  Stage st("ingest", o.out, cfg);
  st.input("corpus", in);
  write_user_streams(st / "users.jsonl", st / "ugc.jsonl", res.users);
  io::write_jsonl(st / "errors.jsonl", res.errors);
  st.finish();
  std::cerr << "ingested " << res.post_count << " posts for " << res.users.size() << " users, " << res.errors.size()
            << " malformed lines\n";
}

void cmd_anonymize(const Common& o, const std::string& in, const std::string& code, bool chat_detector) {
  auto cfg = o.load();
  privacy::HashConfig hash{chat::env_or(kSaltEnv), code};
  if (hash.salt.empty()) throw InvalidInput(std::string("set the hashing salt in ") + kSaltEnv);
  auto profile = platform_profile(code.empty() ? o.platform.value_or("xiaohongshu") : code);
  if (hash.platform_code.empty()) hash.platform_code = profile.code;
  auto users = load_streams(in);

  chat::HttpClient http;
  std::unique_ptr<privacy::SpanDetector> detector;
  if (chat_detector) {
    detector = std::make_unique<privacy::ChatSpanDetector>(http, cfg.model());
  } else {
    detector = std::make_unique<privacy::RuleBasedDetector>();
  }

  std::vector<UserStream> released;
  std::vector<Json> withheld;
  std::size_t replacements = 0, fallbacks = 0;
  for (const auto& u : users) {
    auto r = privacy::anonymize_user(u, hash, detector.get());
    replacements += r.report.replacements;
    fallbacks += r.detector_failed ? 1 : 0;
    if (r.released()) {
      released.push_back(std::move(r.record));
    } else {
      withheld.push_back(Json{{"user_id", r.record.meta.user_id}, {"violations", r.violations}});
    }
  }
  Stage st("anonymize", o.out, cfg);
  st.input("corpus", in);
  write_user_streams(st / "users.jsonl", st / "ugc.jsonl", released);
  io::write_jsonl(st / "withheld.jsonl", withheld);
  st.manifest().mode = Json{{"detector", chat_detector ? "chat" : "rules"}, {"salt_env", kSaltEnv}};
  st.finish();
  std::cerr << "released " << released.size() << " users, withheld " << withheld.size() << ", " << replacements
            << " replacements, " << fallbacks << " detector fallbacks\n";
}

void cmd_filter(const Common& o, const std::string& in, bool audit, bool keep_unaudited) {
  auto cfg = o.load();
  auto pc = cfg.pipeline(o.platform);
  auto corpus = load_streams(in);
  auto trending = pipeline::build_trending(corpus, pc);

  chat::HttpClient http;
  std::optional<pipeline::Judge> judge;
  if (audit) judge = pipeline::Judge{&http, cfg.model(), keep_unaudited};
  auto res = pipeline::run_filter(corpus, pc, trending.blacklist, judge);

  Stage st("filter", o.out, cfg);
  st.input("corpus", in);
  write_user_streams(st / "coarse_users.jsonl", st / "coarse_ugc.jsonl", res.coarse);
  write_user_streams(st / "users.jsonl", st / "ugc.jsonl", res.selected_streams());
  io::write_jsonl(st / "summaries.jsonl", res.summaries);
  io::write_file_atomic(st / "selected.txt", lines(res.selected));
  io::write_json(st / "drop_counts.json", Json(res.drop_counts));
  io::write_file_atomic(st / "blacklist.txt", lines({trending.blacklist.begin(), trending.blacklist.end()}));
  for (const auto& [date, t] : trending.tables) trending::write_table(st / "trending", t);
  io::write_json(st / "pipeline_config.json", Json(pc));
  st.manifest().seeds["strata"] = pc.effective_strata().seed;
  st.finish();
  std::cerr << "selected " << res.selected.size() << " of " << corpus.size() << " users\n";
}

void cmd_buffer(const Common& o, const std::string& in, const std::string& store_path) {
  auto cfg = o.load();
  auto pc = cfg.pipeline(o.platform);
  auto users = load_streams(in);
  std::map<std::string, buffer::BufferState> prior;
  std::optional<buffer::BufferStore> store;
  if (!store_path.empty()) {
    store.emplace(store_path);
    prior = store->load_all();
  }
  pipeline::BufferResult res;
  const auto profile = pc.buffer_profile();
  for (const auto& u : users) {
    auto it = prior.find(u.meta.user_id);
    auto run = buffer::run_user(u, profile, {pc.reaudit}, it == prior.end() ? buffer::BufferState{} : it->second);
    res.discarded += run.discarded;
    if (run.final_state.flagged) {
      res.flagged.push_back(u.meta.user_id);
    } else {
      res.users.push_back({u.meta, std::move(run.batches)});
    }
    res.states.push_back(std::move(run.final_state));
  }
  if (store) store->save_all(res.states);

  Stage st("buffer", o.out, cfg);
  st.input("filtered", in);
  if (store) st.input("store", store_path);
  std::vector<Json> out;
  for (const auto& u : res.users) out.push_back(buffered_json(u));
  io::write_jsonl(st / "batches.jsonl", out);
  io::write_file_atomic(st / "flagged.txt", lines(res.flagged));
  st.manifest().mode = Json{{"granularity", pc.granularity}, {"reaudit", pc.reaudit}};
  st.finish();
  std::cerr << "buffered " << res.users.size() << " users, " << res.flagged.size() << " flagged, " << res.discarded
            << " batches discarded\n";
}

void cmd_index(const Common& o, const std::string& in) {
  auto cfg = o.load();
  auto pc = cfg.pipeline(o.platform);
  auto coarse = load_streams(in, "coarse_");
  HashingEmbedder embedder(pc.embedding_dim);
  auto index = pipeline::build_index(coarse, pc, embedder);
  Stage st("index", o.out, cfg);
  st.input("filtered", in);
  index.save(st / "index.spci");
  io::write_file_atomic(st / "warnings.txt", lines(index.warnings()));
  st.manifest().seeds["kmeans"] = derive_seed(pc.seed, pc.kmeans.seed);
  st.finish();
}

void cmd_build_tasks(const Common& o, const std::string& buffered_dir, const std::string& index_dir,
                     const std::string& filter_dir) {
  auto cfg = o.load();
  auto pc = cfg.pipeline(o.platform);
  require_file(fs::path(buffered_dir) / "batches.jsonl");
  require_file(fs::path(index_dir) / "index.spci");
  pipeline::BufferResult buffered;
  for (const auto& j : io::read_jsonl<Json>(fs::path(buffered_dir) / "batches.jsonl")) {
    buffered.users.push_back(buffered_from(j));
  }
  auto index = cluster::ClusterIndex::load(fs::path(index_dir) / "index.spci");
  auto tables = trending::read_tables(fs::path(filter_dir) / "trending");
  auto users = pipeline::build_tasks(buffered, index, tables, pc);

  Stage st("build-tasks", o.out, cfg);
  st.input("buffered", buffered_dir);
  st.input("index", index_dir);
  st.input("trending", filter_dir);
  std::vector<Json> views, keys;
  for (const auto& u : users) {
    for (const auto& t : u) {
      views.push_back(tasks::agent_view(t));
      keys.push_back(tasks::answer_key(t));
    }
  }
  io::write_jsonl(st / "tasks.jsonl", views);
  io::write_jsonl(st / "answers.jsonl", keys);
  st.manifest().seeds["tasks"] = pc.seed;
  st.finish();
  std::cerr << "built " << views.size() << " tasks for " << users.size() << " users\n";
}

void cmd_evaluate(const Common& o, const std::string& tasks_dir, const std::optional<std::string>& oracle,
                  const std::string& filter_dir) {
  auto cfg = o.load();
  auto mode = cfg.mode();
  auto users = load_tasks(tasks_dir);
  std::uint64_t seed = cfg.seed.value_or(0);

  chat::HttpClient http;
  std::unique_ptr<harness::Agent> agent;
  std::size_t in_flight = 1;
  if (oracle) {
    std::map<std::string, double> popularity;
    if (!filter_dir.empty()) popularity = pipeline::popularity(trending::read_tables(fs::path(filter_dir) / "trending"));
    agent = std::make_unique<synth::OracleAgent>(synth::parse_oracle(*oracle), seed, std::move(popularity));
  } else {
    auto model = cfg.model();
    if (model.endpoint.empty() || model.model.empty()) {
      throw InvalidInput("evaluate needs --oracle or a model section with endpoint and model");
    }
    in_flight = static_cast<std::size_t>(model.max_in_flight);
    agent = std::make_unique<harness::ChatAgent>(http, model);
  }
  auto records = harness::run_all(users, *agent, mode, in_flight);

  Stage st("evaluate", o.out, cfg);
  st.input("tasks", tasks_dir);
  std::vector<Json> timing;
  for (const auto& r : records) timing.push_back(harness::timing_json(r));
  io::write_jsonl(st / "transcript.jsonl", records);
  io::write_jsonl(st / "timing.jsonl", timing);
  io::write_json(st / "agent.json", Json{{"agent", agent->name()}});
  st.manifest().mode = Json(mode);
  st.manifest().seeds["agent"] = seed;
  st.finish();
}

void cmd_score(const Common& o, const std::string& tasks_dir, const std::string& transcript_dir) {
  auto cfg = o.load();
  auto users = load_tasks(tasks_dir);
  require_file(fs::path(transcript_dir) / "transcript.jsonl");
  auto records = io::read_jsonl<harness::StepRecord>(fs::path(transcript_dir) / "transcript.jsonl");
  std::string agent = "agent";
  if (fs::exists(fs::path(transcript_dir) / "agent.json")) {
    agent = io::read_json(fs::path(transcript_dir) / "agent.json").value("agent", agent);
  }
  auto scores = pipeline::score_records(users, records);
  auto rep = metrics::aggregate(scores, agent);

  Stage st("score", o.out, cfg);
  st.input("tasks", tasks_dir);
  st.input("transcript", transcript_dir);
  io::write_jsonl(st / "scores.jsonl", scores);
  io::write_json(st / "report.json", metrics::report_json(rep));
  write_tables(st.out(), {rep});
  st.finish();
  std::cout << report::f1_table({rep});
}

void cmd_report(const Common& o, const std::vector<std::string>& score_dirs, double alpha,
                const std::vector<double>& levels) {
  auto cfg = o.load();
  std::vector<metrics::AggregateReport> reports;
  std::vector<report::PlotPoint> points;
  for (const auto& d : score_dirs) {
    require_file(fs::path(d) / "scores.jsonl");
    auto scores = io::read_jsonl<metrics::StepScore>(fs::path(d) / "scores.jsonl");
    std::string agent = fs::path(d).filename().string();
    if (fs::exists(fs::path(d) / "report.json")) agent = io::read_json(fs::path(d) / "report.json").value("agent", agent);
    reports.push_back(metrics::aggregate(scores, agent));
    points.push_back({agent, reports.back().overall.tradeoff});
  }
  Stage st("report", o.out, cfg);
  for (const auto& d : score_dirs) st.input(fs::path(d).filename().string(), d);
  write_tables(st.out(), reports);
  Json all = Json::array();
  for (const auto& r : reports) all.push_back(metrics::report_json(r));
  io::write_json(st / "reports.json", all);
  io::write_file_atomic(st / "tradeoff.svg", report::tradeoff_scatter_svg(points));
  io::write_file_atomic(st / "constraints.svg", report::constraint_svg(points, alpha, levels));
  st.manifest().mode = Json{{"alpha", alpha}, {"f1_levels", levels}};
  st.finish();
  std::cout << report::recall_table(reports) << "\n" << report::f1_table(reports);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming user-profiling benchmark pipeline"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "run configuration (JSON)")->check(CLI::ExistingFile);
    sub->add_option("-o,--out", common.out, "output directory")->required();
    sub->add_option("--seed", common.seed, "override the configured seed");
    sub->add_option("--platform", common.platform, "platform id or code");
  };

  std::string in, buffered, index_dir, filter_dir, tasks_dir, transcript_dir, store, code;
  std::optional<std::string> oracle;
  std::vector<std::string> score_dirs;
  bool strict = false, audit = false, keep_unaudited = false, chat_detector = false;
  double alpha = 0.24;
  std::vector<double> levels{0.3, 0.4, 0.5};

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  add_common(synth_cmd);

  auto* ingest = app.add_subcommand("ingest", "validate and normalize a raw corpus");
  add_common(ingest);
  ingest->add_option("-i,--in", in, "directory with ugc.jsonl and users.jsonl")->required();
  ingest->add_flag("--strict", strict, "fail on the first malformed line");

  auto* anonymize = app.add_subcommand("anonymize", "hash identifiers and redact personal information");
  add_common(anonymize);
  anonymize->add_option("-i,--in", in, "corpus directory")->required();
  anonymize->add_option("--code", code, "platform code prefixed to hashed ids");
  anonymize->add_flag("--chat-detector", chat_detector, "detect spans with the configured model");

  auto* filter = app.add_subcommand("filter", "coarse and longitudinal filtering with trending tables");
  add_common(filter);
  filter->add_option("-i,--in", in, "corpus directory")->required();
  filter->add_flag("--audit", audit, "run the model audit on selected users");
  filter->add_flag("--keep-unaudited", keep_unaudited, "keep users whose audit failed");

  auto* buffer_cmd = app.add_subcommand("buffer", "count-triggered batching");
  add_common(buffer_cmd);
  buffer_cmd->add_option("-i,--in", in, "filter output directory")->required();
  buffer_cmd->add_option("--store", store, "persistent buffer store (SQLite)");

  auto* index = app.add_subcommand("index", "cluster the anchor vocabulary");
  add_common(index);
  index->add_option("-i,--in", in, "filter output directory")->required();

  auto* build = app.add_subcommand("build-tasks", "assemble candidate pools");
  add_common(build);
  build->add_option("--buffered", buffered, "buffer output directory")->required();
  build->add_option("--index", index_dir, "index output directory")->required();
  build->add_option("--filtered", filter_dir, "filter output directory (trending tables)")->required();

  auto* evaluate = app.add_subcommand("evaluate", "run an agent over the tasks");
  add_common(evaluate);
  evaluate->add_option("--tasks", tasks_dir, "build-tasks output directory")->required();
  evaluate->add_option("--oracle", oracle, "perfect | copy_history | random | popularity");
  evaluate->add_option("--filtered", filter_dir, "filter output directory (popularity oracle)");

  auto* score = app.add_subcommand("score", "score a transcript");
  add_common(score);
  score->add_option("--tasks", tasks_dir, "build-tasks output directory")->required();
  score->add_option("--transcript", transcript_dir, "evaluate output directory")->required();

  auto* report_cmd = app.add_subcommand("report", "tables and plots across agents");
  add_common(report_cmd);
  report_cmd->add_option("--scores", score_dirs, "score output directories")->required();
  report_cmd->add_option("--alpha", alpha, "alpha for the constraint plot");
  report_cmd->add_option("--f1-levels", levels, "iso-F1 contour levels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*synth_cmd) cmd_synth(common);
    if (*ingest) cmd_ingest(common, in, strict);
    if (*anonymize) cmd_anonymize(common, in, code, chat_detector);
    if (*filter) cmd_filter(common, in, audit, keep_unaudited);
    if (*buffer_cmd) cmd_buffer(common, in, store);
    if (*index) cmd_index(common, in);
    if (*build) cmd_build_tasks(common, buffered, index_dir, filter_dir);
    if (*evaluate) cmd_evaluate(common, tasks_dir, oracle, filter_dir);
    if (*score) cmd_score(common, tasks_dir, transcript_dir);
    if (*report_cmd) cmd_report(common, score_dirs, alpha, levels);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const RemoteError& e) {
    std::cerr << "remote failure: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
