#include "raise_tools/cli.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "raise/agent.hpp"
#include "raise/config.hpp"
#include "raise/dataset.hpp"
#include "raise/digest.hpp"
#include "raise/error.hpp"
#include "raise/evaluation.hpp"
#include "raise/generation.hpp"
#include "raise/protocol.hpp"
#include "raise/sampling.hpp"
#include "raise/scaling.hpp"
#include "raise/serialize.hpp"
#include "raise/store.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace raisesql::cli {
namespace {

struct Options {
  std::string config;
  std::string manifest;
  std::string run_id;
  std::optional<std::uint64_t> seed;
  std::optional<double> fraction;
  std::optional<std::size_t> k;
  std::optional<int> rounds;
  std::optional<std::size_t> workers;
  std::string backend;
  std::string tape;
  std::string dataset;
  std::string store;
  std::string agent;
  std::vector<int> best_of;
  std::string out;
  bool force = false;
  // ask
  std::string db;
  std::string docs;
  std::string question;
  std::string evidence;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

// Routes every role to one backend.
void route_all_roles(RunConfig& cfg, const std::string& name) {
  cfg.agent_backend = name;
  cfg.scaling_backend = name;
  cfg.postprocess_backend.clear();
  bool postprocess = std::any_of(cfg.generators.begin(), cfg.generators.end(),
                                 [](const GeneratorConfig& g) { return g.postprocess; });
  cfg.generators = {GeneratorConfig{name, postprocess}};
}

void apply_overrides(RunConfig& cfg, const Options& o) {
  if (!o.dataset.empty()) cfg.dataset = fs::absolute(o.dataset);
  if (!o.store.empty()) cfg.store = fs::absolute(o.store);
  if (o.seed) cfg.seed = *o.seed;
  if (o.fraction) cfg.sample_fraction = *o.fraction;
  if (o.k) cfg.k = *o.k;
  if (o.rounds) cfg.rounds = *o.rounds;
  if (o.workers) cfg.workers = *o.workers;
  if (!o.agent.empty()) {
    auto kind = agent_kind_from_string(o.agent);
    if (!kind) throw UsageError(fmt::format("unknown agent kind \"{}\"", o.agent));
    cfg.agent_kinds = {*kind};
  }
  if (o.backend == "scripted" && !o.tape.empty()) {
    BackendConfig b;
    b.name = "scripted";
    b.type = "scripted";
    b.tape = fs::absolute(o.tape);
    cfg.backends = {b};
    route_all_roles(cfg, "scripted");
  } else if (!o.tape.empty()) {
    throw UsageError("--tape needs --backend scripted");
  } else if (!o.backend.empty()) {
    route_all_roles(cfg, o.backend);
  }
  if (cfg.agent_backend.empty() && !cfg.backends.empty()) cfg.agent_backend = cfg.backends.front().name;
  if (cfg.generators.empty() && !cfg.backends.empty()) cfg.generators = {GeneratorConfig{cfg.backends.front().name, false}};
  if (cfg.scaling_backend.empty() && !cfg.generators.empty()) cfg.scaling_backend = cfg.generators.front().backend;
}

// Settings that may change between invocations of one run without
// invalidating what is already stored.
json comparable(json cfg) {
  cfg.erase("workers");
  return cfg;
}

struct Session {
  RunConfig cfg;
  std::shared_ptr<Dataset> dataset;
  BackendSet backends;
  PromptSet prompts;
  std::unique_ptr<TraceStore> store;
  RunManifest manifest;
  std::vector<Question> questions;  // manifest order
};

Session open_session(const Options& o, std::ostream& err) {
  Session s;
  std::optional<RunManifest> source;
  if (!o.manifest.empty()) {
    json j;
    try {
      j = json::parse(read_file(o.manifest));
    } catch (const json::parse_error& e) {
      throw ConfigError(fmt::format("manifest {} is not valid JSON: {}", o.manifest, e.what()));
    }
    source = RunManifest::from_json(j);
    s.cfg = RunConfig::from_json(source->config);
  } else if (!o.config.empty()) {
    s.cfg = RunConfig::load(o.config);
  } else {
    throw UsageError("--config or --manifest is required");
  }
  apply_overrides(s.cfg, o);
  s.cfg.validate();
  if (!s.cfg.dataset) throw ConfigError("no dataset configured (set \"dataset\" or pass --dataset)");

  s.dataset = ingest_bird_layout(*s.cfg.dataset);
  s.backends = BackendSet::from_config(s.cfg);
  s.prompts = s.cfg.prompts_dir ? PromptSet::load(*s.cfg.prompts_dir) : PromptSet::defaults();
  s.store = std::make_unique<TraceStore>(s.cfg.store);

  std::string run_id = o.run_id.empty() ? (source ? source->run_id : std::string("default")) : o.run_id;
  if (auto existing = s.store->read_manifest(run_id)) {
    s.manifest = *existing;
    if (comparable(s.manifest.config) != comparable(s.cfg.to_json())) {
      // The manifest always records the settings of the latest invocation.
      err << fmt::format("note: settings of run {} changed; manifest updated\n", run_id);
      s.manifest.config = s.cfg.to_json();
      s.store->write_manifest(s.manifest, true);
    }
  } else {
    std::vector<Question> sample;
    std::uint64_t seed = s.cfg.seed;
    double fraction = s.cfg.sample_fraction;
    if (source) {
      for (const auto& id : source->question_ids) {
        const Question* q = s.dataset->find_question(id);
        if (!q) throw ConfigError(fmt::format("manifest question {} is not in the dataset", id));
        sample.push_back(*q);
      }
      seed = source->seed;
      fraction = source->sample_fraction;
    } else {
      sample = stratified_sample(s.dataset->questions(), fraction, seed);
    }
    s.manifest = make_manifest(run_id, s.cfg.to_json(), *s.dataset, sample, seed, fraction);
    if (source) {
      for (const auto& [db, digest] : source->database_digests) {
        auto it = s.manifest.database_digests.find(db);
        if (it == s.manifest.database_digests.end() || it->second != digest)
          throw ConfigError(fmt::format("database {} differs from the one recorded in the manifest", db));
      }
    }
    s.store->write_manifest(s.manifest, o.force);
  }
  for (const auto& id : s.manifest.question_ids) {
    const Question* q = s.dataset->find_question(id);
    if (!q) throw ConfigError(fmt::format("run question {} is not in the dataset", id));
    s.questions.push_back(*q);
  }
  return s;
}

Connection open_db(const Session& s, const Question& q) {
  auto it = s.dataset->databases().find(q.db_id);
  if (it == s.dataset->databases().end()) throw IngestError(fmt::format("unknown database \"{}\"", q.db_id));
  return Connection(it->second.sqlite_path);
}

// Runs fn(i) for i in [0, n) on `workers` threads. Returns the failure count;
// failures are reported on `err`.
std::size_t parallel_for(std::size_t n, std::size_t workers, std::ostream& err,
                         const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failures{0};
  std::mutex err_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        ++failures;
        std::lock_guard lock(err_mu);
        err << e.what() << "\n";
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return failures;
}

int cmd_sample(const Options& o, std::ostream& out, std::ostream& err) {
  Session s = open_session(o, err);
  std::map<std::string, std::size_t> per;
  for (const auto& q : s.questions) ++per[std::string(to_string(q.difficulty))];
  out << fmt::format("run {}: {} of {} questions (seed {}, fraction {})\n", s.manifest.run_id, s.questions.size(),
                     s.dataset->questions().size(), s.manifest.seed, s.manifest.sample_fraction);
  for (const auto& [k, v] : per) out << fmt::format("  {}: {}\n", k, v);
  out << (s.store->run_dir(s.manifest.run_id) / "manifest.json").string() << "\n";
  return kOk;
}

ExplorationTrace explore_one(const Session& s, const Question& q, AgentKind kind) {
  auto catalog = s.dataset->catalog(q.db_id);
  Connection conn = open_db(s, q);
  ExplorationTrace t =
      run_agent(q, *catalog, conn, s.backends.get(s.cfg.agent_backend), s.cfg.agent_config(kind), s.prompts);
  if (t.termination == Termination::backend_error)
    throw Error(fmt::format("question {}: backend error: {}", q.id, t.error));
  return t;
}

int cmd_explore(const Options& o, std::ostream& out, std::ostream& err) {
  Session s = open_session(o, err);
  std::atomic<std::size_t> written{0}, skipped{0};
  std::vector<std::pair<std::size_t, AgentKind>> jobs;
  for (std::size_t i = 0; i < s.questions.size(); ++i)
    for (AgentKind kind : s.cfg.agent_kinds) jobs.emplace_back(i, kind);
  auto failures = parallel_for(jobs.size(), s.cfg.workers, err, [&](std::size_t j) {
    const auto& [qi, kind] = jobs[j];
    const Question& q = s.questions[qi];
    if (!o.force && s.store->has_trace(s.manifest.run_id, kind, q.id)) {
      ++skipped;
      return;
    }
    s.store->write_trace(s.manifest, explore_one(s, q, kind), o.force);
    ++written;
  });
  out << fmt::format("explore: {} traces written, {} already present, {} failed\n", written.load(), skipped.load(),
                     failures);
  return failures ? kPartialFailure : kOk;
}

int cmd_generate(const Options& o, std::ostream& out, std::ostream& err) {
  Session s = open_session(o, err);
  const AgentKind kind = s.cfg.agent_kinds.front();
  std::vector<GeneratorSpec> gens;
  for (const auto& g : s.cfg.generators) gens.push_back({&s.backends.get(g.backend), g.postprocess});
  FanOutOptions fo;
  fo.generation = s.cfg.generation_options();
  fo.refinement = s.cfg.refinement;
  if (!s.cfg.postprocess_backend.empty()) fo.postprocess_backend = &s.backends.get(s.cfg.postprocess_backend);

  std::atomic<std::size_t> written{0}, skipped{0};
  auto failures = parallel_for(s.questions.size(), s.cfg.workers, err, [&](std::size_t i) {
    const Question& q = s.questions[i];
    if (!o.force && s.store->read_candidates(s.manifest.run_id, q.id)) {
      ++skipped;
      return;
    }
    auto trace = s.store->read_trace(s.manifest.run_id, kind, q.id);
    if (!trace) throw Error(fmt::format("question {}: no {} trace; run explore first", q.id, to_string(kind)));
    Connection conn = open_db(s, q);
    auto cands = fan_out_candidates(q, *trace, s.cfg.k, gens, s.cfg.rounds, conn, s.prompts, fo);
    s.store->write_candidates(s.manifest, q.id, cands, o.force);
    ++written;
  });
  out << fmt::format("generate: {} questions written, {} already present, {} failed\n", written.load(),
                     skipped.load(), failures);
  return failures ? kPartialFailure : kOk;
}

std::string summary_text(const json& summary) {
  std::string t = fmt::format("questions: {}\n", summary["questions"].get<std::size_t>());
  for (const auto& g : summary["generators"]) {
    t += fmt::format("EX {}{}: {:.4f}\n", g["backend"].get<std::string>(),
                     g["postprocessed"].get<bool>() ? " +columns" : "", g["ex"].get<double>());
  }
  for (const auto& b : summary["best_of"]) {
    t += fmt::format("best-of-{}: {:.4f}\n", b["n"].get<int>(), b["accuracy"].get<double>());
  }
  for (const auto& [stratum, v] : summary["strata"].items()) {
    t += fmt::format("  {}: {} questions, best-of-1 {:.4f}\n", stratum, v["questions"].get<std::size_t>(),
                     v["best_of_1"].get<double>());
  }
  if (summary["gold_errors"].get<std::size_t>()) {
    t += fmt::format("gold queries that failed: {}\n", summary["gold_errors"].get<std::size_t>());
  }
  return t;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  Session s = open_session(o, err);
  std::vector<EvalRecord> records(s.questions.size());
  auto failures = parallel_for(s.questions.size(), s.cfg.workers, err, [&](std::size_t i) {
    const Question& q = s.questions[i];
    records[i] = make_eval_record(q.id, q.difficulty, {});
    auto cands = s.store->read_candidates(s.manifest.run_id, q.id);
    if (!cands) throw Error(fmt::format("question {}: no candidates; run generate first", q.id));
    Connection conn = open_db(s, q);
    records[i] = evaluate_candidates(q, *cands, conn, s.cfg.limits.timeout);
  });

  std::string lines;
  for (const auto& r : records) lines += json(r).dump() + "\n";
  s.store->write_run_file(s.manifest.run_id, "eval/records.jsonl", lines);

  std::vector<int> ns = o.best_of;
  if (ns.empty())
    for (int n = 1; n <= s.cfg.rounds; ++n) ns.push_back(n);
  json summary{{"format_version", kFormatVersion}, {"questions", records.size()}};
  json gens = json::array();
  for (const auto& g : s.cfg.generators) {
    gens.push_back({{"backend", g.backend}, {"postprocessed", false},
                    {"ex", execution_accuracy(records, g.backend, false)}});
    if (g.postprocess)
      gens.push_back({{"backend", g.backend}, {"postprocessed", true},
                      {"ex", execution_accuracy(records, g.backend, true)}});
  }
  summary["generators"] = gens;
  json bo = json::array();
  for (int n : ns) bo.push_back({{"n", n}, {"accuracy", best_of_n(records, n)}});
  summary["best_of"] = bo;
  std::map<std::string, std::vector<EvalRecord>> by_stratum;
  for (const auto& r : records) by_stratum[std::string(to_string(r.stratum))].push_back(r);
  json strata = json::object();
  for (const auto& [name, rs] : by_stratum) strata[name] = {{"questions", rs.size()}, {"best_of_1", best_of_n(rs, 1)}};
  summary["strata"] = strata;
  summary["gold_errors"] = static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const EvalRecord& r) { return r.gold_error.has_value(); }));

  std::string text = summary_text(summary);
  s.store->write_run_file(s.manifest.run_id, "eval/summary.json", summary.dump(2) + "\n");
  s.store->write_run_file(s.manifest.run_id, "eval/summary.txt", text);
  out << text;
  return failures ? kPartialFailure : kOk;
}

int cmd_scaling(const Options& o, std::ostream& out, std::ostream& err) {
  Session s = open_session(o, err);
  std::mutex mu;
  std::size_t failures = 0;
  TraceSource traces = [&](const Question& q, AgentKind kind) -> std::optional<ExplorationTrace> {
    if (auto t = s.store->read_trace(s.manifest.run_id, kind, q.id)) return t;
    try {
      ExplorationTrace t = explore_one(s, q, kind);
      s.store->write_trace(s.manifest, t, false);
      return t;
    } catch (const std::exception& e) {
      std::lock_guard lock(mu);
      ++failures;
      err << e.what() << "\n";
      return std::nullopt;
    }
  };
  ConnectionSource conns = [&](const Question& q) { return open_db(s, q); };
  ScalingOptions so;
  so.agent_kinds = s.cfg.agent_kinds;
  so.ks = s.cfg.scaling_ks;
  so.refinement = s.cfg.scaling_refinement;
  so.generation = s.cfg.generation_options();
  auto points = run_scaling_experiment(s.questions, traces, conns, s.backends.get(s.cfg.scaling_backend), so,
                                       s.prompts);
  std::string csv = scaling_csv(points);
  s.store->write_run_file(s.manifest.run_id, "scaling.csv", csv);
  if (!o.out.empty()) write_file_atomic(o.out, csv);
  out << csv;
  return failures ? kPartialFailure : kOk;
}

int cmd_ask(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.db.empty() || o.question.empty()) throw UsageError("ask needs --db and --question");
  RunConfig cfg;
  if (!o.config.empty()) cfg = RunConfig::load(o.config);
  apply_overrides(cfg, o);
  cfg.validate();
  if (cfg.agent_backend.empty()) throw UsageError("no backend: pass --config or --backend scripted --tape FILE");
  BackendSet backends = BackendSet::from_config(cfg);
  PromptSet prompts = cfg.prompts_dir ? PromptSet::load(*cfg.prompts_dir) : PromptSet::defaults();

  std::optional<fs::path> docs;
  if (!o.docs.empty()) docs = fs::path(o.docs);
  DbCatalog catalog = attach_database(o.db, docs, fs::path(o.db).stem().string());
  for (const auto& w : catalog.warnings) err << "warning: " << w << "\n";
  Connection conn(o.db);
  Question q{"ask", catalog.db_id, o.question, o.evidence, std::nullopt, Difficulty::unknown};

  const AgentKind kind = cfg.agent_kinds.front();
  ExplorationTrace trace = run_agent(q, catalog, conn, backends.get(cfg.agent_backend), cfg.agent_config(kind), prompts);
  for (const auto& op : trace.operations) {
    out << fmt::format("[{}] {}\n{}\n", op.index, render_invocation(op.call), op.rendered_result);
  }
  out << fmt::format("exploration: {} operations, {} tokens, {}\n", trace.operations.size(), trace.tokens_generated,
                     to_string(trace.termination));
  if (trace.termination == Termination::backend_error) {
    err << "backend error: " << trace.error << "\n";
    return kPartialFailure;
  }
  GenerationPrompt prompt = build_generation_prompt(q, trace, o.k.value_or(cfg.k));
  Backend& gen = backends.get(cfg.generators.front().backend);
  SqlCandidate cand = cfg.refinement ? refine_sql(prompt, gen, conn, prompts, cfg.generation_options()).final
                                     : generate_sql(prompt, gen, conn, prompts, cfg.generation_options());
  out << "SQL: " << (cand.sql.empty() ? std::string("(none)") : cand.sql) << "\n";
  out << fmt::format("outcome: {} ({} rows){}\n", to_string(cand.exec_outcome.kind), cand.exec_outcome.row_count,
                     cand.exec_outcome.message.empty() ? "" : ": " + cand.exec_outcome.message);
  return cand.exec_outcome.kind == ExecOutcome::Kind::ok ? kOk : kPartialFailure;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Agentic text-to-SQL runtime and evaluation harness", "raise"};
  app.require_subcommand(1);
  Options o;

  auto run_flags = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "run configuration (JSON)");
    sub->add_option("--manifest", o.manifest, "reproduce the run recorded in this manifest");
    sub->add_option("--run-id", o.run_id, "run identifier (default: \"default\")");
    sub->add_option("--dataset", o.dataset, "dataset root, overrides the config");
    sub->add_option("--store", o.store, "trace store root, overrides the config");
    sub->add_option("--seed", o.seed, "sampling and backend seed");
    sub->add_option("--fraction", o.fraction, "sample fraction in (0, 1]");
    sub->add_option("--workers", o.workers, "parallel questions");
    sub->add_option("--backend", o.backend, "route every role to this backend (\"scripted\" with --tape)");
    sub->add_option("--tape", o.tape, "scripted backend tape");
    sub->add_option("--agent", o.agent, "agent kind: interaction or static");
    sub->add_flag("--force", o.force, "overwrite existing records");
  };

  auto* sample = app.add_subcommand("sample", "draw the stratified sample and write the run manifest");
  run_flags(sample);
  auto* explore = app.add_subcommand("explore", "run the exploration agent over the sample");
  run_flags(explore);
  auto* generate = app.add_subcommand("generate", "generate SQL candidates from stored traces");
  run_flags(generate);
  generate->add_option("--k", o.k, "operations included in the generation prompt");
  generate->add_option("--rounds", o.rounds, "independent generation rounds");
  auto* eval = app.add_subcommand("eval", "score candidates by execution match");
  run_flags(eval);
  eval->add_option("--best-of", o.best_of, "report best-of-N for these N")->delimiter(',');
  eval->add_option("--rounds", o.rounds, "rounds to report best-of-N for");
  auto* scaling = app.add_subcommand("scaling", "accuracy as a function of exploration depth");
  run_flags(scaling);
  scaling->add_option("--out", o.out, "also write the CSV here");
  auto* ask = app.add_subcommand("ask", "explore one database and answer one question");
  ask->add_option("--config", o.config, "run configuration (JSON) providing backends");
  ask->add_option("--backend", o.backend, "backend name (\"scripted\" with --tape)");
  ask->add_option("--tape", o.tape, "scripted backend tape");
  ask->add_option("--db", o.db, "SQLite database file")->required();
  ask->add_option("--docs", o.docs, "column documentation directory");
  ask->add_option("--question", o.question, "natural-language question")->required();
  ask->add_option("--evidence", o.evidence, "external knowledge hint");
  ask->add_option("--agent", o.agent, "agent kind: interaction or static");
  ask->add_option("--k", o.k, "operations included in the generation prompt");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (sample->parsed()) return cmd_sample(o, out, err);
    if (explore->parsed()) return cmd_explore(o, out, err);
    if (generate->parsed()) return cmd_generate(o, out, err);
    if (eval->parsed()) return cmd_eval(o, out, err);
    if (scaling->parsed()) return cmd_scaling(o, out, err);
    if (ask->parsed()) return cmd_ask(o, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IngestError& e) {
    err << "dataset error: " << e.what() << "\n";
    return kConfigError;
  } catch (const AttachError& e) {
    err << "database error: " << e.what() << "\n";
    return kConfigError;
  } catch (const StoreError& e) {
    err << "store error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kPartialFailure;
  }
  return kConfigError;
}

}  // namespace raisesql::cli
