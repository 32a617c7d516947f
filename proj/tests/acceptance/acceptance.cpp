// Acceptance gate: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "generators.hpp"
#include "raise/agent.hpp"
#include "raise/config.hpp"
#include "raise/digest.hpp"
#include "raise/evaluation.hpp"
#include "raise/generation.hpp"
#include "raise/protocol.hpp"
#include "raise/sampling.hpp"
#include "raise/scaling.hpp"
#include "raise/serialize.hpp"
#include "raise/tools.hpp"
#include "raise_tools/cli.hpp"
#include "raise_tools/fixtures.hpp"
#include "test_support.hpp"

using namespace raisesql;
using raisesql::testing::TempDir;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned limits.
constexpr double kProtocolSeconds = 10.0;
constexpr double kControlSeconds = 5.0;
constexpr double kEndToEndSeconds = 60.0;
constexpr int kRoundTripCalls = 5000;
constexpr int kFuzzInputs = 10000;
constexpr int kStaticRuns = 100;
constexpr int kMatchSets = 1000;
constexpr int kBestOfFixtures = 1000;
constexpr int kSandboxInvocations = 10000;

struct Verdict {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

TapeEntry fifo(std::string text) { return TapeEntry{std::move(text), {}, false, std::nullopt}; }

// ---------------------------------------------------------------------------

Verdict capability() {
  Verdict v;
  auto cfg = RunConfig::load(fs::path(RAISE_SOURCE_DIR) / "configs" / "bird_http.json");
  cfg.validate();
  auto set = BackendSet::from_config(cfg);
  std::size_t http = 0;
  for (const auto& name : set.names()) {
    auto* b = dynamic_cast<HttpBackend*>(&set.get(name));
    if (!b) continue;
    ++http;
    CompletionRequest req;
    req.messages = {{"user", "hi"}};
    req.stop_sequences = {"[EXECUTE]"};
    auto body = nlohmann::json::parse(b->request_body(req));
    if (!body.contains("model") || body["stop"][0] != "[EXECUTE]") v.pass = false;
  }
  std::ifstream readme(fs::path(RAISE_SOURCE_DIR) / "README.md");
  std::string text((std::istreambuf_iterator<char>(readme)), std::istreambuf_iterator<char>());
  bool documented = text.find("raise scaling --config configs/bird_http.json") != std::string::npos &&
                    text.find("raise eval --config configs/bird_http.json") != std::string::npos;
  v.pass = v.pass && http == 3 && documented;
  v.detail = fmt::format("{} http backends configured, scaling+eval invocation documented: {}", http, documented);
  return v;
}

Verdict protocol_suite() {
  Verdict v;
  auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  int round_trips = 0, nested = 0;
  for (int i = 0; i < kRoundTripCalls; ++i) {
    ToolCall call = raisesql::testing::random_call(rng);
    auto parsed = parse_invocation(render_invocation(call));
    auto* got = std::get_if<ToolCall>(&parsed);
    // Through the stream scanner as well.
    std::string stream = "thinking " + render_tagged(call) + " tail";
    auto span = scan_stream(stream);
    bool ok = got && *got == call && span;
    if (ok) {
      auto again = parse_invocation(span_text(stream, *span));
      ok = std::holds_alternative<ToolCall>(again) && std::get<ToolCall>(again) == call;
    }
    round_trips += ok;
    if (call.tool == Tool::run_query && std::get<std::string>(call.args[0]).find("((") != std::string::npos) ++nested;
  }
  int crashes = 0;
  for (int i = 0; i < kFuzzInputs; ++i) {
    std::string input = i % 2 ? raisesql::testing::random_bytes(rng, 300) : raisesql::testing::random_protocol_soup(rng);
    try {
      scan_events(input);
      scan_stream(input);
      parse_invocation(input);
      extract_final_sql(input);
    } catch (...) {
      ++crashes;
    }
  }
  double secs = seconds_since(t0);
  v.pass = round_trips == kRoundTripCalls && nested > 0 && crashes == 0 && secs < kProtocolSeconds;
  v.detail = fmt::format("{}/{} round trips ({} with nested parens), {} fuzz inputs, {} crashes, {:.2f}s",
                         round_trips, kRoundTripCalls, nested, kFuzzInputs, crashes, secs);
  return v;
}

// Independent model: a boundary adds its tokens to both counters, and a tool
// result resets the since-tool counter.
Verdict control_policy() {
  Verdict v;
  auto t0 = Clock::now();
  const std::int64_t sizes[] = {1, 137, 1399, 1400, 1401, 5000};
  const int kLength = 6;
  AgentConfig cfg;
  std::size_t sequences = 0, mismatches = 0, precedence_cases = 0;
  // Each step picks a chunk size and whether a tool result arrived: 12 options.
  std::vector<int> digits(kLength, 0);
  while (true) {
    BudgetState st;
    std::int64_t total = 0, since = 0;
    bool done = false;
    std::optional<int> first_nudge, first_term, want_nudge, want_term;
    for (int i = 0; i < kLength; ++i) {
      std::int64_t tokens = sizes[digits[i] % 6];
      bool tool = digits[i] >= 6;
      ControlAction got = apply_control(st, cfg, {tokens, tool});
      total += tokens;
      since = tool ? 0 : since + tokens;
      ControlAction want = ControlAction::none;
      if (!done && total > 10'000) {
        want = ControlAction::inject_terminator;
        done = true;
        if (since > 1400) ++precedence_cases;
      } else if (!done && since > 1400) {
        want = ControlAction::inject_nudge;
      }
      if (got != want) ++mismatches;
      if (got == ControlAction::inject_nudge && !first_nudge) first_nudge = i;
      if (got == ControlAction::inject_terminator && !first_term) first_term = i;
      if (want == ControlAction::inject_nudge && !want_nudge) want_nudge = i;
      if (want == ControlAction::inject_terminator && !want_term) want_term = i;
    }
    if (first_nudge != want_nudge || first_term != want_term) ++mismatches;
    ++sequences;
    int pos = 0;
    while (pos < kLength && ++digits[pos] == 12) digits[pos++] = 0;
    if (pos == kLength) break;
  }
  double secs = seconds_since(t0);
  v.pass = mismatches == 0 && precedence_cases > 0 && secs < kControlSeconds;
  v.detail = fmt::format("{} sequences of {} boundaries, {} mismatches, {} precedence cases, {:.2f}s", sequences,
                         kLength, mismatches, precedence_cases, secs);
  return v;
}

Verdict static_agent(const fs::path& pets) {
  Verdict v;
  DbCatalog cat = attach_database(pets);
  Connection conn(pets);
  std::mt19937_64 rng(4);
  std::size_t run_query_ops = 0, attempts = 0, other_ops = 0;
  for (int run = 0; run < kStaticRuns; ++run) {
    std::vector<TapeEntry> tape;
    for (int t = 0, n = 2 + static_cast<int>(rng() % 5); t < n; ++t) {
      switch (rng() % 3) {
        case 0: tape.push_back(fifo("Let me check. [RUN] run_query(SELECT COUNT(*) FROM pet) [EXECUTE]")); ++attempts; break;
        case 1: tape.push_back(fifo("Rows? [RUN] run_query(SELECT * FROM owner WHERE city = 'Porto') [EXECUTE]")); ++attempts; break;
        default: tape.push_back(fifo("Schema. [RUN] read_table_columns(pet) [EXECUTE]"));
      }
    }
    tape.push_back(fifo("```sql\nSELECT 1\n```"));
    ScriptedBackend b("static", tape);
    Question q{std::to_string(run), "pets", "How many pets?", "", "SELECT COUNT(*) FROM pet", Difficulty::simple};
    AgentConfig cfg;
    cfg.agent_kind = AgentKind::static_schema;
    ExplorationTrace trace = run_agent(q, cat, conn, b, cfg);
    // Through storage as well: what is kept is what gets counted.
    auto stored = nlohmann::json::parse(nlohmann::json(trace).dump()).get<ExplorationTrace>();
    for (const auto& op : stored.operations) {
      if (op.call.tool == Tool::run_query) ++run_query_ops;
      else ++other_ops;
    }
  }
  v.pass = run_query_ops == 0 && attempts > 0;
  v.detail = fmt::format("{} runs, {} run_query attempts, {} run_query operations stored, {} other operations",
                         kStaticRuns, attempts, run_query_ops, other_ops);
  return v;
}

Verdict refinement(const fs::path& pets) {
  Verdict v;
  Connection conn(pets);
  GenerationPrompt prompt{"How many pets?", "", {}, {}};
  std::string log;
  for (int j = 1; j <= 6; ++j) {
    std::vector<TapeEntry> tape;
    for (int f = 1; f < j; ++f) tape.push_back(fifo("```sql\nSELECT no_col_" + std::to_string(f) + " FROM pet\n```"));
    tape.push_back(fifo("```sql\nSELECT COUNT(*) FROM pet\n```"));
    ScriptedBackend b("gen", tape);
    auto out = refine_sql(prompt, b, conn);
    bool ok = out.succeeded && out.attempts == j && out.feedback.size() == static_cast<std::size_t>(j - 1);
    v.pass = v.pass && ok;
    log += fmt::format("j={}:{}/{} ", j, out.attempts, out.feedback.size());
  }
  std::vector<TapeEntry> failing;
  for (int f = 0; f < 8; ++f) failing.push_back(fifo("```sql\nSELECT nope FROM pet\n```"));
  ScriptedBackend b("gen", failing);
  auto out = refine_sql(prompt, b, conn);
  bool stopped = !out.succeeded && out.attempts == 6 && b.calls() == 6;
  v.pass = v.pass && stopped;
  v.detail = fmt::format("{}; all-fail tape stops at {} attempts", log, out.attempts);
  return v;
}

// Written without sorting: membership of every row in the other side.
bool oracle_match(const ResultSet& a, const ResultSet& b) {
  if (a.column_count != b.column_count) return false;
  auto same_row = [](const std::vector<CellValue>& x, const std::vector<CellValue>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (compare_cells(x[i], y[i]) != 0) return false;
    return true;
  };
  auto contained = [&](const ResultSet& from, const ResultSet& in) {
    return std::all_of(from.rows.begin(), from.rows.end(), [&](const auto& r) {
      return std::any_of(in.rows.begin(), in.rows.end(), [&](const auto& s) { return same_row(r, s); });
    });
  };
  return contained(a, b) && contained(b, a);
}

Verdict execution_match_oracle() {
  Verdict v;
  std::mt19937_64 rng(6);
  auto cell = [&](std::size_t col) {
    // Columns hold different types, so a column permutation changes every row.
    switch (col % 3) {
      case 0: return rng() % 6 == 0 ? CellValue::null() : CellValue::integer(static_cast<std::int64_t>(rng() % 4));
      case 1: return CellValue::text(std::string(1, static_cast<char>('a' + rng() % 3)));
      default: return rng() % 2 ? CellValue::real(static_cast<double>(rng() % 3) / 4) : CellValue::integer(1);
    }
  };
  auto make = [&](std::size_t cols, std::size_t rows) {
    ResultSet rs{cols, {}};
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<CellValue> row;
      for (std::size_t c = 0; c < cols; ++c) row.push_back(cell(c));
      rs.rows.push_back(row);
    }
    return rs;
  };
  int agree = 0, row_perm = 0, row_perm_ok = 0, col_perm = 0, col_perm_ok = 0;
  for (int n = 0; n < kMatchSets; ++n) {
    std::size_t cols = 1 + rng() % 3;
    ResultSet gold = make(cols, 1 + rng() % 5);
    ResultSet pred;
    bool expect_row = false, expect_col = false;
    switch (n % 4) {
      case 0:
        pred = gold;
        std::shuffle(pred.rows.begin(), pred.rows.end(), rng);
        pred.rows.push_back(pred.rows.front());
        expect_row = true;
        break;
      case 1:
        if (cols < 2) {
          pred = make(cols, 1 + rng() % 5);
          break;
        }
        pred = gold;
        for (auto& row : pred.rows) std::rotate(row.begin(), row.begin() + 1, row.end());
        expect_col = true;
        break;
      case 2:
        pred = gold;
        pred.rows[rng() % pred.rows.size()][rng() % cols] = cell(rng() % 3);
        break;
      default: pred = make(rng() % 5 == 0 ? cols + 1 : cols, rng() % 5);
    }
    bool got = execution_match(pred, gold);
    agree += got == oracle_match(pred, gold);
    if (expect_row) {
      ++row_perm;
      row_perm_ok += got;
    }
    if (expect_col) {
      ++col_perm;
      col_perm_ok += !got;
    }
  }
  v.pass = agree == kMatchSets && row_perm == row_perm_ok && col_perm == col_perm_ok && col_perm > 0;
  v.detail = fmt::format("{}/{} agree; row permutations matched {}/{}; column permutations rejected {}/{}", agree,
                         kMatchSets, row_perm_ok, row_perm, col_perm_ok, col_perm);
  return v;
}

Verdict best_of_monotone() {
  Verdict v;
  std::mt19937_64 rng(7);
  int violations = 0;
  for (int f = 0; f < kBestOfFixtures; ++f) {
    std::vector<EvalRecord> records;
    for (int q = 0, nq = 1 + static_cast<int>(rng() % 30); q < nq; ++q) {
      std::vector<CandidateFlag> flags;
      for (int round = 1, rounds = 1 + static_cast<int>(rng() % 8); round <= rounds; ++round)
        for (int g = 0, ng = 1 + static_cast<int>(rng() % 3); g < ng; ++g)
          flags.push_back({"b" + std::to_string(g), round, rng() % 2 == 0, rng() % 6 == 0});
      records.push_back(make_eval_record(std::to_string(q), Difficulty::simple, flags));
    }
    for (int n = 1; n <= 7; ++n) violations += best_of_n(records, n) > best_of_n(records, n + 1);
  }
  v.pass = violations == 0;
  v.detail = fmt::format("{} fixtures, {} violations over n=1..7", kBestOfFixtures, violations);
  return v;
}

Verdict sampler() {
  Verdict v;
  auto alloc = allocate_largest_remainder({60, 30, 10}, 0.1);
  std::vector<Question> qs;
  const Difficulty order[] = {Difficulty::simple, Difficulty::moderate, Difficulty::challenging};
  const int counts[] = {60, 30, 10};
  for (int s = 0; s < 3; ++s)
    for (int i = 0; i < counts[s]; ++i)
      qs.push_back({fmt::format("{}-{}", s, i), "db", "q", "", "SELECT 1", order[s]});
  auto serialize = [](const std::vector<Question>& sample) {
    std::string out;
    for (const auto& q : sample) out += nlohmann::json(q).dump() + "\n";
    return out;
  };
  std::string first = serialize(stratified_sample(qs, 0.1, 2025));
  int identical = 0;
  for (int r = 0; r < 10; ++r) identical += serialize(stratified_sample(qs, 0.1, 2025)) == first;
  std::map<Difficulty, int> per;
  for (const auto& q : stratified_sample(qs, 0.1, 2025)) ++per[q.difficulty];
  bool split = alloc == std::vector<std::size_t>{6, 3, 1} && per[Difficulty::simple] == 6 &&
               per[Difficulty::moderate] == 3 && per[Difficulty::challenging] == 1;
  v.pass = split && identical == 10;
  v.detail = fmt::format("allocation {}/{}/{}, sample {}/{}/{}, {}/10 identical runs", alloc[0], alloc[1], alloc[2],
                         per[Difficulty::simple], per[Difficulty::moderate], per[Difficulty::challenging], identical);
  return v;
}

Verdict depth_truncation(const fs::path& pets) {
  Verdict v;
  ExplorationTrace trace;
  trace.question_id = "q";
  for (std::size_t i = 0; i < 9; ++i) {
    OperationRecord op;
    op.index = i;
    op.call = ToolCall::query(fmt::format("SELECT {} AS probe", i));
    op.rendered_result = fmt::format("probe-result-{}", i);
    trace.operations.push_back(op);
  }
  Question q{"q", "pets", "Which pet is heaviest?", "", "SELECT name FROM pet ORDER BY weight DESC LIMIT 1",
             Difficulty::simple};
  const std::size_t ks[] = {0, 3, 7, 9, 15, 31};
  bool sizes_ok = true, prefix_ok = true;
  std::vector<OperationRecord> previous;
  for (std::size_t k : ks) {
    auto p = build_generation_prompt(q, trace, k);
    sizes_ok = sizes_ok && p.operations_included.size() == std::min<std::size_t>(k, 9);
    prefix_ok = prefix_ok && std::equal(previous.begin(), previous.end(), p.operations_included.begin()) &&
                std::equal(p.operations_included.begin(), p.operations_included.end(), trace.operations.begin());
    previous = p.operations_included;
  }
  // The answer is right once the eighth probe is visible.
  ScriptedBackend gen("gen", {{"```sql\nSELECT name FROM pet ORDER BY weight DESC LIMIT 1\n```",
                               {"probe-result-7"}, true, std::nullopt},
                              {"```sql\nSELECT name FROM pet ORDER BY weight LIMIT 1\n```", {}, true, std::nullopt}});
  ScalingOptions opts;
  opts.agent_kinds = {AgentKind::interaction};
  opts.ks = {ks, ks + 6};
  opts.refinement = {false, true};
  auto points = run_scaling_experiment(
      {q}, [&](const Question&, AgentKind) { return std::optional<ExplorationTrace>(trace); },
      [&](const Question&) { return Connection(pets); }, gen, opts);
  std::map<std::pair<std::size_t, bool>, double> ex;
  for (const auto& p : points) ex[{p.k, p.refinement_enabled}] = p.execution_accuracy;
  bool plateau = ex[{15, false}] == ex[{31, false}] && ex[{15, true}] == ex[{31, true}];
  bool curve = ex[{7, false}] == 0.0 && ex[{9, false}] == 1.0;
  v.pass = sizes_ok && prefix_ok && plateau && curve;
  v.detail = fmt::format("sizes {}, prefixes {}, EX by k: {:.0f} {:.0f} {:.0f} {:.0f} {:.0f} {:.0f}, EX(15)==EX(31): {}",
                         sizes_ok, prefix_ok, ex[{0, false}], ex[{3, false}], ex[{7, false}], ex[{9, false}],
                         ex[{15, false}], ex[{31, false}], plateau);
  return v;
}

std::map<std::string, std::string> run_files(const fs::path& run) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(run)) {
    if (!e.is_regular_file()) continue;
    std::string rel = fs::relative(e.path(), run).string();
    // The manifest names its own store, so it differs by construction.
    if (rel == "manifest.json") continue;
    files[rel] = raisesql::testing::slurp(e.path());
  }
  return files;
}

Verdict end_to_end(const fs::path& dir) {
  Verdict v;
  auto cfg = fixtures::write_mini_bird_demo(dir).string();
  std::ostringstream out, err;
  auto t0 = Clock::now();
  int code = 0;
  for (const char* cmd : {"sample", "explore", "generate", "eval"})
    code = std::max(code, cli::dispatch({cmd, "--config", cfg, "--run-id", "acceptance"}, out, err));
  double secs = seconds_since(t0);

  fs::path run = dir / "runs" / "acceptance";
  auto summary = nlohmann::json::parse(raisesql::testing::slurp(run / "eval" / "summary.json"));
  std::vector<double> curve;
  for (const auto& b : summary["best_of"]) curve.push_back(b["accuracy"].get<double>());
  bool curve_ok = curve.size() >= 2 && std::is_sorted(curve.begin(), curve.end()) && curve.back() > 0;

  std::ostringstream out2;
  int code2 = 0;
  fs::path replay = dir / "replay";
  for (const char* cmd : {"explore", "generate", "eval"})
    code2 = std::max(code2, cli::dispatch({cmd, "--manifest", (run / "manifest.json").string(), "--store",
                                           replay.string()},
                                          out2, err));
  auto a = run_files(run), b = run_files(replay / "acceptance");
  std::size_t traces = 0;
  for (const auto& [rel, body] : a) traces += rel.rfind("traces/", 0) == 0;
  bool identical = a == b && traces == 20;

  v.pass = code == 0 && code2 == 0 && secs < kEndToEndSeconds && curve_ok && identical;
  std::string c;
  for (double x : curve) c += fmt::format("{}{:.2f}", c.empty() ? "" : " ", x);
  v.detail = fmt::format("exit {}/{}, {:.2f}s, best-of-N [{}], {} files byte-identical on replay: {}", code, code2,
                         secs, c, a.size(), identical);
  if (!v.pass) v.detail += " | " + err.str().substr(0, 400);
  return v;
}

Verdict sandbox_safety(const fs::path& dir) {
  Verdict v;
  fs::path dbdir = dir / "sandbox";
  fixtures::build_pets_db(dbdir / "pets.sqlite");
  fixtures::write_pets_docs(dbdir / "docs");
  auto mb = fixtures::build_mini_bird(dir / "bird");
  std::vector<fs::path> dbs{dbdir / "pets.sqlite", mb.root / "dev_databases" / "library" / "library.sqlite",
                            mb.root / "dev_databases" / "clinic" / "clinic.sqlite"};
  auto listing = [&] {
    std::set<std::string> files;
    for (const auto& root : {dbdir, mb.root})
      for (const auto& e : fs::recursive_directory_iterator(root)) files.insert(e.path().string());
    return files;
  };
  std::map<fs::path, std::string> before;
  for (const auto& p : dbs) before[p] = sha256_file(p);
  auto files_before = listing();

  const std::vector<std::string> hostile = {
      "DELETE FROM pet", "DROP TABLE pet", "UPDATE pet SET name = 'x'", "INSERT INTO owner VALUES (9, 'Eve', 'Faro')",
      "CREATE TABLE t(x)", "CREATE INDEX i ON pet(name)", "ALTER TABLE pet ADD COLUMN z", "VACUUM",
      "VACUUM INTO '" + (dbdir / "copy.sqlite").string() + "'", "REINDEX", "ANALYZE",
      "ATTACH DATABASE '" + (dbdir / "evil.sqlite").string() + "' AS evil", "DETACH DATABASE main",
      "PRAGMA journal_mode = WAL", "PRAGMA user_version = 7", "PRAGMA writable_schema = ON", "PRAGMA query_only = 0",
      "PRAGMA table_info(pet)", "SELECT 1; DELETE FROM pet", "WITH x AS (SELECT 1) DELETE FROM pet",
      "BEGIN; DELETE FROM pet; COMMIT", "SELECT load_extension('/tmp/x')", "REPLACE INTO pet(pet_id) VALUES (1)",
      "SELECT * FROM pet; PRAGMA user_version = 3", "SAVEPOINT a", "CREATE TEMP TABLE t AS SELECT * FROM pet",
      "SELECT writefile('" + (dbdir / "w.txt").string() + "', 'x')",
  };
  std::mt19937_64 rng(11);
  ExecLimits limits{20, 80, std::chrono::seconds(2)};
  std::size_t hostile_sent = 0, rejected = 0;
  for (int i = 0; i < kSandboxInvocations; ++i) {
    const fs::path& db = dbs[rng() % dbs.size()];
    DbCatalog cat = i % 500 == 0 ? attach_database(db) : DbCatalog{};
    if (cat.tables.empty()) {
      static std::map<fs::path, DbCatalog> cache;
      auto it = cache.find(db);
      if (it == cache.end()) it = cache.emplace(db, attach_database(db, db == dbs[0] ? std::optional(dbdir / "docs") : std::nullopt)).first;
      cat = it->second;
    }
    Connection conn(db);
    ToolCall call;
    switch (rng() % 4) {
      case 0:
        call = ToolCall::query(hostile[rng() % hostile.size()]);
        ++hostile_sent;
        break;
      case 1: call = raisesql::testing::random_call(rng); break;
      case 2: call = ToolCall::query(raisesql::testing::random_bytes(rng, 60)); break;
      default: call = ToolCall::query("SELECT * FROM " + cat.tables[rng() % cat.tables.size()].name);
    }
    RenderedResult r = execute_tool(call, cat, conn, limits);
    if (call.tool == Tool::run_query && r.is_error) ++rejected;
  }
  std::size_t changed = 0;
  for (const auto& p : dbs) changed += sha256_file(p) != before[p];
  auto files_after = listing();
  v.pass = changed == 0 && files_after == files_before && hostile_sent > 0;
  v.detail = fmt::format("{} invocations ({} hostile), {} query errors, {} databases changed, {} new files",
                         kSandboxInvocations, hostile_sent, rejected, changed,
                         files_after.size() - std::min(files_after.size(), files_before.size()));
  return v;
}

}  // namespace

int main() {
  TempDir dir;
  fs::path pets = dir / "pets.sqlite";
  fixtures::build_pets_db(pets);

  std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"capability: http backends and documented scaling/eval", capability},
      {"protocol: round trip and fuzz", protocol_suite},
      {"control policy: exhaustive grid", control_policy},
      {"static agent: no run_query operations", [&] { return static_agent(pets); }},
      {"refinement: attempts and feedback", [&] { return refinement(pets); }},
      {"execution match: brute-force oracle", execution_match_oracle},
      {"best-of-N: monotone", best_of_monotone},
      {"stratified sampler: 60/30/10 at 0.1", sampler},
      {"depth truncation: prefix and plateau", [&] { return depth_truncation(pets); }},
      {"end-to-end: scripted mini dataset", [&] { return end_to_end(dir / "e2e"); }},
      {"sandbox: 10k fuzzed invocations", [&] { return sandbox_safety(dir.path()); }},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << " -- " << v.detail << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failed, criteria.size()) << std::endl;
  return failed;
}
