#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "generators.hpp"
#include "raise/evaluation.hpp"
#include "raise/protocol.hpp"
#include "raise/tools.hpp"

using namespace raisesql;

namespace {

std::string transcript(std::size_t calls) {
  std::mt19937_64 rng(1);
  std::string text;
  for (std::size_t i = 0; i < calls; ++i) {
    text += "Looking at the schema before deciding. ";
    text += render_tagged(raisesql::testing::random_call(rng));
    text += "\n[RESULT] ok [/RESULT]\n";
  }
  return text + "```sql\nSELECT 1\n```";
}

void BM_ScanEvents(benchmark::State& state) {
  std::string text = transcript(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(scan_events(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ScanEvents)->Arg(1)->Arg(16)->Arg(128);

void BM_ParseInvocation(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::vector<std::string> raw;
  for (int i = 0; i < 256; ++i) raw.push_back(render_invocation(raisesql::testing::random_call(rng)));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(parse_invocation(raw[i++ % raw.size()]));
}
BENCHMARK(BM_ParseInvocation);

ResultSet random_result(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  ResultSet rs{cols, {}};
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<CellValue> row;
    for (std::size_t c = 0; c < cols; ++c)
      row.push_back(c % 2 ? CellValue::text(std::to_string(rng() % 50)) : CellValue::integer(rng() % 50));
    rs.rows.push_back(std::move(row));
  }
  return rs;
}

void BM_ExecutionMatch(benchmark::State& state) {
  std::mt19937_64 rng(3);
  auto rows = static_cast<std::size_t>(state.range(0));
  ResultSet gold = random_result(rng, rows, 4);
  ResultSet pred = gold;
  std::shuffle(pred.rows.begin(), pred.rows.end(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(execution_match(pred, gold));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * rows));
}
BENCHMARK(BM_ExecutionMatch)->Arg(10)->Arg(1000)->Arg(100000);

void BM_RenderTable(benchmark::State& state) {
  std::mt19937_64 rng(4);
  ResultSet rs = random_result(rng, static_cast<std::size_t>(state.range(0)), 6);
  std::vector<std::string> cols{"id", "name", "city", "label", "weight", "note"};
  for (auto _ : state)
    benchmark::DoNotOptimize(render_table(cols, rs.rows, static_cast<std::int64_t>(rs.rows.size()), 80));
}
BENCHMARK(BM_RenderTable)->Arg(20)->Arg(1000);

}  // namespace
BENCHMARK_MAIN();
