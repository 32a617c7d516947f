#include "raise/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "raise/error.hpp"

namespace raisesql {
namespace {

// Unbiased draw in [0, range) straight from the engine; standard library
// distributions differ between implementations.
std::uint64_t bounded(std::mt19937_64& eng, std::uint64_t range) {
  const std::uint64_t threshold = (0 - range) % range;
  std::uint64_t r;
  do {
    r = eng();
  } while (r < threshold);
  return r % range;
}

// fraction * size in units of 1e-9, so representation error in the
// fraction (0.3 * 10 = 2.99...) neither moves a floor nor breaks a tie.
constexpr std::uint64_t kUnit = 1'000'000'000;

std::uint64_t quota_units(long double f, std::size_t size) {
  return static_cast<std::uint64_t>(std::llround(f * static_cast<long double>(size) * static_cast<long double>(kUnit)));
}

}  // namespace

std::vector<std::size_t> allocate_largest_remainder(const std::vector<std::size_t>& sizes, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError(fmt::format("sample fraction {} outside (0, 1]", fraction));
  const long double f = fraction;
  const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  const std::size_t target = static_cast<std::size_t>((quota_units(f, total) + kUnit / 2) / kUnit);

  std::vector<std::size_t> alloc(sizes.size());
  std::vector<std::uint64_t> remainder(sizes.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    std::uint64_t q = quota_units(f, sizes[i]);
    alloc[i] = std::min<std::size_t>(sizes[i], q / kUnit);
    remainder[i] = q - alloc[i] * kUnit;
    assigned += alloc[i];
  }
  std::vector<std::size_t> order(sizes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return sizes[a] > sizes[b];
  });
  for (std::size_t idx : order) {
    if (assigned >= target) break;
    if (alloc[idx] < sizes[idx] && remainder[idx] > 0) {
      ++alloc[idx];
      ++assigned;
    }
  }
  return alloc;
}

std::vector<Question> stratified_sample(const std::vector<Question>& questions, double fraction, std::uint64_t seed) {
  constexpr Difficulty kStrata[] = {Difficulty::simple, Difficulty::moderate, Difficulty::challenging,
                                    Difficulty::unknown};
  std::vector<std::vector<std::size_t>> members(std::size(kStrata));
  for (std::size_t i = 0; i < questions.size(); ++i) {
    members[static_cast<std::size_t>(questions[i].difficulty)].push_back(i);
  }
  std::vector<std::size_t> sizes;
  for (const auto& m : members) sizes.push_back(m.size());
  auto alloc = allocate_largest_remainder(sizes, fraction);

  std::mt19937_64 eng(seed);
  std::vector<std::size_t> chosen;
  for (std::size_t s = 0; s < members.size(); ++s) {
    auto pool = members[s];
    for (std::size_t i = 0; i < alloc[s]; ++i) {
      std::size_t j = i + static_cast<std::size_t>(bounded(eng, pool.size() - i));
      std::swap(pool[i], pool[j]);
      chosen.push_back(pool[i]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<Question> out;
  out.reserve(chosen.size());
  for (auto i : chosen) out.push_back(questions[i]);
  return out;
}

}  // namespace raisesql
