#include "gfriend/synthesize.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <set>
#include <sstream>

#include "gfriend/errors.hpp"
#include "gfriend/seed.hpp"

namespace gfriend {

namespace {

constexpr std::array<char, 4> kSymbols = {'a', 'b', 'c', 'd'};
constexpr std::size_t kMajorityLength = 7;
constexpr std::size_t kOrderLength = 4;

std::size_t draw(std::mt19937_64& rng, std::size_t n) {
  return std::min(static_cast<std::size_t>(unit_interval(rng()) * static_cast<double>(n)), n - 1);
}

std::vector<std::string> words(std::string_view s) {
  std::istringstream in{std::string(s)};
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string join(const std::vector<std::string>& ws) {
  std::string out;
  for (const auto& w : ws) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

// Returns {question, accepted, rejected}.
std::array<std::string, 3> majority_item(std::mt19937_64& rng) {
  for (;;) {
    std::array<std::size_t, kSymbols.size()> counts{};
    std::vector<std::string> q;
    for (std::size_t i = 0; i < kMajorityLength; ++i) {
      const auto s = draw(rng, kSymbols.size());
      ++counts[s];
      q.emplace_back(1, kSymbols[s]);
    }
    const auto top = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    if (std::count(counts.begin(), counts.end(), counts[top]) != 1) continue;
    std::vector<std::size_t> minority;
    for (std::size_t s = 0; s < counts.size(); ++s)
      if (s != top && counts[s] > 0) minority.push_back(s);
    if (minority.empty()) continue;
    const auto wrong = minority[draw(rng, minority.size())];
    return {join(q), std::string(1, kSymbols[top]), std::string(1, kSymbols[wrong])};
  }
}

std::array<std::string, 3> order_item(std::mt19937_64& rng) {
  std::vector<int> digits(10);
  for (int d = 0; d < 10; ++d) digits[static_cast<std::size_t>(d)] = d;
  for (std::size_t i = 0; i < kOrderLength; ++i) std::swap(digits[i], digits[i + draw(rng, 10 - i)]);
  digits.resize(kOrderLength);
  auto sorted = digits;
  std::sort(sorted.begin(), sorted.end());
  auto swapped = sorted;
  const auto at = draw(rng, kOrderLength - 1);
  std::swap(swapped[at], swapped[at + 1]);
  auto to_text = [](const std::vector<int>& v) {
    std::vector<std::string> ws;
    for (int d : v) ws.push_back(std::to_string(d));
    return join(ws);
  };
  return {to_text(digits), to_text(sorted), to_text(swapped)};
}

bool is_sorted_answer(const std::string& answer) {
  const auto ws = words(answer);
  return std::is_sorted(ws.begin(), ws.end());
}

}  // namespace

SynthTask synth_task_from_string(std::string_view name) {
  if (name == "majority") return SynthTask::Majority;
  if (name == "order") return SynthTask::Order;
  throw ArgumentError("unknown task '" + std::string(name) + "' (expected majority or order)");
}

std::string_view to_string(SynthTask t) noexcept { return t == SynthTask::Majority ? "majority" : "order"; }

ParsedJudgment gold_judgment(SynthTask task, const LabeledTriple& triple, AnswerPosition a_plus) {
  const auto& first = a_plus == AnswerPosition::Answer1 ? triple.accepted : triple.rejected;
  const auto& second = a_plus == AnswerPosition::Answer1 ? triple.rejected : triple.accepted;
  ParsedJudgment j;
  j.chosen = a_plus;
  if (task == SynthTask::Majority) {
    const auto q = words(triple.question);
    auto count = [&](const std::string& s) { return std::to_string(std::count(q.begin(), q.end(), s)); };
    j.cot = first + " " + count(first) + " " + second + " " + count(second);
  } else {
    j.cot = std::string(is_sorted_answer(first) ? "yes" : "no") + " " + (is_sorted_answer(second) ? "yes" : "no");
  }
  return j;
}

SynthCorpus synthesize(SynthTask task, std::size_t size, std::size_t heldout_size, std::uint64_t seed) {
  if (size < 1) throw ArgumentError("size must be >= 1");
  SynthCorpus corpus;
  std::mt19937_64 rng(derive_seed(seed, "synthesize", static_cast<std::uint64_t>(task)));
  std::set<std::string> used;
  const std::string prefix = std::string(to_string(task)) + "-" + std::to_string(seed) + "-";

  auto next_unique = [&] {
    for (std::size_t attempt = 0; attempt < 1000000; ++attempt) {
      auto item = task == SynthTask::Majority ? majority_item(rng) : order_item(rng);
      if (used.insert(item[0]).second) return item;
    }
    throw ArgumentError("task cannot produce that many distinct questions");
  };

  for (std::size_t i = 0; i < size + heldout_size; ++i) {
    const auto item = next_unique();
    const bool held = i >= size;
    LabeledTriple t{prefix + (held ? "h" + std::to_string(i - size) : std::to_string(i)), item[0], item[1], item[2]};
    if (held) {
      corpus.heldout.push_back(std::move(t));
      continue;
    }
    const auto prompt = build_judgment_prompt(t, derive_seed(seed, "sft-order", i));
    corpus.sft.push_back({prompt.text, render_judgment(gold_judgment(task, t, prompt.a_plus_position))});
    corpus.triples.push_back(std::move(t));
  }
  return corpus;
}

}  // namespace gfriend
