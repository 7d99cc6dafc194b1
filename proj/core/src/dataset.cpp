#include "gfriend/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_set>

#include "gfriend/errors.hpp"
#include "gfriend/seed.hpp"
#include "json.hpp"

namespace gfriend {

using json = nlohmann::ordered_json;

namespace {

json header(const char* kind) { return json{{"schema_version", kSchemaVersion}, {"kind", kind}}; }

void emit(std::ostream& out, const json& j) { out << j.dump() << '\n'; }

template <typename T>
T field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing field '") + key + "'");
  try {
    return it->template get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("field '") + key + "' has the wrong type");
  }
}

// Parses every non-blank line, checks the envelope, and hands the object to
// `decode`. DataErrors from the decoder get the line number attached.
template <typename T, typename Decode>
std::vector<T> read_records(std::istream& in, const char* kind, Decode decode) {
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw DataError(std::string("invalid JSON: ") + e.what());
      }
      if (!j.is_object()) throw DataError("record is not a JSON object");
      const auto version = field<int>(j, "schema_version");
      if (version != kSchemaVersion) throw DataError("unsupported schema_version " + std::to_string(version));
      const auto k = field<std::string>(j, "kind");
      if (k != kind) throw DataError("expected kind '" + std::string(kind) + "', got '" + k + "'");
      out.push_back(decode(j));
    } catch (const DataError& e) {
      if (e.line() != 0) throw;
      throw DataError(e.what(), lineno);
    }
  }
  return out;
}

AnswerPosition answer_field(const json& j, const char* key) {
  const auto s = field<std::string>(j, key);
  const auto p = answer_from_string(s);
  if (!p) throw DataError(std::string("field '") + key + "' is not an answer position: '" + s + "'");
  return *p;
}

}  // namespace

GradedPairRecord to_record(const GradedPair& p) {
  return {p.positive.triple_id, p.positive.seed, p.negative.seed, p.g_plus, p.g_minus, p.weight};
}

std::vector<GradedPair> resolve_pairs(std::span<const GradedPairRecord> records, std::span<const Judgment> judgments) {
  std::map<std::pair<std::string, std::uint64_t>, const Judgment*> index;
  std::set<std::pair<std::string, std::uint64_t>> duplicated;
  for (const auto& j : judgments)
    if (!index.emplace(std::make_pair(j.triple_id, j.seed), &j).second) duplicated.insert({j.triple_id, j.seed});
  auto lookup = [&](const std::string& id, std::uint64_t seed) {
    const auto key = std::make_pair(id, seed);
    const auto it = index.find(key);
    if (it == index.end() || duplicated.count(key))
      throw DataError("pair reference " + id + "/" + std::to_string(seed) + " does not name exactly one judgment");
    return *it->second;
  };
  std::vector<GradedPair> out;
  out.reserve(records.size());
  for (const auto& r : records)
    out.push_back({lookup(r.triple_id, r.pos_ref), lookup(r.triple_id, r.neg_ref), r.g_plus, r.g_minus, r.weight});
  return out;
}

bool PromptRecord::operator==(const PromptRecord& o) const {
  const auto& a = sampling;
  const auto& b = o.sampling;
  return id == o.id && prompt == o.prompt && a.temperature == b.temperature && a.top_p == b.top_p &&
         a.top_k == b.top_k && a.max_length == b.max_length && a.repetition_penalty == b.repetition_penalty &&
         a.seed == b.seed && a.greedy == b.greedy;
}

void write_jsonl(std::ostream& out, std::span<const LabeledTriple> records) {
  for (const auto& r : records) {
    auto j = header("triple");
    j["id"] = r.id;
    j["question"] = r.question;
    j["accepted"] = r.accepted;
    j["rejected"] = r.rejected;
    emit(out, j);
  }
}

void write_jsonl(std::ostream& out, std::span<const Judgment> records) {
  for (const auto& r : records) {
    auto j = header("judgment");
    j["triple_id"] = r.triple_id;
    j["cot"] = r.cot;
    j["chosen"] = to_string(r.chosen);
    j["ppl"] = r.ppl;
    j["score"] = r.score;
    j["correct"] = r.correct;
    j["level"] = to_string(r.level);
    j["provider"] = to_string(r.provider);
    j["seed"] = r.seed;
    j["score_source"] = to_string(r.score_source);
    emit(out, j);
  }
}

void write_jsonl(std::ostream& out, std::span<const GradedPairRecord> records) {
  for (const auto& r : records) {
    auto j = header("graded_pair");
    j["triple_id"] = r.triple_id;
    j["pos_ref"] = r.pos_ref;
    j["neg_ref"] = r.neg_ref;
    j["g_plus"] = r.g_plus;
    j["g_minus"] = r.g_minus;
    j["weight"] = r.weight;
    emit(out, j);
  }
}

void write_jsonl(std::ostream& out, std::span<const SftRecord> records) {
  for (const auto& r : records) {
    auto j = header("sft_example");
    j["question"] = r.question;
    j["cot"] = r.cot;
    emit(out, j);
  }
}

void write_jsonl(std::ostream& out, std::span<const PromptRecord> records) {
  for (const auto& r : records) {
    auto j = header("prompt");
    j["id"] = r.id;
    j["prompt"] = r.prompt;
    j["temperature"] = r.sampling.temperature;
    j["top_p"] = r.sampling.top_p;
    j["top_k"] = r.sampling.top_k;
    j["max_length"] = r.sampling.max_length;
    j["repetition_penalty"] = r.sampling.repetition_penalty;
    j["seed"] = r.sampling.seed;
    j["greedy"] = r.sampling.greedy;
    emit(out, j);
  }
}

void write_jsonl(std::ostream& out, std::span<const CompletionRecord> records) {
  for (const auto& r : records) {
    auto j = header("completion");
    j["id"] = r.id;
    j["text"] = r.text;
    if (r.logprobs) j["logprobs"] = *r.logprobs;
    emit(out, j);
  }
}

std::vector<LabeledTriple> read_triples(std::istream& in) {
  return read_records<LabeledTriple>(in, "triple", [](const json& j) {
    LabeledTriple t{field<std::string>(j, "id"), field<std::string>(j, "question"), field<std::string>(j, "accepted"),
                    field<std::string>(j, "rejected")};
    try {
      t.validate();
    } catch (const ArgumentError& e) {
      throw DataError(e.what());
    }
    return t;
  });
}

std::vector<Judgment> read_judgments(std::istream& in) {
  return read_records<Judgment>(in, "judgment", [](const json& j) {
    Judgment r;
    r.triple_id = field<std::string>(j, "triple_id");
    r.cot = field<std::string>(j, "cot");
    r.chosen = answer_field(j, "chosen");
    r.ppl = field<double>(j, "ppl");
    r.score = field<double>(j, "score");
    r.correct = field<bool>(j, "correct");
    const auto level = level_from_string(field<std::string>(j, "level"));
    if (!level) throw DataError("unknown level '" + field<std::string>(j, "level") + "'");
    r.level = *level;
    const auto provider = field<std::string>(j, "provider");
    if (provider == "internal") r.provider = ProviderKind::Internal;
    else if (provider == "external") r.provider = ProviderKind::External;
    else throw DataError("unknown provider '" + provider + "'");
    r.seed = field<std::uint64_t>(j, "seed");
    const auto source = j.contains("score_source") ? field<std::string>(j, "score_source") : "provider";
    if (source == "provider") r.score_source = ScoreSource::Provider;
    else if (source == "internal_rescore") r.score_source = ScoreSource::InternalRescore;
    else throw DataError("unknown score_source '" + source + "'");
    return r;
  });
}

std::vector<GradedPairRecord> read_graded_pairs(std::istream& in) {
  return read_records<GradedPairRecord>(in, "graded_pair", [](const json& j) {
    return GradedPairRecord{field<std::string>(j, "triple_id"), field<std::uint64_t>(j, "pos_ref"),
                            field<std::uint64_t>(j, "neg_ref"),  field<int>(j, "g_plus"),
                            field<int>(j, "g_minus"),            field<double>(j, "weight")};
  });
}

std::vector<SftRecord> read_sft_examples(std::istream& in) {
  return read_records<SftRecord>(in, "sft_example", [](const json& j) {
    return SftRecord{field<std::string>(j, "question"), field<std::string>(j, "cot")};
  });
}

std::vector<PromptRecord> read_prompts(std::istream& in) {
  return read_records<PromptRecord>(in, "prompt", [](const json& j) {
    PromptRecord r;
    r.id = field<std::string>(j, "id");
    r.prompt = field<std::string>(j, "prompt");
    r.sampling.temperature = field<double>(j, "temperature");
    r.sampling.top_p = field<double>(j, "top_p");
    r.sampling.top_k = field<std::uint32_t>(j, "top_k");
    r.sampling.max_length = field<std::uint32_t>(j, "max_length");
    r.sampling.repetition_penalty = field<double>(j, "repetition_penalty");
    r.sampling.seed = field<std::uint64_t>(j, "seed");
    r.sampling.greedy = field<bool>(j, "greedy");
    return r;
  });
}

std::vector<CompletionRecord> read_completions(std::istream& in) {
  std::unordered_set<std::string> seen;
  return read_records<CompletionRecord>(in, "completion", [&](const json& j) {
    CompletionRecord r;
    r.id = field<std::string>(j, "id");
    if (!seen.insert(r.id).second) throw DataError("duplicate completion id '" + r.id + "'");
    r.text = field<std::string>(j, "text");
    if (j.contains("logprobs") && !j["logprobs"].is_null()) r.logprobs = field<std::vector<double>>(j, "logprobs");
    return r;
  });
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::string question_hash(const std::string& question) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(question)));
  return buf;
}

std::vector<std::string> overlapping_questions(std::span<const LabeledTriple> train,
                                               std::span<const LabeledTriple> heldout) {
  std::unordered_set<std::string> seen;
  for (const auto& t : train) seen.insert(question_hash(t.question));
  std::set<std::string> hits;
  for (const auto& t : heldout)
    if (const auto h = question_hash(t.question); seen.count(h)) hits.insert(h);
  return {hits.begin(), hits.end()};
}

}  // namespace gfriend
