#include "gfriend/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gfriend/errors.hpp"

namespace gfriend {

namespace {

constexpr const char* kMagic = "gfriend-checkpoint";

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

template <typename T>
T expect_field(std::istream& in, const std::string& key) {
  std::string got;
  T value{};
  if (!(in >> got) || got != key) throw DataError("checkpoint: expected '" + key + "'");
  if (!(in >> value)) throw DataError("checkpoint: bad value for '" + key + "'");
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& out, const PolicyModel& model) {
  const auto& arch = model.architecture();
  const auto& vocab = model.vocabulary();
  out << kMagic << ' ' << kCheckpointFormatVersion << '\n';
  out << "context_window " << arch.context_window << '\n';
  out << "embedding_width " << arch.embedding_width << '\n';
  out << "hidden_width " << arch.hidden_width << '\n';
  out << "vocab " << vocab.size() << '\n';
  out << "eos " << vocab.eos_id() << '\n';
  for (const auto& t : vocab.tokens()) out << t << '\n';
  out << "params " << model.parameters().size() << '\n';
  for (double v : model.parameters()) out << hexfloat(v) << '\n';
}

PolicyModel read_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) throw DataError("checkpoint: missing header");
  if (version != kCheckpointFormatVersion)
    throw DataError("checkpoint: unsupported format version " + std::to_string(version));
  Architecture arch;
  arch.context_window = expect_field<std::size_t>(in, "context_window");
  arch.embedding_width = expect_field<std::size_t>(in, "embedding_width");
  arch.hidden_width = expect_field<std::size_t>(in, "hidden_width");
  const auto vocab_size = expect_field<std::size_t>(in, "vocab");
  const auto eos = expect_field<TokenId>(in, "eos");
  std::vector<std::string> tokens(vocab_size);
  for (auto& t : tokens)
    if (!(in >> t)) throw DataError("checkpoint: truncated vocabulary");
  std::shared_ptr<const Vocabulary> vocab;
  try {
    vocab = std::make_shared<const Vocabulary>(std::move(tokens), eos);
  } catch (const VocabularyError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  const auto n = expect_field<std::size_t>(in, "params");
  std::vector<double> params(n);
  std::string word;
  for (auto& p : params) {
    if (!(in >> word)) throw DataError("checkpoint: truncated parameters");
    char* end = nullptr;
    p = std::strtod(word.c_str(), &end);
    if (end == word.c_str() || *end != '\0') throw DataError("checkpoint: bad parameter '" + word + "'");
  }
  try {
    return PolicyModel(std::move(vocab), arch, std::move(params));
  } catch (const ArgumentError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const PolicyModel& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  write_checkpoint(out, model);
  if (!out) throw ConfigError("failed writing checkpoint " + path.string());
}

PolicyModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("checkpoint not found: " + path.string());
  return read_checkpoint(in);
}

}  // namespace gfriend
