#include "gfriend/errors.hpp"

namespace gfriend {

namespace {

std::string overlap_message(const std::vector<std::string>& hashes) {
  std::string msg = std::to_string(hashes.size()) + " held-out question(s) also appear in training data:";
  for (const auto& h : hashes) msg += " " + h;
  return msg;
}

}  // namespace

OverlapError::OverlapError(std::vector<std::string> hashes)
    : DataError(overlap_message(hashes)), hashes_(std::move(hashes)) {}

}  // namespace gfriend
