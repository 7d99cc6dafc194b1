#pragma once

#include <filesystem>
#include <iosfwd>

#include "gfriend/toy_lm.hpp"

namespace gfriend {

inline constexpr int kCheckpointFormatVersion = 1;

// Text checkpoint: a header (format version, architecture, vocabulary listing)
// followed by one hex-float parameter per line, so round trips are bit-exact.
void write_checkpoint(std::ostream& out, const PolicyModel& model);
PolicyModel read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const PolicyModel& model);
/// Throws ConfigError if the file is missing, DataError if it is malformed.
PolicyModel load_checkpoint(const std::filesystem::path& path);

}  // namespace gfriend
