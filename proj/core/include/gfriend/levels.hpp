#pragma once

#include <optional>
#include <string_view>

namespace gfriend {

/// Ordered StrongReject < WeakReject < WeakAccept < StrongAccept.
enum class PreferenceLevel { StrongReject = 0, WeakReject = 1, WeakAccept = 2, StrongAccept = 3 };

inline constexpr PreferenceLevel kAllLevels[] = {PreferenceLevel::StrongAccept, PreferenceLevel::WeakAccept,
                                                 PreferenceLevel::WeakReject, PreferenceLevel::StrongReject};

constexpr bool is_accept(PreferenceLevel l) noexcept {
  return l == PreferenceLevel::StrongAccept || l == PreferenceLevel::WeakAccept;
}

constexpr std::string_view to_string(PreferenceLevel l) noexcept {
  switch (l) {
    case PreferenceLevel::StrongAccept: return "strong_accept";
    case PreferenceLevel::WeakAccept: return "weak_accept";
    case PreferenceLevel::WeakReject: return "weak_reject";
    case PreferenceLevel::StrongReject: return "strong_reject";
  }
  return "?";
}

inline std::optional<PreferenceLevel> level_from_string(std::string_view s) noexcept {
  for (auto l : kAllLevels)
    if (to_string(l) == s) return l;
  return std::nullopt;
}

}  // namespace gfriend
