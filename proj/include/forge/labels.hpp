#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace forge {

inline constexpr std::size_t kNumClasses = 3;

enum class ClassLabel : std::uint8_t { Hateful = 0, Offensive = 1, Neither = 2 };

inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "hateful", "offensive", "neither"};

constexpr int to_int(ClassLabel label) { return static_cast<int>(label); }

// Throws forge::Error(Parse) for values outside {0, 1, 2}.
ClassLabel label_from_int(long long value);

constexpr std::string_view class_name(ClassLabel label) {
  return kClassNames[static_cast<std::size_t>(label)];
}

}  // namespace forge
