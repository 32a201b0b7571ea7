#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace rhgn {

// Stable across trace files and classifier bundles.
enum class BehaviourId : std::uint8_t { MB1 = 1, MB2 = 2, MB3 = 3 };

constexpr std::string_view to_string(BehaviourId b) noexcept {
  switch (b) {
    case BehaviourId::MB1: return "MB1";
    case BehaviourId::MB2: return "MB2";
    case BehaviourId::MB3: return "MB3";
  }
  return "?";
}

constexpr std::optional<BehaviourId> behaviour_from_int(int v) noexcept {
  if (v < 1 || v > 3) return std::nullopt;
  return static_cast<BehaviourId>(v);
}

}  // namespace rhgn
