#pragma once

#include <string_view>

#include "lwe/core.hpp"

namespace lwe {

inline constexpr std::string_view kImproperFormat = "Not judged in the proper format.";
inline constexpr std::string_view kImproperFormatBoth = "Not judged in the proper format.  [[A,B]]";

// Byte-literal marker search; the branch order is part of the contract.
inline Verdict extract_verdict(std::string_view raw) {
  const auto has = [raw](std::string_view marker) { return raw.find(marker) != std::string_view::npos; };
  const bool double_a = has("[[A]]");
  const bool double_b = has("[[B]]");
  if (double_a && double_b) return Verdict::invalid(std::string(kImproperFormatBoth));
  if (double_a) return Verdict::a();
  if (double_b) return Verdict::b();
  if (has("[A]")) return Verdict::a();
  if (has("[B]")) return Verdict::b();
  return Verdict::invalid(std::string(kImproperFormat));
}

}  // namespace lwe
