#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "lwe/extraction.hpp"

namespace lwe {
namespace {

using fixtures::Row;
const std::vector<Row>& table() { return fixtures::extraction_table(); }

std::string render(const Verdict& v) {
  switch (v.label()) {
    case Verdict::Label::A: return "A";
    case Verdict::Label::B: return "B";
    case Verdict::Label::Invalid: break;
  }
  return *v.invalid_reason();
}

TEST(Extraction, MatchesReferenceImplementation) {
  ASSERT_GE(table().size(), 12u);
  for (const auto& row : table()) EXPECT_EQ(render(extract_verdict(row.input)), row.expected) << row.input;
}

TEST(Extraction, ExactInvalidStrings) {
  EXPECT_EQ(kImproperFormat, "Not judged in the proper format.");
  EXPECT_EQ(kImproperFormatBoth, "Not judged in the proper format.  [[A,B]]");
  EXPECT_EQ(kImproperFormatBoth.substr(32, 2), "  ");
}

TEST(Extraction, FigureJudgmentExample) {
  const std::string judgment =
      "Assistant A and Assistant B provide very similar descriptions of the image, both noting the group of five "
      "friends. Both responses are accurate and relevant, but Assistant A's answer offers a touch more detail and "
      "completeness.\n\n[[A]]";
  EXPECT_EQ(extract_verdict(judgment), Verdict::a());
}

TEST(Extraction, EmbeddedNulBytes) {
  const std::string s("x\0[[B]]", 7);
  EXPECT_EQ(extract_verdict(s), Verdict::b());
}

// Double-bracket markers dominate single-bracket ones.
TEST(Extraction, PrecedenceProperty) {
  std::mt19937 rng(11);
  const std::vector<std::string> filler = {"lorem ", "ipsum ", "\n", "A ", "B ", "[", "]", "[A ", " B]"};
  for (int i = 0; i < 500; ++i) {
    std::string s;
    for (int k = 0; k < 6; ++k) s += filler[rng() % filler.size()];
    const std::string with = s + "[[B]]" + s + "[A]";
    if (with.find("[[A]]") != std::string::npos) continue;
    EXPECT_EQ(extract_verdict(with), Verdict::b()) << with;
  }
}

// Appending marker-free text never changes the result.
TEST(Extraction, AppendingMarkerFreeTextIsNeutral) {
  const std::vector<std::string> tails = {"", " thanks", "\n\nDone.", "A B AB", "((A))", "{B}"};
  for (const auto& row : table()) {
    const auto base = extract_verdict(row.input);
    for (const auto& t : tails) {
      auto joined = row.input + t;
      // Guard against tails completing a marker across the boundary.
      if (joined.find("[A]") != std::string::npos && row.input.find("[A]") == std::string::npos) continue;
      if (joined.find("[B]") != std::string::npos && row.input.find("[B]") == std::string::npos) continue;
      EXPECT_EQ(extract_verdict(joined), base) << joined;
    }
  }
}

TEST(Extraction, TotalOnRandomBytes) {
  std::mt19937 rng(3);
  for (int i = 0; i < 2000; ++i) {
    std::string s(rng() % 40, '\0');
    for (auto& ch : s) ch = static_cast<char>(rng() % 256);
    EXPECT_NO_THROW(extract_verdict(s));
  }
}

}  // namespace
}  // namespace lwe
