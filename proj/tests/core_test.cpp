#include <gtest/gtest.h>

#include "lwe/core.hpp"
#include "test_support.hpp"

namespace lwe {
namespace {

using L = Verdict::Label;

TEST(Canonicalize, FullTable) {
  EXPECT_EQ(canonicalize(Verdict::a(), PresentationOrder::Canonical), PreferredResponse::First);
  EXPECT_EQ(canonicalize(Verdict::a(), PresentationOrder::Swapped), PreferredResponse::Second);
  EXPECT_EQ(canonicalize(Verdict::b(), PresentationOrder::Canonical), PreferredResponse::Second);
  EXPECT_EQ(canonicalize(Verdict::b(), PresentationOrder::Swapped), PreferredResponse::First);
}

TEST(Canonicalize, InvalidThrows) {
  EXPECT_THROW(canonicalize(Verdict::invalid("x"), PresentationOrder::Canonical), InvalidVerdictError);
  EXPECT_FALSE(try_canonicalize(Verdict::invalid("x"), PresentationOrder::Swapped).has_value());
}

TEST(Canonicalize, SwapPreservesChoiceWhenLabelFlips) {
  for (auto v : {Verdict::a(), Verdict::b()}) {
    for (auto o : {PresentationOrder::Canonical, PresentationOrder::Swapped}) {
      EXPECT_EQ(canonicalize(v, o), canonicalize(v.flipped(), swap(o)));
    }
  }
}

TEST(Verdict, FlipAndEquality) {
  EXPECT_EQ(Verdict::a().flipped(), Verdict::b());
  EXPECT_EQ(Verdict::b().flipped(), Verdict::a());
  EXPECT_EQ(Verdict::invalid("r").flipped(), Verdict::invalid("r"));
  EXPECT_NE(Verdict::invalid("r"), Verdict::invalid("s"));
  EXPECT_EQ(Verdict::invalid("r").label(), L::Invalid);
  EXPECT_EQ(*Verdict::invalid("r").invalid_reason(), "r");
  EXPECT_FALSE(Verdict::a().invalid_reason().has_value());
}

TEST(Names, RoundTrip) {
  for (auto k : {StrategyKind::Vanilla, StrategyKind::CoT, StrategyKind::MajorityVoting, StrategyKind::SampleSpecific,
                 StrategyKind::LWE, StrategyKind::SelectiveLWE}) {
    EXPECT_EQ(parse_strategy(to_string(k)), k);
  }
  EXPECT_FALSE(parse_strategy("textgrad").has_value());
  EXPECT_EQ(parse_order("swapped"), PresentationOrder::Swapped);
  EXPECT_EQ(parse_preferred("first"), PreferredResponse::First);
  EXPECT_FALSE(parse_preferred("First").has_value());
}

TEST(CaseView, SlotsFollowOrder) {
  auto c = testing::make_case("x");
  auto v = view(c);
  EXPECT_EQ(v.slot_a(), c.response_a);
  EXPECT_EQ(v.slot_b(), c.response_b);
  auto s = swap_case(v);
  EXPECT_EQ(s.slot_a(), c.response_b);
  EXPECT_EQ(s.slot_b(), c.response_a);
  EXPECT_EQ(swap_case(s).order, PresentationOrder::Canonical);
}

TEST(TestCaseValidation, RejectsEmptyFields) {
  auto c = testing::make_case("x");
  EXPECT_NO_THROW(validate(c));
  c.response_b.clear();
  EXPECT_THROW(validate(c), InvariantError);
  c = testing::make_case("");
  EXPECT_THROW(validate(c), InvariantError);
}

TEST(RunConfigValidation, Bounds) {
  RunConfig c;
  EXPECT_NO_THROW(validate(c));
  c.batch_size = 0;
  EXPECT_THROW(validate(c), InvariantError);
  c = {};
  c.majority_k = 4;
  EXPECT_THROW(validate(c), InvariantError);
  c = {};
  c.summarize_threshold = 0;
  EXPECT_THROW(validate(c), InvariantError);
  c = {};
  c.judge_temperature = -0.1;
  EXPECT_THROW(validate(c), InvariantError);
}

TEST(RunConfig, Defaults) {
  RunConfig c;
  EXPECT_EQ(c.batch_size, 4u);
  EXPECT_EQ(c.summarize_threshold, 10000u);
  EXPECT_EQ(c.judge_temperature, 0.0);
  EXPECT_EQ(c.retry.max_attempts, 3);
  EXPECT_EQ(c.retry.initial_backoff_s, 1.0);
}

TEST(JudgmentRecord, PreferredFollowsVerdict) {
  auto r = make_record("c", StrategyKind::Vanilla, PresentationOrder::Swapped, "p", "raw [[A]]", Verdict::a(), {"u0"}, 0);
  EXPECT_EQ(r.preferred, PreferredResponse::Second);
  EXPECT_NO_THROW(validate(r));
  auto bad = make_record("c", StrategyKind::Vanilla, PresentationOrder::Canonical, "p", "", Verdict::invalid("x"), {}, 0);
  EXPECT_FALSE(bad.preferred.has_value());
  EXPECT_NO_THROW(validate(bad));
  bad.preferred = PreferredResponse::First;
  EXPECT_THROW(validate(bad), InvariantError);
  r.preferred = PreferredResponse::First;
  EXPECT_THROW(validate(r), InvariantError);
}

TEST(CharLength, CountsCodePoints) {
  EXPECT_EQ(char_length(""), 0u);
  EXPECT_EQ(char_length("abc"), 3u);
  EXPECT_EQ(char_length("é"), 1u);
  EXPECT_EQ(char_length("×—"), 2u);
  EXPECT_EQ(char_length("😀a"), 2u);
  EXPECT_EQ(char_length(std::string(120, 'x')), 120u);
}

}  // namespace
}  // namespace lwe
