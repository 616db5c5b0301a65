#pragma once

// Frozen expectations shared by the unit tests and the acceptance binary.

#include <map>
#include <string>
#include <vector>

#include "lwe/templates.hpp"

namespace lwe::fixtures {

struct Row {
  std::string input;
  std::string expected;  // "A", "B", or the Invalid reason
};

// Expected values produced by running the reference function verbatim
// (tests/oracles/extraction_oracle.py).
inline const std::vector<Row>& extraction_table() {
  static const std::vector<Row> rows = {
      {"After careful comparison, my final verdict: [[A]]", "A"},
      {"[[A]] looked good at first, but also [[B]]", "Not judged in the proper format.  [[A,B]]"},
      {"I choose [B]", "B"},
      {"", "Not judged in the proper format."},
      {"[[B]] is better; note [A] was weaker", "B"},
      {"Final: [[B]]", "B"},
      {"[A]", "A"},
      {"[[a]]", "Not judged in the proper format."},
      {"[[ A ]]", "Not judged in the proper format."},
      {"[A] and [B] both", "A"},
      {"[[A]][[B]]", "Not judged in the proper format.  [[A,B]]"},
      {"verdict [[[A]]]", "A"},
      {"[[A]", "A"},
      {"A]] [[B", "Not judged in the proper format."},
      {"[B] first, then [[A]]", "A"},
      {"no marker at all", "Not judged in the proper format."},
      {"\xC3\xA9\xC3\xA8 [[B]] \xC3\xA0", "B"},
      {"[[A]]\n\n[[A]]", "A"},
  };
  return rows;
}

// SHA-256 of each template asset, pinned after the word-by-word comparison in
// tests/oracles/template_words_oracle.py.
inline const std::map<TemplateId, std::string>& pinned_template_sums() {
  static const std::map<TemplateId, std::string> sums = {
      {TemplateId::VanillaJudge, "647abec63f21f930bfb0c670d24cf962cf8c82e2a546fdf3801c9884251addad"},
      {TemplateId::CoTJudge, "1aa76f0895a2e8fadb4b8da2bda027e9d9f3eee2ee08883c7a07e048d59e48a7"},
      {TemplateId::InitialMetaPrompt, "9850427bf3d03199286ca53fd1ea293a8672030ef97c8b6dcc3bdd0062582861"},
      {TemplateId::FeedbackRequest, "edadea48bd28e107dfd432b5a73c9854d1e7f178bf955bb8bc5e5ddbfd60e5bd"},
      {TemplateId::RefineRequest, "d40c8c68d1c14472c16c19c57f6d82985e9c4e92b86ac795961d3ef491f5a222"},
      {TemplateId::ExamplePlaceholder, "22f93e573bf9343e52c3dd0a36b1a033a47a6dc0045ab3d40357da8d3c613d57"},
      {TemplateId::SummarizeRequest, "8c7393c4ce8f9dff2bbee18651c4abe877dfd1ee0e370705095b3b9731b2e7f3"},
  };
  return sums;
}

}  // namespace lwe::fixtures
