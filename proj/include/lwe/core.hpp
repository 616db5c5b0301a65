#pragma once

// Domain types shared by the evaluation engine: test cases, presentation
// order, verdicts and their canonical (order-independent) form, judgment
// records, meta-prompt state and run configuration.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lwe {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidVerdictError : public Error {
 public:
  InvalidVerdictError() : Error("cannot canonicalize an Invalid verdict") {}
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Presentation-independent identity of a response.

enum class PreferredResponse { First, Second };

inline constexpr PreferredResponse other(PreferredResponse p) {
  return p == PreferredResponse::First ? PreferredResponse::Second : PreferredResponse::First;
}

inline constexpr std::string_view to_string(PreferredResponse p) {
  return p == PreferredResponse::First ? "first" : "second";
}

inline std::optional<PreferredResponse> parse_preferred(std::string_view s) {
  if (s == "first") return PreferredResponse::First;
  if (s == "second") return PreferredResponse::Second;
  return std::nullopt;
}

// Canonical shows response_a in the "Assistant A" slot, Swapped shows response_b there.
enum class PresentationOrder { Canonical, Swapped };

inline constexpr PresentationOrder swap(PresentationOrder o) {
  return o == PresentationOrder::Canonical ? PresentationOrder::Swapped : PresentationOrder::Canonical;
}

inline constexpr std::string_view to_string(PresentationOrder o) {
  return o == PresentationOrder::Canonical ? "canonical" : "swapped";
}

inline std::optional<PresentationOrder> parse_order(std::string_view s) {
  if (s == "canonical") return PresentationOrder::Canonical;
  if (s == "swapped") return PresentationOrder::Swapped;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Verdict: the label extracted from a judge's free text.

class Verdict {
 public:
  enum class Label { A, B, Invalid };

  static Verdict a() { return Verdict(Label::A, std::nullopt); }
  static Verdict b() { return Verdict(Label::B, std::nullopt); }
  static Verdict invalid(std::string reason) { return Verdict(Label::Invalid, std::move(reason)); }

  Label label() const { return label_; }
  bool valid() const { return label_ != Label::Invalid; }
  const std::optional<std::string>& invalid_reason() const { return reason_; }

  // A <-> B; Invalid stays Invalid.
  Verdict flipped() const {
    switch (label_) {
      case Label::A: return b();
      case Label::B: return a();
      case Label::Invalid: break;
    }
    return *this;
  }

  friend bool operator==(const Verdict&, const Verdict&) = default;

 private:
  Verdict(Label l, std::optional<std::string> r) : label_(l), reason_(std::move(r)) {}

  Label label_;
  std::optional<std::string> reason_;
};

inline constexpr std::string_view to_string(Verdict::Label l) {
  switch (l) {
    case Verdict::Label::A: return "A";
    case Verdict::Label::B: return "B";
    case Verdict::Label::Invalid: break;
  }
  return "Invalid";
}

// Maps a positional verdict to the underlying response it selects.
inline PreferredResponse canonicalize(const Verdict& verdict, PresentationOrder order) {
  if (!verdict.valid()) throw InvalidVerdictError();
  const bool picks_slot_a = verdict.label() == Verdict::Label::A;
  const bool canonical = order == PresentationOrder::Canonical;
  return picks_slot_a == canonical ? PreferredResponse::First : PreferredResponse::Second;
}

inline std::optional<PreferredResponse> try_canonicalize(const Verdict& verdict, PresentationOrder order) {
  if (!verdict.valid()) return std::nullopt;
  return canonicalize(verdict, order);
}

// ---------------------------------------------------------------------------
// Test cases.

struct ImageRef {
  enum class Kind { Path, Url, Inline };
  Kind kind = Kind::Path;
  std::string value;       // path, URL, or base64 payload
  std::string media_type;  // only meaningful for Inline

  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

struct TestCase {
  std::string id;
  std::string question;
  std::optional<ImageRef> image;
  std::string response_a;
  std::string response_b;
  std::optional<PreferredResponse> gold;

  friend bool operator==(const TestCase&, const TestCase&) = default;
};

using Dataset = std::vector<TestCase>;

inline void validate(const TestCase& c) {
  if (c.id.empty()) throw InvariantError("test case id must be non-empty");
  if (c.response_a.empty() || c.response_b.empty())
    throw InvariantError("test case '" + c.id + "' must have two non-empty responses");
}

// What a judge sees: which text sits in slot A and which in slot B.
struct CaseView {
  const TestCase* source = nullptr;
  PresentationOrder order = PresentationOrder::Canonical;

  const std::string& id() const { return source->id; }
  const std::string& question() const { return source->question; }
  const std::string& slot_a() const {
    return order == PresentationOrder::Canonical ? source->response_a : source->response_b;
  }
  const std::string& slot_b() const {
    return order == PresentationOrder::Canonical ? source->response_b : source->response_a;
  }
  const std::optional<PreferredResponse>& gold() const { return source->gold; }
};

inline CaseView view(const TestCase& c, PresentationOrder order = PresentationOrder::Canonical) {
  return CaseView{&c, order};
}

inline CaseView swap_case(const CaseView& v) { return CaseView{v.source, swap(v.order)}; }

// ---------------------------------------------------------------------------
// Strategies and run configuration.

enum class StrategyKind { Vanilla, CoT, MajorityVoting, SampleSpecific, LWE, SelectiveLWE };

inline constexpr std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::Vanilla: return "vanilla";
    case StrategyKind::CoT: return "cot";
    case StrategyKind::MajorityVoting: return "majority";
    case StrategyKind::SampleSpecific: return "sample-specific";
    case StrategyKind::LWE: return "lwe";
    case StrategyKind::SelectiveLWE: return "selective-lwe";
  }
  return "?";
}

inline std::optional<StrategyKind> parse_strategy(std::string_view s) {
  for (auto k : {StrategyKind::Vanilla, StrategyKind::CoT, StrategyKind::MajorityVoting,
                 StrategyKind::SampleSpecific, StrategyKind::LWE, StrategyKind::SelectiveLWE}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

inline constexpr bool uses_meta_prompt(StrategyKind k) {
  return k == StrategyKind::SampleSpecific || k == StrategyKind::LWE || k == StrategyKind::SelectiveLWE;
}

// How the selective gate decides that two judgments agree.
//   Canonical:    both valid and selecting the same underlying response.
//   LiteralLabel: both valid and carrying the same positional label (ablation only).
enum class ConsistencyRule { Canonical, LiteralLabel };

struct RetryPolicy {
  int max_attempts = 3;
  double initial_backoff_s = 1.0;
  double backoff_multiplier = 2.0;
  double jitter = 0.25;  // fraction of the delay drawn uniformly in [-jitter, +jitter]

  friend bool operator==(const RetryPolicy&, const RetryPolicy&) = default;
};

struct RunConfig {
  StrategyKind strategy = StrategyKind::Vanilla;
  std::size_t batch_size = 4;
  std::size_t summarize_threshold = 10000;
  bool paired_evaluation = false;
  int majority_k = 5;
  double judge_temperature = 0.0;
  double majority_temperature = 0.7;
  std::uint64_t seed = 0;
  RetryPolicy retry;
  bool meter_failed_attempts = true;  // one ledger entry per attempt that returned a body
  ConsistencyRule consistency_rule = ConsistencyRule::Canonical;
  bool fail_fast = false;
  std::size_t gate_parallelism = 4;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline void validate(const RunConfig& c) {
  if (c.batch_size < 1) throw InvariantError("batch size must be >= 1");
  if (c.summarize_threshold == 0) throw InvariantError("summarize threshold must be > 0");
  if (c.majority_k < 1 || c.majority_k % 2 == 0) throw InvariantError("majority_k must be a positive odd integer");
  if (c.judge_temperature < 0 || c.majority_temperature < 0) throw InvariantError("temperatures must be >= 0");
  if (c.gate_parallelism < 1) throw InvariantError("gate parallelism must be >= 1");
}

// ---------------------------------------------------------------------------
// Records and meta-prompt state.

struct JudgmentRecord {
  std::string case_id;
  StrategyKind strategy = StrategyKind::Vanilla;
  PresentationOrder order = PresentationOrder::Canonical;
  std::string eval_prompt;
  std::string raw_output;
  Verdict verdict = Verdict::invalid("unset");
  std::optional<PreferredResponse> preferred;
  std::vector<std::string> call_ids;
  std::size_t sequence_index = 0;

  friend bool operator==(const JudgmentRecord&, const JudgmentRecord&) = default;
};

inline JudgmentRecord make_record(std::string case_id, StrategyKind strategy, PresentationOrder order,
                                  std::string eval_prompt, std::string raw_output, Verdict verdict,
                                  std::vector<std::string> call_ids, std::size_t sequence_index) {
  JudgmentRecord r;
  r.case_id = std::move(case_id);
  r.strategy = strategy;
  r.order = order;
  r.eval_prompt = std::move(eval_prompt);
  r.raw_output = std::move(raw_output);
  r.preferred = try_canonicalize(verdict, order);
  r.verdict = std::move(verdict);
  r.call_ids = std::move(call_ids);
  r.sequence_index = sequence_index;
  return r;
}

inline void validate(const JudgmentRecord& r) {
  if (r.verdict.valid() != r.preferred.has_value())
    throw InvariantError("record for '" + r.case_id + "': preferred must be present iff verdict is valid");
  if (r.preferred && *r.preferred != canonicalize(r.verdict, r.order))
    throw InvariantError("record for '" + r.case_id + "': preferred does not match canonicalized verdict");
}

struct FeedbackItem {
  std::optional<int> score;
  std::optional<std::string> label;
  std::optional<std::string> learned_tips;
  std::optional<std::string> reasoning;
  std::string raw;

  friend bool operator==(const FeedbackItem&, const FeedbackItem&) = default;
};

struct FeedbackBatchEntry {
  std::string eval_prompt;
  std::string case_rendering;
  std::string judgment_raw;
  FeedbackItem feedback;

  friend bool operator==(const FeedbackBatchEntry&, const FeedbackBatchEntry&) = default;
};

struct MetaPromptState {
  std::string text;
  std::vector<FeedbackBatchEntry> feedback_buffer;
  std::size_t refinement_count = 0;
  std::size_t summarization_count = 0;

  friend bool operator==(const MetaPromptState&, const MetaPromptState&) = default;
};

// Number of Unicode code points in a UTF-8 string. Continuation bytes are
// skipped, so malformed input still yields a count close to the byte length.
inline std::size_t char_length(std::string_view utf8) {
  std::size_t n = 0;
  for (unsigned char c : utf8) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

}  // namespace lwe
