#pragma once

// Everything the engine does to a run is expressed as an event. The engine
// applies each event to its own RunState and hands it to an observer (the
// run log), so replaying a log reproduces the state exactly.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lwe/core.hpp"
#include "lwe/provider.hpp"

namespace lwe {

enum class Phase { NotStarted, Main, Gate, Learn, Done };

inline constexpr std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::NotStarted: return "not_started";
    case Phase::Main: return "main";
    case Phase::Gate: return "gate";
    case Phase::Learn: return "learn";
    case Phase::Done: return "done";
  }
  return "?";
}

inline std::optional<Phase> parse_phase(std::string_view s) {
  for (auto p : {Phase::NotStarted, Phase::Main, Phase::Gate, Phase::Learn, Phase::Done}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

namespace event {

struct RunStarted {
  std::vector<std::string> dataset_order;
  std::vector<std::optional<PreferredResponse>> gold;  // parallel to dataset_order
  std::optional<std::string> meta0;
};

struct PhaseStarted {
  Phase phase = Phase::Main;
};

struct UsageRecorded {
  UsageEntry entry;
  std::string request;
  std::string response;
};

struct RecordAdded {
  JudgmentRecord record;
};

struct GateDecided {
  std::string case_id;
  bool consistent = false;
  Verdict canonical = Verdict::invalid("unset");
  Verdict swapped = Verdict::invalid("unset");
};

struct FeedbackBuffered {
  FeedbackBatchEntry entry;
};

struct BufferCleared {};

struct MetaUpdated {
  std::string text;
  CallTag cause = CallTag::Refine;  // Refine or Summarize
};

struct Warning {
  std::string message;
};

struct UnitCommitted {
  Phase phase = Phase::Main;
  std::size_t index = 0;
};

struct RunCompleted {};

}  // namespace event

using RunEvent = std::variant<event::RunStarted, event::PhaseStarted, event::UsageRecorded, event::RecordAdded,
                              event::GateDecided, event::FeedbackBuffered, event::BufferCleared, event::MetaUpdated,
                              event::Warning, event::UnitCommitted, event::RunCompleted>;

// Events after which the state is complete and resumable.
inline bool is_commit_point(const RunEvent& e) {
  return std::holds_alternative<event::RunStarted>(e) || std::holds_alternative<event::PhaseStarted>(e) ||
         std::holds_alternative<event::UnitCommitted>(e) || std::holds_alternative<event::RunCompleted>(e);
}

using GoldMap = std::map<std::string, std::optional<PreferredResponse>>;

struct RunState {
  bool started = false;
  bool complete = false;
  std::vector<std::string> dataset_order;
  GoldMap gold;
  std::vector<JudgmentRecord> records;
  UsageLedger ledger;
  std::optional<MetaPromptState> meta;
  std::vector<std::string> inconsistent_ids;
  std::vector<std::string> consistent_ids;
  std::vector<event::GateDecided> gate;
  Phase phase = Phase::NotStarted;
  std::size_t next_unit = 0;
  std::size_t next_sequence_index = 0;
  std::vector<std::string> warnings;

  void apply(const RunEvent& ev) {
    std::visit([this](const auto& e) { on(e); }, ev);
  }

 private:
  void on(const event::RunStarted& e) {
    if (started) throw InvariantError("run started twice");
    started = true;
    dataset_order = e.dataset_order;
    for (std::size_t i = 0; i < e.dataset_order.size(); ++i) gold[e.dataset_order[i]] = e.gold.at(i);
    if (e.meta0) meta = MetaPromptState{*e.meta0, {}, 0, 0};
  }
  void on(const event::PhaseStarted& e) {
    phase = e.phase;
    next_unit = 0;
  }
  void on(const event::UsageRecorded& e) { ledger.restore(e.entry); }
  void on(const event::RecordAdded& e) {
    validate(e.record);
    records.push_back(e.record);
    next_sequence_index = std::max(next_sequence_index, e.record.sequence_index + 1);
  }
  void on(const event::GateDecided& e) {
    (e.consistent ? consistent_ids : inconsistent_ids).push_back(e.case_id);
    gate.push_back(e);
  }
  void on(const event::FeedbackBuffered& e) { meta_state().feedback_buffer.push_back(e.entry); }
  void on(const event::BufferCleared&) { meta_state().feedback_buffer.clear(); }
  void on(const event::MetaUpdated& e) {
    auto& m = meta_state();
    m.text = e.text;
    if (e.cause == CallTag::Summarize) {
      ++m.summarization_count;
    } else {
      ++m.refinement_count;
    }
  }
  void on(const event::Warning& e) { warnings.push_back(e.message); }
  void on(const event::UnitCommitted& e) {
    if (e.phase != phase) throw InvariantError("unit committed outside its phase");
    next_unit = e.index + 1;
  }
  void on(const event::RunCompleted&) {
    complete = true;
    phase = Phase::Done;
  }

  MetaPromptState& meta_state() {
    if (!meta) throw InvariantError("meta-prompt event in a run without a meta-prompt");
    return *meta;
  }
};

}  // namespace lwe
