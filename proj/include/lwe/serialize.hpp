#pragma once

// JSON forms of the persisted types. The events.log schema is versioned by
// kEventSchemaVersion; field names here are part of that schema.

#include <optional>
#include <string>

#include <json.hpp>

#include "lwe/core.hpp"
#include "lwe/events.hpp"
#include "lwe/metrics.hpp"
#include "lwe/provider.hpp"

namespace lwe {

inline constexpr int kEventSchemaVersion = 1;

using nlohmann::json;

class SchemaError : public Error {
 public:
  using Error::Error;
};

namespace detail {

template <typename T>
void put_opt(json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

template <typename E, typename Parse>
E parse_enum(const json& j, const char* key, Parse parse) {
  const auto s = j.at(key).get<std::string>();
  auto v = parse(s);
  if (!v) throw SchemaError(std::string("bad value for '") + key + "': " + s);
  return *v;
}

}  // namespace detail

inline void to_json(json& j, const ImageRef& img) {
  switch (img.kind) {
    case ImageRef::Kind::Path: j = json{{"path", img.value}}; break;
    case ImageRef::Kind::Url: j = json{{"url", img.value}}; break;
    case ImageRef::Kind::Inline: j = json{{"base64", img.value}, {"media_type", img.media_type}}; break;
  }
}

inline void from_json(const json& j, ImageRef& img) {
  if (j.contains("path")) {
    img = ImageRef{ImageRef::Kind::Path, j.at("path").get<std::string>(), {}};
  } else if (j.contains("url")) {
    img = ImageRef{ImageRef::Kind::Url, j.at("url").get<std::string>(), {}};
  } else {
    img = ImageRef{ImageRef::Kind::Inline, j.at("base64").get<std::string>(), j.value("media_type", "image/png")};
  }
}

inline void to_json(json& j, const Verdict& v) {
  j = json{{"label", std::string(to_string(v.label()))}};
  detail::put_opt(j, "invalid_reason", v.invalid_reason());
}

inline Verdict verdict_from_json(const json& j) {
  const auto label = j.at("label").get<std::string>();
  if (label == "A") return Verdict::a();
  if (label == "B") return Verdict::b();
  if (label == "Invalid") return Verdict::invalid(j.at("invalid_reason").get<std::string>());
  throw SchemaError("bad verdict label: " + label);
}

inline void to_json(json& j, const JudgmentRecord& r) {
  j = json{{"case_id", r.case_id},
           {"strategy", std::string(to_string(r.strategy))},
           {"order", std::string(to_string(r.order))},
           {"eval_prompt", r.eval_prompt},
           {"raw_output", r.raw_output},
           {"verdict", r.verdict},
           {"call_ids", r.call_ids},
           {"sequence_index", r.sequence_index}};
  j["preferred"] = r.preferred ? json(std::string(to_string(*r.preferred))) : json(nullptr);
}

inline void from_json(const json& j, JudgmentRecord& r) {
  r.case_id = j.at("case_id").get<std::string>();
  r.strategy = detail::parse_enum<StrategyKind>(j, "strategy", parse_strategy);
  r.order = detail::parse_enum<PresentationOrder>(j, "order", parse_order);
  r.eval_prompt = j.at("eval_prompt").get<std::string>();
  r.raw_output = j.at("raw_output").get<std::string>();
  r.verdict = verdict_from_json(j.at("verdict"));
  r.call_ids = j.at("call_ids").get<std::vector<std::string>>();
  r.sequence_index = j.at("sequence_index").get<std::size_t>();
  r.preferred = std::nullopt;
  if (!j.at("preferred").is_null())
    r.preferred = detail::parse_enum<PreferredResponse>(j, "preferred", parse_preferred);
}

inline void to_json(json& j, const FeedbackItem& f) {
  j = json{{"raw", f.raw}};
  detail::put_opt(j, "score", f.score);
  detail::put_opt(j, "label", f.label);
  detail::put_opt(j, "learned_tips", f.learned_tips);
  detail::put_opt(j, "reasoning", f.reasoning);
}

inline void from_json(const json& j, FeedbackItem& f) {
  f.raw = j.at("raw").get<std::string>();
  f.score = detail::get_opt<int>(j, "score");
  f.label = detail::get_opt<std::string>(j, "label");
  f.learned_tips = detail::get_opt<std::string>(j, "learned_tips");
  f.reasoning = detail::get_opt<std::string>(j, "reasoning");
}

inline void to_json(json& j, const FeedbackBatchEntry& e) {
  j = json{{"eval_prompt", e.eval_prompt},
           {"case_rendering", e.case_rendering},
           {"judgment_raw", e.judgment_raw},
           {"feedback", e.feedback}};
}

inline void from_json(const json& j, FeedbackBatchEntry& e) {
  e.eval_prompt = j.at("eval_prompt").get<std::string>();
  e.case_rendering = j.at("case_rendering").get<std::string>();
  e.judgment_raw = j.at("judgment_raw").get<std::string>();
  e.feedback = j.at("feedback").get<FeedbackItem>();
}

inline void to_json(json& j, const UsageEntry& e) {
  j = json{{"id", e.id},
           {"call_tag", std::string(to_string(e.call_tag))},
           {"input_chars", e.input_chars},
           {"output_chars", e.output_chars},
           {"timestamp_ms", e.timestamp_ms},
           {"provider", e.provider_name},
           {"failed", e.failed}};
  detail::put_opt(j, "case_id", e.case_id);
}

inline void from_json(const json& j, UsageEntry& e) {
  e.id = j.at("id").get<std::string>();
  e.call_tag = detail::parse_enum<CallTag>(j, "call_tag", parse_call_tag);
  e.input_chars = j.at("input_chars").get<std::size_t>();
  e.output_chars = j.at("output_chars").get<std::size_t>();
  e.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
  e.provider_name = j.at("provider").get<std::string>();
  e.failed = j.value("failed", false);
  e.case_id = detail::get_opt<std::string>(j, "case_id");
}

inline void to_json(json& j, const RunConfig& c) {
  j = json{{"strategy", std::string(to_string(c.strategy))},
           {"batch_size", c.batch_size},
           {"summarize_threshold", c.summarize_threshold},
           {"paired_evaluation", c.paired_evaluation},
           {"majority_k", c.majority_k},
           {"judge_temperature", c.judge_temperature},
           {"majority_temperature", c.majority_temperature},
           {"seed", c.seed},
           {"retry",
            {{"max_attempts", c.retry.max_attempts},
             {"initial_backoff_s", c.retry.initial_backoff_s},
             {"backoff_multiplier", c.retry.backoff_multiplier},
             {"jitter", c.retry.jitter}}},
           {"meter_failed_attempts", c.meter_failed_attempts},
           {"consistency_rule", c.consistency_rule == ConsistencyRule::Canonical ? "canonical" : "literal"},
           {"fail_fast", c.fail_fast},
           {"gate_parallelism", c.gate_parallelism}};
}

inline void from_json(const json& j, RunConfig& c) {
  c.strategy = detail::parse_enum<StrategyKind>(j, "strategy", parse_strategy);
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.summarize_threshold = j.at("summarize_threshold").get<std::size_t>();
  c.paired_evaluation = j.at("paired_evaluation").get<bool>();
  c.majority_k = j.at("majority_k").get<int>();
  c.judge_temperature = j.at("judge_temperature").get<double>();
  c.majority_temperature = j.at("majority_temperature").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  const auto& r = j.at("retry");
  c.retry.max_attempts = r.at("max_attempts").get<int>();
  c.retry.initial_backoff_s = r.at("initial_backoff_s").get<double>();
  c.retry.backoff_multiplier = r.at("backoff_multiplier").get<double>();
  c.retry.jitter = r.at("jitter").get<double>();
  c.meter_failed_attempts = j.value("meter_failed_attempts", true);
  c.consistency_rule =
      j.at("consistency_rule").get<std::string>() == "literal" ? ConsistencyRule::LiteralLabel : ConsistencyRule::Canonical;
  c.fail_fast = j.at("fail_fast").get<bool>();
  c.gate_parallelism = j.at("gate_parallelism").get<std::size_t>();
}

inline void to_json(json& j, const MetricReport& r) {
  j = json{{"accuracy", r.accuracy}, {"invalid_count", r.invalid_count}, {"n", r.n}};
  detail::put_opt(j, "consistency", r.consistency);
  detail::put_opt(j, "pair_accuracy", r.pair_accuracy);
  if (r.counts) {
    j["counts"] = json{{"correct", r.counts->correct},
                       {"consistent", r.counts->consistent},
                       {"pair_correct", r.counts->pair_correct}};
  }
  json cases = json::array();
  for (const auto& c : r.per_case) {
    json cj{{"id", c.id}, {"correct_canonical", c.correct_canonical}};
    detail::put_opt(cj, "consistent", c.consistent);
    detail::put_opt(cj, "pair_correct", c.pair_correct);
    cases.push_back(std::move(cj));
  }
  j["per_case"] = std::move(cases);
}

inline void from_json(const json& j, MetricReport& r) {
  r.accuracy = j.at("accuracy").get<double>();
  r.invalid_count = j.at("invalid_count").get<std::size_t>();
  r.n = j.at("n").get<std::size_t>();
  r.consistency = detail::get_opt<double>(j, "consistency");
  r.pair_accuracy = detail::get_opt<double>(j, "pair_accuracy");
  r.counts.reset();
  if (j.contains("counts")) {
    const auto& c = j.at("counts");
    r.counts = MetricCounts{c.at("correct").get<std::size_t>(), c.at("consistent").get<std::size_t>(),
                            c.at("pair_correct").get<std::size_t>()};
  }
  r.per_case.clear();
  for (const auto& cj : j.at("per_case")) {
    r.per_case.push_back(CaseMetric{cj.at("id").get<std::string>(), cj.at("correct_canonical").get<bool>(),
                                    detail::get_opt<bool>(cj, "consistent"), detail::get_opt<bool>(cj, "pair_correct")});
  }
}

// ---------------------------------------------------------------------------
// Events. Each serializes to an object with a "type" discriminator; the
// sequence number is added by the run log.

namespace detail {

struct EventToJson {
  json operator()(const event::RunStarted& e) const {
    json gold = json::array();
    for (const auto& g : e.gold) gold.push_back(g ? json(std::string(to_string(*g))) : json(nullptr));
    json j{{"type", "run_started"}, {"dataset_order", e.dataset_order}, {"gold", std::move(gold)}};
    put_opt(j, "meta0", e.meta0);
    return j;
  }
  json operator()(const event::PhaseStarted& e) const {
    return {{"type", "phase_started"}, {"phase", std::string(to_string(e.phase))}};
  }
  json operator()(const event::UsageRecorded& e) const {
    return {{"type", "usage"}, {"entry", e.entry}, {"request", e.request}, {"response", e.response}};
  }
  json operator()(const event::RecordAdded& e) const { return {{"type", "record"}, {"record", e.record}}; }
  json operator()(const event::GateDecided& e) const {
    return {{"type", "gate"},
            {"case_id", e.case_id},
            {"consistent", e.consistent},
            {"canonical", e.canonical},
            {"swapped", e.swapped}};
  }
  json operator()(const event::FeedbackBuffered& e) const { return {{"type", "feedback"}, {"entry", e.entry}}; }
  json operator()(const event::BufferCleared&) const { return {{"type", "buffer_cleared"}}; }
  json operator()(const event::MetaUpdated& e) const {
    return {{"type", "meta"}, {"text", e.text}, {"cause", std::string(to_string(e.cause))}};
  }
  json operator()(const event::Warning& e) const { return {{"type", "warning"}, {"message", e.message}}; }
  json operator()(const event::UnitCommitted& e) const {
    return {{"type", "commit"}, {"phase", std::string(to_string(e.phase))}, {"index", e.index}};
  }
  json operator()(const event::RunCompleted&) const { return {{"type", "run_completed"}}; }
};

}  // namespace detail

inline json event_to_json(const RunEvent& ev) { return std::visit(detail::EventToJson{}, ev); }

inline RunEvent event_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "run_started") {
    event::RunStarted e;
    e.dataset_order = j.at("dataset_order").get<std::vector<std::string>>();
    for (const auto& g : j.at("gold")) {
      if (g.is_null()) {
        e.gold.push_back(std::nullopt);
      } else {
        auto p = parse_preferred(g.get<std::string>());
        if (!p) throw SchemaError("bad gold value");
        e.gold.push_back(p);
      }
    }
    e.meta0 = detail::get_opt<std::string>(j, "meta0");
    return e;
  }
  if (type == "phase_started") return event::PhaseStarted{detail::parse_enum<Phase>(j, "phase", parse_phase)};
  if (type == "usage")
    return event::UsageRecorded{j.at("entry").get<UsageEntry>(), j.at("request").get<std::string>(),
                                j.at("response").get<std::string>()};
  if (type == "record") return event::RecordAdded{j.at("record").get<JudgmentRecord>()};
  if (type == "gate")
    return event::GateDecided{j.at("case_id").get<std::string>(), j.at("consistent").get<bool>(),
                              verdict_from_json(j.at("canonical")), verdict_from_json(j.at("swapped"))};
  if (type == "feedback") return event::FeedbackBuffered{j.at("entry").get<FeedbackBatchEntry>()};
  if (type == "buffer_cleared") return event::BufferCleared{};
  if (type == "meta")
    return event::MetaUpdated{j.at("text").get<std::string>(), detail::parse_enum<CallTag>(j, "cause", parse_call_tag)};
  if (type == "warning") return event::Warning{j.at("message").get<std::string>()};
  if (type == "commit")
    return event::UnitCommitted{detail::parse_enum<Phase>(j, "phase", parse_phase), j.at("index").get<std::size_t>()};
  if (type == "run_completed") return event::RunCompleted{};
  throw SchemaError("unknown event type: " + type);
}

}  // namespace lwe
