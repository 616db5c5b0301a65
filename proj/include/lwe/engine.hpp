#pragma once

// The six evaluation strategies. Stateless baselines (Vanilla, CoT, Majority
// Voting, Sample-Specific Prompt) judge every case independently; LWE runs the
// meta-prompt loop sequentially; Selective LWE first gates every case with two
// order-swapped vanilla judgments and runs the LWE loop only over the cases
// whose judgments disagree.

#include <atomic>
#include <exception>
#include <functional>
#include <future>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lwe/core.hpp"
#include "lwe/events.hpp"
#include "lwe/extraction.hpp"
#include "lwe/provider.hpp"
#include "lwe/templates.hpp"

namespace lwe {

class RunAborted : public Error {
 public:
  using Error::Error;
};

class RunInterrupted : public Error {
 public:
  RunInterrupted() : Error("run interrupted") {}
};

class ResumeMismatchError : public Error {
 public:
  using Error::Error;
};

struct RunResult {
  std::vector<JudgmentRecord> records;
  std::optional<std::string> final_meta;
  std::optional<MetaPromptState> meta_state;
  UsageLedger ledger;
  RunConfig config;
  std::vector<std::string> dataset_order;
  GoldMap gold;
  std::optional<std::vector<std::string>> inconsistent_ids;
  std::vector<std::string> warnings;
};

inline RunResult to_result(const RunState& state, const RunConfig& config) {
  RunResult r;
  r.records = state.records;
  r.ledger = state.ledger;
  r.config = config;
  r.dataset_order = state.dataset_order;
  r.gold = state.gold;
  r.warnings = state.warnings;
  if (config.strategy == StrategyKind::LWE || config.strategy == StrategyKind::SelectiveLWE) {
    if (state.meta) {
      r.final_meta = state.meta->text;
      r.meta_state = state.meta;
    }
  }
  if (config.strategy == StrategyKind::SelectiveLWE) r.inconsistent_ids = state.inconsistent_ids;
  return r;
}

struct EngineOptions {
  std::function<void(const RunEvent&)> observer;
  const std::atomic<bool>* stop = nullptr;
  // Request kinds that carry the case image.
  std::set<CallTag> image_tags = {CallTag::Judge, CallTag::ConsistencyCheck, CallTag::BuildEvalPrompt,
                                  CallTag::Feedback};
  bool log_transcripts = true;
  Sleeper sleep = sleep_for_seconds;  // backoff between retries
};

class Evaluator {
 public:
  Evaluator(Provider& provider, const TemplateStore& templates, RunConfig config, EngineOptions options = {})
      : provider_(provider), templates_(templates), config_(std::move(config)), options_(std::move(options)) {
    validate(config_);
  }

  // `meta0` is required for meta-prompt strategies and ignored otherwise.
  // Passing `resume` continues a run from a replayed committed state.
  RunResult run(const Dataset& dataset, std::optional<std::string> meta0 = std::nullopt,
                std::optional<RunState> resume = std::nullopt) {
    for (const auto& c : dataset) validate(c);
    check_unique_ids(dataset);
    if (uses_meta_prompt(config_.strategy) && (!meta0 || meta0->empty()) && !(resume && resume->started))
      throw InvariantError("meta-prompt strategies require a non-empty initial meta-prompt");

    state_ = resume ? std::move(*resume) : RunState{};
    dataset_ = &dataset;
    if (!state_.started) {
      event::RunStarted s;
      for (const auto& c : dataset) {
        s.dataset_order.push_back(c.id);
        s.gold.push_back(c.gold);
      }
      if (uses_meta_prompt(config_.strategy)) s.meta0 = meta0;
      emit(std::move(s));
    } else {
      check_resume_matches(dataset);
    }
    if (state_.complete) return to_result(state_, config_);

    if (!dataset.empty()) {
      switch (config_.strategy) {
        case StrategyKind::Vanilla:
        case StrategyKind::CoT:
        case StrategyKind::MajorityVoting:
        case StrategyKind::SampleSpecific:
          if (state_.phase < Phase::Main) enter(Phase::Main);
          for (std::size_t i = state_.next_unit; i < dataset.size(); ++i) {
            check_stop();
            judge_stateless(dataset[i]);
            commit(i);
          }
          break;
        case StrategyKind::LWE: {
          if (state_.phase < Phase::Main) enter(Phase::Main);
          std::vector<std::size_t> all(dataset.size());
          for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
          learn_loop(all);
          break;
        }
        case StrategyKind::SelectiveLWE: {
          if (state_.phase < Phase::Gate) enter(Phase::Gate);
          if (state_.phase == Phase::Gate) gate_pass();
          if (state_.phase < Phase::Learn) enter(Phase::Learn);
          std::vector<std::size_t> flagged;
          for (const auto& id : state_.inconsistent_ids) flagged.push_back(index_of(id));
          learn_loop(flagged);
          break;
        }
      }
    }
    emit(event::RunCompleted{});
    return to_result(state_, config_);
  }

  const RunState& state() const { return state_; }

 private:
  struct CallOutcome {
    std::optional<std::string> text;  // absent when the provider failed
    std::string id;
    std::string error;
  };

  // ---- plumbing ----

  void emit(RunEvent ev) {
    state_.apply(ev);
    if (options_.observer) options_.observer(ev);
  }

  void enter(Phase p) { emit(event::PhaseStarted{p}); }
  void commit(std::size_t index) { emit(event::UnitCommitted{state_.phase, index}); }

  void check_stop() const {
    if (options_.stop && options_.stop->load()) throw RunInterrupted();
  }

  static void check_unique_ids(const Dataset& dataset) {
    std::set<std::string> seen;
    for (const auto& c : dataset) {
      if (!seen.insert(c.id).second) throw InvariantError("duplicate case id '" + c.id + "'");
    }
  }

  void check_resume_matches(const Dataset& dataset) const {
    if (state_.dataset_order.size() != dataset.size())
      throw ResumeMismatchError("resume: dataset size differs from the logged run");
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (state_.dataset_order[i] != dataset[i].id)
        throw ResumeMismatchError("resume: dataset order differs from the logged run at position " + std::to_string(i));
    }
  }

  std::size_t index_of(const std::string& id) const {
    for (std::size_t i = 0; i < dataset_->size(); ++i) {
      if ((*dataset_)[i].id == id) return i;
    }
    throw InvariantError("unknown case id '" + id + "'");
  }

  ModelRequest request(std::string text, CallTag tag, const TestCase* c, double temperature) const {
    ModelRequest r;
    r.text = std::move(text);
    r.call_tag = tag;
    r.temperature = temperature;
    if (c && c->image && options_.image_tags.contains(tag)) r.image = c->image;
    return r;
  }

  // Appends the ledger entries of one logical call; the returned id is the
  // entry of the final attempt.
  CallOutcome meter(const ModelRequest& req, const std::string& case_id, const Attempts& a) {
    auto entries = usage_for(provider_, req, a, case_id.empty() ? std::nullopt : std::optional<std::string>(case_id),
                             config_.meter_failed_attempts);
    std::vector<std::string> responses = a.failed_bodies;
    if (!config_.meter_failed_attempts) responses.clear();
    responses.push_back(a.text.value_or(""));
    std::string id;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      entries[i].id = "u" + std::to_string(state_.ledger.size());
      id = entries[i].id;
      const std::string& response = i < responses.size() ? responses[i] : responses.back();
      emit(event::UsageRecorded{std::move(entries[i]), options_.log_transcripts ? req.text : std::string(),
                                options_.log_transcripts ? response : std::string()});
    }
    return CallOutcome{a.text, std::move(id), a.error};
  }

  CallOutcome call(const ModelRequest& req, const std::string& case_id) {
    validate(req);
    auto out = meter(req, case_id, send_with_retry(provider_, req, config_.retry, options_.sleep));
    if (!out.text && config_.fail_fast)
      throw RunAborted("provider failure (" + std::string(to_string(req.call_tag)) + ", case " + case_id +
                       "): " + out.error);
    return out;
  }

  static Verdict provider_failure(const std::string& error) { return Verdict::invalid("provider-error: " + error); }

  std::vector<PresentationOrder> orders() const {
    if (config_.paired_evaluation) return {PresentationOrder::Canonical, PresentationOrder::Swapped};
    return {PresentationOrder::Canonical};
  }

  void add_record(const TestCase& c, PresentationOrder order, std::string eval_prompt, std::string raw,
                  Verdict verdict, std::vector<std::string> call_ids, std::size_t seq) {
    emit(event::RecordAdded{make_record(c.id, config_.strategy, order, std::move(eval_prompt), std::move(raw),
                                        std::move(verdict), std::move(call_ids), seq)});
  }

  // ---- stateless baselines ----

  void judge_stateless(const TestCase& c) {
    const std::size_t seq = state_.next_sequence_index;
    switch (config_.strategy) {
      case StrategyKind::Vanilla:
      case StrategyKind::CoT: {
        const auto id = config_.strategy == StrategyKind::CoT ? TemplateId::CoTJudge : TemplateId::VanillaJudge;
        for (auto order : orders()) {
          auto prompt = templates_.render_judge(id, view(c, order));
          auto out = call(request(prompt, CallTag::Judge, &c, config_.judge_temperature), c.id);
          auto verdict = out.text ? extract_verdict(*out.text) : provider_failure(out.error);
          add_record(c, order, std::move(prompt), out.text.value_or(""), std::move(verdict), {out.id}, seq);
        }
        break;
      }
      case StrategyKind::MajorityVoting:
        for (auto order : orders()) majority_vote(c, order, seq);
        break;
      case StrategyKind::SampleSpecific: {
        const auto& meta0 = *state_.meta;
        auto build = call(request(templates_.compose_judge_input(meta0.text, view(c)), CallTag::BuildEvalPrompt, &c,
                                  config_.judge_temperature),
                          c.id);
        for (auto order : orders()) {
          if (!build.text) {
            add_record(c, order, "", "", provider_failure(build.error), {build.id}, seq);
          } else if (detail::trim_blank_lines(*build.text).empty()) {
            add_record(c, order, *build.text, "", Verdict::invalid("empty-eval-prompt"), {build.id}, seq);
          } else {
            auto out = call(request(templates_.compose_judge_input(*build.text, view(c, order)), CallTag::Judge, &c,
                                    config_.judge_temperature),
                            c.id);
            auto verdict = out.text ? extract_verdict(*out.text) : provider_failure(out.error);
            add_record(c, order, *build.text, out.text.value_or(""), std::move(verdict), {build.id, out.id}, seq);
          }
        }
        break;
      }
      case StrategyKind::LWE:
      case StrategyKind::SelectiveLWE:
        throw InvariantError("not a stateless strategy");
    }
  }

  void majority_vote(const TestCase& c, PresentationOrder order, std::size_t seq) {
    const auto prompt = templates_.render_judge(TemplateId::VanillaJudge, view(c, order));
    std::vector<Verdict> votes;
    std::vector<std::string> ids;
    std::string raw;
    for (int i = 0; i < config_.majority_k; ++i) {
      auto out = call(request(prompt, CallTag::Judge, &c, config_.majority_temperature), c.id);
      votes.push_back(out.text ? extract_verdict(*out.text) : provider_failure(out.error));
      ids.push_back(out.id);
      if (i) raw += "\n";
      raw += "----- sample " + std::to_string(i + 1) + "/" + std::to_string(config_.majority_k) + " -----\n";
      raw += out.text.value_or("");
    }
    add_record(c, order, prompt, std::move(raw), majority_of(votes), std::move(ids), seq);
  }

 public:
  // Majority over valid labels; a tie (only possible when some votes are
  // Invalid) yields Invalid.
  static Verdict majority_of(const std::vector<Verdict>& votes) {
    std::size_t a = 0, b = 0;
    for (const auto& v : votes) {
      a += v.label() == Verdict::Label::A;
      b += v.label() == Verdict::Label::B;
    }
    if (a > b) return Verdict::a();
    if (b > a) return Verdict::b();
    return Verdict::invalid("majority-tie: " + std::to_string(a) + " A vs " + std::to_string(b) + " B");
  }

 private:
  // ---- selective gate ----

  bool agree(const Verdict& canonical, const Verdict& swapped) const {
    if (!canonical.valid() || !swapped.valid()) return false;
    if (config_.consistency_rule == ConsistencyRule::LiteralLabel) return canonical.label() == swapped.label();
    return canonicalize(canonical, PresentationOrder::Canonical) == canonicalize(swapped, PresentationOrder::Swapped);
  }

  struct Sent {
    Attempts attempts;
    std::exception_ptr fatal;
  };

  Sent send_captured(const ModelRequest& req) {
    Sent s;
    try {
      validate(req);
      s.attempts = send_with_retry(provider_, req, config_.retry, options_.sleep);
    } catch (...) {
      s.fatal = std::current_exception();
    }
    return s;
  }

  void gate_pass() {
    const auto& ds = *dataset_;
    const std::size_t per_chunk = std::max<std::size_t>(1, config_.gate_parallelism / 2);
    for (std::size_t start = state_.next_unit; start < ds.size(); start += per_chunk) {
      check_stop();
      const std::size_t end = std::min(ds.size(), start + per_chunk);
      std::vector<ModelRequest> reqs;
      for (std::size_t i = start; i < end; ++i) {
        for (auto order : {PresentationOrder::Canonical, PresentationOrder::Swapped}) {
          reqs.push_back(request(templates_.render_judge(TemplateId::VanillaJudge, view(ds[i], order)),
                                 CallTag::ConsistencyCheck, &ds[i], config_.judge_temperature));
        }
      }
      std::vector<Sent> sent(reqs.size());
      if (config_.gate_parallelism <= 1 || reqs.size() == 1) {
        for (std::size_t k = 0; k < reqs.size(); ++k) sent[k] = send_captured(reqs[k]);
      } else {
        std::vector<std::future<Sent>> futures;
        for (const auto& r : reqs) futures.push_back(std::async(std::launch::async, [this, &r] { return send_captured(r); }));
        for (std::size_t k = 0; k < futures.size(); ++k) sent[k] = futures[k].get();
      }
      for (const auto& s : sent) {
        if (s.fatal) std::rethrow_exception(s.fatal);
      }
      // Re-sequenced into dataset order before anything is recorded.
      for (std::size_t i = start; i < end; ++i) {
        const auto& c = ds[i];
        const std::size_t k = 2 * (i - start);
        auto canon = meter(reqs[k], c.id, sent[k].attempts);
        auto swapped = meter(reqs[k + 1], c.id, sent[k + 1].attempts);
        if (config_.fail_fast && (!canon.text || !swapped.text))
          throw RunAborted("provider failure during consistency check for case " + c.id);
        auto v_canon = canon.text ? extract_verdict(*canon.text) : provider_failure(canon.error);
        auto v_swapped = swapped.text ? extract_verdict(*swapped.text) : provider_failure(swapped.error);
        const bool consistent = agree(v_canon, v_swapped);
        if (consistent) {
          const std::size_t seq = state_.next_sequence_index;
          add_record(c, PresentationOrder::Canonical, reqs[k].text, canon.text.value_or(""), v_canon, {canon.id}, seq);
          if (config_.paired_evaluation)
            add_record(c, PresentationOrder::Swapped, reqs[k + 1].text, swapped.text.value_or(""), v_swapped,
                       {swapped.id}, seq);
        }
        emit(event::GateDecided{c.id, consistent, v_canon, v_swapped});
        commit(i);
      }
    }
  }

  // ---- the meta-prompt learning loop ----

  void summarize() {
    auto& meta = *state_.meta;
    auto out = call(request(templates_.render_summarize_request(meta.text), CallTag::Summarize, nullptr,
                            config_.judge_temperature),
                    "");
    if (!out.text) {
      emit(event::Warning{"summarize failed; keeping the long meta-prompt: " + out.error});
      return;
    }
    auto shorter = detail::trim_blank_lines(*out.text);
    if (shorter.empty()) {
      emit(event::Warning{"summarize returned empty text; keeping the long meta-prompt"});
      return;
    }
    emit(event::MetaUpdated{std::move(shorter), CallTag::Summarize});
  }

  void refine() {
    auto& meta = *state_.meta;
    if (meta.feedback_buffer.empty()) {
      emit(event::Warning{"no feedback collected in this batch; refinement skipped"});
      return;
    }
    auto req = request(templates_.render_refine_request(meta.text, meta.feedback_buffer), CallTag::Refine, nullptr,
                       config_.judge_temperature);
    auto out = call(req, "");
    emit(event::BufferCleared{});
    if (!out.text) {
      emit(event::Warning{"refine failed; keeping the previous meta-prompt: " + out.error});
      return;
    }
    try {
      emit(event::MetaUpdated{parse_refined_meta(*out.text), CallTag::Refine});
    } catch (const EmptyRefinementError&) {
      emit(event::Warning{"refine returned an empty meta-prompt; keeping the previous one"});
      return;
    }
    if (char_length(state_.meta->text) > config_.summarize_threshold) summarize();
  }

  void learn_loop(const std::vector<std::size_t>& positions) {
    const auto& ds = *dataset_;
    const std::size_t total = positions.size();
    const std::size_t b = config_.batch_size;
    for (std::size_t k = state_.next_unit; k < total; ++k) {
      check_stop();
      const auto& c = ds[positions[k]];
      if (k == 0 && char_length(state_.meta->text) > config_.summarize_threshold) summarize();
      learn_case(c);
      if ((k + 1) % b == 0 || k + 1 == total) refine();
      commit(k);
    }
  }

  void learn_case(const TestCase& c) {
    const std::size_t seq = state_.next_sequence_index;
    const std::string meta = state_.meta->text;
    const auto canonical = view(c, PresentationOrder::Canonical);
    auto build = call(request(templates_.compose_judge_input(meta, canonical), CallTag::BuildEvalPrompt, &c,
                              config_.judge_temperature),
                      c.id);
    if (!build.text || detail::trim_blank_lines(*build.text).empty()) {
      auto verdict = build.text ? Verdict::invalid("empty-eval-prompt") : provider_failure(build.error);
      for (auto order : orders()) add_record(c, order, build.text.value_or(""), "", verdict, {build.id}, seq);
      return;
    }
    const std::string& eval_prompt = *build.text;

    const auto judge_input = templates_.compose_judge_input(eval_prompt, canonical);
    auto judged = call(request(judge_input, CallTag::Judge, &c, config_.judge_temperature), c.id);
    auto verdict = judged.text ? extract_verdict(*judged.text) : provider_failure(judged.error);
    add_record(c, PresentationOrder::Canonical, eval_prompt, judged.text.value_or(""), std::move(verdict),
               {build.id, judged.id}, seq);

    // Swapped judgment reuses the canonical evaluation prompt; it is for
    // metrics only and never reaches feedback or refinement.
    if (config_.paired_evaluation) {
      const auto swapped_view = view(c, PresentationOrder::Swapped);
      auto sw = call(request(templates_.compose_judge_input(eval_prompt, swapped_view), CallTag::Judge, &c,
                             config_.judge_temperature),
                     c.id);
      auto v = sw.text ? extract_verdict(*sw.text) : provider_failure(sw.error);
      add_record(c, PresentationOrder::Swapped, eval_prompt, sw.text.value_or(""), std::move(v), {build.id, sw.id},
                 seq);
    }

    if (!judged.text) return;
    auto fb = call(request(templates_.render_feedback_request(meta, judge_input, *judged.text), CallTag::Feedback, &c,
                           config_.judge_temperature),
                   c.id);
    if (!fb.text) {
      emit(event::Warning{"feedback failed for case " + c.id + ": " + fb.error});
      return;
    }
    emit(event::FeedbackBuffered{
        FeedbackBatchEntry{eval_prompt, templates_.render_example(canonical), *judged.text, parse_feedback(*fb.text)}});
  }

  Provider& provider_;
  const TemplateStore& templates_;
  RunConfig config_;
  EngineOptions options_;
  RunState state_;
  const Dataset* dataset_ = nullptr;
};

// ---- strategy entry points ----

inline RunResult run_strategy(Provider& provider, const TemplateStore& templates, const Dataset& dataset,
                              const RunConfig& config, std::optional<std::string> meta0 = std::nullopt,
                              EngineOptions options = {}) {
  if (uses_meta_prompt(config.strategy) && !meta0) meta0 = templates.text(TemplateId::InitialMetaPrompt);
  return Evaluator(provider, templates, config, std::move(options)).run(dataset, std::move(meta0));
}

namespace detail {
inline RunConfig with_strategy(RunConfig c, StrategyKind k) {
  c.strategy = k;
  return c;
}
}  // namespace detail

inline RunResult run_vanilla(Provider& p, const TemplateStore& t, const Dataset& d, const RunConfig& c) {
  return run_strategy(p, t, d, detail::with_strategy(c, StrategyKind::Vanilla));
}
inline RunResult run_cot(Provider& p, const TemplateStore& t, const Dataset& d, const RunConfig& c) {
  return run_strategy(p, t, d, detail::with_strategy(c, StrategyKind::CoT));
}
inline RunResult run_majority(Provider& p, const TemplateStore& t, const Dataset& d, const RunConfig& c) {
  return run_strategy(p, t, d, detail::with_strategy(c, StrategyKind::MajorityVoting));
}
inline RunResult run_sample_specific(Provider& p, const TemplateStore& t, const Dataset& d, const RunConfig& c) {
  return run_strategy(p, t, d, detail::with_strategy(c, StrategyKind::SampleSpecific));
}
inline RunResult run_lwe(Provider& p, const TemplateStore& t, const Dataset& d, const std::string& meta0,
                         const RunConfig& c) {
  return run_strategy(p, t, d, detail::with_strategy(c, StrategyKind::LWE), meta0);
}
inline RunResult run_selective_lwe(Provider& p, const TemplateStore& t, const Dataset& d, const std::string& meta0,
                                   const RunConfig& c) {
  return run_strategy(p, t, d, detail::with_strategy(c, StrategyKind::SelectiveLWE), meta0);
}

}  // namespace lwe
