#pragma once

// Model backends and usage accounting. Every call is metered into a
// UsageLedger: one entry per call, or one per attempt that returned a body.

#include <array>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "lwe/core.hpp"

namespace lwe {

enum class CallTag { Judge, ConsistencyCheck, BuildEvalPrompt, Feedback, Refine, Summarize };

inline constexpr std::array<CallTag, 6> kAllCallTags = {CallTag::Judge,    CallTag::ConsistencyCheck,
                                                        CallTag::BuildEvalPrompt, CallTag::Feedback,
                                                        CallTag::Refine,   CallTag::Summarize};

inline constexpr std::string_view to_string(CallTag t) {
  switch (t) {
    case CallTag::Judge: return "judge";
    case CallTag::ConsistencyCheck: return "consistency_check";
    case CallTag::BuildEvalPrompt: return "build_eval_prompt";
    case CallTag::Feedback: return "feedback";
    case CallTag::Refine: return "refine";
    case CallTag::Summarize: return "summarize";
  }
  return "?";
}

inline std::optional<CallTag> parse_call_tag(std::string_view s) {
  for (auto t : kAllCallTags) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

struct ModelRequest {
  std::string text;
  std::optional<ImageRef> image;
  double temperature = 0.0;
  CallTag call_tag = CallTag::Judge;
  std::optional<int> max_output;
};

inline void validate(const ModelRequest& r) {
  if (r.text.empty()) throw InvariantError("model request text must be non-empty");
  if (r.temperature < 0) throw InvariantError("model request temperature must be >= 0");
}

struct UsageEntry {
  std::string id;
  CallTag call_tag = CallTag::Judge;
  std::size_t input_chars = 0;
  std::size_t output_chars = 0;
  std::optional<std::string> case_id;
  std::int64_t timestamp_ms = 0;
  std::string provider_name;
  bool failed = false;

  std::size_t total_chars() const { return input_chars + output_chars; }

  friend bool operator==(const UsageEntry&, const UsageEntry&) = default;
};

// ---------------------------------------------------------------------------
// Provider errors.

// `body` is the response body when the backend answered at all; retryable
// errors are retried by send_with_retry.
class ProviderError : public Error {
 public:
  explicit ProviderError(const std::string& what, bool retryable = false, std::optional<std::string> body = std::nullopt)
      : Error(what), retryable_(retryable), body_(std::move(body)) {}
  bool retryable() const { return retryable_; }
  const std::optional<std::string>& body() const { return body_; }

 private:
  bool retryable_;
  std::optional<std::string> body_;
};

// Connection failures, timeouts and 5xx answers.
class TransportError : public ProviderError {
 public:
  explicit TransportError(const std::string& what, std::optional<std::string> body = std::nullopt)
      : ProviderError(what, true, std::move(body)) {}
};

class AuthError : public ProviderError {
 public:
  explicit AuthError(const std::string& what, std::optional<std::string> body = std::nullopt)
      : ProviderError(what, false, std::move(body)) {}
};

class RateLimitedError : public ProviderError {
 public:
  explicit RateLimitedError(const std::string& what, std::optional<std::string> body = std::nullopt)
      : ProviderError(what, true, std::move(body)) {}
};

class MalformedResponseError : public ProviderError {
 public:
  explicit MalformedResponseError(const std::string& what, std::optional<std::string> body = std::nullopt)
      : ProviderError(what, false, std::move(body)) {}
};

// ---------------------------------------------------------------------------

// Append-only usage sink. Ids are assigned at append time ("u0", "u1", ...),
// which fixes a total order across threads.
class UsageLedger {
 public:
  UsageLedger() = default;
  UsageLedger(const UsageLedger& other) : entries_(other.snapshot()) {}
  UsageLedger& operator=(const UsageLedger& other) {
    if (this != &other) {
      auto copy = other.snapshot();
      std::lock_guard lock(mu_);
      entries_ = std::move(copy);
    }
    return *this;
  }

  UsageEntry append(UsageEntry entry) {
    std::lock_guard lock(mu_);
    entry.id = "u" + std::to_string(entries_.size());
    entries_.push_back(std::move(entry));
    return entries_.back();
  }

  // Restores an entry verbatim (replay); its id must continue the sequence.
  void restore(UsageEntry entry) {
    std::lock_guard lock(mu_);
    if (entry.id != "u" + std::to_string(entries_.size()))
      throw InvariantError("ledger replay out of sequence at " + entry.id);
    entries_.push_back(std::move(entry));
  }

  std::vector<UsageEntry> snapshot() const {
    std::lock_guard lock(mu_);
    return entries_;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  std::size_t total_chars() const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.total_chars();
    return n;
  }

  std::map<CallTag, std::size_t> chars_by_tag() const {
    std::lock_guard lock(mu_);
    std::map<CallTag, std::size_t> out;
    for (const auto& e : entries_) out[e.call_tag] += e.total_chars();
    return out;
  }

  std::size_t count(CallTag tag) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.call_tag == tag;
    return n;
  }

  friend bool operator==(const UsageLedger& a, const UsageLedger& b) { return a.snapshot() == b.snapshot(); }

 private:
  mutable std::mutex mu_;
  std::vector<UsageEntry> entries_;
};

// A backend. `send` must be safe to call from several threads at once.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string name() const = 0;
  virtual std::string send(const ModelRequest& request) = 0;
};

struct Completion {
  std::string text;
  UsageEntry entry;
};

inline std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

inline UsageEntry make_usage(const Provider& provider, const ModelRequest& request, std::string_view response,
                             std::optional<std::string> case_id, bool failed) {
  UsageEntry e;
  e.call_tag = request.call_tag;
  e.input_chars = char_length(request.text);
  e.output_chars = char_length(response);
  e.case_id = std::move(case_id);
  e.timestamp_ms = now_ms();
  e.provider_name = provider.name();
  e.failed = failed;
  return e;
}

using Sleeper = std::function<void(double seconds)>;

inline void sleep_for_seconds(double s) {
  if (s > 0) std::this_thread::sleep_for(std::chrono::duration<double>(s));
}

// Delay before retry number `retry` (1-based), jittered.
inline double backoff_delay(const RetryPolicy& policy, int retry) {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  double d = policy.initial_backoff_s * std::pow(policy.backoff_multiplier, retry - 1);
  if (policy.jitter > 0) d *= 1.0 + std::uniform_real_distribution<double>(-policy.jitter, policy.jitter)(rng);
  return std::max(0.0, d);
}

// Outcome of one logical call. Every failed attempt whose response carried a
// body is listed in `failed_bodies` so it can be metered.
struct Attempts {
  std::optional<std::string> text;
  std::string error;
  std::vector<std::string> failed_bodies;
  int attempts = 0;
  bool final_failure_had_body = false;
  std::exception_ptr last_error;
};

inline Attempts send_with_retry(Provider& provider, const ModelRequest& request, const RetryPolicy& policy,
                                const Sleeper& sleep = sleep_for_seconds) {
  Attempts out;
  const int max_attempts = std::max(1, policy.max_attempts);
  for (int attempt = 1;; ++attempt) {
    out.attempts = attempt;
    try {
      out.text = provider.send(request);
      return out;
    } catch (const ProviderError& e) {
      out.error = e.what();
      out.last_error = std::current_exception();
      if (e.body()) out.failed_bodies.push_back(*e.body());
      out.final_failure_had_body = e.body().has_value();
      if (!e.retryable() || attempt >= max_attempts) return out;
    }
    if (sleep) sleep(backoff_delay(policy, attempt));
  }
}

// Ledger entries for one logical call. With `per_attempt`, each attempt that
// returned a body is its own entry; otherwise a call is exactly one entry.
inline std::vector<UsageEntry> usage_for(const Provider& provider, const ModelRequest& request, const Attempts& a,
                                         const std::optional<std::string>& case_id, bool per_attempt) {
  std::vector<UsageEntry> out;
  if (per_attempt) {
    for (const auto& body : a.failed_bodies) out.push_back(make_usage(provider, request, body, case_id, true));
  }
  if (a.text) {
    out.push_back(make_usage(provider, request, *a.text, case_id, false));
  } else if (!per_attempt || !a.final_failure_had_body) {
    out.push_back(make_usage(provider, request, {}, case_id, true));
  }
  return out;
}

struct CompleteOptions {
  RetryPolicy retry;
  Sleeper sleep = sleep_for_seconds;
  bool meter_attempts = true;
};

// Sends `request` (with retries) and appends its ledger entries. A call that
// ultimately fails rethrows the last attempt's error.
inline Completion complete(Provider& provider, const ModelRequest& request, UsageLedger& ledger,
                           std::optional<std::string> case_id = std::nullopt, const CompleteOptions& options = {}) {
  validate(request);
  auto a = send_with_retry(provider, request, options.retry, options.sleep);
  UsageEntry last;
  for (auto& e : usage_for(provider, request, a, case_id, options.meter_attempts)) last = ledger.append(std::move(e));
  if (!a.text) std::rethrow_exception(a.last_error);
  return Completion{std::move(*a.text), std::move(last)};
}

// Backend driven by a callback; used for scripted scenarios and test doubles.
class ScriptedProvider : public Provider {
 public:
  using Script = std::function<std::string(const ModelRequest&)>;

  explicit ScriptedProvider(Script script, std::string name = "scripted")
      : script_(std::move(script)), name_(std::move(name)) {}

  std::string name() const override { return name_; }

  std::string send(const ModelRequest& request) override {
    {
      std::lock_guard lock(mu_);
      seen_.push_back(request);
    }
    return script_(request);
  }

  std::vector<ModelRequest> requests() const {
    std::lock_guard lock(mu_);
    return seen_;
  }

 private:
  Script script_;
  std::string name_;
  mutable std::mutex mu_;
  std::vector<ModelRequest> seen_;
};

}  // namespace lwe
