#pragma once

// Deterministic simulated judge. It recognizes each request by the template
// it was rendered from and answers like a model would, with behavior fixed by
// keyed pseudo-random draws:
//
//   correctness draw  u(seed, case_id)          correct iff u < p(kind) + level * improvement
//   positional draw   u(seed, case_id + "|flip") positional iff < flip_prob
//
// Under the plain (fixed) judge prompt a positional case always answers for
// whichever response sits in slot A. A tailored prompt carries its meta-prompt
// refinement level, which raises the correctness probability.
//
// Keyed draw: FNV-1a-64 over "<seed>|<key>", passed through the SplitMix64
// finalizer, top 53 bits scaled to [0, 1).

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lwe/core.hpp"
#include "lwe/provider.hpp"
#include "lwe/templates.hpp"

namespace lwe {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double keyed_uniform(std::uint64_t seed, std::string_view key) {
  std::string material = std::to_string(seed);
  material += '|';
  material += key;
  return static_cast<double>(splitmix64(fnv1a64(material)) >> 11) * 0x1.0p-53;
}

struct SimulatorParams {
  std::uint64_t seed = 0;
  double p_plain = 0.6;
  double p_tailored = 0.7;
  double flip_prob = 0.3;
  double improvement_per_refine = 0.01;
  std::size_t tip_chars = 200;  // length of each learned tip appended per refinement

  friend bool operator==(const SimulatorParams&, const SimulatorParams&) = default;
};

inline void validate(const SimulatorParams& p) {
  for (double v : {p.p_plain, p.p_tailored, p.flip_prob, p.improvement_per_refine}) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvariantError("simulator probabilities must lie in [0, 1]");
  }
}

class UnknownCaseError : public Error {
 public:
  UnknownCaseError() : Error("simulator: request matches no registered case") {}
};

enum class PromptKind { Plain, Tailored };

class SimulatedJudge : public Provider {
 public:
  static constexpr std::string_view kEvalHeader = "**Evaluation Prompt**";
  static constexpr std::string_view kLevelPrefix = "Insight level: ";
  static constexpr std::string_view kCountPrefix = "Accumulated insight count: ";
  static constexpr std::string_view kTipPrefix = "- Learned tip ";

  SimulatedJudge(SimulatorParams params, const Dataset& dataset, const TemplateStore& templates)
      : params_(params), templates_(&templates) {
    validate(params_);
    for (const auto& c : dataset) {
      cases_.emplace(c.id, c);
      for (auto order : {PresentationOrder::Canonical, PresentationOrder::Swapped}) {
        const auto v = view(c, order);
        blocks_.try_emplace(block_key(v.question(), v.slot_a(), v.slot_b()), Slot{c.id, order});
      }
    }
  }

  std::string name() const override { return "simulator"; }

  const SimulatorParams& params() const { return params_; }

  bool is_positional(const std::string& case_id) const {
    return keyed_uniform(params_.seed, case_id + "|flip") < params_.flip_prob;
  }

  std::set<std::string> positional_ids() const {
    std::set<std::string> out;
    for (const auto& [id, c] : cases_) {
      if (is_positional(id)) out.insert(id);
    }
    return out;
  }

  // Verdict text for a judge call, independent of request parsing.
  std::string simulate_judge(const TestCase& c, PresentationOrder order, PromptKind kind, std::size_t level,
                             std::optional<std::string> sample_key = std::nullopt) const {
    const auto v = view(c, order);
    bool slot_a;
    if (kind == PromptKind::Plain && is_positional(c.id)) {
      slot_a = true;
    } else {
      const double u = keyed_uniform(params_.seed, sample_key ? c.id + "|sample|" + *sample_key : c.id);
      const double p_base = kind == PromptKind::Plain ? params_.p_plain : params_.p_tailored;
      const double p = std::clamp(p_base + static_cast<double>(level) * params_.improvement_per_refine, 0.0, 1.0);
      const bool correct = u < p;
      const auto truth = c.gold.value_or(PreferredResponse::First);
      const auto chosen = correct ? truth : other(truth);
      slot_a = chosen == canonicalize(Verdict::a(), v.order);
    }
    const char* label = slot_a ? "A" : "B";
    std::string out = "Both answers were compared against the evaluation criteria. Assistant ";
    out += label;
    out += "'s answer is better supported by the question.\n\n[[";
    out += label;
    out += "]]";
    return out;
  }

  std::string send(const ModelRequest& request) override {
    const auto& text = request.text;
    if (starts_with_template(text, TemplateId::FeedbackRequest)) return feedback(text);
    if (starts_with_template(text, TemplateId::RefineRequest)) return refine(text);
    if (starts_with_template(text, TemplateId::SummarizeRequest)) return summarize(text);
    if (starts_with_template(text, TemplateId::VanillaJudge)) return judge(text, PromptKind::Plain, 0, request);
    if (text.starts_with(kEvalHeader)) return judge(text, PromptKind::Tailored, level_in_eval_prompt(text), request);
    return build_eval_prompt(text);
  }

  // ---- meta-prompt bookkeeping shared with tests ----

  struct MetaParts {
    std::string base;
    std::size_t count = 0;
    std::vector<std::string> tips;
  };

  static MetaParts split_meta(std::string_view meta) {
    MetaParts parts;
    const std::string marker = "\n\n" + std::string(kCountPrefix);
    const auto pos = meta.find(marker);
    if (pos == std::string_view::npos) {
      parts.base = std::string(meta);
      return parts;
    }
    parts.base = std::string(meta.substr(0, pos));
    std::istringstream rest{std::string(meta.substr(pos + marker.size()))};
    std::string line;
    std::getline(rest, line);
    parts.count = parse_size(line);
    while (std::getline(rest, line)) {
      if (line.starts_with(kTipPrefix)) parts.tips.push_back(line);
    }
    return parts;
  }

  static std::string join_meta(const MetaParts& parts) {
    if (parts.count == 0 && parts.tips.empty()) return parts.base;
    std::string out = parts.base + "\n\n" + std::string(kCountPrefix) + std::to_string(parts.count);
    for (const auto& t : parts.tips) out += "\n" + t;
    return out;
  }

 private:
  struct Slot {
    std::string case_id;
    PresentationOrder order;
  };

  static std::string block_key(std::string_view q, std::string_view a, std::string_view b) {
    std::string k;
    k.reserve(q.size() + a.size() + b.size() + 16);
    k += std::to_string(q.size()) + ":" + std::string(q) + std::to_string(a.size()) + ":" + std::string(a) +
         std::to_string(b.size()) + ":" + std::string(b);
    return k;
  }

  static std::size_t parse_size(std::string_view s) {
    std::size_t v = 0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
  }

  bool starts_with_template(std::string_view text, TemplateId id) const {
    const auto& tpl = templates_->text(id);
    const auto head = std::string_view(tpl).substr(0, std::min<std::size_t>(tpl.find('\n'), 60));
    return text.starts_with(head);
  }

  // Finds the last example block in `text` that belongs to a registered case.
  std::optional<Slot> locate(std::string_view text) const {
    static constexpr std::string_view kQ = "[User Question]\n";
    static constexpr std::string_view kA = "\n\n[The Start of Assistant A's Answer]\n";
    static constexpr std::string_view kAB = "\n[The End of Assistant A's Answer]\n\n[The Start of Assistant B's Answer]\n";
    static constexpr std::string_view kB = "\n[The End of Assistant B's Answer]";
    for (auto pos = text.rfind(kQ); pos != std::string_view::npos; pos = pos == 0 ? std::string_view::npos : text.rfind(kQ, pos - 1)) {
      const auto q0 = pos + kQ.size();
      const auto a_hdr = text.find(kA, q0);
      if (a_hdr == std::string_view::npos) continue;
      const auto a0 = a_hdr + kA.size();
      const auto ab = text.find(kAB, a0);
      if (ab == std::string_view::npos) continue;
      const auto b0 = ab + kAB.size();
      const auto b_end = text.find(kB, b0);
      if (b_end == std::string_view::npos) continue;
      auto it = blocks_.find(block_key(text.substr(q0, a_hdr - q0), text.substr(a0, ab - a0), text.substr(b0, b_end - b0)));
      if (it != blocks_.end()) return it->second;
    }
    return std::nullopt;
  }

  const TestCase& case_at(const Slot& s) const { return cases_.at(s.case_id); }

  static std::size_t level_in_eval_prompt(std::string_view text) {
    const auto pos = text.find(kLevelPrefix);
    if (pos == std::string_view::npos) return 0;
    const auto start = pos + kLevelPrefix.size();
    const auto end = text.find('\n', start);
    return parse_size(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
  }

  std::string judge(std::string_view text, PromptKind kind, std::size_t level, const ModelRequest& request) {
    const auto slot = locate(text);
    if (!slot) throw UnknownCaseError();
    std::optional<std::string> sample_key;
    if (request.temperature > 0) {
      const std::string key = std::string(to_string(slot->order)) + "|" + (kind == PromptKind::Plain ? "plain" : "tailored");
      std::lock_guard lock(mu_);
      sample_key = key + "|" + std::to_string(sample_counters_[slot->case_id + "|" + key]++);
    }
    return simulate_judge(case_at(*slot), slot->order, kind, level, sample_key);
  }

  std::string build_eval_prompt(std::string_view text) const {
    const auto slot = locate(text);
    if (!slot) throw UnknownCaseError();
    const auto meta_end = text.rfind("\n\n[User Question]\n");
    const auto level = split_meta(text.substr(0, meta_end)).count;
    std::string out(kEvalHeader);
    out += "\n";
    out += kLevelPrefix;
    out += std::to_string(level);
    out +=
        "\nEvaluation criteria:\n"
        "- Check every claim in each answer against the question and the visible evidence.\n"
        "- Penalize unsupported, fabricated, or miscounted details.\n"
        "Evaluation steps:\n"
        "1. Restate the observable evidence relevant to the question.\n"
        "2. Compare both answers claim by claim.\n"
        "3. Decide which answer is better supported.\n"
        "Your final judgment must be expressed only in one of the following two formats: '[[A]]' or '[[B]]'.";
    return out;
  }

  std::string feedback(std::string_view text) const {
    const auto slot = locate(text);
    const std::string id = slot ? slot->case_id : std::string("unknown");
    const int score = keyed_uniform(params_.seed, id + "|feedback") < 0.5 ? 3 : 4;
    std::string out = "{\"score\": " + std::to_string(score) +
                      ", \"label\": \"Not sure\", \"learned tips\": \"Verify each claim against the evidence before "
                      "preferring the more detailed answer (case " +
                      id + ").\", \"reasoning\": \"The judgment compared both answers but did not check every detail.\"}";
    return out;
  }

  static std::string current_meta(std::string_view text) {
    static constexpr std::string_view kStart = "[[[The Start of Current Meta Prompt]]]\n";
    static constexpr std::string_view kEnd = "\n[[[The End of Current Meta Prompt]]]";
    const auto s = text.find(kStart);
    if (s == std::string_view::npos) return {};
    const auto b = s + kStart.size();
    const auto e = text.find(kEnd, b);
    return std::string(text.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
  }

  std::string refine(std::string_view text) const {
    auto parts = split_meta(current_meta(text));
    parts.count += 1;
    std::string tip = std::string(kTipPrefix) + std::to_string(parts.count) +
                      ": check each answer's concrete claims against the evidence and penalize confident errors.";
    const std::size_t filler = params_.tip_chars > tip.size() ? params_.tip_chars - tip.size() : 0;
    for (std::size_t i = 0; i < filler; ++i) tip.push_back(i % 2 ? '.' : ' ');
    parts.tips.push_back(std::move(tip));
    return std::string(kOptimizedMetaMarker) + "\n" + join_meta(parts);
  }

  std::string summarize(std::string_view text) const {
    auto parts = split_meta(current_meta(text));
    const std::size_t keep = (parts.tips.size() + 1) / 2;
    parts.tips.erase(parts.tips.begin(), parts.tips.end() - static_cast<std::ptrdiff_t>(keep));
    return join_meta(parts);
  }

  SimulatorParams params_;
  const TemplateStore* templates_;
  std::map<std::string, TestCase> cases_;
  std::unordered_map<std::string, Slot> blocks_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::size_t> sample_counters_;
};

}  // namespace lwe
