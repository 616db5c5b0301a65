#pragma once

// Prompt templates (loaded from text assets), rendering, and parsers for the
// structured outputs the model returns (feedback records, refined meta-prompts).

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lwe/core.hpp"

#ifndef LWE_TEMPLATE_DIR
#define LWE_TEMPLATE_DIR "assets/templates"
#endif

namespace lwe {

enum class TemplateId {
  VanillaJudge,
  CoTJudge,
  InitialMetaPrompt,
  ExamplePlaceholder,
  FeedbackRequest,
  RefineRequest,
  SummarizeRequest,
};

inline constexpr std::array<TemplateId, 7> kAllTemplates = {
    TemplateId::VanillaJudge,    TemplateId::CoTJudge,      TemplateId::InitialMetaPrompt,
    TemplateId::ExamplePlaceholder, TemplateId::FeedbackRequest, TemplateId::RefineRequest,
    TemplateId::SummarizeRequest,
};

inline constexpr std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::VanillaJudge: return "VanillaJudge";
    case TemplateId::CoTJudge: return "CoTJudge";
    case TemplateId::InitialMetaPrompt: return "InitialMetaPrompt";
    case TemplateId::ExamplePlaceholder: return "ExamplePlaceholder";
    case TemplateId::FeedbackRequest: return "FeedbackRequest";
    case TemplateId::RefineRequest: return "RefineRequest";
    case TemplateId::SummarizeRequest: return "SummarizeRequest";
  }
  return "?";
}

inline const std::set<std::string, std::less<>>& known_placeholders() {
  static const std::set<std::string, std::less<>> names = {
      "question", "answer_a", "answer_b", "meta_prompt", "evaluation_prompt", "judgment", "batch"};
  return names;
}

class TemplateError : public Error {
 public:
  using Error::Error;
};

class MissingBindingError : public TemplateError {
 public:
  explicit MissingBindingError(const std::string& name) : TemplateError("missing binding for {" + name + "}") {}
};

class UnknownPlaceholderError : public TemplateError {
 public:
  explicit UnknownPlaceholderError(const std::string& name) : TemplateError("unknown placeholder {" + name + "}") {}
};

class UnusedBindingError : public TemplateError {
 public:
  explicit UnusedBindingError(const std::string& name)
      : TemplateError("binding '" + name + "' is not used by the template") {}
};

class EmptyRefinementError : public Error {
 public:
  EmptyRefinementError() : Error("refined meta-prompt is empty") {}
};

using RenderBindings = std::map<std::string, std::string, std::less<>>;

namespace detail {

inline bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
inline bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

// Splits a template into literal text and {name} placeholders. "{{" and "}}"
// are escaped braces; any other brace is literal.
struct Piece {
  bool placeholder = false;
  std::string text;
};

inline std::vector<Piece> tokenize(std::string_view tpl) {
  std::vector<Piece> out;
  std::string literal;
  std::size_t i = 0;
  while (i < tpl.size()) {
    const char c = tpl[i];
    if (c == '{' && i + 1 < tpl.size() && tpl[i + 1] == '{') {
      literal.push_back('{');
      i += 2;
      continue;
    }
    if (c == '}' && i + 1 < tpl.size() && tpl[i + 1] == '}') {
      literal.push_back('}');
      i += 2;
      continue;
    }
    if (c == '{' && i + 1 < tpl.size() && is_ident_start(tpl[i + 1])) {
      std::size_t j = i + 1;
      while (j < tpl.size() && is_ident_char(tpl[j])) ++j;
      if (j < tpl.size() && tpl[j] == '}') {
        if (!literal.empty()) out.push_back({false, std::move(literal)});
        literal.clear();
        out.push_back({true, std::string(tpl.substr(i + 1, j - i - 1))});
        i = j + 1;
        continue;
      }
    }
    literal.push_back(c);
    ++i;
  }
  if (!literal.empty()) out.push_back({false, std::move(literal)});
  return out;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw TemplateError("cannot read template asset " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

// Placeholder names that occur in a template, in first-appearance order.
inline std::vector<std::string> placeholders_of(std::string_view tpl) {
  std::vector<std::string> names;
  for (const auto& p : detail::tokenize(tpl)) {
    if (p.placeholder && std::find(names.begin(), names.end(), p.text) == names.end()) names.push_back(p.text);
  }
  return names;
}

inline std::string render_text(std::string_view tpl, const RenderBindings& bindings) {
  const auto pieces = detail::tokenize(tpl);
  std::set<std::string, std::less<>> used;
  std::string out;
  for (const auto& p : pieces) {
    if (!p.placeholder) {
      out += p.text;
      continue;
    }
    if (!known_placeholders().contains(p.text)) throw UnknownPlaceholderError(p.text);
    auto it = bindings.find(p.text);
    if (it == bindings.end()) throw MissingBindingError(p.text);
    out += it->second;
    used.insert(p.text);
  }
  for (const auto& [name, value] : bindings) {
    if (!used.contains(name)) throw UnusedBindingError(name);
  }
  return out;
}

class TemplateStore {
 public:
  static std::filesystem::path default_directory() { return LWE_TEMPLATE_DIR; }

  static TemplateStore load(const std::filesystem::path& dir = default_directory()) {
    TemplateStore store;
    for (auto id : kAllTemplates) {
      auto text = detail::read_file(dir / (std::string(to_string(id)) + ".txt"));
      for (const auto& name : placeholders_of(text)) {
        if (!known_placeholders().contains(name)) throw UnknownPlaceholderError(name);
      }
      store.texts_[static_cast<std::size_t>(id)] = std::move(text);
    }
    return store;
  }

  const std::string& text(TemplateId id) const { return texts_[static_cast<std::size_t>(id)]; }

  std::string render(TemplateId id, const RenderBindings& bindings) const { return render_text(text(id), bindings); }

  // ---- convenience renderers used by the engine ----

  std::string render_example(const CaseView& v) const {
    return render(TemplateId::ExamplePlaceholder,
                  {{"question", v.question()}, {"answer_a", v.slot_a()}, {"answer_b", v.slot_b()}});
  }

  std::string render_judge(TemplateId id, const CaseView& v) const {
    return render(id, {{"question", v.question()}, {"answer_a", v.slot_a()}, {"answer_b", v.slot_b()}});
  }

  // eval_prompt, a blank line, then the example block.
  std::string compose_judge_input(std::string_view eval_prompt, const CaseView& v) const {
    if (eval_prompt.empty()) throw InvariantError("compose_judge_input: empty evaluation prompt");
    std::string out(eval_prompt);
    out += "\n\n";
    out += render_example(v);
    return out;
  }

  std::string render_feedback_request(std::string_view meta, std::string_view evaluation_prompt,
                                      std::string_view judgment) const {
    return render(TemplateId::FeedbackRequest, {{"meta_prompt", std::string(meta)},
                                                {"evaluation_prompt", std::string(evaluation_prompt)},
                                                {"judgment", std::string(judgment)}});
  }

  std::string render_refine_request(std::string_view meta, const std::vector<FeedbackBatchEntry>& batch) const {
    return render(TemplateId::RefineRequest, {{"meta_prompt", std::string(meta)}, {"batch", render_batch(batch)}});
  }

  std::string render_summarize_request(std::string_view meta) const {
    return render(TemplateId::SummarizeRequest, {{"meta_prompt", std::string(meta)}});
  }

  // One block per buffered case: the evaluation prompt with its example, the
  // judgment, and the raw feedback.
  static std::string render_batch(const std::vector<FeedbackBatchEntry>& batch) {
    std::string out;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& e = batch[i];
      if (i) out += "\n\n";
      out += "[Example " + std::to_string(i + 1) + "]\n";
      out += "[Evaluation Prompt & Example]\n";
      out += e.eval_prompt;
      out += "\n\n";
      out += e.case_rendering;
      out += "\n[Judgment]\n";
      out += e.judgment_raw;
      out += "\n[Feedback]\n";
      out += e.feedback.raw;
    }
    return out;
  }

 private:
  std::array<std::string, kAllTemplates.size()> texts_;
};

// ---------------------------------------------------------------------------
// Output parsers.

namespace detail {

inline std::optional<std::string> json_text(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_array()) {
    std::string joined;
    for (const auto& v : *it) {
      if (!joined.empty()) joined += "\n";
      joined += v.is_string() ? v.get<std::string>() : v.dump();
    }
    return joined;
  }
  return it->dump();
}

inline std::optional<int> json_score(const nlohmann::json& obj) {
  auto it = obj.find("score");
  if (it == obj.end()) return std::nullopt;
  long long v = 0;
  if (it->is_number_integer()) {
    v = it->get<long long>();
  } else if (it->is_number_float()) {
    const double d = it->get<double>();
    if (d != static_cast<double>(static_cast<long long>(d))) return std::nullopt;
    v = static_cast<long long>(d);
  } else if (it->is_string()) {
    const auto s = it->get<std::string>();
    std::size_t pos = 0;
    try {
      v = std::stoll(s, &pos);
    } catch (...) {
      return std::nullopt;
    }
    if (pos != s.size()) return std::nullopt;
  } else {
    return std::nullopt;
  }
  if (v < 1 || v > 5) return std::nullopt;
  return static_cast<int>(v);
}

// End index (exclusive) of the brace-balanced object starting at `open`,
// honoring JSON string quoting.
inline std::optional<std::size_t> balanced_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Best-effort: the first brace-delimited JSON object carrying any of the
// feedback keys wins. Never throws.
inline FeedbackItem parse_feedback(std::string_view raw) {
  FeedbackItem item;
  item.raw = std::string(raw);
  for (std::size_t open = raw.find('{'); open != std::string_view::npos; open = raw.find('{', open + 1)) {
    const auto end = detail::balanced_end(raw, open);
    if (!end) continue;
    const auto obj = nlohmann::json::parse(raw.substr(open, *end - open), nullptr, /*allow_exceptions=*/false);
    if (!obj.is_object()) continue;
    if (!obj.contains("score") && !obj.contains("label") && !obj.contains("learned tips") &&
        !obj.contains("reasoning"))
      continue;
    item.score = detail::json_score(obj);
    item.label = detail::json_text(obj, "label");
    item.learned_tips = detail::json_text(obj, "learned tips");
    item.reasoning = detail::json_text(obj, "reasoning");
    break;
  }
  return item;
}

inline constexpr std::string_view kOptimizedMetaMarker = "[[[Optimized Meta Prompt]]]";

namespace detail {

inline bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

// Drops whitespace-only lines at both ends (and the final newline).
inline std::string trim_blank_lines(std::string_view s) {
  std::size_t begin = 0;
  while (begin < s.size()) {
    const auto nl = s.find('\n', begin);
    const auto line = s.substr(begin, nl == std::string_view::npos ? std::string_view::npos : nl - begin);
    if (!blank(line)) break;
    if (nl == std::string_view::npos) return {};
    begin = nl + 1;
  }
  std::size_t end = s.size();
  while (end > begin) {
    const auto nl = s.rfind('\n', end - 1);
    const std::size_t line_start = (nl == std::string_view::npos || nl < begin) ? begin : nl + 1;
    if (!blank(s.substr(line_start, end - line_start))) break;
    end = line_start == begin ? begin : line_start - 1;
  }
  return std::string(s.substr(begin, end - begin));
}

}  // namespace detail

inline std::string parse_refined_meta(std::string_view raw) {
  std::string_view body = raw;
  if (const auto pos = raw.rfind(kOptimizedMetaMarker); pos != std::string_view::npos)
    body = raw.substr(pos + kOptimizedMetaMarker.size());
  auto out = detail::trim_blank_lines(body);
  if (out.empty() || std::all_of(out.begin(), out.end(), [](unsigned char c) { return std::isspace(c); }))
    throw EmptyRefinementError();
  return out;
}

}  // namespace lwe
