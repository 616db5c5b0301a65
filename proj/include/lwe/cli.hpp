#pragma once

// The `lwe` command line. Everything is reachable through run_cli so tests can
// drive it in-process; tools/lwe_cli.cpp only adds signal handling.
//
// Exit codes: 0 success, 1 usage or input error, 2 run aborted or
// interrupted, 3 storage or manifest error.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lwe/core.hpp"
#include "lwe/engine.hpp"
#include "lwe/http_provider.hpp"
#include "lwe/metrics.hpp"
#include "lwe/serialize.hpp"
#include "lwe/simulator.hpp"
#include "lwe/store.hpp"
#include "lwe/templates.hpp"

namespace lwe::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kAborted = 2, kStorage = 3 };

enum class Format { Table, Machine };

namespace detail {

inline std::string fixed(double v, int digits = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline std::string opt_fixed(const std::optional<double>& v) { return v ? fixed(*v) : "—"; }

inline nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

// Pads by code points so "—" lines up with numbers.
inline std::string pad(const std::string& s, std::size_t width) {
  const auto n = char_length(s);
  return n >= width ? s + " " : s + std::string(width - n, ' ');
}

}  // namespace detail

// ---------------------------------------------------------------------------
// run

struct RunOptions {
  std::string strategy = "vanilla";
  std::string dataset;
  std::string out;
  std::uint64_t seed = 0;
  std::uint64_t permutation_run = 0;
  std::size_t batch_size = 4;
  std::size_t summarize_threshold = 10000;
  bool paired = false;
  std::string provider = "sim";
  std::optional<std::size_t> limit;
  bool resume = false;
  bool literal_consistency = false;
  bool fail_fast = false;
  int majority_k = 5;
  double judge_temperature = 0.0;
  double majority_temperature = 0.7;
  std::size_t gate_parallelism = 4;
  int max_attempts = 3;
  double initial_backoff = 1.0;
  bool meter_attempts = true;
  std::string templates;
  std::string meta0_file;
  bool no_fsync = false;
  std::size_t progress_every = 25;
  // simulator
  double sim_p_plain = 0.6;
  double sim_p_tailored = 0.7;
  double sim_flip_prob = 0.3;
  double sim_improvement = 0.01;
  std::size_t sim_tip_chars = 200;
  // http
  std::string model = "gpt-4o";
  double timeout = 120.0;
};

inline RunConfig to_run_config(const RunOptions& o) {
  RunConfig c;
  auto k = parse_strategy(o.strategy);
  if (!k) throw CLI::ValidationError("--strategy", "unknown strategy '" + o.strategy + "'");
  c.strategy = *k;
  c.batch_size = o.batch_size;
  c.summarize_threshold = o.summarize_threshold;
  c.paired_evaluation = o.paired;
  c.majority_k = o.majority_k;
  c.judge_temperature = o.judge_temperature;
  c.majority_temperature = o.majority_temperature;
  c.seed = o.seed;
  c.retry.max_attempts = o.max_attempts;
  c.retry.initial_backoff_s = o.initial_backoff;
  c.meter_failed_attempts = o.meter_attempts;
  c.consistency_rule = o.literal_consistency ? ConsistencyRule::LiteralLabel : ConsistencyRule::Canonical;
  c.fail_fast = o.fail_fast;
  c.gate_parallelism = o.gate_parallelism;
  return c;
}

inline SimulatorParams to_sim_params(const RunOptions& o) {
  SimulatorParams p;
  p.seed = o.seed;
  p.p_plain = o.sim_p_plain;
  p.p_tailored = o.sim_p_tailored;
  p.flip_prob = o.sim_flip_prob;
  p.improvement_per_refine = o.sim_improvement;
  p.tip_chars = o.sim_tip_chars;
  return p;
}

inline nlohmann::json provider_json(const RunOptions& o) {
  if (o.provider == "sim") {
    const auto p = to_sim_params(o);
    return {{"kind", "sim"},
            {"p_plain", p.p_plain},
            {"p_tailored", p.p_tailored},
            {"flip_prob", p.flip_prob},
            {"improvement_per_refine", p.improvement_per_refine},
            {"tip_chars", p.tip_chars}};
  }
  return {{"kind", "http"}, {"model", o.model}};
}

inline void print_report_table(std::ostream& out, const std::vector<std::pair<std::string, MetricReport>>& rows,
                               const std::vector<std::string>& strategies, Format format) {
  if (format == Format::Machine) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& [name, r] = rows[i];
      out << nlohmann::json{{"row", "report"},
                            {"run", name},
                            {"strategy", i < strategies.size() ? strategies[i] : ""},
                            {"n", r.n},
                            {"accuracy", r.accuracy},
                            {"consistency", detail::opt_json(r.consistency)},
                            {"pair_accuracy", detail::opt_json(r.pair_accuracy)},
                            {"invalid", r.invalid_count}}
                 .dump()
          << "\n";
    }
    return;
  }
  std::size_t w = 8;
  for (const auto& [name, r] : rows) w = std::max(w, char_length(name) + 2);
  out << detail::pad("run", w) << detail::pad("strategy", 16) << detail::pad("n", 7) << detail::pad("Acc.", 8)
      << detail::pad("Cons.", 8) << detail::pad("PairAcc.", 10) << "invalid\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& [name, r] = rows[i];
    out << detail::pad(name, w) << detail::pad(i < strategies.size() ? strategies[i] : "", 16)
        << detail::pad(std::to_string(r.n), 7) << detail::pad(detail::fixed(r.accuracy), 8)
        << detail::pad(detail::opt_fixed(r.consistency), 8) << detail::pad(detail::opt_fixed(r.pair_accuracy), 10)
        << r.invalid_count << "\n";
  }
}

inline int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err, Format format,
                   const std::atomic<bool>* stop) {
  const auto config = to_run_config(o);
  validate(config);
  const auto templates = o.templates.empty() ? TemplateStore::load() : TemplateStore::load(o.templates);

  const auto file_records = read_dataset_file(o.dataset);
  const auto dataset = prepare_dataset(file_records, o.seed, o.limit, o.permutation_run);

  std::optional<std::string> meta0;
  if (!o.meta0_file.empty()) meta0 = RunDirectory::read_text(o.meta0_file);

  Manifest m;
  m.config = config;
  m.dataset_path = fs::absolute(o.dataset).string();
  m.dataset_checksum = dataset_checksum(file_records);
  m.permutation_run = o.permutation_run;
  m.limit = o.limit;
  m.provider = provider_json(o);
  m.extra = {{"batch_size", o.batch_size},
             {"summarize_threshold", o.summarize_threshold},
             {"templates", o.templates.empty() ? TemplateStore::default_directory().string() : o.templates},
             {"meta0", meta0 ? sha256_hex(*meta0) : "initial-meta-prompt"},
             {"progress_every", o.progress_every}};

  std::unique_ptr<Provider> provider;
  if (o.provider == "sim") {
    provider = std::make_unique<SimulatedJudge>(to_sim_params(o), dataset, templates);
  } else {
    auto hc = HttpProviderConfig::from_env(o.model);
    hc.timeout_s = o.timeout;
    if (hc.api_key.empty()) err << "warning: " << kApiKeyEnv << " is not set; sending requests without a key\n";
    provider = std::make_unique<HttpProvider>(std::move(hc));
  }

  RunSpec spec;
  spec.out = o.out;
  spec.manifest = m;
  spec.dataset = dataset;
  spec.meta0 = meta0;
  spec.resume = o.resume;
  spec.durable = !o.no_fsync;
  spec.stop = stop;
  const std::size_t every = std::max<std::size_t>(1, o.progress_every);
  spec.progress = [&](const RunEvent& ev, const RunState& st) {
    const auto* c = std::get_if<event::UnitCommitted>(&ev);
    if (!c) return;
    const std::size_t total = c->phase == Phase::Learn ? st.inconsistent_ids.size() : st.dataset_order.size();
    const std::size_t done = c->index + 1;
    if (done % every != 0 && done != total) return;
    const std::size_t chars = st.ledger.total_chars();
    if (format == Format::Machine) {
      out << nlohmann::json{{"row", "progress"},
                            {"phase", std::string(to_string(c->phase))},
                            {"done", done},
                            {"total", total},
                            {"records", st.records.size()},
                            {"chars", chars}}
                 .dump()
          << "\n";
    } else {
      out << "[" << to_string(c->phase) << "] " << done << "/" << total << " cases, " << st.records.size()
          << " records, " << chars << " chars";
      if (c->phase == Phase::Gate) out << ", " << st.inconsistent_ids.size() << " inconsistent";
      if (st.meta && c->phase != Phase::Gate) out << ", " << st.meta->refinement_count << " refinements";
      out << "\n";
    }
    out.flush();
  };

  auto outcome = execute_run(*provider, templates, spec);
  if (outcome.already_complete) {
    out << "already complete: " << o.out << "\n";
    return kOk;
  }
  const auto report = compute_report(outcome.result);
  print_report_table(out, {{o.out, report}}, {o.strategy}, format);
  for (const auto& w : outcome.result.warnings) err << "warning: " << w << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// metrics / compare / curve / orderings

inline int cmd_metrics(const std::vector<std::string>& dirs, std::ostream& out, Format format) {
  std::vector<std::pair<std::string, MetricReport>> rows;
  std::vector<std::string> strategies;
  for (const auto& d : dirs) {
    auto run = load_run(d);
    auto rep = compute_report(run.result);
    RunDirectory::open(d, RunDirectory::Mode::ReadOnly).write_report(report_json(run.result));
    rows.emplace_back(d, std::move(rep));
    strategies.emplace_back(to_string(run.manifest.config.strategy));
  }
  if (rows.size() > 1) {
    std::vector<MetricReport> reports;
    bool mixed = false;
    for (const auto& [_, r] : rows) {
      reports.push_back(r);
      mixed |= r.paired() != rows.front().second.paired();
    }
    MetricReport macro;
    if (mixed) {
      for (auto& r : reports) r.consistency.reset(), r.pair_accuracy.reset();
    }
    macro = macro_average(reports);
    rows.emplace_back("macro", std::move(macro));
    strategies.emplace_back("");
  }
  print_report_table(out, rows, strategies, format);
  return kOk;
}

// Calls that belong to the selective gate versus the learning phases.
inline std::string_view phase_of(CallTag t) {
  switch (t) {
    case CallTag::ConsistencyCheck: return "gate";
    case CallTag::BuildEvalPrompt:
    case CallTag::Feedback:
    case CallTag::Refine:
    case CallTag::Summarize: return "lwe";
    case CallTag::Judge: break;
  }
  return "judge";
}

inline int cmd_compare(const std::string& dir, const std::string& baseline, std::ostream& out, Format format) {
  const auto run = load_run(dir);
  const auto base = load_run(baseline);
  const double rel = relative_cost(run.result, base.result);
  const auto by_tag = run.result.ledger.chars_by_tag();
  const std::size_t total = run.result.ledger.total_chars();
  if (format == Format::Machine) {
    out << nlohmann::json{{"row", "relative_cost"}, {"run", dir}, {"baseline", baseline}, {"relative_cost", rel},
                          {"total_chars", total}, {"baseline_chars", base.result.ledger.total_chars()}}
               .dump()
        << "\n";
    for (auto tag : kAllCallTags) {
      auto it = by_tag.find(tag);
      out << nlohmann::json{{"row", "tag"},
                            {"tag", std::string(to_string(tag))},
                            {"phase", std::string(phase_of(tag))},
                            {"calls", run.result.ledger.count(tag)},
                            {"chars", it == by_tag.end() ? 0 : it->second}}
                 .dump()
          << "\n";
    }
    return kOk;
  }
  out << "relative cost: " << detail::fixed(rel, 1) << "×  (" << total << " / " << base.result.ledger.total_chars()
      << " chars)\n";
  out << detail::pad("tag", 20) << detail::pad("phase", 8) << detail::pad("calls", 8) << detail::pad("chars", 12)
      << "share\n";
  for (auto tag : kAllCallTags) {
    auto it = by_tag.find(tag);
    const std::size_t chars = it == by_tag.end() ? 0 : it->second;
    out << detail::pad(std::string(to_string(tag)), 20) << detail::pad(std::string(phase_of(tag)), 8)
        << detail::pad(std::to_string(run.result.ledger.count(tag)), 8) << detail::pad(std::to_string(chars), 12)
        << detail::fixed(total ? static_cast<double>(chars) / static_cast<double>(total) : 0.0) << "\n";
  }
  out << detail::pad("total", 20) << detail::pad("", 8) << detail::pad(std::to_string(run.result.ledger.size()), 8)
      << detail::pad(std::to_string(total), 12) << "1.000\n";
  return kOk;
}

inline void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& pts) {
  out << "t,case_id,correct,cumulative_accuracy,ci_low,ci_high\n";
  out << std::setprecision(17);
  for (const auto& p : pts) {
    out << p.t << "," << p.case_id << "," << (p.correct ? 1 : 0) << "," << p.cumulative_accuracy << "," << p.ci_low
        << "," << p.ci_high << "\n";
  }
}

inline int cmd_curve(const std::string& dir, double alpha, const std::string& out_path, const std::string& method,
                     const std::string& subset, std::ostream& out) {
  const auto run = load_run(dir);
  std::optional<std::vector<std::string>> ids;
  if (subset == "inconsistent") {
    if (!run.result.inconsistent_ids) throw CLI::ValidationError("--subset", "inconsistent subset needs a selective-lwe run");
    ids = run.result.inconsistent_ids;
  }
  const auto pts = cumulative_curve(run.result, run.result.gold, alpha,
                                    method == "wilson" ? IntervalMethod::Wilson : IntervalMethod::Wald, ids);
  if (out_path == "-") {
    write_curve_csv(out, pts);
  } else {
    std::ofstream f(out_path);
    if (!f) throw StorageError("cannot write " + out_path);
    write_curve_csv(f, pts);
    out << "wrote " << pts.size() << " rows to " << out_path << "\n";
  }
  return kOk;
}

inline std::string order_fingerprint(const std::vector<std::string>& order) {
  Sha256 h;
  for (const auto& id : order) h.field(id);
  return h.hex().substr(0, 12);
}

inline int cmd_orderings(const std::vector<std::string>& dirs, std::ostream& out, Format format) {
  std::vector<MetricReport> reports;
  std::vector<std::string> fingerprints;
  for (const auto& d : dirs) {
    const auto run = load_run(d);
    reports.push_back(compute_report(run.result));
    fingerprints.push_back(order_fingerprint(run.result.dataset_order));
    if (format == Format::Machine) {
      out << nlohmann::json{{"row", "ordering"},
                            {"run", d},
                            {"permutation_run", run.manifest.permutation_run},
                            {"order", fingerprints.back()}}
                 .dump()
          << "\n";
    } else {
      out << "run " << d << "  permutation " << run.manifest.permutation_run << "  order " << fingerprints.back()
          << "\n";
    }
  }
  std::set<std::string> distinct(fingerprints.begin(), fingerprints.end());
  const auto rows = summarize_runs(reports);
  if (format == Format::Machine) {
    for (const auto& r : rows)
      out << nlohmann::json{{"row", "summary"}, {"metric", r.metric}, {"values", r.values}, {"mean", r.mean},
                            {"std", r.stddev}}
                 .dump()
          << "\n";
    out << nlohmann::json{{"row", "distinct_orders"}, {"count", distinct.size()}}.dump() << "\n";
    return kOk;
  }
  out << "\n" << detail::pad("Metric", 10);
  for (std::size_t i = 0; i < reports.size(); ++i) out << detail::pad("Run " + std::to_string(i + 1), 8);
  out << "Mean ± Std\n";
  for (const auto& r : rows) {
    out << detail::pad(r.metric, 10);
    for (double v : r.values) out << detail::pad(detail::fixed(v), 8);
    out << detail::fixed(r.mean) << " ± " << detail::fixed(r.stddev) << "\n";
  }
  out << "distinct orders: " << distinct.size() << " of " << dirs.size() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// synth: a synthetic dataset for simulator runs.

inline Dataset synthetic_dataset(std::size_t n, std::uint64_t seed) {
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "case-%04zu", i);
    TestCase c;
    c.id = id;
    c.question = "Describe what is shown in image " + std::to_string(i) + ".";
    c.response_a = "The image " + std::to_string(i) + " shows a street scene with two parked cars and a cyclist.";
    c.response_b = "The image " + std::to_string(i) + " shows a street scene with three parked cars and no people.";
    c.gold = keyed_uniform(seed, c.id + "|gold") < 0.5 ? PreferredResponse::First : PreferredResponse::Second;
    d.push_back(std::move(c));
  }
  return d;
}

// ---------------------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
                   const std::atomic<bool>* stop = nullptr) {
  CLI::App app{"Pairwise judge evaluation with an evolving meta-prompt"};
  app.name("lwe");
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value file (flags override it)");
  std::string format_name = "table";
  app.add_option("--format", format_name, "Output format")->check(CLI::IsMember({"table", "machine"}));

  RunOptions ro;
  auto* run = app.add_subcommand("run", "Run a strategy over a dataset and persist it");
  run->add_option("--strategy", ro.strategy, "Strategy")
      ->check(CLI::IsMember({"vanilla", "cot", "majority", "sample-specific", "lwe", "selective-lwe"}))
      ->capture_default_str();
  run->add_option("--dataset", ro.dataset, "Dataset file (JSON lines)")->required();
  run->add_option("--out", ro.out, "Run directory")->required();
  run->add_option("--seed", ro.seed, "Seed for ordering, presentation and the simulator")->capture_default_str();
  run->add_option("--permutation-run", ro.permutation_run, "Ordering index")->capture_default_str();
  run->add_option("--batch-size", ro.batch_size, "Feedback batch size b")->check(CLI::PositiveNumber)->capture_default_str();
  run->add_option("--summarize-threshold", ro.summarize_threshold, "Meta-prompt length that triggers summarization")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_flag("--paired", ro.paired, "Also judge every case with the responses swapped");
  run->add_option("--provider", ro.provider, "Backend")->check(CLI::IsMember({"sim", "http"}))->capture_default_str();
  run->add_option("--limit", ro.limit, "Use the first N cases after shuffling");
  run->add_flag("--resume", ro.resume, "Continue an interrupted run in --out");
  run->add_flag("--literal-consistency", ro.literal_consistency, "Gate on literal labels instead of canonical choices");
  run->add_flag("--fail-fast", ro.fail_fast, "Abort on the first provider failure");
  run->add_option("--majority-k", ro.majority_k, "Samples per majority vote")->capture_default_str();
  run->add_option("--judge-temperature", ro.judge_temperature, "Temperature for judge calls")->capture_default_str();
  run->add_option("--majority-temperature", ro.majority_temperature, "Temperature for majority samples")
      ->capture_default_str();
  run->add_option("--gate-parallelism", ro.gate_parallelism, "In-flight consistency checks")->capture_default_str();
  run->add_option("--max-attempts", ro.max_attempts, "Attempts per call")->capture_default_str();
  run->add_option("--initial-backoff", ro.initial_backoff, "First retry delay in seconds")->capture_default_str();
  run->add_flag("!--no-attempt-metering", ro.meter_attempts, "Meter one ledger entry per call, not per attempt");
  run->add_option("--templates", ro.templates, "Template directory");
  run->add_option("--meta0", ro.meta0_file, "Initial meta-prompt file");
  run->add_flag("--no-fsync", ro.no_fsync, "Flush without fsync on every event");
  run->add_option("--progress-every", ro.progress_every, "Progress line interval in cases")->capture_default_str();
  run->add_option("--sim-p-plain", ro.sim_p_plain, "Simulator: accuracy under plain prompts")->capture_default_str();
  run->add_option("--sim-p-tailored", ro.sim_p_tailored, "Simulator: accuracy under sample-specific prompts")
      ->capture_default_str();
  run->add_option("--sim-flip-prob", ro.sim_flip_prob, "Simulator: share of positional cases")->capture_default_str();
  run->add_option("--sim-improvement", ro.sim_improvement, "Simulator: accuracy gain per refinement")
      ->capture_default_str();
  run->add_option("--sim-tip-chars", ro.sim_tip_chars, "Simulator: characters added per refinement")
      ->capture_default_str();
  run->add_option("--model", ro.model, "Model name for the HTTP backend")->capture_default_str();
  run->add_option("--timeout", ro.timeout, "HTTP timeout in seconds")->capture_default_str();

  std::vector<std::string> metric_dirs;
  auto* metrics = app.add_subcommand("metrics", "Report metrics of finished runs; macro average for several");
  metrics->add_option("run_dirs", metric_dirs, "Run directories")->required();

  std::string cmp_dir, cmp_base;
  auto* compare = app.add_subcommand("compare", "Relative inference cost against a baseline run");
  compare->add_option("run_dir", cmp_dir, "Run directory")->required();
  compare->add_option("--baseline", cmp_base, "Baseline run directory")->required();

  std::string curve_dir, curve_out = "-", curve_method = "wald", curve_subset = "all";
  double alpha = 0.05;
  auto* curve = app.add_subcommand("curve", "Export the cumulative accuracy curve as CSV");
  curve->add_option("run_dir", curve_dir, "Run directory")->required();
  curve->add_option("--alpha", alpha, "Significance level")->capture_default_str();
  curve->add_option("--out", curve_out, "Output file, - for stdout")->capture_default_str();
  curve->add_option("--method", curve_method, "Interval")->check(CLI::IsMember({"wald", "wilson"}))->capture_default_str();
  curve->add_option("--subset", curve_subset, "Cases")->check(CLI::IsMember({"all", "inconsistent"}))->capture_default_str();

  std::vector<std::string> order_dirs;
  auto* orderings = app.add_subcommand("orderings", "Mean ± std over runs with different permutation runs");
  orderings->add_option("run_dirs", order_dirs, "Run directories")->required();

  std::size_t synth_n = 100;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset for simulator runs");
  synth->add_option("--n", synth_n, "Number of cases")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Seed for gold labels")->capture_default_str();
  synth->add_option("--out", synth_out, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kUsage;
  }
  const Format format = format_name == "machine" ? Format::Machine : Format::Table;

  try {
    if (run->parsed()) return cmd_run(ro, out, err, format, stop);
    if (metrics->parsed()) return cmd_metrics(metric_dirs, out, format);
    if (compare->parsed()) return cmd_compare(cmp_dir, cmp_base, out, format);
    if (curve->parsed()) return cmd_curve(curve_dir, alpha, curve_out, curve_method, curve_subset, out);
    if (orderings->parsed()) return cmd_orderings(order_dirs, out, format);
    if (synth->parsed()) {
      std::ofstream f(synth_out);
      if (!f) throw StorageError("cannot write " + synth_out);
      write_dataset(f, synthetic_dataset(synth_n, synth_seed));
      out << "wrote " << synth_n << " cases to " << synth_out << "\n";
      return kOk;
    }
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const RunInterrupted&) {
    err << "interrupted; progress is saved, rerun with --resume to continue\n";
    return kAborted;
  } catch (const RunAborted& e) {
    err << "aborted: " << e.what() << "\n";
    return kAborted;
  } catch (const StorageError& e) {
    err << "storage error: " << e.what() << "\n";
    return kStorage;
  } catch (const DatasetError& e) {
    err << "dataset error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace lwe::cli
