#pragma once

// Accuracy, order-swap consistency, pair accuracy, relative inference cost,
// cumulative-accuracy curves with binomial intervals, and aggregation across
// benchmarks (macro average) or orderings (mean and sample std).

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "lwe/core.hpp"
#include "lwe/engine.hpp"

namespace lwe {

class MetricsError : public Error {
 public:
  using Error::Error;
};

class MissingGoldError : public MetricsError {
 public:
  explicit MissingGoldError(const std::string& id) : MetricsError("case '" + id + "' has no gold label") {}
};

class NotPairedError : public MetricsError {
 public:
  NotPairedError() : MetricsError("metric requires a paired run") {}
};

class EmptyBaselineError : public MetricsError {
 public:
  EmptyBaselineError() : MetricsError("baseline ledger is empty") {}
};

class MixedPairingError : public MetricsError {
 public:
  MixedPairingError() : MetricsError("cannot average paired and unpaired reports") {}
};

struct CaseMetric {
  std::string id;
  bool correct_canonical = false;
  std::optional<bool> consistent;
  std::optional<bool> pair_correct;

  friend bool operator==(const CaseMetric&, const CaseMetric&) = default;
};

// Integer tallies behind a report; absent for macro averages.
struct MetricCounts {
  std::size_t correct = 0;
  std::size_t consistent = 0;
  std::size_t pair_correct = 0;

  friend bool operator==(const MetricCounts&, const MetricCounts&) = default;
};

struct MetricReport {
  double accuracy = 0.0;
  std::optional<double> consistency;
  std::optional<double> pair_accuracy;
  std::size_t invalid_count = 0;
  std::size_t n = 0;
  std::vector<CaseMetric> per_case;
  std::optional<MetricCounts> counts;

  bool paired() const { return consistency.has_value(); }

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

inline GoldMap gold_map(const Dataset& dataset) {
  GoldMap g;
  for (const auto& c : dataset) g[c.id] = c.gold;
  return g;
}

namespace detail {

struct CasePair {
  const JudgmentRecord* canonical = nullptr;
  const JudgmentRecord* swapped = nullptr;
};

// Records keyed by (case id, order); metrics never depend on storage order.
inline std::map<std::string, CasePair> index_records(const RunResult& result) {
  std::map<std::string, CasePair> out;
  for (const auto& id : result.dataset_order) out[id];
  for (const auto& r : result.records) {
    auto it = out.find(r.case_id);
    if (it == out.end()) throw MetricsError("record for unknown case '" + r.case_id + "'");
    auto& slot = r.order == PresentationOrder::Canonical ? it->second.canonical : it->second.swapped;
    if (slot) throw MetricsError("duplicate " + std::string(to_string(r.order)) + " record for '" + r.case_id + "'");
    slot = &r;
  }
  for (const auto& [id, pair] : out) {
    if (!pair.canonical) throw MetricsError("case '" + id + "' has no canonical record");
    if (result.config.paired_evaluation && !pair.swapped)
      throw MetricsError("paired run is missing the swapped record for '" + id + "'");
  }
  return out;
}

inline PreferredResponse gold_of(const GoldMap& gold, const std::string& id) {
  auto it = gold.find(id);
  if (it == gold.end() || !it->second) throw MissingGoldError(id);
  return *it->second;
}

inline bool correct(const JudgmentRecord& r, PreferredResponse gold) { return r.preferred && *r.preferred == gold; }

inline bool consistent(const JudgmentRecord& canonical, const JudgmentRecord& swapped) {
  return canonical.preferred && swapped.preferred && *canonical.preferred == *swapped.preferred;
}

inline double ratio(std::size_t k, std::size_t n) { return n ? static_cast<double>(k) / static_cast<double>(n) : 0.0; }

}  // namespace detail

inline MetricReport compute_report(const RunResult& result, const GoldMap& gold) {
  const auto pairs = detail::index_records(result);
  const bool paired = result.config.paired_evaluation;
  MetricReport rep;
  MetricCounts counts;
  rep.n = result.dataset_order.size();
  for (const auto& id : result.dataset_order) {
    const auto& p = pairs.at(id);
    const auto g = detail::gold_of(gold, id);
    CaseMetric cm;
    cm.id = id;
    cm.correct_canonical = detail::correct(*p.canonical, g);
    if (paired) {
      cm.consistent = detail::consistent(*p.canonical, *p.swapped);
      cm.pair_correct = cm.correct_canonical && detail::correct(*p.swapped, g);
      counts.consistent += *cm.consistent;
      counts.pair_correct += *cm.pair_correct;
    }
    counts.correct += cm.correct_canonical;
    rep.per_case.push_back(std::move(cm));
  }
  for (const auto& r : result.records) rep.invalid_count += !r.verdict.valid();
  rep.accuracy = detail::ratio(counts.correct, rep.n);
  if (paired) {
    rep.consistency = detail::ratio(counts.consistent, rep.n);
    rep.pair_accuracy = detail::ratio(counts.pair_correct, rep.n);
  }
  rep.counts = counts;
  return rep;
}

inline MetricReport compute_report(const RunResult& result) { return compute_report(result, result.gold); }

inline double accuracy(const RunResult& result, const GoldMap& gold) {
  const auto pairs = detail::index_records(result);
  std::size_t k = 0;
  for (const auto& id : result.dataset_order) k += detail::correct(*pairs.at(id).canonical, detail::gold_of(gold, id));
  return detail::ratio(k, result.dataset_order.size());
}
inline double accuracy(const RunResult& result, const Dataset& dataset) { return accuracy(result, gold_map(dataset)); }

inline double consistency(const RunResult& result) {
  if (!result.config.paired_evaluation) throw NotPairedError();
  const auto pairs = detail::index_records(result);
  std::size_t k = 0;
  for (const auto& id : result.dataset_order) {
    const auto& p = pairs.at(id);
    k += detail::consistent(*p.canonical, *p.swapped);
  }
  return detail::ratio(k, result.dataset_order.size());
}

inline double pair_accuracy(const RunResult& result, const GoldMap& gold) {
  if (!result.config.paired_evaluation) throw NotPairedError();
  const auto pairs = detail::index_records(result);
  std::size_t k = 0;
  for (const auto& id : result.dataset_order) {
    const auto& p = pairs.at(id);
    const auto g = detail::gold_of(gold, id);
    k += detail::correct(*p.canonical, g) && detail::correct(*p.swapped, g);
  }
  return detail::ratio(k, result.dataset_order.size());
}
inline double pair_accuracy(const RunResult& result, const Dataset& dataset) {
  return pair_accuracy(result, gold_map(dataset));
}

// ---------------------------------------------------------------------------
// Cost.

inline double relative_cost(const UsageLedger& run, const UsageLedger& baseline) {
  const auto base = baseline.total_chars();
  if (base == 0) throw EmptyBaselineError();
  return static_cast<double>(run.total_chars()) / static_cast<double>(base);
}

inline double relative_cost(const RunResult& run, const RunResult& baseline) {
  return relative_cost(run.ledger, baseline.ledger);
}

// ---------------------------------------------------------------------------
// Cumulative accuracy in processing order.

enum class IntervalMethod { Wald, Wilson };

struct CurvePoint {
  std::size_t t = 0;
  std::string case_id;
  bool correct = false;
  double cumulative_accuracy = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

inline double normal_quantile(double p) { return boost::math::quantile(boost::math::normal_distribution<double>(), p); }

inline std::pair<double, double> binomial_interval(std::size_t k, std::size_t n, double alpha, IntervalMethod method) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw MetricsError("alpha must lie in (0, 1)");
  if (n == 0) return {0.0, 1.0};
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  double lo = 0, hi = 0;
  if (method == IntervalMethod::Wald) {
    const double half = z * std::sqrt(p * (1.0 - p) / nn);
    lo = p - half;
    hi = p + half;
  } else {
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    lo = center - half;
    hi = center + half;
  }
  return {std::clamp(lo, 0.0, 1.0), std::clamp(hi, 0.0, 1.0)};
}

// `subset`, when given, restricts the curve to those case ids (e.g. the
// cases the selective gate flagged).
inline std::vector<CurvePoint> cumulative_curve(const RunResult& result, const GoldMap& gold, double alpha = 0.05,
                                                IntervalMethod method = IntervalMethod::Wald,
                                                const std::optional<std::vector<std::string>>& subset = std::nullopt) {
  std::vector<const JudgmentRecord*> canon;
  for (const auto& r : result.records) {
    if (r.order != PresentationOrder::Canonical) continue;
    if (subset && std::find(subset->begin(), subset->end(), r.case_id) == subset->end()) continue;
    canon.push_back(&r);
  }
  std::stable_sort(canon.begin(), canon.end(),
                   [](const auto* a, const auto* b) { return a->sequence_index < b->sequence_index; });
  std::vector<CurvePoint> out;
  std::size_t k = 0;
  for (std::size_t i = 0; i < canon.size(); ++i) {
    CurvePoint pt;
    pt.t = i + 1;
    pt.case_id = canon[i]->case_id;
    pt.correct = detail::correct(*canon[i], detail::gold_of(gold, pt.case_id));
    k += pt.correct;
    pt.cumulative_accuracy = detail::ratio(k, pt.t);
    std::tie(pt.ci_low, pt.ci_high) = binomial_interval(k, pt.t, alpha, method);
    out.push_back(std::move(pt));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation.

inline MetricReport macro_average(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw MetricsError("macro_average needs at least one report");
  const bool paired = reports.front().paired();
  for (const auto& r : reports) {
    if (r.paired() != paired) throw MixedPairingError();
  }
  if (reports.size() == 1) return reports.front();
  MetricReport out;
  const double m = static_cast<double>(reports.size());
  double acc = 0, cons = 0, pair = 0;
  for (const auto& r : reports) {
    acc += r.accuracy;
    if (paired) {
      cons += *r.consistency;
      pair += *r.pair_accuracy;
    }
    out.invalid_count += r.invalid_count;
    out.n += r.n;
  }
  out.accuracy = acc / m;
  if (paired) {
    out.consistency = cons / m;
    out.pair_accuracy = pair / m;
  }
  return out;
}

struct SummaryRow {
  std::string metric;
  std::vector<double> values;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1)
};

inline SummaryRow summarize_values(std::string metric, std::vector<double> values) {
  SummaryRow row{std::move(metric), std::move(values), 0.0, 0.0};
  const double n = static_cast<double>(row.values.size());
  if (row.values.empty()) return row;
  for (double v : row.values) row.mean += v;
  row.mean /= n;
  if (row.values.size() > 1) {
    double ss = 0;
    for (double v : row.values) ss += (v - row.mean) * (v - row.mean);
    row.stddev = std::sqrt(ss / (n - 1.0));
  }
  return row;
}

// One row per metric across repeated runs (e.g. different case orderings).
inline std::vector<SummaryRow> summarize_runs(const std::vector<MetricReport>& reports) {
  std::vector<double> acc, cons, pair;
  for (const auto& r : reports) {
    acc.push_back(r.accuracy);
    if (r.paired()) {
      cons.push_back(*r.consistency);
      pair.push_back(*r.pair_accuracy);
    }
  }
  std::vector<SummaryRow> rows{summarize_values("Acc.", acc)};
  if (cons.size() == reports.size() && !reports.empty()) {
    rows.push_back(summarize_values("Cons.", cons));
    rows.push_back(summarize_values("PairAcc.", pair));
  }
  return rows;
}

}  // namespace lwe
