// SPDX-License-Identifier: Apache-2.0
//
// Abstention thresholds and selective ranking metrics.
#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ctdg::eval {

struct ScoredExample {
  double f = 0.0;  // prediction score
  double a = 0.0;  // abstention score in [0, 1]
  int label = 0;
};

/// Smallest theta with |{a_i <= theta}| >= ceil(c N): the ceil(c N)-th smallest
/// score. Examples with a <= theta are kept; ties at theta are all kept.
double calibrate_threshold(std::span<const double> abstention_scores, double coverage_target);

/// Number of examples kept at coverage c on N examples, i.e. ceil(c N) with
/// products within 1e-9 of an integer treated as exact.
std::size_t required_kept(double coverage_target, std::size_t n);

/// Rank-based (Mann-Whitney) AUC with half credit for ties. Throws
/// MetricUndefinedError unless both classes are present.
double auc_roc(std::span<const ScoredExample> examples);

/// Non-interpolated AP: mean over positives of the precision at each positive's
/// rank, ranking by descending f with ties kept in input order. Throws
/// MetricUndefinedError without positives.
double average_precision(std::span<const ScoredExample> examples);

struct CoverageReport {
  double coverage_target = 0.0;
  double theta = 0.0;
  double realized_coverage = 0.0;
  std::size_t n_total = 0;
  std::size_t n_covered = 0;
  std::size_t n_covered_positive = 0;
  double ap = 0.0;  // NaN when undefined
  double auc = 0.0;  // NaN when undefined
  bool ap_defined = true;
  bool auc_defined = true;
  /// Every validation abstention score equal: the threshold keeps everything.
  bool degenerate_scores = false;
  std::string note;
};

/// For each target: calibrate theta on the validation scores, apply it to the
/// test examples, and score the covered test subset. Metric failures are
/// recorded on the row; the sweep continues.
std::vector<CoverageReport> coverage_sweep(std::span<const ScoredExample> validation,
                                           std::span<const ScoredExample> test,
                                           std::span<const double> targets);

/// Coverage levels 100, 90, ..., 50 percent.
std::vector<double> default_coverage_targets();

/// `coverage_target,theta,realized_coverage,n_covered,ap,auc`, one row per
/// report, 17 significant digits, "nan" for undefined metrics.
void write_coverage_csv(std::ostream& out, std::span<const CoverageReport> rows);
/// Reads back what write_coverage_csv emits (header required).
std::vector<CoverageReport> read_coverage_csv(std::istream& in);
/// Aligned text table with coverage in percent and metrics in percent.
void write_coverage_table(std::ostream& out, std::span<const CoverageReport> rows);

}  // namespace ctdg::eval
