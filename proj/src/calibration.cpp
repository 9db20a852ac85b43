// SPDX-License-Identifier: Apache-2.0
#include "ctdg/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ctdg/error.hpp"

namespace ctdg::eval {

std::size_t required_kept(double coverage_target, std::size_t n) {
  if (!(coverage_target > 0.0 && coverage_target <= 1.0)) {
    throw ContractError("coverage target must lie in (0, 1]");
  }
  const double exact = coverage_target * static_cast<double>(n);
  const double nearest = std::round(exact);
  const double kept = std::abs(exact - nearest) < 1e-9 ? nearest : std::ceil(exact);
  return std::clamp<std::size_t>(static_cast<std::size_t>(kept), 1, n);
}

double calibrate_threshold(std::span<const double> abstention_scores, double coverage_target) {
  if (abstention_scores.empty()) throw ContractError("calibrate_threshold: no scores");
  const std::size_t k = required_kept(coverage_target, abstention_scores.size());
  std::vector<double> sorted(abstention_scores.begin(), abstention_scores.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  return sorted[k - 1];
}

double auc_roc(std::span<const ScoredExample> examples) {
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return examples[x].f < examples[y].f; });
  double positives = 0.0;
  double negatives = 0.0;
  double numerator = 0.0;  // wins + ties/2, an exact half-integer
  double negatives_below = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    double pos = 0.0, neg = 0.0;
    while (j < order.size() && examples[order[j]].f == examples[order[i]].f) {
      (examples[order[j]].label == 1 ? pos : neg) += 1.0;
      ++j;
    }
    numerator += pos * negatives_below + 0.5 * pos * neg;
    negatives_below += neg;
    positives += pos;
    negatives += neg;
    i = j;
  }
  if (positives == 0.0 || negatives == 0.0) {
    throw MetricUndefinedError("AUC needs at least one positive and one negative example");
  }
  return numerator / (positives * negatives);
}

double average_precision(std::span<const ScoredExample> examples) {
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return examples[x].f > examples[y].f; });
  double hits = 0.0;
  double sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (examples[order[rank]].label == 1) {
      hits += 1.0;
      sum += hits / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0.0) throw MetricUndefinedError("AP needs at least one positive example");
  return sum / hits;
}

std::vector<double> default_coverage_targets() { return {1.0, 0.9, 0.8, 0.7, 0.6, 0.5}; }

std::vector<CoverageReport> coverage_sweep(std::span<const ScoredExample> validation,
                                           std::span<const ScoredExample> test,
                                           std::span<const double> targets) {
  if (validation.empty()) throw ContractError("coverage_sweep: empty validation set");
  std::vector<double> val_scores;
  val_scores.reserve(validation.size());
  for (const auto& e : validation) val_scores.push_back(e.a);
  const bool degenerate = std::all_of(val_scores.begin(), val_scores.end(),
                                      [&](double a) { return a == val_scores.front(); });

  std::vector<CoverageReport> rows;
  rows.reserve(targets.size());
  for (double c : targets) {
    CoverageReport row;
    row.coverage_target = c;
    row.theta = calibrate_threshold(val_scores, c);
    row.n_total = test.size();
    row.degenerate_scores = degenerate;
    std::vector<ScoredExample> covered;
    for (const auto& e : test) {
      if (e.a <= row.theta) covered.push_back(e);
    }
    row.n_covered = covered.size();
    row.n_covered_positive = static_cast<std::size_t>(
        std::count_if(covered.begin(), covered.end(), [](const ScoredExample& e) { return e.label == 1; }));
    row.realized_coverage = test.empty() ? 0.0 : static_cast<double>(covered.size()) / static_cast<double>(test.size());
    std::vector<std::string> notes;
    if (degenerate) notes.emplace_back("all validation abstention scores identical");
    try {
      row.ap = average_precision(covered);
    } catch (const MetricUndefinedError& e) {
      row.ap = std::numeric_limits<double>::quiet_NaN();
      row.ap_defined = false;
      notes.emplace_back(std::string("AP: ") + e.what());
    }
    try {
      row.auc = auc_roc(covered);
    } catch (const MetricUndefinedError& e) {
      row.auc = std::numeric_limits<double>::quiet_NaN();
      row.auc_defined = false;
      notes.emplace_back(std::string("AUC: ") + e.what());
    }
    for (std::size_t k = 0; k < notes.size(); ++k) row.note += (k ? "; " : "") + notes[k];
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

void put_real(std::ostream& out, double v) {
  if (std::isnan(v)) {
    out << "nan";
  } else {
    out << v;
  }
}

double get_real(const std::string& field, std::size_t line) {
  if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    throw ParseError(line, "not numeric: '" + field + "'");
  }
  if (used != field.size()) throw ParseError(line, "not numeric: '" + field + "'");
  return v;
}

}  // namespace

void write_coverage_csv(std::ostream& out, std::span<const CoverageReport> rows) {
  const auto precision = out.precision(17);
  out << "coverage_target,theta,realized_coverage,n_covered,ap,auc\n";
  for (const auto& r : rows) {
    put_real(out, r.coverage_target);
    out << ',';
    put_real(out, r.theta);
    out << ',';
    put_real(out, r.realized_coverage);
    out << ',' << r.n_covered << ',';
    put_real(out, r.ap_defined ? r.ap : std::numeric_limits<double>::quiet_NaN());
    out << ',';
    put_real(out, r.auc_defined ? r.auc : std::numeric_limits<double>::quiet_NaN());
    out << '\n';
  }
  out.precision(precision);
}

std::vector<CoverageReport> read_coverage_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line.rfind("coverage_target,", 0) != 0) {
    throw ParseError(1, "missing coverage report header");
  }
  std::vector<CoverageReport> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 6) throw ParseError(line_no, "expected 6 fields");
    CoverageReport r;
    r.coverage_target = get_real(fields[0], line_no);
    r.theta = get_real(fields[1], line_no);
    r.realized_coverage = get_real(fields[2], line_no);
    r.n_covered = static_cast<std::size_t>(get_real(fields[3], line_no));
    r.ap = get_real(fields[4], line_no);
    r.auc = get_real(fields[5], line_no);
    r.ap_defined = !std::isnan(r.ap);
    r.auc_defined = !std::isnan(r.auc);
    rows.push_back(r);
  }
  return rows;
}

void write_coverage_table(std::ostream& out, std::span<const CoverageReport> rows) {
  auto pct = [](double v, bool defined) {
    std::ostringstream s;
    if (!defined || std::isnan(v)) {
      s << "n/a";
    } else {
      s << std::fixed << std::setprecision(2) << 100.0 * v;
    }
    return s.str();
  };
  out << std::left << std::setw(14) << "Coverage (%)" << std::setw(10) << "theta" << std::setw(14)
      << "Realized (%)" << std::setw(10) << "Covered" << std::setw(10) << "Pos" << std::setw(10)
      << "AP (%)" << std::setw(10) << "AUC (%)" << "Note\n";
  for (const auto& r : rows) {
    std::ostringstream theta;
    theta << std::fixed << std::setprecision(4) << r.theta;
    out << std::left << std::setw(14) << pct(r.coverage_target, true) << std::setw(10) << theta.str()
        << std::setw(14) << pct(r.realized_coverage, true) << std::setw(10) << r.n_covered
        << std::setw(10) << r.n_covered_positive << std::setw(10) << pct(r.ap, r.ap_defined)
        << std::setw(10) << pct(r.auc, r.auc_defined) << r.note << '\n';
  }
}

}  // namespace ctdg::eval
