#pragma once

#include "boneage/core_data.hpp"
#include "boneage/error.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace boneage {

/// Fold index per instance. Within every class the fold counts differ by at
/// most one; fold sizes are balanced by continuing the round-robin across
/// classes.
std::vector<int> stratified_kfold(const std::vector<int>& labels, int k, std::uint64_t seed);
/// n singleton folds: instance i is in fold i.
std::vector<int> loocv(std::size_t n);

struct ConfusionMatrix {
  std::vector<TWStage> labels;       // ascending stage order
  Eigen::MatrixXi counts;            // rows = truth, cols = predicted

  int total() const { return counts.sum(); }
  int correct() const { return counts.trace(); }
};

struct ClassificationMetrics {
  double accuracy = 0.0;
  double within_one = 0.0;
  ConfusionMatrix confusion;
};

ClassificationMetrics classification_metrics(const std::vector<TWStage>& truth, const std::vector<TWStage>& pred);
/// Metrics straight from a confusion matrix (within-one uses global stage indices).
ClassificationMetrics classification_metrics(const ConfusionMatrix& cm);

struct RegressionMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> r2;  // absent when the truth has zero variance
};

RegressionMetrics regression_metrics(const std::vector<double>& truth, const std::vector<double>& pred);

struct McNemarResult {
  int a_only = 0;  // A correct, B wrong
  int b_only = 0;  // B correct, A wrong
  double statistic = 0.0;  // continuity-corrected chi-square
  double p_value = 1.0;
  bool exact = true;
};

/// Exact two-sided binomial p when there are fewer than 25 discordant pairs,
/// else the continuity-corrected chi-square (1 df).
template <typename Label>
McNemarResult mcnemar(const std::vector<Label>& truth, const std::vector<Label>& pred_a,
                      const std::vector<Label>& pred_b);
McNemarResult mcnemar_from_counts(int a_only, int b_only);

struct EvaluationReport {
  std::string task;  // "classification" | "regression"
  std::map<std::string, double> metrics;
  std::optional<ConfusionMatrix> confusion;
  nlohmann::ordered_json folds = nlohmann::ordered_json::array();
  std::optional<std::int64_t> seed;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  // Optional markdown table rows: label followed by percentage cells.
  std::vector<std::pair<std::string, std::vector<double>>> table_rows;
  std::vector<std::string> table_columns;
};

nlohmann::ordered_json report_to_json(const EvaluationReport& r);
std::string report_to_markdown(const EvaluationReport& r);
/// Writes report.json and report.md into `dir` (created if needed).
void emit_report(const EvaluationReport& r, const std::filesystem::path& dir);

/// Scatter of predicted vs true values with the identity (dashed) and the
/// least-squares fit (solid) lines; a CSV of the points is written next to it.
void emit_scatter(const std::vector<double>& truth, const std::vector<double>& pred,
                  const std::filesystem::path& svg_path, const std::string& title = "");

// ---------------------------------------------------------------------------

template <typename Label>
McNemarResult mcnemar(const std::vector<Label>& truth, const std::vector<Label>& pred_a,
                      const std::vector<Label>& pred_b) {
  if (truth.size() != pred_a.size() || truth.size() != pred_b.size())
    throw UsageError("mcnemar: length mismatch");
  int a_only = 0, b_only = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool a = pred_a[i] == truth[i];
    const bool b = pred_b[i] == truth[i];
    if (a && !b) ++a_only;
    if (b && !a) ++b_only;
  }
  return mcnemar_from_counts(a_only, b_only);
}

}  // namespace boneage
