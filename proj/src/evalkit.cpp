#include "boneage/evalkit.hpp"

#include "boneage/csv.hpp"
#include "boneage/error.hpp"
#include "boneage/stats.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

namespace boneage {

std::vector<int> stratified_kfold(const std::vector<int>& labels, int k, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (k < 1) throw UsageError("stratified_kfold: k must be >= 1");
  if (static_cast<std::size_t>(k) > n) throw UsageError(fmt::format("stratified_kfold: k={} exceeds n={}", k, n));
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(static_cast<int>(i));
  std::mt19937_64 rng(seed);
  std::vector<int> fold(n, 0);
  int next = 0;
  for (auto& [label, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int i : idx) {
      fold[static_cast<std::size_t>(i)] = next;
      next = (next + 1) % k;
    }
  }
  return fold;
}

std::vector<int> loocv(std::size_t n) {
  std::vector<int> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = static_cast<int>(i);
  return f;
}

ClassificationMetrics classification_metrics(const ConfusionMatrix& cm) {
  ClassificationMetrics out;
  out.confusion = cm;
  const int total = cm.total();
  if (total <= 0) throw UsageError("classification metrics need at least one instance");
  int within = 0;
  for (Eigen::Index r = 0; r < cm.counts.rows(); ++r)
    for (Eigen::Index c = 0; c < cm.counts.cols(); ++c) {
      const int d = stage_index(cm.labels[static_cast<std::size_t>(r)]) -
                    stage_index(cm.labels[static_cast<std::size_t>(c)]);
      if (std::abs(d) <= 1) within += cm.counts(r, c);
    }
  out.accuracy = static_cast<double>(cm.correct()) / total;
  out.within_one = static_cast<double>(within) / total;
  return out;
}

ClassificationMetrics classification_metrics(const std::vector<TWStage>& truth, const std::vector<TWStage>& pred) {
  if (truth.size() != pred.size()) throw UsageError("classification_metrics: length mismatch");
  if (truth.empty()) throw UsageError("classification_metrics: empty input");
  std::vector<TWStage> labels(truth);
  labels.insert(labels.end(), pred.begin(), pred.end());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  auto pos = [&](TWStage s) {
    return static_cast<Eigen::Index>(std::lower_bound(labels.begin(), labels.end(), s) - labels.begin());
  };
  ConfusionMatrix cm;
  cm.labels = labels;
  cm.counts = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < truth.size(); ++i) ++cm.counts(pos(truth[i]), pos(pred[i]));
  return classification_metrics(cm);
}

RegressionMetrics regression_metrics(const std::vector<double>& truth, const std::vector<double>& pred) {
  if (truth.size() != pred.size()) throw UsageError("regression_metrics: length mismatch");
  if (truth.size() < 2) throw UsageError("regression_metrics: need at least 2 points");
  const Eigen::Map<const Eigen::VectorXd> t(truth.data(), static_cast<Eigen::Index>(truth.size()));
  const Eigen::Map<const Eigen::VectorXd> p(pred.data(), static_cast<Eigen::Index>(pred.size()));
  const Eigen::ArrayXd e = (p - t).array();
  RegressionMetrics m;
  const double rss = e.square().sum();
  m.rmse = std::sqrt(rss / static_cast<double>(e.size()));
  m.mae = e.abs().mean();
  const double tss = (t.array() - t.mean()).square().sum();
  if (tss > 0.0) m.r2 = 1.0 - rss / tss;
  return m;
}

McNemarResult mcnemar_from_counts(int a_only, int b_only) {
  McNemarResult r;
  r.a_only = a_only;
  r.b_only = b_only;
  const int d = a_only + b_only;
  if (d == 0) return r;
  const double diff = std::max(std::abs(a_only - b_only) - 1, 0);
  r.statistic = diff * diff / d;
  if (d < 25) {
    r.exact = true;
    r.p_value = std::min(1.0, 2.0 * stats::binomial_cdf(std::min(a_only, b_only), d, 0.5));
  } else {
    r.exact = false;
    r.p_value = stats::chi2_sf(r.statistic, 1.0);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Reports

nlohmann::ordered_json report_to_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["task"] = r.task;
  j["metrics"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.metrics) j["metrics"][k] = v;
  if (r.confusion) {
    nlohmann::ordered_json labels = nlohmann::ordered_json::array();
    for (auto s : r.confusion->labels) labels.push_back(to_string(s));
    nlohmann::ordered_json counts = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < r.confusion->counts.rows(); ++i) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (Eigen::Index c = 0; c < r.confusion->counts.cols(); ++c) row.push_back(r.confusion->counts(i, c));
      counts.push_back(row);
    }
    j["confusion"] = {{"labels", labels}, {"counts", counts}};
  } else {
    j["confusion"] = nullptr;
  }
  j["folds"] = r.folds;
  j["seed"] = r.seed ? nlohmann::ordered_json(*r.seed) : nlohmann::ordered_json(nullptr);
  j["config"] = r.config;
  return j;
}

std::string report_to_markdown(const EvaluationReport& r) {
  std::string md = fmt::format("# {} report\n\n", r.task);
  md += "| metric | value |\n|---|---|\n";
  for (const auto& [k, v] : r.metrics) md += fmt::format("| {} | {:.4f} |\n", k, v);
  if (!r.table_rows.empty()) {
    md += "\n|";
    for (const auto& c : r.table_columns) md += fmt::format(" {} |", c);
    md += "\n|";
    for (std::size_t i = 0; i < r.table_columns.size(); ++i) md += "---|";
    md += "\n";
    for (const auto& [label, cells] : r.table_rows) {
      md += fmt::format("| {} |", label);
      for (double c : cells) md += fmt::format(" {:.2f} |", c);
      md += "\n";
    }
  }
  if (r.confusion) {
    md += "\nConfusion matrix (rows = true, columns = predicted)\n\n|   |";
    for (auto s : r.confusion->labels) md += fmt::format(" {} |", to_string(s));
    md += "\n|---|";
    for (std::size_t i = 0; i < r.confusion->labels.size(); ++i) md += "---|";
    md += "\n";
    for (Eigen::Index i = 0; i < r.confusion->counts.rows(); ++i) {
      md += fmt::format("| {} |", to_string(r.confusion->labels[static_cast<std::size_t>(i)]));
      for (Eigen::Index c = 0; c < r.confusion->counts.cols(); ++c) md += fmt::format(" {} |", r.confusion->counts(i, c));
      md += "\n";
    }
  }
  return md;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw DataError(fmt::format("I/O failure writing '{}'", path.string()));
}

}  // namespace

void emit_report(const EvaluationReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  write_text(dir / "report.json", report_to_json(r).dump(2) + "\n");
  write_text(dir / "report.md", report_to_markdown(r));
}

void emit_scatter(const std::vector<double>& truth, const std::vector<double>& pred,
                  const std::filesystem::path& svg_path, const std::string& title) {
  if (truth.size() != pred.size()) throw UsageError("emit_scatter: length mismatch");
  const std::size_t n = truth.size();
  constexpr double size = 400.0, margin = 40.0;
  double lo = 0.0, hi = 1.0;
  if (n > 0) {
    lo = std::min(*std::min_element(truth.begin(), truth.end()), *std::min_element(pred.begin(), pred.end()));
    hi = std::max(*std::max_element(truth.begin(), truth.end()), *std::max_element(pred.begin(), pred.end()));
  }
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double span = hi - lo;
  lo -= 0.05 * span;
  hi += 0.05 * span;
  auto sx = [&](double v) { return margin + (v - lo) / (hi - lo) * (size - 2 * margin); };
  auto sy = [&](double v) { return size - margin - (v - lo) / (hi - lo) * (size - 2 * margin); };

  std::string svg = fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{0}\" "
      "viewBox=\"0 0 {0} {0}\">\n",
      size);
  svg += fmt::format("<title>{}</title>\n", title.empty() ? "predicted vs actual" : title);
  svg += fmt::format(
      "<rect x=\"{0}\" y=\"{0}\" width=\"{1}\" height=\"{1}\" fill=\"none\" stroke=\"black\"/>\n", margin,
      size - 2 * margin);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">actual</text>\n", size / 2,
                     size - 10);
  svg += fmt::format(
      "<text x=\"12\" y=\"{0}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 12 {0})\">predicted</text>\n",
      size / 2);
  svg += fmt::format(
      "<line class=\"identity\" x1=\"{:.3f}\" y1=\"{:.3f}\" x2=\"{:.3f}\" y2=\"{:.3f}\" stroke=\"gray\" "
      "stroke-dasharray=\"4 4\"/>\n",
      sx(lo), sy(lo), sx(hi), sy(hi));
  if (n >= 2) {
    const Eigen::Map<const Eigen::VectorXd> t(truth.data(), static_cast<Eigen::Index>(n));
    const Eigen::Map<const Eigen::VectorXd> p(pred.data(), static_cast<Eigen::Index>(n));
    const double tx = t.mean(), py = p.mean();
    const double sxx = (t.array() - tx).square().sum();
    if (sxx > 0.0) {
      const double slope = ((t.array() - tx) * (p.array() - py)).sum() / sxx;
      const double icpt = py - slope * tx;
      svg += fmt::format(
          "<line class=\"fit\" x1=\"{:.3f}\" y1=\"{:.3f}\" x2=\"{:.3f}\" y2=\"{:.3f}\" stroke=\"black\"/>\n", sx(lo),
          sy(icpt + slope * lo), sx(hi), sy(icpt + slope * hi));
    }
  }
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < n; ++i) {
    svg += fmt::format("<circle class=\"point\" cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"2.5\" fill=\"steelblue\"/>\n",
                       sx(truth[i]), sy(pred[i]));
    rows.push_back({csv::format_double(truth[i]), csv::format_double(pred[i])});
  }
  svg += "</svg>\n";
  write_text(svg_path, svg);
  std::filesystem::path csv_path = svg_path;
  csv_path.replace_extension(".csv");
  csv::write(csv_path, {"actual", "predicted"}, rows);
}

}  // namespace boneage
