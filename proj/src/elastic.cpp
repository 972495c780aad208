#include "boneage/elastic.hpp"

#include "boneage/error.hpp"
#include "boneage/evalkit.hpp"

#include <fmt/format.h>

#include <cmath>

namespace boneage {

namespace {
constexpr std::array<std::string_view, 7> kMeasureNames{"euclidean", "dtw", "wdtw", "lcss",
                                                         "erp",       "twed", "msm"};
}

std::string_view to_string(MeasureKind k) noexcept { return kMeasureNames[static_cast<std::size_t>(k)]; }

MeasureKind parse_measure(std::string_view s) {
  for (std::size_t i = 0; i < kMeasureNames.size(); ++i)
    if (kMeasureNames[i] == s) return static_cast<MeasureKind>(i);
  throw UsageError(fmt::format("unknown measure '{}'", s));
}

void ElasticMeasure::validate() const {
  auto fail = [this](const char* what) {
    throw UsageError(fmt::format("{} parameter out of range: {}", to_string(kind), what));
  };
  switch (kind) {
    case MeasureKind::Euclidean: break;
    case MeasureKind::DTW:
      if (!(window >= 0.0 && window <= 1.0)) fail("window must be in [0,1]");
      break;
    case MeasureKind::WDTW:
      if (!(weight_g >= 0.0)) fail("g must be >= 0");
      break;
    case MeasureKind::LCSS:
      if (!(epsilon >= 0.0)) fail("epsilon must be >= 0");
      if (band && *band < 0) fail("band must be >= 0");
      break;
    case MeasureKind::ERP:
      if (!std::isfinite(gap)) fail("gap must be finite");
      if (band && *band < 0) fail("band must be >= 0");
      break;
    case MeasureKind::TWED:
      if (!(nu > 0.0)) fail("nu must be > 0");
      if (!(lambda >= 0.0)) fail("lambda must be >= 0");
      break;
    case MeasureKind::MSM:
      if (!(cost > 0.0)) fail("cost must be > 0");
      break;
  }
}

double elastic_distance(const ElasticMeasure& m, const RadialSeries& a, const RadialSeries& b) {
  return elastic_distance(m, a.values, b.values);
}

double pooled_std(const std::vector<RadialSeries>& series) {
  if (series.empty()) return 0.0;
  double sum = 0.0, sq = 0.0;
  double count = 0.0;
  for (const auto& s : series) {
    sum += s.values.sum();
    count += static_cast<double>(s.values.size());
  }
  const double mean = sum / count;
  for (const auto& s : series) sq += (s.values.array() - mean).square().sum();
  return std::sqrt(sq / count);
}

std::vector<ParameterGrid> default_grids(double sigma, Eigen::Index series_length) {
  const double n = static_cast<double>(series_length);
  std::vector<ParameterGrid> grids;

  ParameterGrid dtw{MeasureKind::DTW, {}};
  for (int k = 0; k <= 100; ++k) dtw.candidates.push_back(ElasticMeasure::dtw(k / 100.0));
  grids.push_back(std::move(dtw));

  ParameterGrid wdtw{MeasureKind::WDTW, {}};
  for (int k = 0; k <= 100; ++k) wdtw.candidates.push_back(ElasticMeasure::wdtw(k / 100.0));
  grids.push_back(std::move(wdtw));

  std::vector<int> bands;
  for (int k = 1; k <= 5; ++k) bands.push_back(static_cast<int>(std::lround(0.05 * k * n)));

  ParameterGrid lcss{MeasureKind::LCSS, {}};
  for (int e = 1; e <= 5; ++e)
    for (int b : bands) lcss.candidates.push_back(ElasticMeasure::lcss(sigma * e / 5.0, b));
  grids.push_back(std::move(lcss));

  ParameterGrid erp{MeasureKind::ERP, {}};
  for (int e = 1; e <= 5; ++e)
    for (int b : bands) erp.candidates.push_back(ElasticMeasure::erp(sigma * e / 5.0, b));
  grids.push_back(std::move(erp));

  ParameterGrid twed{MeasureKind::TWED, {}};
  for (int e = -5; e <= 0; ++e)
    for (int l = 0; l <= 8; ++l) twed.candidates.push_back(ElasticMeasure::twed(std::pow(10.0, e), 0.25 * l));
  grids.push_back(std::move(twed));

  ParameterGrid msm{MeasureKind::MSM, {}};
  for (int k = 0; k < 10; ++k) msm.candidates.push_back(ElasticMeasure::msm(std::pow(10.0, -2.0 + 4.0 * k / 9.0)));
  grids.push_back(std::move(msm));
  return grids;
}

Eigen::MatrixXd distance_matrix(const ElasticMeasure& m, const std::vector<RadialSeries>& series) {
  m.validate();
  const auto n = static_cast<Eigen::Index>(series.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& a = series[static_cast<std::size_t>(i)].values;
      const auto& b = series[static_cast<std::size_t>(j)].values;
      d(i, j) = elastic_distance(m, a, b);
      d(j, i) = d(i, j);
    }
  return d;
}

std::vector<int> nn_cv_predictions(const Eigen::MatrixXd& dist, const std::vector<int>& labels,
                                   const std::vector<int>& folds) {
  const std::size_t n = labels.size();
  std::vector<int> pred(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (folds[j] == folds[i]) continue;
      const double d = dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (pred[i] < 0 || d < best) {
        best = d;
        pred[i] = labels[j];
      }
    }
    if (pred[i] < 0) throw DataError("1-NN cross-validation: a fold contains every instance");
  }
  return pred;
}

namespace {

std::vector<int> stage_labels(const std::vector<RadialSeries>& s) {
  std::vector<int> y;
  y.reserve(s.size());
  for (const auto& r : s) {
    if (!r.label) throw DataError(fmt::format("unlabeled training series (subject {})", r.subject_id));
    y.push_back(stage_index(*r.label));
  }
  return y;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == truth[i];
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

}  // namespace

StagePrediction combine_votes(const std::vector<int>& votes, const std::vector<double>& weights) {
  StagePrediction out;
  double total = 0.0;
  for (std::size_t m = 0; m < votes.size(); ++m) {
    out.scores[static_cast<std::size_t>(votes[m])] += weights[m];
    total += weights[m];
  }
  if (!(total > 0.0)) {
    // Every member had zero weight: fall back to an unweighted vote.
    out.scores.fill(0.0);
    for (int v : votes) out.scores[static_cast<std::size_t>(v)] += 1.0;
    total = static_cast<double>(votes.size());
  }
  int best = 0;
  for (int k = 0; k < kNumStages; ++k) {
    out.scores[static_cast<std::size_t>(k)] /= total;
    if (out.scores[static_cast<std::size_t>(k)] > out.scores[static_cast<std::size_t>(best)]) best = k;
  }
  out.stage = stage_from_index(best);
  return out;
}

std::vector<int> ElasticEnsembleModel::ensemble_cv_predictions() const {
  if (members.empty()) return {};
  const std::size_t n = members.front().cv_predictions.size();
  std::vector<double> w;
  for (const auto& m : members) w.push_back(m.weight);
  std::vector<int> out(n);
  std::vector<int> votes(members.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < members.size(); ++m) votes[m] = members[m].cv_predictions[i];
    out[i] = stage_index(combine_votes(votes, w).stage);
  }
  return out;
}

ElasticEnsembleModel train_elastic_ensemble(const std::vector<RadialSeries>& train, int folds,
                                            const std::vector<ParameterGrid>& grids, std::uint64_t seed) {
  const std::vector<int> y = stage_labels(train);
  std::vector<int> classes = y;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw DataError("elastic ensemble needs at least two classes");
  if (grids.empty()) throw UsageError("elastic ensemble needs at least one parameter grid");

  const bool leave_one_out = folds <= 1 || static_cast<std::size_t>(folds) >= train.size();
  const std::vector<int> fold_of = leave_one_out ? loocv(train.size()) : stratified_kfold(y, folds, seed);

  ElasticEnsembleModel model;
  model.reference = train;
  for (const auto& grid : grids) {
    if (grid.candidates.empty()) throw UsageError(fmt::format("empty parameter grid for {}", to_string(grid.kind)));
    EnsembleMember best;
    best.weight = -1.0;
    for (const auto& cand : grid.candidates) {
      const Eigen::MatrixXd d = distance_matrix(cand, train);
      std::vector<int> pred = nn_cv_predictions(d, y, fold_of);
      const double acc = accuracy(pred, y);
      if (acc > best.weight) {
        best.measure = cand;
        best.weight = acc;
        best.cv_predictions = std::move(pred);
      }
    }
    model.members.push_back(std::move(best));
  }
  return model;
}

StagePrediction predict_elastic(const ElasticEnsembleModel& model, const RadialSeries& query) {
  if (model.members.empty() || model.reference.empty()) throw UsageError("elastic ensemble is not trained");
  std::vector<int> votes;
  std::vector<double> weights;
  for (const auto& m : model.members) {
    double best = std::numeric_limits<double>::infinity();
    int label = -1;
    for (const auto& ref : model.reference) {
      const double d = elastic_distance(m.measure, query.values, ref.values);
      if (label < 0 || d < best) {
        best = d;
        label = stage_index(*ref.label);
      }
    }
    votes.push_back(label);
    weights.push_back(m.weight);
  }
  return combine_votes(votes, weights);
}

}  // namespace boneage
