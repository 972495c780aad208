#include "boneage/pipeline.hpp"

#include "boneage/error.hpp"
#include "boneage/evalkit.hpp"
#include "boneage/outline.hpp"
#include "boneage/serialize.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace boneage {

std::string_view to_string(Representation r) noexcept {
  switch (r) {
    case Representation::Radial: return "radial";
    case Representation::Shapelet: return "shapelet";
    case Representation::Features: return "features";
  }
  return "features";
}

Representation parse_representation(std::string_view s) {
  if (s == "radial") return Representation::Radial;
  if (s == "shapelet") return Representation::Shapelet;
  if (s == "features") return Representation::Features;
  throw UsageError(fmt::format("unknown representation '{}' (expected radial, shapelet, features)", s));
}

const BoneStageModel& StageModel::for_bone(BoneKind b) const {
  for (const auto& m : bones)
    if (m.bone == b) return m;
  throw DataError(fmt::format("stage model has no {} classifier", to_string(b)));
}

Eigen::MatrixXd feature_matrix(const std::vector<BoneRecord>& records) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(records.size()), kNumFeatures);
  for (std::size_t i = 0; i < records.size(); ++i)
    X.row(static_cast<Eigen::Index>(i)) = extract_features(records[i]).vector().transpose();
  return X;
}

std::vector<BoneSample> to_bone_samples(const std::vector<BoneRecord>& records) {
  std::vector<BoneSample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.subject, r.bone, extract_features(r)});
  return out;
}

namespace {

std::vector<Eigen::VectorXd> plain_series(const std::vector<RadialSeries>& s) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(s.size());
  for (const auto& r : s) out.emplace_back(r.values);
  return out;
}

template <typename T>
std::vector<T> pick(const std::vector<T>& v, const std::vector<int>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(v[static_cast<std::size_t>(i)]);
  return out;
}

Eigen::MatrixXd pick_rows(const Eigen::MatrixXd& X, const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = X.row(idx[k]);
  return out;
}

std::vector<ParameterGrid> thinned_grids(const std::vector<RadialSeries>& train, int stride) {
  auto grids = default_grids(pooled_std(train));
  if (stride > 1)
    for (auto& g : grids) {
      std::vector<ElasticMeasure> keep;
      for (std::size_t k = 0; k < g.candidates.size(); k += static_cast<std::size_t>(stride)) keep.push_back(g.candidates[k]);
      g.candidates = std::move(keep);
    }
  return grids;
}

BoneStageModel fit_bone(BoneKind bone, const std::vector<RadialSeries>& series,
                        const Eigen::MatrixXd& features, const std::vector<int>& y, const StageTrainOptions& opt) {
  BoneStageModel m;
  m.bone = bone;
  switch (opt.representation) {
    case Representation::Radial:
      m.elastic = train_elastic_ensemble(series, opt.folds, thinned_grids(series, opt.elastic_grid_stride), opt.seed);
      return m;
    case Representation::Shapelet: {
      ShapeletConfig cfg = opt.shapelets;
      cfg.seed = opt.seed;
      m.shapelets = discover_shapelets(plain_series(series), y, cfg);
      m.classifier = make_classifier(opt.classifier, opt.params);
      m.classifier->fit(shapelet_transform(*m.shapelets, plain_series(series)), y, opt.seed);
      return m;
    }
    case Representation::Features:
      m.classifier = make_classifier(opt.classifier, opt.params);
      m.classifier->fit(features, y, opt.seed);
      return m;
  }
  return m;
}

std::vector<int> predict_bone(const BoneStageModel& m, const std::vector<RadialSeries>& series,
                              const Eigen::MatrixXd& features) {
  std::vector<int> out;
  if (m.elastic) {
    for (const auto& s : series) out.push_back(stage_index(predict_elastic(*m.elastic, s).stage));
    return out;
  }
  if (m.shapelets) return m.classifier->predict(shapelet_transform(*m.shapelets, plain_series(series)));
  return m.classifier->predict(features);
}

}  // namespace

StageTrainResult train_stage_model(const std::vector<BoneRecord>& records, const StageTrainOptions& opt) {
  StageTrainResult res;
  res.model.representation = opt.representation;
  res.model.classifier = opt.classifier;
  for (BoneKind bone : {BoneKind::Distal, BoneKind::Middle, BoneKind::Proximal}) {
    std::vector<BoneRecord> recs;
    for (const auto& r : records)
      if (r.bone == bone && r.tw_stage) recs.push_back(r);
    if (recs.empty()) continue;
    std::vector<int> y;
    for (const auto& r : recs) y.push_back(stage_index(*r.tw_stage));
    const std::vector<RadialSeries> series =
        opt.representation == Representation::Features ? std::vector<RadialSeries>{} : to_radial_series(recs);
    const Eigen::MatrixXd X = opt.representation == Representation::Features ? feature_matrix(recs) : Eigen::MatrixXd();

    StageCvTrace trace;
    trace.bone = bone;
    for (int v : y) trace.truth.push_back(stage_from_index(v));
    trace.predicted.assign(recs.size(), TWStage::B);
    const bool leave_one_out = opt.folds <= 1 || static_cast<std::size_t>(opt.folds) >= recs.size();
    trace.folds = leave_one_out ? loocv(recs.size()) : stratified_kfold(y, opt.folds, opt.seed);

    if (opt.representation == Representation::Radial) {
      // The ensemble's own cross-validated votes are the CV trace.
      BoneStageModel m = fit_bone(bone, series, X, y, opt);
      const auto cvp = m.elastic->ensemble_cv_predictions();
      for (std::size_t i = 0; i < cvp.size(); ++i) trace.predicted[i] = stage_from_index(cvp[i]);
      res.model.bones.push_back(std::move(m));
    } else {
      const int n_folds = *std::max_element(trace.folds.begin(), trace.folds.end()) + 1;
      for (int f = 0; f < n_folds; ++f) {
        std::vector<int> tr, te;
        for (std::size_t i = 0; i < recs.size(); ++i) (trace.folds[i] == f ? te : tr).push_back(static_cast<int>(i));
        const auto ytr = pick(y, tr);
        const BoneStageModel m = fit_bone(bone, series.empty() ? series : pick(series, tr),
                                          X.size() ? pick_rows(X, tr) : X, ytr, opt);
        const auto p = predict_bone(m, series.empty() ? series : pick(series, te), X.size() ? pick_rows(X, te) : X);
        for (std::size_t k = 0; k < te.size(); ++k)
          trace.predicted[static_cast<std::size_t>(te[k])] = stage_from_index(p[k]);
      }
      res.model.bones.push_back(fit_bone(bone, series, X, y, opt));
    }
    res.cv.push_back(std::move(trace));
  }
  if (res.model.bones.empty()) throw DataError("no records with a TW stage label");
  return res;
}

std::vector<StagePrediction> classify_records(const StageModel& model, const std::vector<BoneRecord>& records) {
  std::vector<StagePrediction> out(records.size());
  for (BoneKind bone : {BoneKind::Distal, BoneKind::Middle, BoneKind::Proximal}) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < records.size(); ++i)
      if (records[i].bone == bone) idx.push_back(static_cast<int>(i));
    if (idx.empty()) continue;
    const BoneStageModel& m = model.for_bone(bone);
    const auto recs = pick(records, idx);
    if (m.elastic) {
      for (std::size_t k = 0; k < recs.size(); ++k)
        out[static_cast<std::size_t>(idx[k])] = predict_elastic(*m.elastic, to_radial_series(recs[k]));
      continue;
    }
    const Eigen::MatrixXd X =
        m.shapelets ? shapelet_transform(*m.shapelets, plain_series(to_radial_series(recs))) : feature_matrix(recs);
    const Eigen::MatrixXd scores = m.classifier->predict_scores(X);
    const std::vector<int> pred = m.classifier->predict(X);
    const auto& classes = m.classifier->classes();
    for (std::size_t k = 0; k < recs.size(); ++k) {
      StagePrediction& sp = out[static_cast<std::size_t>(idx[k])];
      sp.stage = stage_from_index(pred[k]);
      for (std::size_t c = 0; c < classes.size(); ++c)
        sp.scores[static_cast<std::size_t>(classes[c])] = scores(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
    }
  }
  return out;
}

nlohmann::ordered_json stage_model_to_json(const StageModel& m) {
  nlohmann::ordered_json bones = nlohmann::ordered_json::array();
  for (const auto& b : m.bones) {
    nlohmann::ordered_json j{{"bone", to_string(b.bone)}};
    if (b.elastic) j["elastic"] = elastic_model_to_json(*b.elastic);
    if (b.shapelets) j["shapelets"] = shapelet_model_to_json(*b.shapelets);
    if (b.classifier) j["classifier"] = nlohmann::ordered_json::parse(b.classifier->to_json().dump());
    bones.push_back(std::move(j));
  }
  return {{"format", "boneage-stage-model"},
          {"representation", to_string(m.representation)},
          {"classifier", to_string(m.classifier)},
          {"bones", bones}};
}

StageModel stage_model_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "boneage-stage-model") throw DataError("not a stage model file");
    StageModel m;
    m.representation = parse_representation(j.at("representation").get<std::string>());
    m.classifier = parse_classifier(j.at("classifier").get<std::string>());
    for (const auto& b : j.at("bones")) {
      BoneStageModel bm;
      bm.bone = parse_bone(b.at("bone").get<std::string>());
      if (b.contains("elastic")) bm.elastic = elastic_model_from_json(b.at("elastic"));
      if (b.contains("shapelets")) bm.shapelets = shapelet_model_from_json(b.at("shapelets"));
      if (b.contains("classifier")) bm.classifier = Classifier::from_json(b.at("classifier"));
      if (!bm.elastic && !bm.classifier) throw DataError("stage model entry has neither ensemble nor classifier");
      m.bones.push_back(std::move(bm));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("malformed stage model: {}", e.what()));
  }
}

}  // namespace boneage
