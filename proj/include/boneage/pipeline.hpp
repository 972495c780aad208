#pragma once

#include "boneage/core_data.hpp"
#include "boneage/elastic.hpp"
#include "boneage/features.hpp"
#include "boneage/learners.hpp"
#include "boneage/regress.hpp"
#include "boneage/shapelets.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <vector>

namespace boneage {

enum class Representation { Radial, Shapelet, Features };

std::string_view to_string(Representation r) noexcept;
Representation parse_representation(std::string_view s);

struct StageTrainOptions {
  Representation representation = Representation::Features;
  ClassifierKind classifier = ClassifierKind::SVMQuadratic;
  ClassifierParams params;
  ShapeletConfig shapelets;
  int folds = 10;
  std::uint64_t seed = 0;
  // Keep every k-th candidate of each default elastic grid.
  int elastic_grid_stride = 1;
};

/// One stage classifier per bone kind.
struct BoneStageModel {
  BoneKind bone = BoneKind::Distal;
  std::optional<ElasticEnsembleModel> elastic;
  std::optional<ShapeletTransformModel> shapelets;
  std::unique_ptr<Classifier> classifier;  // absent for the radial representation
};

struct StageModel {
  Representation representation = Representation::Features;
  ClassifierKind classifier = ClassifierKind::SVMQuadratic;
  std::vector<BoneStageModel> bones;

  const BoneStageModel& for_bone(BoneKind b) const;
};

struct StageCvTrace {
  BoneKind bone = BoneKind::Distal;
  std::vector<int> folds;
  std::vector<TWStage> truth;
  std::vector<TWStage> predicted;
};

struct StageTrainResult {
  StageModel model;
  std::vector<StageCvTrace> cv;  // per bone, in training-record order
};

/// Records without a TW stage are ignored. Every bone kind with labeled
/// records gets a model and a cross-validation trace.
StageTrainResult train_stage_model(const std::vector<BoneRecord>& records, const StageTrainOptions& opt);

/// Stage predictions in record order.
std::vector<StagePrediction> classify_records(const StageModel& model, const std::vector<BoneRecord>& records);

nlohmann::ordered_json stage_model_to_json(const StageModel& m);
StageModel stage_model_from_json(const nlohmann::json& j);

/// Feature matrix (n x 25) of records.
Eigen::MatrixXd feature_matrix(const std::vector<BoneRecord>& records);

std::vector<BoneSample> to_bone_samples(const std::vector<BoneRecord>& records);

}  // namespace boneage
