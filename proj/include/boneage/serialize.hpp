#pragma once

#include "boneage/core_data.hpp"
#include "boneage/elastic.hpp"
#include "boneage/outline.hpp"
#include "boneage/shapelets.hpp"

#include <json.hpp>

namespace boneage {

nlohmann::ordered_json generator_config_to_json(const GeneratorConfig& cfg);
/// Overrides fields of `base` with the keys present in `j`; unknown keys are a UsageError.
GeneratorConfig generator_config_from_json(const nlohmann::json& j, GeneratorConfig base = {});

nlohmann::ordered_json measure_to_json(const ElasticMeasure& m);
ElasticMeasure measure_from_json(const nlohmann::json& j);

nlohmann::ordered_json series_to_json(const RadialSeries& s);
RadialSeries series_from_json(const nlohmann::json& j);

nlohmann::ordered_json elastic_model_to_json(const ElasticEnsembleModel& m);
ElasticEnsembleModel elastic_model_from_json(const nlohmann::json& j);

nlohmann::ordered_json shapelet_model_to_json(const ShapeletTransformModel& m);
ShapeletTransformModel shapelet_model_from_json(const nlohmann::json& j);

/// Reads a whole JSON document; parse errors become DataError.
nlohmann::json read_json_file(const std::filesystem::path& path);
/// Writes with 1-space indentation and a trailing newline.
void write_json_file(const nlohmann::ordered_json& j, const std::filesystem::path& path);

}  // namespace boneage
