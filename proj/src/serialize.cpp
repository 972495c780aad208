#include "boneage/serialize.hpp"

#include "boneage/error.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace boneage {

namespace {

template <typename T>
void take(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

nlohmann::ordered_json generator_config_to_json(const GeneratorConfig& c) {
  return {{"age_min", c.age_min},
          {"age_max", c.age_max},
          {"age_noise_sd", c.age_noise_sd},
          {"bone_maturity_sd", c.bone_maturity_sd},
          {"coord_noise_sd", c.coord_noise_sd},
          {"stage_thresholds", c.stage_thresholds},
          {"fused_fraction_h", c.fused_fraction_h},
          {"height_young", c.height_young},
          {"height_mature", c.height_mature},
          {"width_to_height", c.width_to_height},
          {"width_to_height_growth", c.width_to_height_growth},
          {"taper", c.taper},
          {"epi_ratio_young", c.epi_ratio_young},
          {"epi_ratio_cap", c.epi_ratio_cap},
          {"epi_height_ratio", c.epi_height_ratio},
          {"epi_gap", c.epi_gap},
          {"phalanx_points", c.phalanx_points},
          {"epiphysis_points", c.epiphysis_points},
          {"superellipse_exponent", c.superellipse_exponent},
          {"sex_weights", c.sex_weights},
          {"ethnicity_weights", c.ethnicity_weights},
          {"female_age_offset", c.female_age_offset},
          {"ethnicity_age_offset", c.ethnicity_age_offset},
          {"max_rotation", c.max_rotation},
          {"canvas", c.canvas}};
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j, GeneratorConfig c) {
  if (!j.is_object()) throw UsageError("generator config must be a JSON object");
  const auto known = generator_config_to_json(c);
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw UsageError(fmt::format("unknown generator config key '{}'", key));
  try {
    take(j, "age_min", c.age_min);
    take(j, "age_max", c.age_max);
    take(j, "age_noise_sd", c.age_noise_sd);
    take(j, "bone_maturity_sd", c.bone_maturity_sd);
    take(j, "coord_noise_sd", c.coord_noise_sd);
    take(j, "stage_thresholds", c.stage_thresholds);
    take(j, "fused_fraction_h", c.fused_fraction_h);
    take(j, "height_young", c.height_young);
    take(j, "height_mature", c.height_mature);
    take(j, "width_to_height", c.width_to_height);
    take(j, "width_to_height_growth", c.width_to_height_growth);
    take(j, "taper", c.taper);
    take(j, "epi_ratio_young", c.epi_ratio_young);
    take(j, "epi_ratio_cap", c.epi_ratio_cap);
    take(j, "epi_height_ratio", c.epi_height_ratio);
    take(j, "epi_gap", c.epi_gap);
    take(j, "phalanx_points", c.phalanx_points);
    take(j, "epiphysis_points", c.epiphysis_points);
    take(j, "superellipse_exponent", c.superellipse_exponent);
    take(j, "sex_weights", c.sex_weights);
    take(j, "ethnicity_weights", c.ethnicity_weights);
    take(j, "female_age_offset", c.female_age_offset);
    take(j, "ethnicity_age_offset", c.ethnicity_age_offset);
    take(j, "max_rotation", c.max_rotation);
    take(j, "canvas", c.canvas);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(fmt::format("generator config: {}", e.what()));
  }
  c.validate();
  return c;
}

nlohmann::ordered_json measure_to_json(const ElasticMeasure& m) {
  nlohmann::ordered_json j{{"kind", to_string(m.kind)}};
  switch (m.kind) {
    case MeasureKind::Euclidean: break;
    case MeasureKind::DTW: j["window"] = m.window; break;
    case MeasureKind::WDTW: j["g"] = m.weight_g; break;
    case MeasureKind::LCSS:
      j["epsilon"] = m.epsilon;
      j["band"] = m.band ? nlohmann::ordered_json(*m.band) : nlohmann::ordered_json();
      break;
    case MeasureKind::ERP:
      j["gap"] = m.gap;
      j["band"] = m.band ? nlohmann::ordered_json(*m.band) : nlohmann::ordered_json();
      break;
    case MeasureKind::TWED:
      j["nu"] = m.nu;
      j["lambda"] = m.lambda;
      break;
    case MeasureKind::MSM: j["cost"] = m.cost; break;
  }
  return j;
}

ElasticMeasure measure_from_json(const nlohmann::json& j) {
  ElasticMeasure m;
  m.kind = parse_measure(j.at("kind").get<std::string>());
  take(j, "window", m.window);
  take(j, "g", m.weight_g);
  take(j, "epsilon", m.epsilon);
  take(j, "gap", m.gap);
  take(j, "nu", m.nu);
  take(j, "lambda", m.lambda);
  take(j, "cost", m.cost);
  if (j.contains("band") && !j.at("band").is_null()) m.band = j.at("band").get<int>();
  m.validate();
  return m;
}

nlohmann::ordered_json series_to_json(const RadialSeries& s) {
  nlohmann::ordered_json j{{"values", std::vector<double>(s.values.data(), s.values.data() + s.values.size())}};
  j["tw_stage"] = s.label ? nlohmann::ordered_json(to_string(*s.label)) : nlohmann::ordered_json();
  j["subject_id"] = s.subject_id;
  j["bone"] = s.bone ? nlohmann::ordered_json(to_string(*s.bone)) : nlohmann::ordered_json();
  return j;
}

RadialSeries series_from_json(const nlohmann::json& j) {
  RadialSeries s;
  const auto v = j.at("values").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != kSeriesLength)
    throw DataError(fmt::format("series has {} values, expected {}", v.size(), kSeriesLength));
  for (Eigen::Index i = 0; i < kSeriesLength; ++i) s.values(i) = v[static_cast<std::size_t>(i)];
  if (!j.at("tw_stage").is_null()) s.label = parse_stage(j.at("tw_stage").get<std::string>());
  s.subject_id = j.at("subject_id").get<std::string>();
  if (!j.at("bone").is_null()) s.bone = parse_bone(j.at("bone").get<std::string>());
  return s;
}

nlohmann::ordered_json elastic_model_to_json(const ElasticEnsembleModel& m) {
  nlohmann::ordered_json members = nlohmann::ordered_json::array();
  for (const auto& mem : m.members)
    members.push_back({{"measure", measure_to_json(mem.measure)}, {"weight", mem.weight}});
  nlohmann::ordered_json ref = nlohmann::ordered_json::array();
  for (const auto& s : m.reference) ref.push_back(series_to_json(s));
  return {{"members", members}, {"reference", ref}};
}

ElasticEnsembleModel elastic_model_from_json(const nlohmann::json& j) {
  ElasticEnsembleModel m;
  for (const auto& mem : j.at("members"))
    m.members.push_back({measure_from_json(mem.at("measure")), mem.at("weight").get<double>(), {}});
  for (const auto& s : j.at("reference")) m.reference.push_back(series_from_json(s));
  return m;
}

nlohmann::ordered_json shapelet_model_to_json(const ShapeletTransformModel& m) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& s : m.shapelets)
    arr.push_back({{"series", s.series_index},
                   {"offset", s.offset},
                   {"quality", s.quality},
                   {"values", std::vector<double>(s.values.data(), s.values.data() + s.values.size())}});
  return {{"config",
           {{"min_len", m.config.min_len},
            {"max_len", m.config.max_len},
            {"k", m.config.k},
            {"max_candidates", m.config.max_candidates},
            {"seed", m.config.seed}}},
          {"shapelets", arr}};
}

ShapeletTransformModel shapelet_model_from_json(const nlohmann::json& j) {
  ShapeletTransformModel m;
  const auto& c = j.at("config");
  m.config.min_len = c.at("min_len").get<int>();
  m.config.max_len = c.at("max_len").get<int>();
  m.config.k = c.at("k").get<int>();
  m.config.max_candidates = c.at("max_candidates").get<std::size_t>();
  m.config.seed = c.at("seed").get<std::uint64_t>();
  for (const auto& s : j.at("shapelets")) {
    Shapelet sh;
    const auto v = s.at("values").get<std::vector<double>>();
    sh.values = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    sh.series_index = s.at("series").get<int>();
    sh.offset = s.at("offset").get<int>();
    sh.quality = s.at("quality").get<double>();
    m.shapelets.push_back(std::move(sh));
  }
  return m;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
}

void write_json_file(const nlohmann::ordered_json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  out << j.dump(1) << '\n';
  if (!out) throw DataError(fmt::format("write failed: {}", path.string()));
}

}  // namespace boneage
