#include "boneage/core_data.hpp"
#include "boneage/csv.hpp"
#include "boneage/error.hpp"
#include "boneage/evalkit.hpp"
#include "boneage/features.hpp"
#include "boneage/outline.hpp"
#include "boneage/pipeline.hpp"
#include "boneage/regress.hpp"
#include "boneage/serialize.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>
#include <map>

using namespace boneage;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string input, output, config;
  std::uint64_t seed = 0;
  bool json = false, quiet = false;
};

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  nlohmann::json j = read_json_file(path);
  if (!j.is_object()) throw UsageError(fmt::format("{}: config must be a JSON object", path));
  return j;
}

void require_input(const std::string& path) {
  if (path.empty()) throw UsageError("--input is required");
  if (!fs::exists(path)) throw DataError(fmt::format("input not found: {}", path));
}

void require_output(const std::string& path) {
  if (path.empty()) throw UsageError("--output is required");
}

// Directory for a command's report, derived from its main output file.
fs::path report_dir_for(const fs::path& output) {
  return output.parent_path() / (output.stem().string() + "_report");
}

void announce(const Common& c, const nlohmann::ordered_json& summary, const std::string& text) {
  if (c.quiet) return;
  if (c.json)
    std::cout << summary.dump() << '\n';
  else
    std::cout << text << '\n';
}

std::string fmt_opt(const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); }

// ---------------------------------------------------------------------------

void cmd_synth(const Common& c, int n) {
  require_output(c.output);
  const auto cfg_json = load_config(c.config);
  GeneratorConfig cfg;
  if (cfg_json.contains("generator")) cfg = generator_config_from_json(cfg_json.at("generator"));
  if (n <= 0) throw UsageError("--n must be positive");
  Dataset ds = generate_synthetic(n, c.seed, cfg);
  save_dataset(ds, c.output);
  announce(c, {{"command", "synth"}, {"subjects", n}, {"records", ds.records.size()}, {"output", c.output}},
           fmt::format("wrote {} records for {} subjects to {}", ds.records.size(), n, c.output));
}

void cmd_transform(const Common& c, const std::string& mode) {
  require_input(c.input);
  require_output(c.output);
  const Dataset ds = load_dataset(c.input);
  if (mode == "radial") {
    series_to_csv(to_radial_series(ds.records), c.output);
  } else if (mode == "features") {
    std::vector<std::string> header{"subject_id", "bone", "tw_stage", "age", "sex", "ethnicity"};
    for (int f = 1; f <= kNumFeatures; ++f) header.push_back(feature_column(f));
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : ds.records) {
      const ShapeFeatures sf = extract_features(r);
      std::vector<std::string> row{r.subject.subject_id,
                                   std::string(to_string(r.bone)),
                                   r.tw_stage ? std::string(to_string(*r.tw_stage)) : std::string(),
                                   csv::format_double(r.subject.age_years),
                                   std::string(to_string(r.subject.sex)),
                                   std::string(to_string(r.subject.ethnicity))};
      for (double v : sf.values) row.push_back(csv::format_double(v));
      rows.push_back(std::move(row));
    }
    csv::write(c.output, header, rows);
  } else {
    throw UsageError(fmt::format("unknown transform mode '{}' (expected radial, features)", mode));
  }
  announce(c, {{"command", "transform"}, {"mode", mode}, {"records", ds.records.size()}, {"output", c.output}},
           fmt::format("wrote {} {} rows to {}", ds.records.size(), mode, c.output));
}

EvaluationReport classification_report(const std::vector<BoneKind>& bones, const std::vector<TWStage>& truth,
                                       const std::vector<TWStage>& pred) {
  EvaluationReport rep;
  rep.task = "classification";
  const ClassificationMetrics all = classification_metrics(truth, pred);
  rep.metrics["accuracy"] = all.accuracy;
  rep.metrics["within_one"] = all.within_one;
  rep.confusion = all.confusion;
  rep.table_columns = {"bone", "accuracy", "within_one"};
  for (BoneKind b : {BoneKind::Distal, BoneKind::Middle, BoneKind::Proximal}) {
    std::vector<TWStage> t, p;
    for (std::size_t i = 0; i < bones.size(); ++i)
      if (bones[i] == b) {
        t.push_back(truth[i]);
        p.push_back(pred[i]);
      }
    if (t.empty()) continue;
    const auto m = classification_metrics(t, p);
    rep.table_rows.push_back({std::string(to_string(b)), {100.0 * m.accuracy, 100.0 * m.within_one}});
  }
  rep.table_rows.push_back({"overall", {100.0 * all.accuracy, 100.0 * all.within_one}});
  return rep;
}

void cmd_train_stage(const Common& c, StageTrainOptions opt, bool folds_set, bool rep_set, bool clf_set,
                     const std::string& representation, const std::string& classifier) {
  require_input(c.input);
  require_output(c.output);
  const auto cfg = load_config(c.config);
  try {
    if (cfg.contains("classifier_params"))
      opt.params = classifier_params_from_json(cfg.at("classifier_params"), opt.params);
    if (cfg.contains("shapelets")) {
      const auto& s = cfg.at("shapelets");
      opt.shapelets.min_len = s.value("min_len", opt.shapelets.min_len);
      opt.shapelets.max_len = s.value("max_len", opt.shapelets.max_len);
      opt.shapelets.k = s.value("k", opt.shapelets.k);
      opt.shapelets.max_candidates = s.value("max_candidates", opt.shapelets.max_candidates);
    }
    opt.elastic_grid_stride = cfg.value("elastic_grid_stride", opt.elastic_grid_stride);
    if (!folds_set) opt.folds = cfg.value("folds", opt.folds);
    if (!rep_set && cfg.contains("representation"))
      opt.representation = parse_representation(cfg.at("representation").get<std::string>());
    if (!clf_set && cfg.contains("classifier")) opt.classifier = parse_classifier(cfg.at("classifier").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(fmt::format("config: {}", e.what()));
  }
  if (rep_set) opt.representation = parse_representation(representation);
  if (clf_set) opt.classifier = parse_classifier(classifier);
  opt.seed = c.seed;

  const Dataset ds = load_dataset(c.input);
  const StageTrainResult res = train_stage_model(ds.records, opt);
  write_json_file(stage_model_to_json(res.model), c.output);

  std::vector<BoneKind> bones;
  std::vector<TWStage> truth, pred;
  nlohmann::ordered_json folds = nlohmann::ordered_json::array();
  for (const auto& tr : res.cv) {
    bones.insert(bones.end(), tr.truth.size(), tr.bone);
    truth.insert(truth.end(), tr.truth.begin(), tr.truth.end());
    pred.insert(pred.end(), tr.predicted.begin(), tr.predicted.end());
    const int n_folds = *std::max_element(tr.folds.begin(), tr.folds.end()) + 1;
    for (int f = 0; f < n_folds; ++f) {
      int n = 0, correct = 0;
      for (std::size_t i = 0; i < tr.folds.size(); ++i)
        if (tr.folds[i] == f) {
          ++n;
          correct += tr.truth[i] == tr.predicted[i];
        }
      folds.push_back({{"bone", to_string(tr.bone)}, {"fold", f}, {"n", n}, {"correct", correct}});
    }
  }
  EvaluationReport rep = classification_report(bones, truth, pred);
  rep.folds = folds;
  rep.seed = static_cast<std::int64_t>(c.seed);
  rep.config = {{"representation", to_string(opt.representation)},
                {"classifier", to_string(opt.classifier)},
                {"folds", opt.folds},
                {"input", c.input}};
  emit_report(rep, report_dir_for(c.output));
  announce(c,
           {{"command", "train-stage"},
            {"cv_accuracy", rep.metrics["accuracy"]},
            {"cv_within_one", rep.metrics["within_one"]},
            {"model", c.output}},
           fmt::format("cv accuracy {:.4f}, within one {:.4f}; model written to {}", rep.metrics["accuracy"],
                       rep.metrics["within_one"], c.output));
}

void cmd_classify(const Common& c, const std::string& model_path) {
  require_input(c.input);
  require_output(c.output);
  if (model_path.empty()) throw UsageError("--model is required");
  const StageModel model = stage_model_from_json(read_json_file(model_path));
  const Dataset ds = load_dataset(c.input);
  const auto preds = classify_records(model, ds.records);

  std::vector<std::string> header{"subject_id", "bone", "truth", "pred"};
  for (int s = 0; s < kNumStages; ++s) header.push_back(fmt::format("score_{}", to_string(stage_from_index(s))));
  std::vector<std::vector<std::string>> rows;
  std::vector<BoneKind> bones;
  std::vector<TWStage> truth, pred;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    std::vector<std::string> row{r.subject.subject_id, std::string(to_string(r.bone)),
                                 r.tw_stage ? std::string(to_string(*r.tw_stage)) : std::string(),
                                 std::string(to_string(preds[i].stage))};
    for (double v : preds[i].scores) row.push_back(csv::format_double(v));
    rows.push_back(std::move(row));
    if (r.tw_stage) {
      bones.push_back(r.bone);
      truth.push_back(*r.tw_stage);
      pred.push_back(preds[i].stage);
    }
  }
  csv::write(c.output, header, rows);
  nlohmann::ordered_json summary{{"command", "classify"}, {"records", rows.size()}, {"output", c.output}};
  std::string text = fmt::format("classified {} records into {}", rows.size(), c.output);
  if (!truth.empty()) {
    EvaluationReport rep = classification_report(bones, truth, pred);
    rep.config = {{"model", model_path}, {"input", c.input}};
    emit_report(rep, report_dir_for(c.output));
    summary["accuracy"] = rep.metrics["accuracy"];
    summary["within_one"] = rep.metrics["within_one"];
    text += fmt::format("; accuracy {:.4f}, within one {:.4f}", rep.metrics["accuracy"], rep.metrics["within_one"]);
  }
  announce(c, summary, text);
}

// Groups per-bone values by subject (first-appearance order) and fuses them.
std::vector<std::pair<std::string, FusionResult>> fuse_by_subject(const std::vector<BoneSample>& samples,
                                                                  const std::vector<double>& pred) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> by;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto [it, fresh] = by.try_emplace(samples[i].subject.subject_id);
    if (fresh) order.push_back(samples[i].subject.subject_id);
    it->second.push_back(pred[i]);
  }
  std::vector<std::pair<std::string, FusionResult>> out;
  for (const auto& id : order) out.emplace_back(id, fuse_predictions(by[id]));
  return out;
}

void cmd_train_age(const Common& c, const std::string& factors_flag, bool factors_set, bool no_interactions) {
  require_input(c.input);
  require_output(c.output);
  const auto cfg = load_config(c.config);
  FactorSet factors = FactorSet::None;
  if (factors_set)
    factors = parse_factor_set(factors_flag);
  else if (cfg.contains("factors"))
    factors = parse_factor_set(cfg.at("factors").get<std::string>());
  const bool interactions = !no_interactions && cfg.value("interactions", true);

  const Dataset ds = load_dataset(c.input);
  const std::vector<BoneSample> samples = to_bone_samples(ds.records);
  const BoneAgeModelBank bank = train_bone_bank(samples, factors, interactions);
  write_json_file(bank_to_json(bank), c.output);

  const std::vector<double> loo = bank_loocv_predictions(bank, samples);
  EvaluationReport rep;
  rep.task = "regression";
  rep.table_columns = {"model", "rmse", "mae"};
  for (BoneKind b : {BoneKind::Distal, BoneKind::Middle, BoneKind::Proximal}) {
    std::vector<double> t, p;
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (samples[i].bone == b) {
        t.push_back(samples[i].subject.age_years);
        p.push_back(loo[i]);
      }
    if (t.size() < 2) continue;
    const auto m = regression_metrics(t, p);
    rep.table_rows.push_back({std::string(to_string(b)), {m.rmse, m.mae}});
  }
  std::map<std::string, double> age_of;
  for (const auto& s : samples) age_of[s.subject.subject_id] = s.subject.age_years;
  std::vector<double> t, p;
  for (const auto& [id, fr] : fuse_by_subject(samples, loo)) {
    t.push_back(age_of[id]);
    p.push_back(fr.value);
  }
  const auto fused = regression_metrics(t, p);
  rep.table_rows.push_back({"fused", {fused.rmse, fused.mae}});
  rep.metrics["rmse"] = fused.rmse;
  rep.metrics["mae"] = fused.mae;
  if (fused.r2) rep.metrics["r2"] = *fused.r2;
  rep.seed = std::nullopt;
  rep.config = {{"factors", to_string(factors)}, {"interactions", interactions}, {"input", c.input},
                {"models", bank_to_json(bank).at("models")}};
  const fs::path dir = report_dir_for(c.output);
  emit_report(rep, dir);
  emit_scatter(t, p, dir / "fused_loocv.svg", "fused LOOCV age");
  announce(c, {{"command", "train-age"}, {"loocv_rmse", fused.rmse}, {"loocv_mae", fused.mae}, {"bank", c.output}},
           fmt::format("fused LOOCV RMSE {:.4f}, MAE {:.4f}; bank written to {}", fused.rmse, fused.mae, c.output));
}

void cmd_predict_age(const Common& c, const std::string& bank_path, double level) {
  require_input(c.input);
  require_output(c.output);
  if (bank_path.empty()) throw UsageError("--bank is required");
  const BoneAgeModelBank bank = bank_from_json(read_json_file(bank_path));
  const Dataset ds = load_dataset(c.input);
  const std::vector<BoneSample> samples = to_bone_samples(ds.records);

  std::vector<std::string> order;
  std::map<std::string, std::vector<BoneSample>> by;
  for (const auto& s : samples) {
    auto [it, fresh] = by.try_emplace(s.subject.subject_id);
    if (fresh) order.push_back(s.subject.subject_id);
    it->second.push_back(s);
  }
  std::vector<std::string> header{"subject_id", "pred_distal", "pred_middle", "pred_proximal", "fused", "flags"};
  for (const char* b : {"distal", "middle", "proximal"}) {
    header.push_back(fmt::format("lo_{}", b));
    header.push_back(fmt::format("hi_{}", b));
  }
  header.emplace_back("age");
  std::vector<std::vector<std::string>> rows;
  for (const auto& id : order) {
    const auto& bones = by[id];
    const AgePrediction ap = predict_age(bank, bones, level);
    std::vector<std::string> row{id};
    for (const auto& v : ap.per_bone) row.push_back(fmt_opt(v));
    row.push_back(csv::format_double(ap.fused));
    std::string flags;
    for (const auto& f : ap.flags) flags += (flags.empty() ? "" : ";") + f;
    row.push_back(flags);
    for (const auto& iv : ap.intervals) {
      row.push_back(iv ? csv::format_double(iv->lo_years) : std::string());
      row.push_back(iv ? csv::format_double(iv->hi_years) : std::string());
    }
    row.push_back(csv::format_double(bones.front().subject.age_years));
    rows.push_back(std::move(row));
  }
  csv::write(c.output, header, rows);
  announce(c, {{"command", "predict-age"}, {"subjects", rows.size()}, {"output", c.output}},
           fmt::format("predicted ages for {} subjects into {}", rows.size(), c.output));
}

ConfusionMatrix read_confusion_csv(const fs::path& path) {
  const csv::Table t = csv::read(path);
  if (t.header.size() < 2) throw DataError(fmt::format("{}: confusion matrix needs a label column", path.string()));
  ConfusionMatrix cm;
  for (std::size_t j = 1; j < t.header.size(); ++j) cm.labels.push_back(parse_stage(t.header[j]));
  const auto k = static_cast<Eigen::Index>(cm.labels.size());
  if (static_cast<Eigen::Index>(t.rows.size()) != k)
    throw DataError(fmt::format("{}: confusion matrix is not square", path.string()));
  cm.counts.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    if (parse_stage(row[0]) != cm.labels[static_cast<std::size_t>(i)])
      throw DataError(fmt::format("{}: row {} label does not match column order", path.string(), i + 1));
    for (Eigen::Index j = 0; j < k; ++j) {
      const double v = csv::parse_double(row[static_cast<std::size_t>(j + 1)]);
      if (v < 0 || v != std::floor(v)) throw DataError(fmt::format("{}: counts must be non-negative integers", path.string()));
      cm.counts(i, j) = static_cast<int>(v);
    }
  }
  return cm;
}

void cmd_evaluate(const Common& c, std::string task, const std::string& confusion_path, std::string truth_col,
                  std::string pred_col) {
  require_output(c.output);
  EvaluationReport rep;
  if (!confusion_path.empty()) {
    if (!fs::exists(confusion_path)) throw DataError(fmt::format("input not found: {}", confusion_path));
    const ClassificationMetrics m = classification_metrics(read_confusion_csv(confusion_path));
    rep.task = "classification";
    rep.metrics["accuracy"] = m.accuracy;
    rep.metrics["within_one"] = m.within_one;
    rep.confusion = m.confusion;
    rep.table_columns = {"bone", "accuracy", "within_one"};
    rep.table_rows.push_back({"overall", {100.0 * m.accuracy, 100.0 * m.within_one}});
    rep.config = {{"confusion", confusion_path}};
  } else {
    require_input(c.input);
    const csv::Table t = csv::read(c.input);
    if (task.empty()) task = t.has_column("fused") ? "regression" : "classification";
    if (task == "classification") {
      if (truth_col.empty()) truth_col = "truth";
      if (pred_col.empty()) pred_col = "pred";
      const std::size_t ti = t.column(truth_col), pi = t.column(pred_col);
      const bool has_bone = t.has_column("bone");
      std::vector<BoneKind> bones;
      std::vector<TWStage> truth, pred;
      for (const auto& row : t.rows) {
        if (row[ti].empty()) continue;
        truth.push_back(parse_stage(row[ti]));
        pred.push_back(parse_stage(row[pi]));
        bones.push_back(has_bone ? parse_bone(row[t.column("bone")]) : BoneKind::Distal);
      }
      if (truth.empty()) throw DataError(fmt::format("{}: no labeled rows", c.input));
      rep = classification_report(bones, truth, pred);
      if (!has_bone) rep.table_rows.erase(rep.table_rows.begin(), rep.table_rows.end() - 1);
    } else if (task == "regression") {
      if (truth_col.empty()) truth_col = "age";
      if (pred_col.empty()) pred_col = "fused";
      const std::size_t ti = t.column(truth_col), pi = t.column(pred_col);
      std::vector<double> truth, pred;
      for (const auto& row : t.rows) {
        truth.push_back(csv::parse_double(row[ti]));
        pred.push_back(csv::parse_double(row[pi]));
      }
      const RegressionMetrics m = regression_metrics(truth, pred);
      rep.task = "regression";
      rep.metrics["rmse"] = m.rmse;
      rep.metrics["mae"] = m.mae;
      if (m.r2) rep.metrics["r2"] = *m.r2;
      rep.table_columns = {"model", "rmse", "mae"};
      rep.table_rows.push_back({pred_col, {m.rmse, m.mae}});
      fs::create_directories(c.output);
      emit_scatter(truth, pred, fs::path(c.output) / "scatter.svg", fmt::format("{} vs {}", pred_col, truth_col));
    } else {
      throw UsageError(fmt::format("unknown task '{}' (expected classification, regression)", task));
    }
    rep.config = {{"input", c.input}, {"truth", truth_col}, {"pred", pred_col}};
  }
  emit_report(rep, c.output);
  nlohmann::ordered_json summary{{"command", "evaluate"}, {"task", rep.task}};
  std::string text = fmt::format("{} report written to {}", rep.task, c.output);
  for (const auto& [k, v] : rep.metrics) {
    summary[k] = v;
    text += fmt::format("; {} {:.4f}", k, v);
  }
  announce(c, summary, text);
}

void add_common(CLI::App* sub, Common& c, bool input = true) {
  if (input) sub->add_option("--input,-i", c.input, "input file");
  sub->add_option("--output,-o", c.output, "output path");
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--config", c.config, "JSON config file; flags take precedence");
  sub->add_flag("--json", c.json, "print a JSON summary");
  sub->add_flag("--quiet,-q", c.quiet, "print nothing on success");
}

int run(int argc, char** argv) {
  CLI::App app{"Bone outline staging and age regression toolkit"};
  app.require_subcommand(1);
  Common c;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth, c, false);
  int n = 400;
  synth->add_option("--n", n, "number of subjects");

  auto* transform = app.add_subcommand("transform", "radial series or shape features as CSV");
  add_common(transform, c);
  std::string mode = "features";
  transform->add_option("--mode", mode, "radial | features");

  auto* train_stage = app.add_subcommand("train-stage", "train TW stage classifiers with cross-validation");
  add_common(train_stage, c);
  StageTrainOptions opt;
  std::string representation = "features", classifier = "svm_quadratic";
  auto* rep_opt = train_stage->add_option("--representation", representation, "radial | shapelet | features");
  auto* clf_opt = train_stage->add_option("--classifier", classifier,
                                          "knn | naive_bayes | decision_tree | random_forest | svm_linear | svm_quadratic");
  auto* folds_opt = train_stage->add_option("--folds", opt.folds, "cross-validation folds (<= 1: leave one out)");

  auto* classify = app.add_subcommand("classify", "predict TW stages with a trained model");
  add_common(classify, c);
  std::string model_path;
  classify->add_option("--model", model_path, "stage model JSON");

  auto* train_age = app.add_subcommand("train-age", "fit the per-bone age regression bank");
  add_common(train_age, c);
  std::string factors = "none";
  bool no_interactions = false;
  auto* factors_opt = train_age->add_option("--factors", factors, "none | sex | sex+ethnicity");
  train_age->add_flag("--no-interactions", no_interactions, "main effects only");

  auto* predict_age_cmd = app.add_subcommand("predict-age", "per-bone and fused age predictions");
  add_common(predict_age_cmd, c);
  std::string bank_path;
  double level = 0.95;
  predict_age_cmd->add_option("--bank,--model", bank_path, "model bank JSON");
  predict_age_cmd->add_option("--level", level, "prediction interval level");

  auto* evaluate = app.add_subcommand("evaluate", "metrics report from predictions or a confusion matrix");
  add_common(evaluate, c);
  std::string task, confusion, truth_col, pred_col;
  evaluate->add_option("--task", task, "classification | regression (default: inferred)");
  evaluate->add_option("--confusion", confusion, "confusion matrix CSV (rows = true stage)");
  evaluate->add_option("--truth-col", truth_col, "truth column name");
  evaluate->add_option("--pred-col", pred_col, "prediction column name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: usage: " << msg << '\n';
    return 2;
  }

  if (synth->parsed()) cmd_synth(c, n);
  if (transform->parsed()) cmd_transform(c, mode);
  if (train_stage->parsed())
    cmd_train_stage(c, opt, folds_opt->count() > 0, rep_opt->count() > 0, clf_opt->count() > 0, representation,
                    classifier);
  if (classify->parsed()) cmd_classify(c, model_path);
  if (train_age->parsed()) cmd_train_age(c, factors, factors_opt->count() > 0, no_interactions);
  if (predict_age_cmd->parsed()) cmd_predict_age(c, bank_path, level);
  if (evaluate->parsed()) cmd_evaluate(c, task, confusion, truth_col, pred_col);
  return 0;
}

std::string_view kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Data: return "data";
    case ErrorKind::Numeric: return "numeric";
  }
  return "data";
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: " << kind_name(e.kind()) << ": " << msg << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: data: " << msg << '\n';
    return 3;
  }
}
