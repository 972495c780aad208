#pragma once

#include "boneage/core_data.hpp"
#include "boneage/features.hpp"
#include "boneage/stats.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace boneage {

enum class TransformKind { Identity, Power, ShiftedPower };

/// Response transform t = (y - shift)^lambda. The inverse is sign-preserving
/// so back-transformed predictions stay monotone even for t < 0.
struct TransformSpec {
  TransformKind kind = TransformKind::Identity;
  double lambda = 1.0;
  double shift = 0.0;

  static TransformSpec identity() { return {}; }
  static TransformSpec power(double lambda) { return {TransformKind::Power, lambda, 0.0}; }
  static TransformSpec shifted_power(double lambda, double shift) {
    return {TransformKind::ShiftedPower, lambda, shift};
  }

  double apply(double y) const;
  double inverse(double t) const;
  /// Throws DataError if some y has no real transform.
  Eigen::VectorXd apply(const Eigen::VectorXd& y) const;
};

std::string_view to_string(TransformKind k) noexcept;

/// A design column: main effect (b < 0) or the product of two pool columns.
struct Term {
  int a = -1;
  int b = -1;

  bool interaction() const noexcept { return b >= 0; }
  bool operator==(const Term&) const = default;
};

/// Candidate columns for selection. Factor columns are dummies and never
/// take part in interactions.
struct DesignPool {
  std::vector<std::string> names;
  std::vector<bool> is_factor;
  Eigen::MatrixXd columns;  // n x names.size()

  std::string term_name(const Term& t) const;
  Eigen::VectorXd term_column(const Term& t) const;
};

Eigen::MatrixXd design_matrix(const DesignPool& pool, const std::vector<Term>& terms);
/// Design row (no intercept) for one pool row.
Eigen::RowVectorXd design_row(const std::vector<Term>& terms, const Eigen::Ref<const Eigen::RowVectorXd>& pool_row);

struct FittedLinearModel {
  std::vector<std::string> pool_names;  // empty when fitted on a raw matrix
  std::vector<Term> terms;
  std::vector<std::string> term_names;
  TransformSpec transform;

  Eigen::VectorXd coefficients;  // intercept first
  Eigen::Index n = 0;
  Eigen::Index p = 0;  // columns including the intercept
  Eigen::VectorXd response;  // transformed y
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
  Eigen::VectorXd standardized_residuals;
  Eigen::VectorXd leverage;
  Eigen::VectorXd cooks_distance;
  double rss = 0.0;
  double sigma2 = 0.0;
  double r2 = 0.0;
  double aic = 0.0;
  Eigen::MatrixXd xtx_inverse;  // p x p, for intervals
  Eigen::RowVectorXd design_min, design_max;  // training bounding box (no intercept)
  std::vector<double> aic_path;  // AIC after each accepted stepwise term, starting with the null model

  /// Leave-one-out residuals e_i / (1 - h_ii).
  Eigen::VectorXd press_residuals() const;
  /// Leave-one-out predictions in transformed units.
  Eigen::VectorXd loo_predictions() const { return response - press_residuals(); }
  std::vector<Eigen::Index> cook_flags() const;      // D > 4/n
  std::vector<Eigen::Index> outlier_flags() const;   // |standardized| > 2.5
  double predict_transformed(const Eigen::Ref<const Eigen::RowVectorXd>& design) const;
};

/// AIC = n ln(RSS/n) + 2(p + 1). RSS is floored at 1e-24 * TSS so exact fits
/// stay finite.
double aic_value(Eigen::Index n, double rss, Eigen::Index p, double tss);

/// OLS with an intercept prepended to X. Householder QR without pivoting;
/// a column whose component orthogonal to the preceding columns is
/// negligible is reported as collinear (NumericError).
FittedLinearModel fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const TransformSpec& transform,
                          const std::vector<std::string>& names = {});

struct BoxCoxProfile {
  double lambda = 1.0;
  std::vector<double> grid;
  std::vector<double> loglik;
};

/// Profile log-likelihood -n/2 ln(RSS/n) + (lambda - 1) sum ln z of the
/// Box-Cox transformed z = y - shift regressed on [1 X].
BoxCoxProfile boxcox_profile(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double shift,
                             const std::vector<double>& lambda_grid);
std::vector<double> default_lambda_grid();

/// Pearson r between |standardized residuals| and the (transformed) response.
stats::TestResult heteroscedasticity_check(const FittedLinearModel& m);

struct NormalityReport {
  stats::TestResult shapiro_wilk;
  stats::TestResult dagostino_skew;
  stats::TestResult jarque_bera;
};

NormalityReport normality_tests(const FittedLinearModel& m);

/// Greedy forward selection by AIC. Candidates at each step, in order: unused
/// main effects in pool order, then unused interactions (i < j, neither a
/// factor) with at least one parent selected. A term is accepted only if it
/// strictly lowers AIC; ties go to the earlier candidate.
FittedLinearModel stepwise_aic(const DesignPool& pool, const Eigen::VectorXd& y, const TransformSpec& transform,
                               bool include_interactions);

// ---------------------------------------------------------------------------
// Per-bone age models

enum class FactorSet { None, Sex, SexEthnicity };

std::string_view to_string(FactorSet f) noexcept;
FactorSet parse_factor_set(std::string_view s);

/// One bone of one subject with its extracted features.
struct BoneSample {
  Subject subject;
  BoneKind bone = BoneKind::Distal;
  ShapeFeatures features;
};

inline constexpr double kEpiphysisPower = 0.67;
inline constexpr int kLastNoEpiphysisFeature = 15;

/// Pool column names for a stratum: f2..f25 (epiphysis) or f2..f15, then
/// s (female = 1) and a/f/h (Asian, African-American, Hispanic; Caucasian is
/// the reference) as enabled.
std::vector<std::string> pool_names(bool epiphysis, FactorSet factors);
Eigen::RowVectorXd pool_row(const BoneSample& s, bool epiphysis, FactorSet factors);
DesignPool build_pool(const std::vector<BoneSample>& samples, bool epiphysis, FactorSet factors);

struct BoneAgeModelBank {
  FactorSet factors = FactorSet::None;
  bool interactions = true;
  // Indexed [bone][epiphysis ? 0 : 1]: D_e, D_p, M_e, M_p, P_e, P_p.
  std::array<std::array<std::optional<FittedLinearModel>, 2>, 3> models;

  const FittedLinearModel& model(BoneKind bone, bool epiphysis) const;
};

BoneAgeModelBank train_bone_bank(const std::vector<BoneSample>& samples, FactorSet factors,
                                 bool interactions = true);

struct FusionResult {
  double value = 0.0;
  std::vector<bool> discarded;
  bool all_discordant = false;  // every prediction > 2 years from both others
};

/// With three predictions, drops any that is more than 2 years from both
/// others; if that drops all three, the plain mean is used and flagged.
FusionResult fuse_predictions(const std::vector<double>& years);

struct PredictionInterval {
  double fit = 0.0, lo = 0.0, hi = 0.0;                    // transformed units
  double fit_years = 0.0, lo_years = 0.0, hi_years = 0.0;  // back-transformed
  bool extrapolation = false;
};

PredictionInterval prediction_interval(const FittedLinearModel& m, const Eigen::Ref<const Eigen::RowVectorXd>& design,
                                       double level);

struct AgePrediction {
  std::string subject_id;
  std::array<std::optional<double>, 3> per_bone;  // distal, middle, proximal (years)
  std::array<std::optional<PredictionInterval>, 3> intervals;
  double fused = 0.0;
  std::vector<std::string> flags;
};

/// `bones` holds one subject's present bones (at most one per kind).
AgePrediction predict_age(const BoneAgeModelBank& bank, const std::vector<BoneSample>& bones, double level = 0.95);

/// Leave-one-out age per sample (years): PRESS predictions of the model that
/// was selected on all data, back-transformed.
std::vector<double> bank_loocv_predictions(const BoneAgeModelBank& bank, const std::vector<BoneSample>& samples);

nlohmann::ordered_json model_to_json(const FittedLinearModel& m);
FittedLinearModel model_from_json(const nlohmann::json& j);
nlohmann::ordered_json bank_to_json(const BoneAgeModelBank& bank);
BoneAgeModelBank bank_from_json(const nlohmann::json& j);

}  // namespace boneage
