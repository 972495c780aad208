#include "boneage/regress.hpp"

#include "boneage/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace boneage {

// ---------------------------------------------------------------------------
// Transforms

std::string_view to_string(TransformKind k) noexcept {
  switch (k) {
    case TransformKind::Identity: return "identity";
    case TransformKind::Power: return "power";
    case TransformKind::ShiftedPower: return "shifted_power";
  }
  return "identity";
}

double TransformSpec::apply(double y) const {
  if (kind == TransformKind::Identity) return y;
  const double z = y - shift;
  if (z < 0.0 && lambda != std::round(lambda))
    throw DataError(fmt::format("transform undefined: {} - {} < 0 with power {}", y, shift, lambda));
  return std::pow(z, lambda);
}

double TransformSpec::inverse(double t) const {
  if (kind == TransformKind::Identity) return t;
  const double mag = std::pow(std::abs(t), 1.0 / lambda);
  return (t < 0.0 ? -mag : mag) + shift;
}

Eigen::VectorXd TransformSpec::apply(const Eigen::VectorXd& y) const {
  Eigen::VectorXd t(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) t(i) = apply(y(i));
  return t;
}

// ---------------------------------------------------------------------------
// Design

std::string DesignPool::term_name(const Term& t) const {
  const std::string a = names[static_cast<std::size_t>(t.a)];
  return t.interaction() ? a + ":" + names[static_cast<std::size_t>(t.b)] : a;
}

Eigen::VectorXd DesignPool::term_column(const Term& t) const {
  if (!t.interaction()) return columns.col(t.a);
  return columns.col(t.a).cwiseProduct(columns.col(t.b));
}

Eigen::MatrixXd design_matrix(const DesignPool& pool, const std::vector<Term>& terms) {
  Eigen::MatrixXd X(pool.columns.rows(), static_cast<Eigen::Index>(terms.size()));
  for (std::size_t k = 0; k < terms.size(); ++k) X.col(static_cast<Eigen::Index>(k)) = pool.term_column(terms[k]);
  return X;
}

Eigen::RowVectorXd design_row(const std::vector<Term>& terms, const Eigen::Ref<const Eigen::RowVectorXd>& pool_row) {
  Eigen::RowVectorXd x(static_cast<Eigen::Index>(terms.size()));
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const Term& t = terms[k];
    x(static_cast<Eigen::Index>(k)) = t.interaction() ? pool_row(t.a) * pool_row(t.b) : pool_row(t.a);
  }
  return x;
}

// ---------------------------------------------------------------------------
// OLS

double aic_value(Eigen::Index n, double rss, Eigen::Index p, double tss) {
  const double floor = std::max(1e-24 * tss, std::numeric_limits<double>::min());
  const double nn = static_cast<double>(n);
  return nn * std::log(std::max(rss, floor) / nn) + 2.0 * static_cast<double>(p + 1);
}

Eigen::VectorXd FittedLinearModel::press_residuals() const {
  Eigen::VectorXd e(n);
  for (Eigen::Index i = 0; i < n; ++i) e(i) = leverage(i) < 1.0 ? residuals(i) / (1.0 - leverage(i)) : 0.0;
  return e;
}

std::vector<Eigen::Index> FittedLinearModel::cook_flags() const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < cooks_distance.size(); ++i)
    if (cooks_distance(i) > 4.0 / static_cast<double>(n)) out.push_back(i);
  return out;
}

std::vector<Eigen::Index> FittedLinearModel::outlier_flags() const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < standardized_residuals.size(); ++i)
    if (std::abs(standardized_residuals(i)) > 2.5) out.push_back(i);
  return out;
}

double FittedLinearModel::predict_transformed(const Eigen::Ref<const Eigen::RowVectorXd>& design) const {
  if (design.size() != p - 1)
    throw UsageError(fmt::format("dimension mismatch: model has {} terms, row has {}", p - 1, design.size()));
  return coefficients(0) + design.dot(coefficients.tail(p - 1));
}

FittedLinearModel fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const TransformSpec& transform,
                          const std::vector<std::string>& names) {
  const Eigen::Index n = X.rows(), p = X.cols() + 1;
  if (y.size() != n) throw UsageError("fit_ols: row count mismatch");
  if (n <= p) throw DataError(fmt::format("fit_ols: need more rows than columns (n = {}, p = {})", n, p));
  if (!X.allFinite() || !y.allFinite()) throw DataError("fit_ols: non-finite input");
  auto column_name = [&](Eigen::Index j) {
    if (j == 0) return std::string("(intercept)");
    return static_cast<std::size_t>(j - 1) < names.size() ? names[static_cast<std::size_t>(j - 1)]
                                                         : fmt::format("x{}", j);
  };

  FittedLinearModel m;
  m.transform = transform;
  m.n = n;
  m.p = p;
  m.response = transform.apply(y);
  for (Eigen::Index j = 1; j < p; ++j) m.term_names.push_back(column_name(j));

  Eigen::MatrixXd A(n, p);
  A.col(0).setOnes();
  A.rightCols(p - 1) = X;
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < p; ++j) {
    const double scale = A.col(j).norm();
    if (!(std::abs(R(j, j)) > 1e-10 * std::max(scale, 1e-300)))
      throw NumericError(fmt::format("rank deficient design: column '{}' is collinear with earlier columns",
                                     column_name(j)));
  }
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
  const auto Rt = R.triangularView<Eigen::Upper>();
  m.coefficients = Rt.solve(Q.transpose() * m.response);
  m.fitted = A * m.coefficients;
  m.residuals = m.response - m.fitted;
  m.leverage = Q.rowwise().squaredNorm().cwiseMin(1.0);
  m.rss = m.residuals.squaredNorm();
  m.sigma2 = m.rss / static_cast<double>(n - p);
  const double tss = (m.response.array() - m.response.mean()).square().sum();
  m.r2 = tss > 0.0 ? std::clamp(1.0 - m.rss / tss, 0.0, 1.0) : 1.0;
  m.aic = aic_value(n, m.rss, p, tss);
  const Eigen::MatrixXd Rinv = Rt.solve(Eigen::MatrixXd::Identity(p, p));
  m.xtx_inverse = Rinv * Rinv.transpose();

  m.standardized_residuals.resize(n);
  m.cooks_distance.resize(n);
  const double sigma = std::sqrt(m.sigma2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = m.leverage(i);
    if (h >= 1.0 || !(sigma > 0.0)) {
      m.standardized_residuals(i) = 0.0;
      m.cooks_distance(i) = 0.0;
      continue;
    }
    const double r = m.residuals(i) / (sigma * std::sqrt(1.0 - h));
    m.standardized_residuals(i) = r;
    m.cooks_distance(i) = r * r * h / (static_cast<double>(p) * (1.0 - h));
  }
  if (X.cols() > 0) {
    m.design_min = X.colwise().minCoeff();
    m.design_max = X.colwise().maxCoeff();
  } else {
    m.design_min.resize(0);
    m.design_max.resize(0);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Diagnostics

std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (int k = -20; k <= 20; ++k) g.push_back(k / 10.0);
  return g;
}

BoxCoxProfile boxcox_profile(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double shift,
                             const std::vector<double>& lambda_grid) {
  if (lambda_grid.empty()) throw UsageError("boxcox_profile: empty lambda grid");
  if (X.rows() != y.size()) throw UsageError("boxcox_profile: row count mismatch");
  const Eigen::VectorXd z = y.array() - shift;
  if ((z.array() <= 0.0).any()) throw DataError("boxcox_profile: shifted response must be positive");
  const Eigen::Index n = y.size();
  Eigen::MatrixXd A(n, X.cols() + 1);
  A.col(0).setOnes();
  A.rightCols(X.cols()) = X;
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::VectorXd logz = z.array().log();
  const double sum_log = logz.sum();

  BoxCoxProfile out;
  out.grid = lambda_grid;
  double best = -std::numeric_limits<double>::infinity();
  for (double lam : lambda_grid) {
    Eigen::VectorXd t = std::abs(lam) < 1e-12 ? logz : Eigen::VectorXd((z.array().pow(lam) - 1.0) / lam);
    const Eigen::VectorXd beta = qr.solve(t);
    const double rss = std::max((t - A * beta).squaredNorm(), std::numeric_limits<double>::min());
    const double ll = -0.5 * static_cast<double>(n) * std::log(rss / static_cast<double>(n)) + (lam - 1.0) * sum_log;
    out.loglik.push_back(ll);
    if (ll > best) {
      best = ll;
      out.lambda = lam;
    }
  }
  return out;
}

stats::TestResult heteroscedasticity_check(const FittedLinearModel& m) {
  const Eigen::VectorXd a = m.standardized_residuals.cwiseAbs();
  const double ca = (a.array() - a.mean()).square().sum();
  if (!(ca > 1e-24 * std::max(1.0, a.squaredNorm()))) return {0.0, 1.0};
  return stats::pearson_test(a, m.response);
}

NormalityReport normality_tests(const FittedLinearModel& m) {
  const Eigen::VectorXd& r = m.standardized_residuals;
  if (r.size() < 3) throw DataError(fmt::format("Shapiro-Wilk needs n >= 3 (n = {})", r.size()));
  if (r.size() < 8) throw DataError(fmt::format("D'Agostino skewness test needs n >= 8 (n = {})", r.size()));
  return {stats::shapiro_wilk(r), stats::dagostino_skewness(r), stats::jarque_bera(r)};
}

// ---------------------------------------------------------------------------
// Stepwise selection

namespace {

struct Basis {
  Eigen::MatrixXd Q;  // n x k orthonormal columns
  Eigen::Index k = 0;

  Eigen::VectorXd orthogonal(const Eigen::VectorXd& z) const {
    Eigen::VectorXd r = z;
    for (int pass = 0; pass < 2; ++pass) r -= Q.leftCols(k) * (Q.leftCols(k).transpose() * r);
    return r;
  }
  void add(const Eigen::VectorXd& zperp) { Q.col(k++) = zperp / zperp.norm(); }
};

}  // namespace

FittedLinearModel stepwise_aic(const DesignPool& pool, const Eigen::VectorXd& y, const TransformSpec& transform,
                               bool include_interactions) {
  const auto n_pool = static_cast<int>(pool.names.size());
  if (n_pool == 0) throw UsageError("stepwise_aic: empty candidate pool");
  const Eigen::Index n = pool.columns.rows();
  if (y.size() != n) throw UsageError("stepwise_aic: row count mismatch");
  if (n < 3) throw DataError("stepwise_aic: need at least 3 rows");

  const Eigen::VectorXd t = transform.apply(y);
  const double tss = (t.array() - t.mean()).square().sum();
  Basis basis{Eigen::MatrixXd(n, std::min<Eigen::Index>(n, n_pool * (n_pool + 1) / 2 + 1)), 0};
  basis.add(Eigen::VectorXd::Ones(n));
  Eigen::VectorXd resid = basis.orthogonal(t);
  double rss = resid.squaredNorm();
  Eigen::Index p = 1;
  double aic = aic_value(n, rss, p, tss);

  std::vector<Term> selected;
  std::vector<bool> main_used(static_cast<std::size_t>(n_pool), false);
  std::vector<double> path{aic};

  auto used = [&](const Term& c) { return std::find(selected.begin(), selected.end(), c) != selected.end(); };

  while (p + 1 < n - 1 && basis.k < basis.Q.cols()) {
    std::vector<Term> cands;
    for (int a = 0; a < n_pool; ++a)
      if (!main_used[static_cast<std::size_t>(a)]) cands.push_back({a, -1});
    if (include_interactions)
      for (int a = 0; a < n_pool; ++a)
        for (int b = a + 1; b < n_pool; ++b) {
          if (pool.is_factor[static_cast<std::size_t>(a)] || pool.is_factor[static_cast<std::size_t>(b)]) continue;
          if (!main_used[static_cast<std::size_t>(a)] && !main_used[static_cast<std::size_t>(b)]) continue;
          if (!used({a, b})) cands.push_back({a, b});
        }

    double best_aic = aic;
    int best = -1;
    Eigen::VectorXd best_perp;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      const Eigen::VectorXd z = pool.term_column(cands[c]);
      const double centred = (z.array() - z.mean()).square().sum();
      if (!(centred > 0.0)) continue;
      const Eigen::VectorXd zp = basis.orthogonal(z);
      const double zz = zp.squaredNorm();
      if (zz <= 1e-10 * centred) continue;
      const double proj = zp.dot(resid);
      const double cand_aic = aic_value(n, std::max(rss - proj * proj / zz, 0.0), p + 1, tss);
      if (cand_aic < best_aic) {
        best_aic = cand_aic;
        best = static_cast<int>(c);
        best_perp = zp;
      }
    }
    if (best < 0) break;
    const Term chosen = cands[static_cast<std::size_t>(best)];
    selected.push_back(chosen);
    if (!chosen.interaction()) main_used[static_cast<std::size_t>(chosen.a)] = true;
    basis.add(best_perp);
    resid = basis.orthogonal(t);
    rss = resid.squaredNorm();
    ++p;
    aic = best_aic;
    path.push_back(aic);
  }

  std::vector<std::string> names;
  for (const auto& s : selected) names.push_back(pool.term_name(s));
  FittedLinearModel m = fit_ols(design_matrix(pool, selected), y, transform, names);
  m.pool_names = pool.names;
  m.terms = selected;
  m.aic_path = std::move(path);
  return m;
}

// ---------------------------------------------------------------------------
// Bone bank

std::string_view to_string(FactorSet f) noexcept {
  switch (f) {
    case FactorSet::None: return "none";
    case FactorSet::Sex: return "sex";
    case FactorSet::SexEthnicity: return "sex+ethnicity";
  }
  return "none";
}

FactorSet parse_factor_set(std::string_view s) {
  if (s == "none") return FactorSet::None;
  if (s == "sex") return FactorSet::Sex;
  if (s == "sex+ethnicity" || s == "sex,ethnicity") return FactorSet::SexEthnicity;
  throw UsageError(fmt::format("unknown factor set '{}' (expected none, sex, sex+ethnicity)", s));
}

std::vector<std::string> pool_names(bool epiphysis, FactorSet factors) {
  std::vector<std::string> names;
  const int last = epiphysis ? kNumFeatures : kLastNoEpiphysisFeature;
  for (int f = 2; f <= last; ++f) names.push_back(feature_column(f));
  if (factors != FactorSet::None) names.emplace_back("s");
  if (factors == FactorSet::SexEthnicity) {
    names.emplace_back("a");
    names.emplace_back("f");
    names.emplace_back("h");
  }
  return names;
}

Eigen::RowVectorXd pool_row(const BoneSample& s, bool epiphysis, FactorSet factors) {
  const int last = epiphysis ? kNumFeatures : kLastNoEpiphysisFeature;
  const int n_factor = factors == FactorSet::None ? 0 : factors == FactorSet::Sex ? 1 : 4;
  Eigen::RowVectorXd row(last - 1 + n_factor);
  for (int f = 2; f <= last; ++f) row(f - 2) = s.features.f(f);
  Eigen::Index k = last - 1;
  if (factors != FactorSet::None) row(k++) = s.subject.sex == Sex::F ? 1.0 : 0.0;
  if (factors == FactorSet::SexEthnicity) {
    row(k++) = s.subject.ethnicity == Ethnicity::ASI ? 1.0 : 0.0;
    row(k++) = s.subject.ethnicity == Ethnicity::BLK ? 1.0 : 0.0;
    row(k++) = s.subject.ethnicity == Ethnicity::HIS ? 1.0 : 0.0;
  }
  return row;
}

DesignPool build_pool(const std::vector<BoneSample>& samples, bool epiphysis, FactorSet factors) {
  DesignPool pool;
  pool.names = pool_names(epiphysis, factors);
  const int n_features = (epiphysis ? kNumFeatures : kLastNoEpiphysisFeature) - 1;
  pool.is_factor.assign(pool.names.size(), false);
  for (std::size_t k = static_cast<std::size_t>(n_features); k < pool.names.size(); ++k) pool.is_factor[k] = true;
  pool.columns.resize(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(pool.names.size()));
  for (std::size_t i = 0; i < samples.size(); ++i)
    pool.columns.row(static_cast<Eigen::Index>(i)) = pool_row(samples[i], epiphysis, factors);
  return pool;
}

namespace {

std::size_t bone_slot(BoneKind b) { return static_cast<std::size_t>(b); }
std::string_view model_label(BoneKind b, bool epiphysis) {
  static constexpr std::array<std::string_view, 6> labels{"D_e", "D_p", "M_e", "M_p", "P_e", "P_p"};
  return labels[bone_slot(b) * 2 + (epiphysis ? 0 : 1)];
}

TransformSpec stratum_transform(bool epiphysis) {
  return epiphysis ? TransformSpec::power(kEpiphysisPower) : TransformSpec::identity();
}

}  // namespace

const FittedLinearModel& BoneAgeModelBank::model(BoneKind bone, bool epiphysis) const {
  const auto& m = models[bone_slot(bone)][epiphysis ? 0 : 1];
  if (!m) throw UsageError(fmt::format("model {} is not trained", model_label(bone, epiphysis)));
  return *m;
}

BoneAgeModelBank train_bone_bank(const std::vector<BoneSample>& samples, FactorSet factors, bool interactions) {
  BoneAgeModelBank bank;
  bank.factors = factors;
  bank.interactions = interactions;
  for (BoneKind bone : {BoneKind::Distal, BoneKind::Middle, BoneKind::Proximal})
    for (bool epi : {true, false}) {
      std::vector<BoneSample> subset;
      for (const auto& s : samples)
        if (s.bone == bone && s.features.epiphysis_present() == epi) subset.push_back(s);
      const auto n_pool = pool_names(epi, factors).size();
      if (subset.size() < n_pool + 2)
        throw DataError(fmt::format("insufficient data for model {}: {} records, pool of {} terms",
                                    model_label(bone, epi), subset.size(), n_pool));
      Eigen::VectorXd age(static_cast<Eigen::Index>(subset.size()));
      for (std::size_t i = 0; i < subset.size(); ++i) age(static_cast<Eigen::Index>(i)) = subset[i].subject.age_years;
      bank.models[bone_slot(bone)][epi ? 0 : 1] =
          stepwise_aic(build_pool(subset, epi, factors), age, stratum_transform(epi), interactions);
    }
  return bank;
}

FusionResult fuse_predictions(const std::vector<double>& years) {
  if (years.empty()) throw UsageError("fuse_predictions: no bone predictions");
  FusionResult out;
  out.discarded.assign(years.size(), false);
  auto mean_of = [&](bool skip_discarded) {
    double s = 0.0;
    int k = 0;
    for (std::size_t i = 0; i < years.size(); ++i)
      if (!skip_discarded || !out.discarded[i]) {
        s += years[i];
        ++k;
      }
    return s / k;
  };
  if (years.size() == 3) {
    for (std::size_t i = 0; i < 3; ++i) {
      bool far = true;
      for (std::size_t j = 0; j < 3; ++j)
        if (j != i && std::abs(years[i] - years[j]) <= 2.0) far = false;
      out.discarded[i] = far;
    }
    if (std::all_of(out.discarded.begin(), out.discarded.end(), [](bool d) { return d; })) {
      out.all_discordant = true;
      out.value = mean_of(false);
      return out;
    }
  }
  out.value = mean_of(true);
  return out;
}

PredictionInterval prediction_interval(const FittedLinearModel& m, const Eigen::Ref<const Eigen::RowVectorXd>& design,
                                       double level) {
  if (!(level > 0.0 && level < 1.0)) throw UsageError("prediction_interval: level must be in (0, 1)");
  PredictionInterval pi;
  pi.fit = m.predict_transformed(design);
  Eigen::VectorXd x(m.p);
  x(0) = 1.0;
  x.tail(m.p - 1) = design.transpose();
  const double se = std::sqrt(m.sigma2 * (1.0 + x.dot(m.xtx_inverse * x)));
  const double tq = stats::t_quantile(0.5 + 0.5 * level, static_cast<double>(m.n - m.p));
  pi.lo = pi.fit - tq * se;
  pi.hi = pi.fit + tq * se;
  pi.fit_years = m.transform.inverse(pi.fit);
  pi.lo_years = m.transform.inverse(pi.lo);
  pi.hi_years = m.transform.inverse(pi.hi);
  for (Eigen::Index j = 0; j < design.size(); ++j)
    if (design(j) < m.design_min(j) || design(j) > m.design_max(j)) pi.extrapolation = true;
  return pi;
}

AgePrediction predict_age(const BoneAgeModelBank& bank, const std::vector<BoneSample>& bones, double level) {
  if (bones.empty()) throw UsageError("predict_age: no bones present");
  AgePrediction out;
  out.subject_id = bones.front().subject.subject_id;
  std::vector<double> preds;
  for (const auto& b : bones) {
    const std::size_t slot = bone_slot(b.bone);
    if (out.per_bone[slot]) throw DataError(fmt::format("subject {} has two {} bones", out.subject_id, to_string(b.bone)));
    const bool epi = b.features.epiphysis_present();
    const FittedLinearModel& m = bank.model(b.bone, epi);
    const PredictionInterval pi = prediction_interval(m, design_row(m.terms, pool_row(b, epi, bank.factors)), level);
    out.per_bone[slot] = pi.fit_years;
    out.intervals[slot] = pi;
    if (pi.extrapolation) out.flags.push_back(fmt::format("extrapolation_{}", to_string(b.bone)));
    preds.push_back(pi.fit_years);
  }
  const FusionResult fr = fuse_predictions(preds);
  out.fused = fr.value;
  if (fr.all_discordant) out.flags.emplace_back("discordant_bones");
  for (std::size_t i = 0; i < bones.size(); ++i)
    if (fr.discarded[i]) out.flags.push_back(fmt::format("discarded_{}", to_string(bones[i].bone)));
  return out;
}

std::vector<double> bank_loocv_predictions(const BoneAgeModelBank& bank, const std::vector<BoneSample>& samples) {
  // Samples are matched to model rows in the order train_bone_bank saw them.
  std::vector<double> out(samples.size());
  for (BoneKind bone : {BoneKind::Distal, BoneKind::Middle, BoneKind::Proximal})
    for (bool epi : {true, false}) {
      const FittedLinearModel& m = bank.model(bone, epi);
      if (m.residuals.size() == 0) throw UsageError("bank_loocv_predictions: bank has no training residuals");
      const Eigen::VectorXd loo = m.loo_predictions();
      Eigen::Index row = 0;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].bone != bone || samples[i].features.epiphysis_present() != epi) continue;
        if (row >= loo.size()) throw UsageError("bank_loocv_predictions: samples differ from the training set");
        out[i] = m.transform.inverse(loo(row++));
      }
      if (row != loo.size()) throw UsageError("bank_loocv_predictions: samples differ from the training set");
    }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

template <typename Vec>
std::vector<double> to_vec(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vec_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::ordered_json model_to_json(const FittedLinearModel& m) {
  nlohmann::ordered_json terms = nlohmann::ordered_json::array();
  for (const auto& t : m.terms) terms.push_back({t.a, t.b});
  nlohmann::ordered_json xtx = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.xtx_inverse.rows(); ++i) xtx.push_back(to_vec(Eigen::VectorXd(m.xtx_inverse.row(i))));
  nlohmann::ordered_json diag;
  if (m.standardized_residuals.size() > 0) {
    const auto het = heteroscedasticity_check(m);
    diag["heteroscedasticity_r"] = het.statistic;
    diag["heteroscedasticity_p"] = het.p_value;
    if (m.n >= 8) {
      const auto nt = normality_tests(m);
      diag["shapiro_wilk_w"] = nt.shapiro_wilk.statistic;
      diag["shapiro_wilk_p"] = nt.shapiro_wilk.p_value;
      diag["dagostino_z"] = nt.dagostino_skew.statistic;
      diag["dagostino_p"] = nt.dagostino_skew.p_value;
      diag["jarque_bera"] = nt.jarque_bera.statistic;
      diag["jarque_bera_p"] = nt.jarque_bera.p_value;
    }
    std::vector<Eigen::Index> cook = m.cook_flags(), outl = m.outlier_flags();
    diag["cook_flags"] = cook;
    diag["outlier_flags"] = outl;
  }
  return {{"terms", m.term_names},
          {"term_index", terms},
          {"pool", m.pool_names},
          {"transform", {{"kind", to_string(m.transform.kind)}, {"lambda", m.transform.lambda}, {"shift", m.transform.shift}}},
          {"coefficients", to_vec(m.coefficients)},
          {"n", m.n},
          {"p", m.p},
          {"rss", m.rss},
          {"sigma2", m.sigma2},
          {"r2", m.r2},
          {"aic", m.aic},
          {"aic_path", m.aic_path},
          {"xtx_inverse", xtx},
          {"design_min", to_vec(m.design_min)},
          {"design_max", to_vec(m.design_max)},
          {"diagnostics", diag}};
}

FittedLinearModel model_from_json(const nlohmann::json& j) {
  FittedLinearModel m;
  m.term_names = j.at("terms").get<std::vector<std::string>>();
  for (const auto& t : j.at("term_index")) m.terms.push_back({t.at(0).get<int>(), t.at(1).get<int>()});
  m.pool_names = j.at("pool").get<std::vector<std::string>>();
  const auto& tr = j.at("transform");
  const std::string kind = tr.at("kind").get<std::string>();
  m.transform.kind = kind == "identity" ? TransformKind::Identity
                     : kind == "power"  ? TransformKind::Power
                     : kind == "shifted_power"
                         ? TransformKind::ShiftedPower
                         : throw DataError(fmt::format("unknown transform '{}'", kind));
  m.transform.lambda = tr.at("lambda").get<double>();
  m.transform.shift = tr.at("shift").get<double>();
  m.coefficients = vec_from(j.at("coefficients"));
  m.n = j.at("n").get<Eigen::Index>();
  m.p = j.at("p").get<Eigen::Index>();
  m.rss = j.at("rss").get<double>();
  m.sigma2 = j.at("sigma2").get<double>();
  m.r2 = j.at("r2").get<double>();
  m.aic = j.at("aic").get<double>();
  m.aic_path = j.at("aic_path").get<std::vector<double>>();
  const auto& xtx = j.at("xtx_inverse");
  m.xtx_inverse.resize(m.p, m.p);
  for (Eigen::Index i = 0; i < m.p; ++i) m.xtx_inverse.row(i) = vec_from(xtx.at(static_cast<std::size_t>(i))).transpose();
  m.design_min = vec_from(j.at("design_min")).transpose();
  m.design_max = vec_from(j.at("design_max")).transpose();
  if (m.coefficients.size() != m.p || static_cast<Eigen::Index>(m.terms.size()) != m.p - 1)
    throw DataError("model JSON: inconsistent term and coefficient counts");
  return m;
}

nlohmann::ordered_json bank_to_json(const BoneAgeModelBank& bank) {
  nlohmann::ordered_json models = nlohmann::ordered_json::object();
  for (BoneKind bone : {BoneKind::Distal, BoneKind::Middle, BoneKind::Proximal})
    for (bool epi : {true, false})
      if (const auto& m = bank.models[bone_slot(bone)][epi ? 0 : 1])
        models[std::string(model_label(bone, epi))] = model_to_json(*m);
  return {{"factors", to_string(bank.factors)}, {"interactions", bank.interactions}, {"models", models}};
}

BoneAgeModelBank bank_from_json(const nlohmann::json& j) {
  try {
    BoneAgeModelBank bank;
    bank.factors = parse_factor_set(j.at("factors").get<std::string>());
    bank.interactions = j.at("interactions").get<bool>();
    const auto& models = j.at("models");
    for (BoneKind bone : {BoneKind::Distal, BoneKind::Middle, BoneKind::Proximal})
      for (bool epi : {true, false}) {
        const std::string key(model_label(bone, epi));
        if (models.contains(key)) bank.models[bone_slot(bone)][epi ? 0 : 1] = model_from_json(models.at(key));
      }
    return bank;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("malformed model bank JSON: {}", e.what()));
  }
}

}  // namespace boneage
