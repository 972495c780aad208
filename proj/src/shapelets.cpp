#include "boneage/shapelets.hpp"

#include "boneage/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace boneage {

Eigen::VectorXd z_normalize(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double mu = x.mean();
  const double var = (x.array() - mu).square().mean();
  if (var < kZeroVarianceGuard) return Eigen::VectorXd::Zero(x.size());
  return (x.array() - mu) / std::sqrt(var);
}

double subsequence_distance(const Eigen::Ref<const Eigen::VectorXd>& shapelet,
                            const Eigen::Ref<const Eigen::VectorXd>& series) {
  const Eigen::Index len = shapelet.size();
  if (series.size() < len) throw DataError("series shorter than shapelet");
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index o = 0; o + len <= series.size(); ++o) {
    const Eigen::VectorXd w = z_normalize(series.segment(o, len));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < len && acc < best; ++i) {
      const double d = shapelet(i) - w(i);
      acc += d * d;
    }
    best = std::min(best, acc);
  }
  return best / static_cast<double>(len);
}

namespace {

double entropy_bits(const std::vector<int>& counts, int total) {
  if (total <= 0) return 0.0;
  double h = 0.0;
  for (int c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace

SplitQuality best_information_gain(const std::vector<double>& distances, const std::vector<int>& labels) {
  const std::size_t n = distances.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return distances[a] < distances[b]; });

  const int n_classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<int> right(static_cast<std::size_t>(n_classes), 0), left(static_cast<std::size_t>(n_classes), 0);
  for (int l : labels) ++right[static_cast<std::size_t>(l)];
  const int total = static_cast<int>(n);
  const double parent = entropy_bits(right, total);

  SplitQuality best;
  bool found = false;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const int l = labels[order[i]];
    ++left[static_cast<std::size_t>(l)];
    --right[static_cast<std::size_t>(l)];
    const double d0 = distances[order[i]], d1 = distances[order[i + 1]];
    if (!(d1 > d0)) continue;
    const int nl = static_cast<int>(i + 1), nr = total - nl;
    const double gain = parent - (static_cast<double>(nl) / total) * entropy_bits(left, nl) -
                        (static_cast<double>(nr) / total) * entropy_bits(right, nr);
    if (!found || gain > best.gain) {
      best = {gain, 0.5 * (d0 + d1)};
      found = true;
    }
  }
  best.gain = std::max(best.gain, 0.0);
  return best;
}

ShapeletTransformModel discover_shapelets(const std::vector<Eigen::VectorXd>& series, const std::vector<int>& labels,
                                          const ShapeletConfig& config) {
  if (series.size() != labels.size()) throw UsageError("discover_shapelets: series/label count mismatch");
  if (series.empty()) throw DataError("discover_shapelets: empty training set");
  if (config.min_len < 3 || config.max_len < config.min_len)
    throw UsageError("discover_shapelets: need 3 <= min_len <= max_len");

  // Compact class ids for entropy bookkeeping.
  std::map<int, int> class_ids;
  for (int l : labels) class_ids.emplace(l, 0);
  int next = 0;
  for (auto& [l, id] : class_ids) id = next++;
  std::vector<int> y;
  y.reserve(labels.size());
  for (int l : labels) y.push_back(class_ids[l]);

  const int k = config.k > 0 ? config.k : std::min(100, 10 * static_cast<int>(class_ids.size()));
  if (k < 1) throw UsageError("discover_shapelets: k must be >= 1");

  struct Candidate {
    int series, offset, length;
    double quality = 0.0;
  };
  std::vector<Candidate> cands;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto len = static_cast<int>(series[s].size());
    for (int L = config.min_len; L <= std::min(config.max_len, len); ++L)
      for (int o = 0; o + L <= len; ++o) cands.push_back({static_cast<int>(s), o, L});
  }
  if (cands.empty()) throw DataError("discover_shapelets: no valid candidates (series shorter than min_len)");

  if (config.max_candidates > 0 && cands.size() > config.max_candidates) {
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> idx(cands.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(config.max_candidates);
    std::sort(idx.begin(), idx.end());
    std::vector<Candidate> kept;
    kept.reserve(idx.size());
    for (std::size_t i : idx) kept.push_back(cands[i]);
    cands = std::move(kept);
  }

  std::vector<double> dist(series.size());
  for (auto& c : cands) {
    const Eigen::VectorXd shp = z_normalize(series[static_cast<std::size_t>(c.series)].segment(c.offset, c.length));
    for (std::size_t j = 0; j < series.size(); ++j)
      dist[j] = series[j].size() >= c.length ? subsequence_distance(shp, series[j])
                                              : std::numeric_limits<double>::infinity();
    c.quality = best_information_gain(dist, y).gain;
  }

  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.quality != b.quality) return a.quality > b.quality;
    if (a.series != b.series) return a.series < b.series;
    if (a.offset != b.offset) return a.offset < b.offset;
    return a.length < b.length;
  });

  ShapeletTransformModel model;
  model.config = config;
  model.config.k = k;
  for (const auto& c : cands) {
    if (static_cast<int>(model.shapelets.size()) >= k) break;
    Shapelet s;
    s.series_index = c.series;
    s.offset = c.offset;
    s.quality = c.quality;
    s.values = z_normalize(series[static_cast<std::size_t>(c.series)].segment(c.offset, c.length));
    const bool self_similar =
        std::any_of(model.shapelets.begin(), model.shapelets.end(), [&](const Shapelet& r) { return r.overlaps(s); });
    if (!self_similar) model.shapelets.push_back(std::move(s));
  }
  return model;
}

Eigen::MatrixXd shapelet_transform(const ShapeletTransformModel& model, const std::vector<Eigen::VectorXd>& batch) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(model.shapelets.size()));
  for (std::size_t i = 0; i < batch.size(); ++i)
    for (std::size_t j = 0; j < model.shapelets.size(); ++j) {
      if (batch[i].size() < model.shapelets[j].length())
        throw DataError(fmt::format("series {} is shorter than shapelet {}", i, j));
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          subsequence_distance(model.shapelets[j].values, batch[i]);
    }
  return out;
}

}  // namespace boneage
