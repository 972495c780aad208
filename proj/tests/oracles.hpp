#pragma once
// Brute-force reference implementations used by the unit and acceptance
// tests. They favour obviousness over speed and share no code with the
// library beyond plain Eigen containers.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
constexpr double kInf = std::numeric_limits<double>::infinity();

inline int band_cells(double w, std::size_t n) { return static_cast<int>(std::ceil(w * static_cast<double>(n) - 1e-9)); }

// Every monotone path through cells (i, j) from (0, 0) to (n-1, m-1) using
// steps (1,0), (0,1), (1,1); `visit` gets the full cell list.
inline void enumerate_cell_paths(int n, int m, const std::function<bool(int, int)>& allowed,
                                 const std::function<void(const std::vector<std::pair<int, int>>&)>& visit) {
  std::vector<std::pair<int, int>> path{{0, 0}};
  std::function<void(int, int)> go = [&](int i, int j) {
    if (i == n - 1 && j == m - 1) {
      visit(path);
      return;
    }
    const int steps[3][2] = {{1, 1}, {1, 0}, {0, 1}};
    for (const auto& s : steps) {
      const int a = i + s[0], b = j + s[1];
      if (a >= n || b >= m || !allowed(a, b)) continue;
      path.emplace_back(a, b);
      go(a, b);
      path.pop_back();
    }
  };
  if (allowed(0, 0)) go(0, 0);
}

inline double dtw(const Vec& a, const Vec& b, double window) {
  const int r = band_cells(window, std::max(a.size(), b.size()));
  double best = kInf;
  enumerate_cell_paths(
      static_cast<int>(a.size()), static_cast<int>(b.size()), [&](int i, int j) { return std::abs(i - j) <= r; },
      [&](const auto& path) {
        double s = 0.0;
        for (auto [i, j] : path) s += (a[i] - b[j]) * (a[i] - b[j]);
        best = std::min(best, s);
      });
  return best;
}

inline double wdtw(const Vec& a, const Vec& b, double g) {
  const double n = static_cast<double>(std::max(a.size(), b.size()));
  double best = kInf;
  enumerate_cell_paths(
      static_cast<int>(a.size()), static_cast<int>(b.size()), [](int, int) { return true; },
      [&](const auto& path) {
        double s = 0.0;
        for (auto [i, j] : path) {
          const double w = 1.0 / (1.0 + std::exp(-g * (std::abs(i - j) - n / 2.0)));
          s += w * (a[i] - b[j]) * (a[i] - b[j]);
        }
        best = std::min(best, s);
      });
  return best;
}

// Longest common subsequence by trying every pair of equal-size index subsets.
inline double lcss(const Vec& a, const Vec& b, double eps, std::optional<int> band) {
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
  int best = 0;
  for (unsigned sa = 0; sa < (1u << n); ++sa)
    for (unsigned sb = 0; sb < (1u << m); ++sb) {
      std::vector<int> ia, ib;
      for (int i = 0; i < n; ++i)
        if (sa & (1u << i)) ia.push_back(i);
      for (int j = 0; j < m; ++j)
        if (sb & (1u << j)) ib.push_back(j);
      if (ia.size() != ib.size() || static_cast<int>(ia.size()) <= best) continue;
      bool ok = true;
      for (std::size_t k = 0; k < ia.size() && ok; ++k) {
        ok = std::abs(a[ia[k]] - b[ib[k]]) <= eps;
        if (band) ok = ok && std::abs((ia[k] + 1) - (ib[k] + 1)) <= *band;
      }
      if (ok) best = static_cast<int>(ia.size());
    }
  return 1.0 - static_cast<double>(best) / std::min(n, m);
}

// Edit scripts over the padded grid (0..n) x (0..m). Step kinds: 0 match
// (1,1), 1 consume a only (1,0), 2 consume b only (0,1).
inline double edit_paths(int n, int m, const std::function<bool(int, int)>& allowed,
                         const std::function<double(int kind, int i, int j)>& cost) {
  double best = kInf;
  std::function<void(int, int, double)> go = [&](int i, int j, double acc) {
    if (i == n && j == m) {
      best = std::min(best, acc);
      return;
    }
    const int steps[3][2] = {{1, 1}, {1, 0}, {0, 1}};
    for (int k = 0; k < 3; ++k) {
      const int a = i + steps[k][0], b = j + steps[k][1];
      if (a > n || b > m || !allowed(a, b)) continue;
      go(a, b, acc + cost(k, a, b));
    }
  };
  go(0, 0, 0.0);
  return best;
}

inline double erp(const Vec& a, const Vec& b, double g, std::optional<int> band) {
  return edit_paths(
      static_cast<int>(a.size()), static_cast<int>(b.size()),
      [&](int i, int j) { return !band || std::abs(i - j) <= *band; },
      [&](int kind, int i, int j) {
        if (kind == 0) return std::abs(a[i - 1] - b[j - 1]);
        if (kind == 1) return std::abs(a[i - 1] - g);
        return std::abs(b[j - 1] - g);
      });
}

// Marteau's TWED with timestamps 1..n and a zero sample at time 0.
inline double twed(const Vec& a, const Vec& b, double nu, double lambda) {
  auto av = [&](int i) { return i == 0 ? 0.0 : a[i - 1]; };
  auto bv = [&](int j) { return j == 0 ? 0.0 : b[j - 1]; };
  return edit_paths(
      static_cast<int>(a.size()), static_cast<int>(b.size()), [](int i, int j) { return (i == 0) == (j == 0); },
      [&](int kind, int i, int j) {
        const double ti = i, tj = j;
        if (kind == 0)
          return std::abs(av(i) - bv(j)) + std::abs(av(i - 1) - bv(j - 1)) +
                 nu * (std::abs(ti - tj) + std::abs((ti - 1) - (tj - 1)));
        if (kind == 1) return std::abs(av(i) - av(i - 1)) + nu * (ti - (ti - 1)) + lambda;
        return std::abs(bv(j) - bv(j - 1)) + nu * (tj - (tj - 1)) + lambda;
      });
}

inline double msm_c(double x, double y, double z, double c) {
  const bool between = (y <= x && x <= z) || (y >= x && x >= z);
  return between ? c : c + std::min(std::abs(x - y), std::abs(x - z));
}

// Move-split-merge: every path of moves/splits/merges over cells.
inline double msm(const Vec& a, const Vec& b, double c) {
  double best = kInf;
  std::function<void(int, int, double)> go = [&](int i, int j, double acc) {
    if (i == static_cast<int>(a.size()) - 1 && j == static_cast<int>(b.size()) - 1) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < static_cast<int>(a.size()) && j + 1 < static_cast<int>(b.size()))
      go(i + 1, j + 1, acc + std::abs(a[i + 1] - b[j + 1]));
    if (i + 1 < static_cast<int>(a.size())) go(i + 1, j, acc + msm_c(a[i + 1], a[i], b[j], c));
    if (j + 1 < static_cast<int>(b.size())) go(i, j + 1, acc + msm_c(b[j + 1], a[i], b[j], c));
  };
  go(0, 0, std::abs(a[0] - b[0]));
  return best;
}

// ---------------------------------------------------------------------------
// Shapelets

inline Vec znorm(const Vec& x) {
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mu) * (v - mu);
  var /= static_cast<double>(x.size());
  Vec out(x.size(), 0.0);
  if (var < 1e-12) return out;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mu) / std::sqrt(var);
  return out;
}

inline double subseq_dist(const Vec& shp, const Vec& series) {
  double best = kInf;
  const std::size_t L = shp.size();
  for (std::size_t o = 0; o + L <= series.size(); ++o) {
    const Vec w = znorm(Vec(series.begin() + static_cast<long>(o), series.begin() + static_cast<long>(o + L)));
    double s = 0.0;
    for (std::size_t i = 0; i < L; ++i) s += (shp[i] - w[i]) * (shp[i] - w[i]);
    best = std::min(best, s / static_cast<double>(L));
  }
  return best;
}

inline double entropy(const std::map<int, int>& counts) {
  int total = 0;
  for (auto [k, c] : counts) total += c;
  double h = 0.0;
  for (auto [k, c] : counts)
    if (c > 0) h -= (static_cast<double>(c) / total) * std::log2(static_cast<double>(c) / total);
  return h;
}

// Best gain over every threshold strictly between two distinct distances.
inline double best_gain(const Vec& d, const std::vector<int>& y) {
  std::set<double> values(d.begin(), d.end());
  std::map<int, int> all;
  for (int l : y) ++all[l];
  const double parent = entropy(all);
  double best = 0.0;
  for (auto it = values.begin(); it != values.end() && std::next(it) != values.end(); ++it) {
    const double thr = 0.5 * (*it + *std::next(it));
    std::map<int, int> l, r;
    for (std::size_t i = 0; i < d.size(); ++i) ++(d[i] <= thr ? l : r)[y[i]];
    int nl = 0, nr = 0;
    for (auto [k, c] : l) nl += c;
    for (auto [k, c] : r) nr += c;
    const double n = nl + nr;
    best = std::max(best, parent - nl / n * entropy(l) - nr / n * entropy(r));
  }
  return best;
}

struct ShapeletPick {
  int series = -1, offset = -1, length = -1;
  double gain = -1.0;
};

// Exhaustive search; ties (within 1e-12) go to the smallest (series, offset, length).
inline ShapeletPick best_shapelet(const std::vector<Vec>& data, const std::vector<int>& y, int min_len, int max_len) {
  ShapeletPick best;
  for (std::size_t s = 0; s < data.size(); ++s)
    for (int o = 0; o < static_cast<int>(data[s].size()); ++o)
      for (int L = min_len; L <= max_len && o + L <= static_cast<int>(data[s].size()); ++L) {
        const Vec shp = znorm(Vec(data[s].begin() + o, data[s].begin() + o + L));
        Vec d;
        for (const auto& t : data) d.push_back(subseq_dist(shp, t));
        const double g = best_gain(d, y);
        const auto key = std::make_tuple(static_cast<int>(s), o, L);
        const auto cur = std::make_tuple(best.series, best.offset, best.length);
        if (g > best.gain + 1e-12 || (std::abs(g - best.gain) <= 1e-12 && key < cur))
          best = {static_cast<int>(s), o, L, g};
      }
  return best;
}

// ---------------------------------------------------------------------------
// Least squares

// Solves (A^T A) beta = A^T y with Gauss-Jordan elimination in long double.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
  const Eigen::Index p = A.cols();
  std::vector<std::vector<long double>> M(static_cast<std::size_t>(p), std::vector<long double>(static_cast<std::size_t>(p + 1), 0.0L));
  for (Eigen::Index r = 0; r < p; ++r) {
    for (Eigen::Index c = 0; c < p; ++c)
      for (Eigen::Index i = 0; i < A.rows(); ++i)
        M[r][c] += static_cast<long double>(A(i, r)) * A(i, c);
    for (Eigen::Index i = 0; i < A.rows(); ++i) M[r][p] += static_cast<long double>(A(i, r)) * y(i);
  }
  for (Eigen::Index c = 0; c < p; ++c) {
    Eigen::Index piv = c;
    for (Eigen::Index r = c + 1; r < p; ++r)
      if (std::abs(M[r][c]) > std::abs(M[piv][c])) piv = r;
    std::swap(M[c], M[piv]);
    for (Eigen::Index r = 0; r < p; ++r) {
      if (r == c) continue;
      const long double f = M[r][c] / M[c][c];
      for (Eigen::Index k = c; k <= p; ++k) M[r][k] -= f * M[c][k];
    }
  }
  Eigen::VectorXd beta(p);
  for (Eigen::Index r = 0; r < p; ++r) beta(r) = static_cast<double>(M[r][p] / M[r][r]);
  return beta;
}

inline Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd A(X.rows(), X.cols() + 1);
  A.col(0).setOnes();
  A.rightCols(X.cols()) = X;
  return A;
}

inline double rss(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd A = with_intercept(X);
  return (y - A * normal_equations(A, y)).squaredNorm();
}

inline double aic(std::size_t n, double rss_value, std::size_t p_with_intercept) {
  return static_cast<double>(n) * std::log(rss_value / static_cast<double>(n)) + 2.0 * static_cast<double>(p_with_intercept + 1);
}

// Greedy forward path through the table of all-subset AICs (main effects only).
inline std::set<int> forward_from_subset_table(const Eigen::MatrixXd& pool, const Eigen::VectorXd& y) {
  const int k = static_cast<int>(pool.cols());
  const auto n = static_cast<std::size_t>(pool.rows());
  std::map<std::set<int>, double> table;
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    std::set<int> s;
    for (int j = 0; j < k; ++j)
      if (mask & (1u << j)) s.insert(j);
    Eigen::MatrixXd X(pool.rows(), static_cast<Eigen::Index>(s.size()));
    int c = 0;
    for (int j : s) X.col(c++) = pool.col(j);
    table[s] = aic(n, rss(X, y), s.size() + 1);
  }
  std::set<int> cur;
  while (true) {
    std::set<int> next;
    double best = table[cur];
    for (int j = 0; j < k; ++j) {
      if (cur.count(j)) continue;
      auto cand = cur;
      cand.insert(j);
      if (table[cand] < best) {
        best = table[cand];
        next = cand;
      }
    }
    if (next.empty()) return cur;
    cur = next;
  }
}

}  // namespace oracle
