#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aes/corpus.hpp"
#include "aes/errors.hpp"
#include "aes/types.hpp"

namespace aes {

inline constexpr double kScoreMin = 0.0;
inline constexpr double kScoreMax = 3.0;
inline constexpr double kCollinearityThreshold = 0.8;

// ---------------------------------------------------------------------------
// Randomness. Fixed algorithms so results do not depend on the standard
// library's distribution implementations.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Uniform integer in [0, n) by rejection sampling.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return static_cast<std::size_t>(draw % range);
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

// ---------------------------------------------------------------------------

struct FoldPlan {
  std::size_t k = 10;
  std::uint64_t seed = 0;
  /// Fold index per row.
  std::vector<std::size_t> assignments;

  /// Shuffles row indices with `seed` and deals them round-robin, so fold
  /// sizes differ by at most one. Throws ValidationError if k < 2 or k > n.
  static FoldPlan make(std::size_t n, std::size_t k, std::uint64_t seed);

  std::vector<std::size_t> train_rows(std::size_t fold) const;
  std::vector<std::size_t> test_rows(std::size_t fold) const;
};

template <typename Scalar>
struct Dataset {
  Matrix<Scalar> X;
  Vector<Scalar> y;
  std::vector<std::string> feature_names;
  std::vector<std::string> essay_ids;
  /// Per-row grader scores, used for the in-range rate when present.
  std::optional<Vector<Scalar>> g1;
  std::optional<Vector<Scalar>> g2;

  std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(X.cols()); }

  void validate(std::size_t min_rows = 20) const {
    if (X.rows() != y.size()) throw ValidationError("dataset: X and y row counts differ");
    if (feature_names.size() != cols()) throw ValidationError("dataset: feature name count mismatch");
    if (!essay_ids.empty() && essay_ids.size() != rows()) {
      throw ValidationError("dataset: essay id count mismatch");
    }
    if (rows() < min_rows) {
      throw ValidationError("dataset: need at least " + std::to_string(min_rows) + " rows, have " +
                            std::to_string(rows()));
    }
    if (!X.allFinite() || !y.allFinite()) throw ValidationError("dataset: non-finite entries");
    std::vector<std::string> sorted = feature_names;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ValidationError("dataset: duplicate feature names");
    }
  }
};

template <typename Scalar>
Matrix<Scalar> select_rows(const Matrix<Scalar>& X, std::span<const std::size_t> rows) {
  Matrix<Scalar> out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

template <typename Scalar>
Vector<Scalar> select_rows(const Vector<Scalar>& y, std::span<const std::size_t> rows) {
  Vector<Scalar> out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(rows[i]));
  return out;
}

template <typename Scalar>
Matrix<Scalar> select_cols(const Matrix<Scalar>& X, std::span<const std::size_t> cols) {
  Matrix<Scalar> out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = X.col(static_cast<Eigen::Index>(cols[j]));
  return out;
}

// ---------------------------------------------------------------------------
// Standardization

template <typename Scalar>
struct Standardizer {
  RowVector<Scalar> mean;
  /// Population SD; 0 marks a constant column.
  RowVector<Scalar> sd;
};

template <typename Scalar>
Standardizer<Scalar> standardize_fit(const Matrix<Scalar>& X) {
  Standardizer<Scalar> s;
  const Scalar n = static_cast<Scalar>(X.rows());
  s.mean = X.colwise().sum() / n;
  s.sd.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const Scalar ss = (X.col(j).array() - s.mean(j)).square().sum();
    s.sd(j) = std::sqrt(ss / n);
  }
  return s;
}

template <typename Scalar>
Matrix<Scalar> standardize_apply(const Standardizer<Scalar>& s, const Matrix<Scalar>& X) {
  Matrix<Scalar> out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (s.sd(j) == Scalar(0)) {
      out.col(j).setZero();
    } else {
      out.col(j) = (X.col(j).array() - s.mean(j)) / s.sd(j);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Correlation, selection and pruning

/// Pearson correlation; 0 when either input is constant.
template <typename Scalar, typename A, typename B>
Scalar pearson(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  const Scalar n = static_cast<Scalar>(x.size());
  const auto xc = (x.array() - x.sum() / n).eval();
  const auto yc = (y.array() - y.sum() / n).eval();
  const Scalar sxx = xc.square().sum();
  const Scalar syy = yc.square().sum();
  if (sxx == Scalar(0) || syy == Scalar(0)) return Scalar(0);
  const Scalar r = (xc * yc).sum() / std::sqrt(sxx * syy);
  return std::clamp(r, Scalar(-1), Scalar(1));
}

/// Squared correlation computed so that identical columns give exactly 1.
template <typename Scalar, typename A, typename B>
Scalar pearson_squared(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  const Scalar n = static_cast<Scalar>(x.size());
  const auto xc = (x.array() - x.sum() / n).eval();
  const auto yc = (y.array() - y.sum() / n).eval();
  const Scalar sxx = xc.square().sum();
  const Scalar syy = yc.square().sum();
  if (sxx == Scalar(0) || syy == Scalar(0)) return Scalar(0);
  const Scalar sxy = (xc * yc).sum();
  return std::min(Scalar(1), (sxy * sxy) / (sxx * syy));
}

/// Univariate F statistic per column: r^2 / (1 - r^2) * (n - 2); +inf when
/// r^2 = 1, 0 for constant columns.
template <typename Scalar>
Vector<Scalar> f_statistics(const Matrix<Scalar>& X, const Vector<Scalar>& y) {
  if (X.rows() < 3) throw ValidationError("f_select needs at least 3 rows");
  Vector<Scalar> f(X.cols());
  const Scalar dof = static_cast<Scalar>(X.rows() - 2);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const Scalar r2 = pearson_squared<Scalar>(X.col(j), y);
    f(j) = r2 >= Scalar(1) ? std::numeric_limits<Scalar>::infinity() : r2 / (Scalar(1) - r2) * dof;
  }
  return f;
}

/// Indices of the k largest F statistics (ties to the lower index), sorted
/// ascending.
template <typename Scalar>
std::vector<std::size_t> f_select(const Matrix<Scalar>& X, const Vector<Scalar>& y, std::size_t k) {
  if (k > static_cast<std::size_t>(X.cols())) {
    throw ValidationError("f_select: k=" + std::to_string(k) + " exceeds " + std::to_string(X.cols()) +
                          " features");
  }
  const Vector<Scalar> f = f_statistics(X, y);
  std::vector<std::size_t> order(static_cast<std::size_t>(X.cols()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return f(static_cast<Eigen::Index>(a)) > f(static_cast<Eigen::Index>(b));
  });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

/// Mean and population SD across training sets of per-feature Pearson
/// correlation with the target.
template <typename Scalar>
struct CorrelationTable {
  Vector<Scalar> mean;
  Vector<Scalar> sd;
};

template <typename Scalar>
CorrelationTable<Scalar> target_correlations(std::span<const Matrix<Scalar>> train_X,
                                             std::span<const Vector<Scalar>> train_y) {
  if (train_X.empty()) throw ValidationError("no training sets");
  const Eigen::Index p = train_X.front().cols();
  const Scalar m = static_cast<Scalar>(train_X.size());
  Matrix<Scalar> r(static_cast<Eigen::Index>(train_X.size()), p);
  for (std::size_t f = 0; f < train_X.size(); ++f) {
    for (Eigen::Index j = 0; j < p; ++j) {
      r(static_cast<Eigen::Index>(f), j) = pearson<Scalar>(train_X[f].col(j), train_y[f]);
    }
  }
  CorrelationTable<Scalar> t;
  t.mean = r.colwise().sum().transpose() / m;
  t.sd.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    t.sd(j) = std::sqrt((r.col(j).array() - t.mean(j)).square().sum() / m);
  }
  return t;
}

/// Drops multicollinear features. Pairwise correlations are averaged over the
/// training sets; pairs with |mean r| above `threshold` are linked, and from
/// each connected component only the feature with the largest |mean r| to the
/// target survives (ties to the lower index). Returns surviving column
/// indices in ascending order.
template <typename Scalar>
std::vector<std::size_t> prune_multicollinear(std::span<const Matrix<Scalar>> train_X,
                                              std::span<const Vector<Scalar>> train_y,
                                              Scalar threshold = Scalar(kCollinearityThreshold)) {
  if (train_X.empty()) throw ValidationError("prune_multicollinear: no training sets");
  const std::size_t p = static_cast<std::size_t>(train_X.front().cols());
  const Scalar m = static_cast<Scalar>(train_X.size());

  Matrix<Scalar> mean_r = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (const auto& X : train_X) {
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = a + 1; b < p; ++b) {
        mean_r(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
            pearson<Scalar>(X.col(static_cast<Eigen::Index>(a)), X.col(static_cast<Eigen::Index>(b)));
      }
    }
  }
  mean_r /= m;
  const auto target = target_correlations(train_X, train_y);

  std::vector<std::size_t> parent(p);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a + 1; b < p; ++b) {
      if (std::abs(mean_r(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))) > threshold) {
        parent[find(b)] = find(a);
      }
    }
  }

  std::vector<std::optional<std::size_t>> best(p);
  for (std::size_t j = 0; j < p; ++j) {
    auto& slot = best[find(j)];
    if (!slot || std::abs(target.mean(static_cast<Eigen::Index>(j))) >
                     std::abs(target.mean(static_cast<Eigen::Index>(*slot)))) {
      slot = j;
    }
  }
  std::vector<std::size_t> keep;
  for (const auto& b : best) {
    if (b) keep.push_back(*b);
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

// ---------------------------------------------------------------------------
// Regressors

enum class RegressorKind { OLS, Ridge, DecisionTree, RandomForest };

std::string regressor_name(RegressorKind k);
std::optional<RegressorKind> regressor_from_name(std::string_view name);

struct RegressorSpec {
  RegressorKind kind = RegressorKind::OLS;
  double lambda = 1.0;
  std::size_t min_leaf = 5;
  /// 0 means unlimited.
  std::size_t max_depth = 0;
  std::size_t trees = 100;
  /// 0 means ceil(p / 3).
  std::size_t mtry = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(lambda >= 0.0)) throw ValidationError("ridge lambda must be >= 0");
    if (trees < 1) throw ValidationError("forest needs at least one tree");
    if (min_leaf < 1) throw ValidationError("min_leaf must be >= 1");
  }
};

template <typename Scalar>
struct TreeNode {
  /// -1 for a leaf.
  int feature = -1;
  Scalar threshold = Scalar(0);
  int left = -1;
  int right = -1;
  Scalar value = Scalar(0);
};

template <typename Scalar>
using Tree = std::vector<TreeNode<Scalar>>;

template <typename Scalar>
struct Model {
  RegressorSpec spec;
  Scalar intercept = Scalar(0);
  Vector<Scalar> beta;
  std::vector<Tree<Scalar>> trees;
};

namespace detail {

template <typename Scalar>
class TreeBuilder {
 public:
  TreeBuilder(const Matrix<Scalar>& X, const Vector<Scalar>& y, std::size_t min_leaf,
              std::size_t max_depth, std::size_t mtry, std::mt19937_64* rng)
      : X_(X), y_(y), min_leaf_(min_leaf), max_depth_(max_depth), mtry_(mtry), rng_(rng) {}

  Tree<Scalar> build(std::vector<std::size_t> rows) {
    tree_.clear();
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t>& rows, std::size_t depth) {
    const int id = static_cast<int>(tree_.size());
    tree_.push_back({});
    Scalar sum = 0;
    Scalar lo = std::numeric_limits<Scalar>::infinity();
    Scalar hi = -lo;
    for (std::size_t r : rows) {
      const Scalar v = y_(static_cast<Eigen::Index>(r));
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    tree_[static_cast<std::size_t>(id)].value = sum / static_cast<Scalar>(rows.size());
    if (lo == hi || rows.size() < 2 * min_leaf_ || (max_depth_ != 0 && depth >= max_depth_)) {
      return id;
    }

    std::vector<std::size_t> features(static_cast<std::size_t>(X_.cols()));
    std::iota(features.begin(), features.end(), std::size_t{0});
    if (rng_ != nullptr && mtry_ < features.size()) {
      for (std::size_t i = 0; i < mtry_; ++i) {
        std::swap(features[i], features[i + uniform_index(*rng_, features.size() - i)]);
      }
      features.resize(mtry_);
      std::sort(features.begin(), features.end());
    }

    const Scalar n = static_cast<Scalar>(rows.size());
    const Scalar base = sum * sum / n;
    Scalar best_gain = 0;
    int best_feature = -1;
    Scalar best_threshold = 0;
    std::vector<std::size_t> order = rows;
    for (std::size_t f : features) {
      const auto col = static_cast<Eigen::Index>(f);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return X_(static_cast<Eigen::Index>(a), col) < X_(static_cast<Eigen::Index>(b), col);
      });
      Scalar left_sum = 0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left_sum += y_(static_cast<Eigen::Index>(order[i]));
        const std::size_t nl = i + 1;
        const std::size_t nr = order.size() - nl;
        const Scalar xa = X_(static_cast<Eigen::Index>(order[i]), col);
        const Scalar xb = X_(static_cast<Eigen::Index>(order[i + 1]), col);
        if (xa == xb || nl < min_leaf_ || nr < min_leaf_) continue;
        const Scalar right_sum = sum - left_sum;
        const Scalar gain = left_sum * left_sum / static_cast<Scalar>(nl) +
                            right_sum * right_sum / static_cast<Scalar>(nr) - base;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = xa + (xb - xa) / Scalar(2);
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t r : rows) {
      (X_(static_cast<Eigen::Index>(r), best_feature) <= best_threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree_[static_cast<std::size_t>(id)].feature = best_feature;
    tree_[static_cast<std::size_t>(id)].threshold = best_threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree_[static_cast<std::size_t>(id)].left = l;
    tree_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  const Matrix<Scalar>& X_;
  const Vector<Scalar>& y_;
  std::size_t min_leaf_;
  std::size_t max_depth_;
  std::size_t mtry_;
  std::mt19937_64* rng_;
  Tree<Scalar> tree_;
};

template <typename Scalar, typename Row>
Scalar tree_predict(const Tree<Scalar>& tree, const Row& x) {
  std::size_t node = 0;
  while (tree[node].feature >= 0) {
    node = static_cast<std::size_t>(x(tree[node].feature) <= tree[node].threshold ? tree[node].left
                                                                                : tree[node].right);
  }
  return tree[node].value;
}

}  // namespace detail

/// Fits a regressor. OLS throws ValidationError on a rank-deficient design.
template <typename Scalar>
Model<Scalar> fit(const RegressorSpec& spec, const Matrix<Scalar>& X, const Vector<Scalar>& y) {
  spec.validate();
  if (X.rows() != y.size() || X.rows() == 0) throw ValidationError("fit: bad training data shape");
  Model<Scalar> m;
  m.spec = spec;
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();

  switch (spec.kind) {
    case RegressorKind::OLS: {
      Matrix<Scalar> design(n, p + 1);
      design.col(0).setOnes();
      design.rightCols(p) = X;
      Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(design);
      if (qr.rank() < p + 1) {
        throw ValidationError("OLS design is rank deficient (rank " + std::to_string(qr.rank()) + " < " +
                              std::to_string(p + 1) + "); use Ridge instead");
      }
      const Vector<Scalar> coef = qr.solve(y);
      m.intercept = coef(0);
      m.beta = coef.tail(p);
      break;
    }
    case RegressorKind::Ridge: {
      const RowVector<Scalar> x_mean = X.colwise().sum() / static_cast<Scalar>(n);
      const Scalar y_mean = y.sum() / static_cast<Scalar>(n);
      const Matrix<Scalar> Xc = X.rowwise() - x_mean;
      Matrix<Scalar> gram = Xc.transpose() * Xc;
      gram.diagonal().array() += static_cast<Scalar>(spec.lambda);
      const Vector<Scalar> rhs = Xc.transpose() * (y.array() - y_mean).matrix();
      m.beta = gram.ldlt().solve(rhs);
      if (!m.beta.allFinite()) throw ValidationError("ridge system is singular; increase lambda");
      m.intercept = y_mean - x_mean.dot(m.beta);
      break;
    }
    case RegressorKind::DecisionTree: {
      std::vector<std::size_t> rows(static_cast<std::size_t>(n));
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      detail::TreeBuilder<Scalar> b(X, y, spec.min_leaf, spec.max_depth, 0, nullptr);
      m.trees.push_back(b.build(std::move(rows)));
      break;
    }
    case RegressorKind::RandomForest: {
      const std::size_t mtry =
          spec.mtry != 0 ? spec.mtry : std::max<std::size_t>(1, (static_cast<std::size_t>(p) + 2) / 3);
      for (std::size_t t = 0; t < spec.trees; ++t) {
        std::mt19937_64 rng(splitmix64(spec.seed + t));
        std::vector<std::size_t> rows(static_cast<std::size_t>(n));
        for (auto& r : rows) r = uniform_index(rng, static_cast<std::size_t>(n));
        detail::TreeBuilder<Scalar> b(X, y, spec.min_leaf, spec.max_depth, mtry, &rng);
        m.trees.push_back(b.build(std::move(rows)));
      }
      break;
    }
  }
  return m;
}

template <typename Scalar>
Vector<Scalar> predict_raw(const Model<Scalar>& m, const Matrix<Scalar>& X) {
  Vector<Scalar> out(X.rows());
  if (m.trees.empty()) {
    out = (X * m.beta).array() + m.intercept;
    return out;
  }
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Scalar s = 0;
    for (const auto& tree : m.trees) s += detail::tree_predict(tree, X.row(i));
    out(i) = s / static_cast<Scalar>(m.trees.size());
  }
  return out;
}

/// Predictions clamped to the 0..3 score range.
template <typename Scalar>
Vector<Scalar> predict(const Model<Scalar>& m, const Matrix<Scalar>& X) {
  return predict_raw(m, X).array().max(Scalar(kScoreMin)).min(Scalar(kScoreMax)).matrix();
}

// ---------------------------------------------------------------------------
// Rounding and range checks

/// Nearest multiple of 0.5, halves rounded up.
template <typename Scalar>
Scalar round_half(Scalar x) {
  return std::floor(Scalar(2) * x + Scalar(0.5)) / Scalar(2);
}

/// Percentage of rounded predictions within [min(g1,g2), max(g1,g2)].
template <typename Scalar>
Scalar in_range_rate(const Vector<Scalar>& predictions, const Vector<Scalar>& g1, const Vector<Scalar>& g2) {
  if (predictions.size() == 0 || predictions.size() != g1.size() || g1.size() != g2.size()) {
    throw ValidationError("in_range_rate: inputs must be non-empty and equally long");
  }
  Eigen::Index inside = 0;
  for (Eigen::Index i = 0; i < predictions.size(); ++i) {
    const Scalar r = round_half(predictions(i));
    if (std::min(g1(i), g2(i)) <= r && r <= std::max(g1(i), g2(i))) ++inside;
  }
  return Scalar(100) * static_cast<Scalar>(inside) / static_cast<Scalar>(predictions.size());
}

// ---------------------------------------------------------------------------
// Cross-validation

template <typename Scalar>
struct PipelineResult {
  RegressorSpec spec;
  std::size_t k_requested = 0;
  /// Features actually selected per fold after clamping to what pruning left.
  std::size_t k_effective = 0;
  std::vector<Scalar> fold_mae;
  Scalar mean_mae = 0;
  Scalar sd_mae = 0;
  std::vector<std::string> retained_features;
  std::vector<std::vector<std::string>> selected_features;
  /// Out-of-fold prediction per row, clamped to 0..3.
  Vector<Scalar> predictions;
  std::optional<Scalar> in_range_pct;
  /// Per input feature: mean and SD over training folds of r with y.
  CorrelationTable<Scalar> correlations;
};

/// Pruning is fitted once from the plan's training folds; standardization,
/// selection and the model are fitted per fold on training rows only.
template <typename Scalar>
PipelineResult<Scalar> cross_validate(const Dataset<Scalar>& ds, const RegressorSpec& spec,
                                      std::size_t k_features, const FoldPlan& plan) {
  ds.validate(2);
  if (plan.assignments.size() != ds.rows()) throw ValidationError("fold plan does not match dataset");
  if (k_features == 0) throw ValidationError("k_features must be >= 1");

  std::vector<Matrix<Scalar>> train_X;
  std::vector<Vector<Scalar>> train_y;
  std::vector<std::vector<std::size_t>> test_rows;
  for (std::size_t f = 0; f < plan.k; ++f) {
    const auto tr = plan.train_rows(f);
    auto te = plan.test_rows(f);
    if (tr.size() < 2 || te.empty()) {
      throw ValidationError("fold " + std::to_string(f) + " has too few rows");
    }
    train_X.push_back(select_rows(ds.X, tr));
    train_y.push_back(select_rows(ds.y, tr));
    test_rows.push_back(std::move(te));
  }

  PipelineResult<Scalar> res;
  res.spec = spec;
  res.k_requested = k_features;
  res.correlations = target_correlations<Scalar>(train_X, train_y);
  const auto retained = ds.cols() >= 2 ? prune_multicollinear<Scalar>(train_X, train_y)
                                       : std::vector<std::size_t>(ds.cols(), 0);
  for (std::size_t j : retained) res.retained_features.push_back(ds.feature_names[j]);
  res.k_effective = std::min(k_features, retained.size());
  res.predictions = Vector<Scalar>::Zero(static_cast<Eigen::Index>(ds.rows()));

  for (std::size_t f = 0; f < plan.k; ++f) {
    const Matrix<Scalar> Xtr = select_cols(train_X[f], std::span<const std::size_t>(retained));
    const auto st = standardize_fit(Xtr);
    const Matrix<Scalar> Ztr = standardize_apply(st, Xtr);
    const auto chosen = f_select(Ztr, train_y[f], res.k_effective);
    std::vector<std::string> names;
    for (std::size_t c : chosen) names.push_back(ds.feature_names[retained[c]]);
    res.selected_features.push_back(std::move(names));

    RegressorSpec fold_spec = spec;
    fold_spec.seed = splitmix64(spec.seed ^ (0xF01DULL + f));
    const auto model = fit(fold_spec, select_cols(Ztr, std::span<const std::size_t>(chosen)), train_y[f]);

    const Matrix<Scalar> Xte =
        select_cols(select_rows(ds.X, std::span<const std::size_t>(test_rows[f])), std::span<const std::size_t>(retained));
    const Matrix<Scalar> Zte = select_cols(standardize_apply(st, Xte), std::span<const std::size_t>(chosen));
    const Vector<Scalar> yhat = predict(model, Zte);
    Scalar err = 0;
    for (std::size_t i = 0; i < test_rows[f].size(); ++i) {
      const auto row = static_cast<Eigen::Index>(test_rows[f][i]);
      res.predictions(row) = yhat(static_cast<Eigen::Index>(i));
      err += std::abs(yhat(static_cast<Eigen::Index>(i)) - ds.y(row));
    }
    res.fold_mae.push_back(err / static_cast<Scalar>(test_rows[f].size()));
  }

  const Scalar k = static_cast<Scalar>(res.fold_mae.size());
  for (Scalar m : res.fold_mae) res.mean_mae += m;
  res.mean_mae /= k;
  Scalar ss = 0;
  for (Scalar m : res.fold_mae) ss += (m - res.mean_mae) * (m - res.mean_mae);
  res.sd_mae = std::sqrt(ss / k);
  if (ds.g1 && ds.g2) res.in_range_pct = in_range_rate(res.predictions, *ds.g1, *ds.g2);
  return res;
}

// ---------------------------------------------------------------------------
// Reports (double precision)

struct FeatureVector;
class FeatureRegistry;

/// Builds the dataset for one language aspect: the aspect's registry
/// features as columns, the consensus aspect score as target and grader
/// scores for the in-range rate. Essays without a feature row are skipped.
Dataset<double> build_dataset(std::span<const FeatureVector> features, std::span<const EssayRecord> corpus,
                              RubricAspect aspect, const FeatureRegistry& reg);

std::string cv_report_json(const std::vector<PipelineResult<double>>& results, RubricAspect aspect,
                           const FoldPlan& plan, const Dataset<double>& ds);
std::string correlation_csv(const PipelineResult<double>& res, const Dataset<double>& ds);

}  // namespace aes
