#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aes/corpus.hpp"
#include "aes/errors.hpp"

namespace aes {

// The exact-arithmetic measures are templates over the value type so they
// run on double in reports and on boost::rational in checks.

namespace detail {
template <typename T>
T absolute(const T& x) {
  return x < T(0) ? -x : x;
}
}  // namespace detail

/// Mean |value - reference|. Throws ValidationError on empty input.
template <typename T>
T mae(std::span<const std::pair<T, T>> pairs) {
  if (pairs.empty()) throw ValidationError("mae of an empty list");
  T sum(0);
  for (const auto& [v, r] : pairs) sum += detail::absolute(T(v - r));
  return sum / T(static_cast<long>(pairs.size()));
}

/// (1 - mae / scale) * 100.
template <typename T>
T accuracy(const T& mae_value, const T& scale = T(3)) {
  return (T(1) - mae_value / scale) * T(100);
}

/// max(0, min(h1,h2) - m, m - max(h1,h2)).
template <typename T>
T out_of_range_distance(const T& h1, const T& h2, const T& m) {
  const T lo = std::min(h1, h2);
  const T hi = std::max(h1, h2);
  return std::max({T(0), T(lo - m), T(m - hi)});
}

/// One source's nine scores; an aspect may be missing after a failed call.
struct ModelSheet {
  std::array<std::optional<int>, kAspectCount> scores{};

  bool complete() const;
  /// Sum of the nine scores; throws ValidationError if incomplete.
  int total() const;
};

struct ScoreSheetSet {
  std::vector<std::string> essay_ids;
  std::vector<AspectScores> g1;
  std::vector<AspectScores> g2;
  /// model id -> one sheet per essay, aligned with essay_ids.
  std::map<std::string, std::vector<ModelSheet>> models;

  std::size_t size() const { return essay_ids.size(); }
  /// Throws ValidationError if the per-essay vectors are misaligned.
  void validate() const;
};

/// Percentage of essays (with complete sheets) whose model total lies in
/// [sum of aspect minima, sum of aspect maxima] of the two graders.
template <typename T>
T in_range_total_pct(const ScoreSheetSet& s, const std::string& model_id) {
  s.validate();
  const auto it = s.models.find(model_id);
  if (it == s.models.end()) throw ValidationError("no scores for model '" + model_id + "'");
  long inside = 0;
  long considered = 0;
  for (std::size_t e = 0; e < s.size(); ++e) {
    const ModelSheet& m = it->second[e];
    if (!m.complete()) continue;
    int lo = 0;
    int hi = 0;
    for (RubricAspect a : kAllAspects) {
      lo += std::min(s.g1[e][a], s.g2[e][a]);
      hi += std::max(s.g1[e][a], s.g2[e][a]);
    }
    const int total = m.total();
    ++considered;
    if (lo <= total && total <= hi) ++inside;
  }
  if (considered == 0) throw ValidationError("model '" + model_id + "' has no complete sheets");
  return T(100) * T(inside) / T(considered);
}

/// Per aspect: mean over essays and both graders of |g_i - consensus|.
template <typename T>
std::array<T, kAspectCount> human_mad(const ScoreSheetSet& s) {
  s.validate();
  if (s.size() == 0) throw ValidationError("human_mad of an empty set");
  std::array<T, kAspectCount> out{};
  for (RubricAspect a : kAllAspects) {
    T sum(0);
    for (std::size_t e = 0; e < s.size(); ++e) {
      const T c = T(s.g1[e][a] + s.g2[e][a]) / T(2);
      sum += detail::absolute(T(T(s.g1[e][a]) - c));
      sum += detail::absolute(T(T(s.g2[e][a]) - c));
    }
    out[index(a)] = sum / T(2 * static_cast<long>(s.size()));
  }
  return out;
}

/// Per aspect MAE of the model against the consensus, over essays where the
/// model produced that aspect. Aspects with no scores are nullopt.
template <typename T>
std::array<std::optional<T>, kAspectCount> aspect_mae(const ScoreSheetSet& s, const std::string& model_id) {
  s.validate();
  const auto it = s.models.find(model_id);
  if (it == s.models.end()) throw ValidationError("no scores for model '" + model_id + "'");
  std::array<std::optional<T>, kAspectCount> out{};
  for (RubricAspect a : kAllAspects) {
    std::vector<std::pair<T, T>> pairs;
    for (std::size_t e = 0; e < s.size(); ++e) {
      const auto& v = it->second[e].scores[index(a)];
      if (!v) continue;
      pairs.emplace_back(T(*v), T(s.g1[e][a] + s.g2[e][a]) / T(2));
    }
    if (!pairs.empty()) out[index(a)] = mae<T>(pairs);
  }
  return out;
}

/// MAE of model totals against consensus totals over complete sheets.
template <typename T>
std::optional<T> total_mae(const ScoreSheetSet& s, const std::string& model_id) {
  s.validate();
  const auto it = s.models.find(model_id);
  if (it == s.models.end()) throw ValidationError("no scores for model '" + model_id + "'");
  std::vector<std::pair<T, T>> pairs;
  for (std::size_t e = 0; e < s.size(); ++e) {
    const ModelSheet& m = it->second[e];
    if (!m.complete()) continue;
    pairs.emplace_back(T(m.total()), T(s.g1[e].total() + s.g2[e].total()) / T(2));
  }
  if (pairs.empty()) return std::nullopt;
  return mae<T>(pairs);
}

struct BiasTerm {
  std::string model_id;
  double coefficient = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p = 1.0;
  std::size_t n = 0;

  std::string stars() const;
};

struct BiasReport {
  /// Mean of all human-grader totals in the sample.
  double intercept = 0.0;
  double intercept_se = 0.0;
  std::vector<BiasTerm> models;
  std::size_t observations = 0;
};

/// Per-essay totals feeding the bias regression.
struct TotalsTable {
  std::vector<double> g1;
  std::vector<double> g2;
  /// model id -> per-essay total, nullopt for an incomplete sheet.
  std::vector<std::pair<std::string, std::vector<std::optional<double>>>> models;
};

TotalsTable totals_table(const ScoreSheetSet& s, std::span<const std::string> model_ids);

/// OLS of total on an intercept plus one indicator per model, with two
/// human rows per essay. Two-sided p-values from the t distribution.
/// Throws ValidationError for fewer than two essays or a singular design.
BiasReport bias_regression(const TotalsTable& t);
BiasReport bias_regression(const ScoreSheetSet& s, std::span<const std::string> model_ids);

/// Two-sided p-value of a t statistic.
double t_two_sided_p(double t, double dof);

// ---------------------------------------------------------------------------
// Score tables on disk

/// essay id -> sheet, read from score CSVs (essay_id,aspect,score,source).
/// An empty score cell marks a failed aspect.
using ScoreTable = std::map<std::string, std::map<std::string, ModelSheet>>;

/// Parses one score CSV into `into`, keyed by the source column.
void parse_score_csv(std::string_view csv, ScoreTable& into);
/// Reads every *.csv file directly inside `dir`, in name order.
ScoreTable load_score_dir(const std::filesystem::path& dir);

ScoreSheetSet make_sheet_set(std::span<const EssayRecord> corpus, const ScoreTable& scores);

/// Files written by the eval stage.
struct EvalReport {
  std::string table1_csv;
  std::string fig2_csv;
  std::string summary_json;
};

/// Table-1 style rows (bias, stars, total MAE, in-range %) and Fig-2 style
/// per-aspect MAE / human MAD rows, per cohort (grade level) and model.
EvalReport evaluate(std::span<const EssayRecord> corpus, const ScoreTable& scores);

}  // namespace aes
