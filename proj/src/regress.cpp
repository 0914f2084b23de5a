#include "aes/regress.hpp"

#include <cstdio>
#include <unordered_map>

#include <json.hpp>

#include "aes/featureset.hpp"

namespace aes {

namespace {

using json = nlohmann::json;

// Stable textual form so reports are byte-identical across runs.
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json spec_json(const RegressorSpec& s) {
  json j = {{"kind", regressor_name(s.kind)}};
  switch (s.kind) {
    case RegressorKind::OLS:
      break;
    case RegressorKind::Ridge:
      j["lambda"] = s.lambda;
      break;
    case RegressorKind::DecisionTree:
      j["min_leaf"] = s.min_leaf;
      j["max_depth"] = s.max_depth;
      break;
    case RegressorKind::RandomForest:
      j["trees"] = s.trees;
      j["min_leaf"] = s.min_leaf;
      j["max_depth"] = s.max_depth;
      j["mtry"] = s.mtry;
      j["seed"] = s.seed;
      break;
  }
  return j;
}

}  // namespace

FoldPlan FoldPlan::make(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("fold count must be at least 2");
  if (k > n) {
    throw ValidationError("fold count " + std::to_string(k) + " exceeds row count " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  shuffle(order, rng);
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(n, 0);
  for (std::size_t pos = 0; pos < n; ++pos) plan.assignments[order[pos]] = pos % k;
  return plan;
}

std::vector<std::size_t> FoldPlan::train_rows(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::test_rows(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

std::string regressor_name(RegressorKind k) {
  switch (k) {
    case RegressorKind::OLS:
      return "ols";
    case RegressorKind::Ridge:
      return "ridge";
    case RegressorKind::DecisionTree:
      return "tree";
    case RegressorKind::RandomForest:
      return "forest";
  }
  return "";
}

std::optional<RegressorKind> regressor_from_name(std::string_view name) {
  for (auto k : {RegressorKind::OLS, RegressorKind::Ridge, RegressorKind::DecisionTree,
                 RegressorKind::RandomForest}) {
    if (regressor_name(k) == name) return k;
  }
  return std::nullopt;
}

Dataset<double> build_dataset(std::span<const FeatureVector> features, std::span<const EssayRecord> corpus,
                              RubricAspect aspect, const FeatureRegistry& reg) {
  if (!is_language_aspect(aspect)) {
    throw ValidationError("aspect '" + std::string(aspect_key(aspect)) +
                          "' is not scored by the regression pipeline");
  }
  std::unordered_map<std::string, const FeatureVector*> by_id;
  for (const auto& fv : features) by_id.emplace(fv.essay_id, &fv);

  std::vector<std::size_t> cols;
  Dataset<double> ds;
  for (const auto& name : reg.names_for(aspect)) {
    cols.push_back(*reg.index_of(name));
    ds.feature_names.push_back(name);
  }
  std::vector<const EssayRecord*> rows;
  for (const auto& r : corpus) {
    if (by_id.count(r.id)) rows.push_back(&r);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  ds.X.resize(n, static_cast<Eigen::Index>(cols.size()));
  ds.y.resize(n);
  ds.g1 = VectorXd(n);
  ds.g2 = VectorXd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const EssayRecord& r = *rows[static_cast<std::size_t>(i)];
    const FeatureVector& fv = *by_id.at(r.id);
    for (std::size_t c = 0; c < cols.size(); ++c) ds.X(i, static_cast<Eigen::Index>(c)) = fv.values.at(cols[c]);
    ds.y(i) = consensus(r)[aspect];
    (*ds.g1)(i) = r.scores_g1[aspect];
    (*ds.g2)(i) = r.scores_g2[aspect];
    ds.essay_ids.push_back(r.id);
  }
  return ds;
}

std::string cv_report_json(const std::vector<PipelineResult<double>>& results, RubricAspect aspect,
                           const FoldPlan& plan, const Dataset<double>& ds) {
  json doc;
  doc["aspect"] = std::string(aspect_key(aspect));
  doc["rows"] = ds.rows();
  doc["features"] = ds.cols();
  doc["folds"] = plan.k;
  doc["fold_seed"] = plan.seed;
  doc["omitted_regressors"] = {"svr", "lasso", "elastic_net"};
  json runs = json::array();
  std::size_t best = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (r.mean_mae < results[best].mean_mae) best = i;
    json run;
    run["regressor"] = spec_json(r.spec);
    run["k_requested"] = r.k_requested;
    run["k_effective"] = r.k_effective;
    json maes = json::array();
    for (double m : r.fold_mae) maes.push_back(fmt(m));
    run["fold_mae"] = maes;
    run["mean_mae"] = fmt(r.mean_mae);
    run["sd_mae"] = fmt(r.sd_mae);
    run["retained_features"] = r.retained_features;
    run["selected_features"] = r.selected_features;
    if (r.in_range_pct) run["in_range_pct"] = fmt(*r.in_range_pct);
    runs.push_back(run);
  }
  doc["runs"] = runs;
  if (!results.empty()) doc["best_run"] = best;
  return doc.dump(2) + "\n";
}

std::string correlation_csv(const PipelineResult<double>& res, const Dataset<double>& ds) {
  std::string out = "feature,mean_r,sd_r\n";
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    out += ds.feature_names[j] + "," + fmt(res.correlations.mean(jj)) + "," + fmt(res.correlations.sd(jj)) + "\n";
  }
  return out;
}

}  // namespace aes
