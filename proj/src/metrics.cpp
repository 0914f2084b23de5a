#include "aes/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

namespace aes {

namespace {

using json = nlohmann::json;

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}

std::string sci3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    const auto at = line.find(sep, pos);
    if (at == std::string_view::npos) {
      cells.push_back(line.substr(pos));
      break;
    }
    cells.push_back(line.substr(pos, at - pos));
    pos = at + 1;
  }
  return cells;
}

}  // namespace

bool ModelSheet::complete() const {
  return std::all_of(scores.begin(), scores.end(), [](const auto& s) { return s.has_value(); });
}

int ModelSheet::total() const {
  int sum = 0;
  for (const auto& s : scores) {
    if (!s) throw ValidationError("total of an incomplete score sheet");
    sum += *s;
  }
  return sum;
}

void ScoreSheetSet::validate() const {
  if (g1.size() != essay_ids.size() || g2.size() != essay_ids.size()) {
    throw ValidationError("score sheet set: grader sheets misaligned with essays");
  }
  for (const auto& [id, sheets] : models) {
    if (sheets.size() != essay_ids.size()) {
      throw ValidationError("score sheet set: model '" + id + "' misaligned with essays");
    }
  }
}

std::string BiasTerm::stars() const {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

double t_two_sided_p(double t, double dof) {
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

TotalsTable totals_table(const ScoreSheetSet& s, std::span<const std::string> model_ids) {
  s.validate();
  TotalsTable t;
  for (std::size_t e = 0; e < s.size(); ++e) {
    t.g1.push_back(s.g1[e].total());
    t.g2.push_back(s.g2[e].total());
  }
  for (const auto& id : model_ids) {
    const auto it = s.models.find(id);
    if (it == s.models.end()) throw ValidationError("no scores for model '" + id + "'");
    std::vector<std::optional<double>> totals;
    for (const auto& sheet : it->second) {
      totals.push_back(sheet.complete() ? std::optional<double>(sheet.total()) : std::nullopt);
    }
    t.models.emplace_back(id, std::move(totals));
  }
  return t;
}

BiasReport bias_regression(const TotalsTable& t) {
  const std::size_t essays = t.g1.size();
  if (essays < 2 || t.g2.size() != essays) {
    throw ValidationError("bias regression needs at least two essays with both graders");
  }
  const std::size_t m = t.models.size();
  std::vector<std::pair<double, std::size_t>> obs;  // (total, 0 = human or model index + 1)
  for (std::size_t e = 0; e < essays; ++e) {
    obs.emplace_back(t.g1[e], 0);
    obs.emplace_back(t.g2[e], 0);
  }
  std::vector<std::size_t> counts(m, 0);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& totals = t.models[j].second;
    if (totals.size() != essays) throw ValidationError("model totals misaligned with essays");
    for (const auto& v : totals) {
      if (v) {
        obs.emplace_back(*v, j + 1);
        ++counts[j];
      }
    }
  }

  const auto n = static_cast<Eigen::Index>(obs.size());
  const auto p = static_cast<Eigen::Index>(m + 1);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    if (obs[static_cast<std::size_t>(i)].second > 0) {
      X(i, static_cast<Eigen::Index>(obs[static_cast<std::size_t>(i)].second)) = 1.0;
    }
    y(i) = obs[static_cast<std::size_t>(i)].first;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < p) {
    throw ValidationError("bias regression design is singular (a model has no complete sheets?)");
  }
  if (n <= p) throw ValidationError("bias regression has no residual degrees of freedom");
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - X * beta;
  const double dof = static_cast<double>(n - p);
  const double s2 = resid.squaredNorm() / dof;
  const Eigen::MatrixXd xtx_inv = (X.transpose() * X).inverse();

  auto term = [&](Eigen::Index k) {
    BiasTerm b;
    b.coefficient = beta(k);
    b.se = std::sqrt(s2 * xtx_inv(k, k));
    if (b.se == 0.0) {
      b.t = b.coefficient == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b.coefficient);
    } else {
      b.t = b.coefficient / b.se;
    }
    b.p = b.coefficient == 0.0 && b.se == 0.0 ? 1.0 : t_two_sided_p(b.t, dof);
    return b;
  };

  BiasReport r;
  r.observations = obs.size();
  const BiasTerm icpt = term(0);
  r.intercept = icpt.coefficient;
  r.intercept_se = icpt.se;
  for (std::size_t j = 0; j < m; ++j) {
    BiasTerm b = term(static_cast<Eigen::Index>(j + 1));
    b.model_id = t.models[j].first;
    b.n = counts[j];
    r.models.push_back(std::move(b));
  }
  return r;
}

BiasReport bias_regression(const ScoreSheetSet& s, std::span<const std::string> model_ids) {
  return bias_regression(totals_table(s, model_ids));
}

void parse_score_csv(std::string_view csv, ScoreTable& into) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  std::set<std::tuple<std::string, std::string, std::size_t>> seen;
  while (pos < csv.size()) {
    auto nl = csv.find('\n', pos);
    if (nl == std::string_view::npos) nl = csv.size();
    std::string_view line = csv.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "essay_id,aspect,score,source") {
        throw ValidationError("score CSV must start with header essay_id,aspect,score,source");
      }
      header_seen = true;
      continue;
    }
    const auto cells = split(line, ',');
    const std::string where = "score CSV line " + std::to_string(line_no);
    if (cells.size() != 4) throw ValidationError(where + ": expected 4 cells");
    const auto aspect = aspect_from_key(cells[1]);
    if (!aspect) throw ValidationError(where + ": unknown aspect '" + std::string(cells[1]) + "'");
    if (cells[0].empty() || cells[3].empty()) throw ValidationError(where + ": empty essay id or source");
    std::optional<int> score;
    if (!cells[2].empty()) {
      if (cells[2].size() != 1 || cells[2][0] < '0' || cells[2][0] > '3') {
        throw ValidationError(where + ": score must be 0..3 or empty");
      }
      score = cells[2][0] - '0';
    }
    const std::string source(cells[3]);
    const std::string essay(cells[0]);
    if (!seen.emplace(source, essay, index(*aspect)).second) {
      throw ValidationError(where + ": duplicate score for " + essay + "/" + std::string(cells[1]));
    }
    into[source][essay].scores[index(*aspect)] = score;
  }
  if (!header_seen) throw ValidationError("score CSV is empty");
}

ScoreTable load_score_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ValidationError("score directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no score CSV files in " + dir.string());
  ScoreTable table;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    parse_score_csv(buf.str(), table);
  }
  return table;
}

ScoreSheetSet make_sheet_set(std::span<const EssayRecord> corpus, const ScoreTable& scores) {
  ScoreSheetSet s;
  for (const auto& r : corpus) {
    s.essay_ids.push_back(r.id);
    s.g1.push_back(r.scores_g1);
    s.g2.push_back(r.scores_g2);
  }
  for (const auto& [model, by_essay] : scores) {
    auto& sheets = s.models[model];
    for (const auto& r : corpus) {
      const auto it = by_essay.find(r.id);
      sheets.push_back(it == by_essay.end() ? ModelSheet{} : it->second);
    }
  }
  return s;
}

EvalReport evaluate(std::span<const EssayRecord> corpus, const ScoreTable& scores) {
  std::map<int, std::vector<EssayRecord>> cohorts;
  for (const auto& r : corpus) cohorts[r.grade_level].push_back(r);

  std::string table1 = "cohort,source,n_essays,incomplete,bias,se,t,p,stars,mae_total,in_range_pct\n";
  std::string fig2 = "cohort,aspect,source,mae,accuracy,human_mad\n";
  json summary;
  summary["cohorts"] = json::array();

  for (const auto& [grade, records] : cohorts) {
    const ScoreSheetSet full = make_sheet_set(records, scores);
    const std::string cohort = std::to_string(grade);

    // Models with at least one score in this cohort.
    std::vector<std::string> present;
    std::vector<std::string> with_totals;
    for (const auto& [model, sheets] : full.models) {
      bool any = false;
      bool any_complete = false;
      for (const auto& sh : sheets) {
        any_complete = any_complete || sh.complete();
        for (const auto& v : sh.scores) any = any || v.has_value();
      }
      if (any) present.push_back(model);
      if (any_complete) with_totals.push_back(model);
    }

    std::optional<BiasReport> bias;
    if (records.size() >= 2) bias = bias_regression(full, with_totals);

    json cj;
    cj["cohort"] = grade;
    cj["essays"] = records.size();

    table1 += cohort + ",human_average," + std::to_string(records.size()) + ",0,";
    if (bias) {
      table1 += fixed6(bias->intercept) + "," + fixed6(bias->intercept_se);
      cj["human_average"] = bias->intercept;
    } else {
      table1 += ",";
    }
    table1 += ",,,,,\n";

    json models = json::array();
    for (const auto& model : present) {
      const auto& sheets = full.models.at(model);
      const auto incomplete = static_cast<std::size_t>(
          std::count_if(sheets.begin(), sheets.end(), [](const ModelSheet& m) { return !m.complete(); }));
      table1 += cohort + "," + model + "," + std::to_string(records.size()) + "," +
                std::to_string(incomplete) + ",";
      json mj = {{"source", model}, {"incomplete", incomplete}};
      const BiasTerm* term = nullptr;
      if (bias) {
        for (const auto& b : bias->models) {
          if (b.model_id == model) term = &b;
        }
      }
      if (term) {
        table1 += fixed6(term->coefficient) + "," + fixed6(term->se) + "," + fixed6(term->t) + "," +
                  sci3(term->p) + "," + term->stars() + ",";
        mj["bias"] = term->coefficient;
        mj["p"] = term->p;
        mj["stars"] = term->stars();
      } else {
        table1 += ",,,,,";
      }
      const auto tm = total_mae<double>(full, model);
      if (tm) {
        const double pct = in_range_total_pct<double>(full, model);
        table1 += fixed6(*tm) + "," + fixed6(pct) + "\n";
        mj["mae_total"] = *tm;
        mj["in_range_pct"] = pct;
      } else {
        table1 += ",\n";
      }
      models.push_back(mj);
    }
    cj["sources"] = models;
    summary["cohorts"].push_back(cj);

    const auto mad = human_mad<double>(full);
    std::map<std::string, std::array<std::optional<double>, kAspectCount>> per_model;
    for (const auto& model : present) per_model[model] = aspect_mae<double>(full, model);
    for (RubricAspect a : kAllAspects) {
      for (const auto& model : present) {
        const auto& v = per_model[model][index(a)];
        fig2 += cohort + "," + std::string(aspect_key(a)) + "," + model + ",";
        if (v) {
          fig2 += fixed6(*v) + "," + fixed6(accuracy(*v));
        } else {
          fig2 += ",";
        }
        fig2 += "," + fixed6(mad[index(a)]) + "\n";
      }
    }
  }

  summary["reference_values"] = {
      {"note", "published figures on the unreleased corpus; not reproducible offline"},
      {"grade9_human_average", 16.08},
      {"grade9_gpt_4_1_bias", 1.71},
      {"grade9_gpt_4o_bias", 0.46},
      {"grade9_gpt_4o_mae_total", 2.66},
      {"grade9_gpt_4o_in_range_pct", 67},
      {"planted_bias_examples", {-3.66, 0.46, 4.68}},
      {"injection_mean_delta", 6.43},
      {"injection_min_delta", 2},
      {"injection_max_delta", 16},
      {"generated_essays_scored_27", "19/20"},
      {"grade9_vocabulary_lr_rr_k10_in_range_pct", 70},
      {"total_tokens", 9098937},
      {"total_cost_usd", 20},
  };
  return {table1, fig2, summary.dump(2) + "\n"};
}

}  // namespace aes
