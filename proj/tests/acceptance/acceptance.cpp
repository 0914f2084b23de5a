// Acceptance suite: one PASS/FAIL/SKIP line per criterion, exit 1 on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "aes/editlab.hpp"
#include "aes/experiments.hpp"
#include "aes/featureset.hpp"
#include "aes/llmgrade.hpp"
#include "aes/metrics.hpp"
#include "aes/regress.hpp"
#include "fixtures.hpp"

using namespace aes;
using Q = boost::rational<long long>;
namespace fs = std::filesystem;

namespace {

struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 8) failures.push_back(what);
    if (!ok && failures.size() == 8) failures.push_back("...");
  }
};

struct Outcome {
  enum Kind { Pass, Fail, Skip } kind = Pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Outcome verdict(const Check& c, const std::string& ok_detail) {
  if (c.failures.empty()) return {Outcome::Pass, ok_detail};
  std::string d;
  for (const auto& f : c.failures) d += (d.empty() ? "" : "; ") + f;
  return {Outcome::Fail, d};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("aes_acceptance_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

// ---------------------------------------------------------------------------
// AC1: metric oracles over rationals

Q q_abs(Q x) { return x < 0 ? -x : x; }

Q oracle_distance(Q h1, Q h2, Q m) {
  const Q lo = h1 < h2 ? h1 : h2;
  const Q hi = h1 < h2 ? h2 : h1;
  if (lo <= m && m <= hi) return Q(0);
  return m < lo ? lo - m : m - hi;
}

Outcome ac1_metric_oracles() {
  const auto t0 = Clock::now();
  Check c;
  std::mt19937_64 rng(20240601);

  for (int scale : {3, 27}) {
    std::uniform_int_distribution<int> human(0, scale);
    std::uniform_int_distribution<int> model_quarters(0, 4 * scale);
    std::vector<std::pair<Q, Q>> pairs;
    Q sum(0);
    for (int i = 0; i < 1000; ++i) {
      const Q h1(human(rng));
      const Q h2(human(rng));
      const Q m(model_quarters(rng), 4);
      const Q d = out_of_range_distance(h1, h2, m);
      c.expect(d == oracle_distance(h1, h2, m), "distance mismatch on scale " + std::to_string(scale));
      const double dd = out_of_range_distance(boost::rational_cast<double>(h1), boost::rational_cast<double>(h2),
                                              boost::rational_cast<double>(m));
      c.expect(dd == boost::rational_cast<double>(d), "double distance differs from rational");
      const Q consensus = (h1 + h2) / 2;
      pairs.emplace_back(m, consensus);
      sum += q_abs(m - consensus);
    }
    const Q oracle_mae = sum / 1000;
    const Q got = mae<Q>(pairs);
    c.expect(got == oracle_mae, "mae mismatch on scale " + std::to_string(scale));
    c.expect(accuracy(got, Q(scale)) == (Q(1) - oracle_mae / scale) * 100, "accuracy mismatch");
  }

  // Essay-level measures: 1000 essays of nine aspect triples.
  std::uniform_int_distribution<int> score(0, 3);
  ScoreSheetSet s;
  auto& model = s.models["m"];
  for (int e = 0; e < 1000; ++e) {
    std::array<int, kAspectCount> a{};
    std::array<int, kAspectCount> b{};
    ModelSheet m;
    for (std::size_t k = 0; k < kAspectCount; ++k) {
      a[k] = score(rng);
      b[k] = std::clamp(a[k] + score(rng) - 1 - (score(rng) == 3 ? 1 : 0), 0, 3);
      m.scores[k] = score(rng);
    }
    s.essay_ids.push_back("e" + std::to_string(e));
    s.g1.emplace_back(a);
    s.g2.emplace_back(b);
    model.push_back(m);
  }

  // In-range oracle: every grader-per-aspect combination, 2^9 per essay.
  long inside = 0;
  for (std::size_t e = 0; e < s.size(); ++e) {
    int lo = 1 << 30;
    int hi = -1;
    for (int mask = 0; mask < (1 << kAspectCount); ++mask) {
      int t = 0;
      for (std::size_t k = 0; k < kAspectCount; ++k) {
        t += (mask >> k) & 1 ? s.g2[e].values()[k] : s.g1[e].values()[k];
      }
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    const int total = model[e].total();
    if (lo <= total && total <= hi) ++inside;
  }
  c.expect(in_range_total_pct<Q>(s, "m") == Q(100 * inside, 1000), "in_range_total_pct mismatch");

  const auto mad = human_mad<Q>(s);
  for (std::size_t k = 0; k < kAspectCount; ++k) {
    Q acc(0);
    for (std::size_t e = 0; e < s.size(); ++e) {
      const Q x(s.g1[e].values()[k]);
      const Q y(s.g2[e].values()[k]);
      // Each grader sits |x - y| / 2 away from the consensus.
      acc += q_abs(x - y);
    }
    c.expect(mad[k] == acc / 2 / 1000, "human_mad mismatch on aspect " + std::to_string(k));
  }

  Q total_err(0);
  for (std::size_t e = 0; e < s.size(); ++e) {
    total_err += q_abs(Q(model[e].total()) - Q(s.g1[e].total() + s.g2[e].total(), 2));
  }
  c.expect(*total_mae<Q>(s, "m") == total_err / 1000, "total mae mismatch");

  const double secs = seconds_since(t0);
  c.expect(secs < 1.0, "runtime " + num(secs) + " s >= 1 s");
  return verdict(c, "1000 triples x 2 scales + 1000 essays exact (" + num(secs) + " s)");
}

// ---------------------------------------------------------------------------
// AC2: planted bias

Outcome ac2_bias() {
  const auto t0 = Clock::now();
  Check c;
  const std::vector<double> deltas{-3.66, 0.46, 4.68};
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> base(14, 18);
  std::uniform_int_distribution<int> wobble(-1, 1);

  TotalsTable t;
  double human_sum = 0;
  for (int e = 0; e < 300; ++e) {
    const int g1 = base(rng);
    const int g2 = std::clamp(g1 + wobble(rng), 0, 27);
    t.g1.push_back(g1);
    t.g2.push_back(g2);
    human_sum += g1 + g2;
  }
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    std::vector<std::optional<double>> totals;
    for (int e = 0; e < 300; ++e) totals.emplace_back((t.g1[static_cast<std::size_t>(e)] + t.g2[static_cast<std::size_t>(e)]) / 2.0 + deltas[j]);
    t.models.emplace_back("planted_" + std::to_string(j), std::move(totals));
  }
  const auto r = bias_regression(t);
  const double human_mean = human_sum / 600.0;
  c.expect(std::abs(r.intercept - human_mean) <= 1e-9, "intercept " + num(r.intercept) + " vs " + num(human_mean));
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    const auto& b = r.models[j];
    c.expect(std::abs(b.coefficient - deltas[j]) <= 1e-9, "coefficient " + num(b.coefficient) + " vs " + num(deltas[j]));
    if (std::abs(deltas[j]) >= 0.46) c.expect(b.p < 0.001, "p " + num(b.p) + " for delta " + num(deltas[j]));
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 1.0, "runtime " + num(secs) + " s");
  return verdict(c, "offsets recovered within 1e-9, max p " +
                        num(std::max({r.models[0].p, r.models[1].p, r.models[2].p})) + " (" + num(secs) + " s)");
}

// ---------------------------------------------------------------------------
// AC3: regression engine

// Normal equations with partial-pivot Gaussian elimination in long double.
std::vector<long double> oracle_ols(const MatrixXd& X, const VectorXd& y) {
  const std::size_t n = static_cast<std::size_t>(X.rows());
  const std::size_t p = static_cast<std::size_t>(X.cols()) + 1;
  std::vector<std::vector<long double>> A(p, std::vector<long double>(p + 1, 0.0L));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<long double> row(p);
    row[0] = 1.0L;
    for (std::size_t j = 1; j < p; ++j) row[j] = X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1));
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b < p; ++b) A[a][b] += row[a] * row[b];
      A[a][p] += row[a] * y(static_cast<Eigen::Index>(i));
    }
  }
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < p; ++r) {
      if (std::fabs(A[r][col]) > std::fabs(A[piv][col])) piv = r;
    }
    std::swap(A[col], A[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == col) continue;
      const long double f = A[r][col] / A[col][col];
      for (std::size_t k = col; k <= p; ++k) A[r][k] -= f * A[col][k];
    }
  }
  std::vector<long double> beta(p);
  for (std::size_t j = 0; j < p; ++j) beta[j] = A[j][p] / A[j][j];
  return beta;
}

Outcome ac3_regression() {
  const auto t0 = Clock::now();
  Check c;
  const std::size_t n = 500;
  const std::size_t p = 30;
  const std::vector<std::size_t> informative{3, 8, 14, 21, 27};
  const std::vector<double> beta{0.15, 0.12, 0.10, 0.08, 0.06};
  const double noise_sd = 0.1;

  std::mt19937_64 rng(31337);
  std::normal_distribution<double> g(0.0, 1.0);
  Dataset<double> ds;
  ds.X.resize(n, p);
  ds.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 1.5;
    for (std::size_t j = 0; j < p; ++j) ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g(rng);
    for (std::size_t k = 0; k < informative.size(); ++k) {
      v += beta[k] * ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(informative[k]));
    }
    ds.y(static_cast<Eigen::Index>(i)) = v + noise_sd * g(rng);
  }
  for (std::size_t j = 0; j < p; ++j) ds.feature_names.push_back("x" + std::to_string(j));

  c.expect(f_select(ds.X, ds.y, 5) == informative, "f_select did not recover the planted set");

  const auto ols = fit<double>({RegressorKind::OLS}, ds.X, ds.y);
  const auto oracle = oracle_ols(ds.X, ds.y);
  double worst = std::abs(ols.intercept - static_cast<double>(oracle[0]));
  for (std::size_t j = 0; j < p; ++j) {
    worst = std::max(worst, std::abs(ols.beta(static_cast<Eigen::Index>(j)) - static_cast<double>(oracle[j + 1])));
  }
  c.expect(worst <= 1e-6, "OLS vs normal-equation oracle differs by " + num(worst));

  RegressorSpec ridge{RegressorKind::Ridge};
  ridge.lambda = 1e-8;
  const auto rm = fit<double>(ridge, ds.X, ds.y);
  const double ridge_gap = std::max((rm.beta - ols.beta).cwiseAbs().maxCoeff(), std::abs(rm.intercept - ols.intercept));
  c.expect(ridge_gap <= 1e-6, "ridge(1e-8) vs OLS differs by " + num(ridge_gap));

  const auto plan = FoldPlan::make(n, 10, 99);
  const auto cv1 = cross_validate(ds, {RegressorKind::OLS}, 5, plan);
  const auto cv2 = cross_validate(ds, {RegressorKind::OLS}, 5, FoldPlan::make(n, 10, 99));
  c.expect(cv1.mean_mae < noise_sd, "CV mean MAE " + num(cv1.mean_mae) + " >= noise SD");
  c.expect(cv1.predictions == cv2.predictions && cv1.fold_mae == cv2.fold_mae && cv1.mean_mae == cv2.mean_mae,
           "rerun with the same seed is not bitwise identical");

  const double secs = seconds_since(t0);
  c.expect(secs < 10.0, "runtime " + num(secs) + " s");
  return verdict(c, "OLS gap " + num(worst) + ", ridge gap " + num(ridge_gap) + ", CV MAE " + num(cv1.mean_mae) + " (" +
                        num(secs) + " s)");
}

// ---------------------------------------------------------------------------
// AC4: pruning against exhaustive grouping

double oracle_r(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return (sxx == 0 || syy == 0) ? 0.0 : sxy / std::sqrt(sxx * syy);
}

Outcome ac4_pruning() {
  Check c;
  int trials_run = 0;
  int groups_seen = 0;
  for (std::uint64_t seed = 1; trials_run < 25 && seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 120;
    // Four correlated triples, one chained triple and three loners.
    const std::size_t p = 4 * 3 + 3 + 3;
    MatrixXd X(n, p);
    VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      double target = 0;
      for (int grp = 0; grp < 4; ++grp) {
        const double z = g(rng);
        for (int m = 0; m < 3; ++m) X(r, grp * 3 + m) = z + (0.15 + 0.1 * m) * g(rng);
        target += (0.3 + 0.2 * grp) * z;
      }
      const double z1 = g(rng);
      const double z2 = g(rng);
      X(r, 12) = z1;
      X(r, 13) = z1 + 0.55 * z2;
      X(r, 14) = z1 + 1.1 * z2;
      for (int m = 0; m < 3; ++m) X(r, 15 + m) = g(rng);
      y(r) = target + 0.4 * X(r, 13) + 0.2 * X(r, 15) + (0.5 + u(rng)) * g(rng);
    }

    const auto plan = FoldPlan::make(n, 5, seed);
    std::vector<MatrixXd> xs;
    std::vector<VectorXd> ys;
    for (std::size_t f = 0; f < plan.k; ++f) {
      const auto rows = plan.train_rows(f);
      xs.push_back(select_rows(X, std::span<const std::size_t>(rows)));
      ys.push_back(select_rows(y, std::span<const std::size_t>(rows)));
    }

    // Oracle: mean r over folds, transitive closure, argmax |mean r with y|.
    std::vector<std::vector<double>> mean_r(p, std::vector<double>(p, 0.0));
    std::vector<double> target_r(p, 0.0);
    for (std::size_t f = 0; f < xs.size(); ++f) {
      std::vector<std::vector<double>> cols(p);
      for (std::size_t j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < xs[f].rows(); ++i) cols[j].push_back(xs[f](i, static_cast<Eigen::Index>(j)));
      }
      const std::vector<double> yy(ys[f].data(), ys[f].data() + ys[f].size());
      for (std::size_t a = 0; a < p; ++a) {
        target_r[a] += oracle_r(cols[a], yy) / static_cast<double>(xs.size());
        for (std::size_t b = 0; b < p; ++b) mean_r[a][b] += oracle_r(cols[a], cols[b]) / static_cast<double>(xs.size());
      }
    }
    bool near_threshold = false;
    std::vector<std::vector<bool>> reach(p, std::vector<bool>(p, false));
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b < p; ++b) {
        if (a != b && std::abs(std::abs(mean_r[a][b]) - 0.8) < 1e-6) near_threshold = true;
        reach[a][b] = a == b || std::abs(mean_r[a][b]) > 0.8;
      }
    }
    if (near_threshold) continue;
    for (std::size_t k = 0; k < p; ++k)
      for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b)
          if (reach[a][k] && reach[k][b]) reach[a][b] = true;
    std::set<std::size_t> expected;
    std::set<std::set<std::size_t>> groups;
    for (std::size_t a = 0; a < p; ++a) {
      std::set<std::size_t> members;
      for (std::size_t b = 0; b < p; ++b) {
        if (reach[a][b]) members.insert(b);
      }
      groups.insert(members);
    }
    for (const auto& grp : groups) {
      std::size_t best = *grp.begin();
      for (std::size_t j : grp) {
        if (std::abs(target_r[j]) > std::abs(target_r[best])) best = j;
      }
      expected.insert(best);
      if (grp.size() > 1) ++groups_seen;
    }

    const auto got = prune_multicollinear<double>(xs, ys);
    c.expect(std::set<std::size_t>(got.begin(), got.end()) == expected,
             "survivors differ from the exhaustive oracle for seed " + std::to_string(seed));
    c.expect(std::is_sorted(got.begin(), got.end()), "survivors not sorted");
    ++trials_run;
  }
  c.expect(trials_run == 25, "only " + std::to_string(trials_run) + " usable trials");
  c.expect(groups_seen >= 4 * 25, "too few correlated groups constructed");
  return verdict(c, std::to_string(trials_run) + " trials, " + std::to_string(groups_seen) + " correlated groups");
}

// ---------------------------------------------------------------------------
// AC5: MTLD

// Counts factors by recomputing each prefix TTR from scratch with exact
// integer comparisons (types/count < 18/25).
double oracle_mtld_pass(const std::vector<std::string>& seq) {
  std::size_t start = 0;
  double full = 0;
  std::size_t end = 0;
  while (end < seq.size()) {
    ++end;
    const std::set<std::string> types(seq.begin() + static_cast<long>(start), seq.begin() + static_cast<long>(end));
    const std::size_t count = end - start;
    if (types.size() * 25 < 18 * count) {
      full += 1.0;
      start = end;
    }
  }
  if (start == seq.size()) return full;
  const std::set<std::string> types(seq.begin() + static_cast<long>(start), seq.end());
  const double ttr = static_cast<double>(types.size()) / static_cast<double>(seq.size() - start);
  return full + (1.0 - ttr) / (1.0 - 0.72);
}

double oracle_mtld(const std::vector<std::string>& seq) {
  std::vector<std::string> rev(seq.rbegin(), seq.rend());
  const double mean = (oracle_mtld_pass(seq) + oracle_mtld_pass(rev)) / 2.0;
  return mean == 0.0 ? static_cast<double>(seq.size()) : static_cast<double>(seq.size()) / mean;
}

Outcome ac5_mtld() {
  Check c;
  std::mt19937_64 rng(424242);
  for (int i = 0; i < 200; ++i) {
    const std::size_t len = 1 + rng() % 200;
    const int vocab = 2 + static_cast<int>(rng() % 60);
    std::vector<std::string> seq;
    for (std::size_t k = 0; k < len; ++k) seq.push_back("w" + std::to_string(rng() % static_cast<std::uint64_t>(vocab)));
    const double got = mtld(seq);
    const double want = oracle_mtld(seq);
    c.expect(got == want, "sequence " + std::to_string(i) + ": " + num(got) + " vs " + num(want));
  }
  std::vector<std::string> unique;
  for (int k = 0; k < 150; ++k) unique.push_back("u" + std::to_string(k));
  c.expect(mtld(unique) == 150.0 && oracle_mtld(unique) == 150.0, "all-unique sequence");
  const std::vector<std::string> same(151, "x");
  c.expect(mtld(same) == oracle_mtld(same), "all-identical sequence");
  c.expect(mtld_factors(same) == 75.0, "all-identical factor count");
  return verdict(c, "200 sequences plus edge cases equal bit for bit");
}

// ---------------------------------------------------------------------------
// AC6: feature golden file and registry

Outcome ac6_features() {
  Check c;
  const auto& reg = FeatureRegistry::builtin();
  c.expect(reg.size() == 108, "registry size");
  c.expect(reg.count(FeatureCategory::Surface) == 12 && reg.count(FeatureCategory::Lexical) == 20 &&
               reg.count(FeatureCategory::Grammatical) == 53 && reg.count(FeatureCategory::Error) == 23,
           "category counts");
  c.expect(reg.count(RubricAspect::Punctuation) == 6 && reg.count(RubricAspect::Orthography) == 11 &&
               reg.count(RubricAspect::Structuring) == 11 && reg.count(RubricAspect::Vocabulary) == 52 &&
               reg.count(RubricAspect::Syntax) == 62,
           "aspect counts");
  const auto fv = aes::testing::fixture_features();
  const auto golden = aes::testing::golden_features();
  c.expect(golden.size() == 108, "golden sheet has " + std::to_string(golden.size()) + " rows");
  double worst = 0;
  for (const auto& [name, value] : golden) {
    const double d = std::abs(fv.at(reg, name) - value);
    worst = std::max(worst, d);
    c.expect(d <= 1e-9, name + " = " + num(fv.at(reg, name)) + ", golden " + num(value));
  }
  return verdict(c, "108 features within " + num(worst) + " of golden; 12+20+53+23; 6/11/11/52/62");
}

// ---------------------------------------------------------------------------
// AC7: edit classification

std::size_t oracle_levenshtein(const std::vector<EditToken>& a, const std::vector<EditToken>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t best = std::min(d[i - 1][j], d[i][j - 1]) + 1;
      if (a[i - 1].surface == b[j - 1].surface) {
        best = std::min(best, d[i - 1][j - 1]);
      } else if (a[i - 1].is_word == b[j - 1].is_word) {
        best = std::min(best, d[i - 1][j - 1] + 1);
      }
      d[i][j] = best;
    }
  }
  return d[a.size()][b.size()];
}

Outcome ac7_edits() {
  Check c;
  const auto pairs = aes::testing::load_edit_pairs();
  const auto golden = aes::testing::load_edit_golden();
  c.expect(pairs.size() == 20, "expected 20 pairs");
  std::set<EditKind> kinds;
  std::size_t compared = 0;
  for (const auto& p : pairs) {
    std::vector<Edit> want;
    for (const auto& g : golden) {
      if (g.id == p.id) want.push_back(g.edit);
    }
    for (const auto& e : want) kinds.insert(e.kind);
    const auto got = aes::testing::edits_for(p).edits;
    c.expect(got == want, "pair " + p.id + " edits differ from golden");

    const auto a = edit_tokens(segment(p.original), false);
    const auto b = edit_tokens(segment(p.corrected), false);
    if (a.size() <= 50 && b.size() <= 50) {
      c.expect(script_cost(align(a, b)) == oracle_levenshtein(a, b), "pair " + p.id + " alignment cost");
      ++compared;
    }
  }
  c.expect(kinds.size() == kEditKindCount, "golden covers " + std::to_string(kinds.size()) + " kinds");

  // Random perturbations of the fixture sentences, also within 50 tokens.
  std::mt19937_64 rng(5150);
  const std::vector<std::string> vocab{"ma", "sa", "ta", "kool", "läks", "koju", ",", ".", "!", "ja", "et", "täna"};
  for (int t = 0; t < 300; ++t) {
    std::vector<EditToken> a;
    std::vector<EditToken> b;
    const std::size_t la = rng() % 40;
    for (std::size_t i = 0; i < la; ++i) {
      const auto& w = vocab[rng() % vocab.size()];
      a.push_back({w, "", w != "," && w != "." && w != "!", 0});
    }
    b = a;
    const int ops = static_cast<int>(rng() % 8);
    for (int o = 0; o < ops; ++o) {
      const auto& w = vocab[rng() % vocab.size()];
      const EditToken tok{w, "", w != "," && w != "." && w != "!", 0};
      const std::size_t at = b.empty() ? 0 : rng() % (b.size() + 1);
      switch (rng() % 3) {
        case 0:
          b.insert(b.begin() + static_cast<long>(at), tok);
          break;
        case 1:
          if (at < b.size()) b.erase(b.begin() + static_cast<long>(at));
          break;
        default:
          if (at < b.size()) b[at] = tok;
      }
    }
    c.expect(script_cost(align(a, b)) == oracle_levenshtein(a, b), "random pair " + std::to_string(t));
    ++compared;
  }
  return verdict(c, "20 golden pairs exact, all 10 kinds, " + std::to_string(compared) + " alignments match DP oracle");
}

// ---------------------------------------------------------------------------
// AC8: offline grading end to end

struct ScriptedCorpus {
  std::vector<EssayRecord> essays;
  EndpointConfig endpoint;
  std::map<std::string, int> truth;
};

ScriptedCorpus scripted_corpus(std::size_t n, int max_score, std::uint64_t seed) {
  ScriptedCorpus sc;
  std::mt19937_64 rng(seed);
  sc.endpoint.backoff_base_ms = 0;
  sc.endpoint.backoff_max_ms = 0;
  sc.endpoint.concurrency_limit = 8;
  sc.endpoint.price_in = 2.0;
  sc.endpoint.price_out = 8.0;
  for (std::size_t i = 0; i < n; ++i) {
    EssayRecord r;
    r.id = "s" + std::to_string(i);
    r.text = "Sünteetiline essee number " + std::to_string(i) + ". Koolis peaks olema tervislik toit.";
    int total = 0;
    for (RubricAspect a : kAllAspects) {
      const int s = static_cast<int>(rng() % static_cast<std::uint64_t>(max_score + 1));
      sc.endpoint.mock.script[r.id][a] = s;
      total += s;
    }
    sc.truth[r.id] = total;
    sc.essays.push_back(std::move(r));
  }
  return sc;
}

Outcome ac8_offline_grading() {
  const auto t0 = Clock::now();
  Check c;
  const auto rubric = RubricConfig::load(aes::testing::data_file("rubric_9.json"));
  auto sc = scripted_corpus(100, 3, 88);
  const auto dir = scratch("ac8");
  BatchOptions opts;
  opts.cache_dir = dir;

  MockProvider mock(sc.endpoint.mock);
  const auto first = run_batch(rubric, sc.endpoint, mock, sc.essays, opts);
  c.expect(first.ledger.calls == 900, "first run calls " + std::to_string(first.ledger.calls));
  c.expect(first.ledger.requests == 900, "first run requests " + std::to_string(first.ledger.requests));
  auto check_totals = [&](const BatchResult& r, const std::string& label) {
    const auto sheets = collect_sheets(r.outcomes);
    for (const auto& [id, total] : sc.truth) {
      const auto it = sheets.find(id);
      c.expect(it != sheets.end() && it->second.complete() && it->second.total() == total,
               label + ": total mismatch for " + id);
    }
  };
  check_totals(first, "first run");

  MockProvider again(sc.endpoint.mock);
  const auto second = run_batch(rubric, sc.endpoint, again, sc.essays, opts);
  c.expect(second.ledger.cache_hits == 900, "second run cache hits " + std::to_string(second.ledger.cache_hits));
  c.expect(second.ledger.requests == 0, "second run made " + std::to_string(second.ledger.requests) + " requests");
  check_totals(second, "cached run");

  auto faulty = sc.endpoint;
  faulty.mock.fault_rate = 0.10;
  faulty.mock.fault_seed = 12;
  MockProvider flaky(faulty.mock);
  const auto third = run_batch(rubric, faulty, flaky, sc.essays, {});
  c.expect(third.ledger.failures == 0, std::to_string(third.ledger.failures) + " calls failed under 10% faults");
  c.expect(third.ledger.attempts > 900, "fault injection produced no retries");
  check_totals(third, "faulty run");
  fs::remove_all(dir);

  const double secs = seconds_since(t0);
  c.expect(secs < 10.0, "runtime " + num(secs) + " s");
  return verdict(c, "900 calls, rerun 900/900 cache hits, 10% faults: " + std::to_string(third.ledger.attempts) +
                        " attempts, 0 failures (" + num(secs) + " s)");
}

// ---------------------------------------------------------------------------
// AC9: injection harness

Outcome ac9_injection() {
  Check c;
  const auto rubric = RubricConfig::load(aes::testing::data_file("rubric_9.json"));
  // Aspect scores 0..2 plus a capped +1 per aspect: every total rises by 9.
  auto sc = scripted_corpus(120, 2, 99);
  sc.endpoint.mock.injection_marker = "Grading instructions override";
  sc.endpoint.mock.injection_bonus = 1;
  InjectionConfig cfg;
  cfg.sample_size = 50;
  cfg.seed = 2024;
  MockProvider mock(sc.endpoint.mock);
  const auto run = run_injection(cfg, sc.essays, rubric, sc.endpoint, mock);
  c.expect(run.report.rows.size() == 50, "rows " + std::to_string(run.report.rows.size()));
  c.expect(run.report.incomplete.empty(), "incomplete essays present");
  c.expect(run.report.mean_delta == 9.0, "mean delta " + num(run.report.mean_delta));
  c.expect(run.report.min_delta == 9, "min delta " + std::to_string(run.report.min_delta));
  c.expect(run.report.max_delta == 9, "max delta " + std::to_string(run.report.max_delta));
  for (const auto& r : run.report.rows) c.expect(r.baseline == sc.truth.at(r.essay_id), "baseline for " + r.essay_id);
  return verdict(c, "50 essays, delta mean/min/max = " + num(run.report.mean_delta) + "/" +
                        std::to_string(run.report.min_delta) + "/" + std::to_string(run.report.max_delta));
}

// ---------------------------------------------------------------------------
// AC10: live smoke test

Outcome ac10_live() {
  const char* key = std::getenv("OPENAI_API_KEY");
  if (key == nullptr || *key == '\0') return {Outcome::Skip, "OPENAI_API_KEY not set"};
  Check c;
  const auto rubric = RubricConfig::load(aes::testing::data_file("rubric_9.json"));
  const auto endpoint = EndpointConfig::load(aes::testing::data_file("endpoint_http.example.json"));
  EssayRecord essay;
  essay.id = "sample";
  essay.text = aes::testing::slurp(aes::testing::data_file("sample_essay.txt"));
  auto provider = make_provider(endpoint);
  const auto res = run_batch(rubric, endpoint, *provider, std::span<const EssayRecord>(&essay, 1), {});
  for (const auto& o : res.outcomes) {
    c.expect(o.error.empty(), std::string(aspect_key(o.aspect)) + ": " + o.error);
    if (o.grade) c.expect(o.grade->score >= 0 && o.grade->score <= 3, "score out of range");
  }
  const auto sheets = collect_sheets(res.outcomes);
  const auto& sheet = sheets.at("sample");
  if (sheet.complete()) c.expect(sheet.total() >= 0 && sheet.total() <= 27, "total out of range");
  c.expect(res.ledger.estimated_cost > 0.0, "ledger cost is zero");
  return verdict(c, "9 aspects parsed, total " + (sheet.complete() ? std::to_string(sheet.total()) : std::string("-")) +
                        ", cost $" + num(res.ledger.estimated_cost));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1 metric oracle equivalence", ac1_metric_oracles},
      {"AC2 bias regression", ac2_bias},
      {"AC3 regression engine", ac3_regression},
      {"AC4 multicollinearity pruning", ac4_pruning},
      {"AC5 MTLD oracle", ac5_mtld},
      {"AC6 feature golden file", ac6_features},
      {"AC7 edit classification", ac7_edits},
      {"AC8 offline grading", ac8_offline_grading},
      {"AC9 injection harness", ac9_injection},
      {"AC10 live smoke test", ac10_live},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {Outcome::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.kind == Outcome::Pass ? "PASS" : o.kind == Outcome::Skip ? "SKIP" : "FAIL";
    std::printf("%-34s %s  %s\n", name.c_str(), tag, o.detail.c_str());
    if (o.kind == Outcome::Fail) ++failed;
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
