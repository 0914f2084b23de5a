#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "aes/corpus.hpp"
#include "aes/editlab.hpp"
#include "aes/errors.hpp"
#include "aes/experiments.hpp"
#include "aes/featureset.hpp"
#include "aes/llmgrade.hpp"
#include "aes/manifest.hpp"
#include "aes/metrics.hpp"
#include "aes/regress.hpp"
#include "aes/textproc.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw aes::ValidationError("cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// All writes of a subcommand go through here so nothing lands outside --out.
class OutDir {
 public:
  explicit OutDir(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  const fs::path& root() const { return root_; }

  void write(const fs::path& rel, std::string_view contents) {
    if (rel.is_absolute() || rel.lexically_normal().string().rfind("..", 0) == 0) {
      throw aes::InvariantViolation("refusing to write outside the output directory: " + rel.string());
    }
    const fs::path full = root_ / rel;
    fs::create_directories(full.parent_path());
    std::ofstream out(full, std::ios::binary);
    out << contents;
    if (!out) throw aes::ValidationError("cannot write " + full.string());
    manifest.outputs.push_back(rel.generic_string());
  }

  void finish(int code) {
    manifest.exit_code = code;
    manifest.finished_at = aes::utc_timestamp();
    std::sort(manifest.outputs.begin(), manifest.outputs.end());
    std::ofstream out(root_ / "manifest.json", std::ios::binary);
    out << manifest.to_json();
  }

  aes::RunManifest manifest;

 private:
  fs::path root_;
};

struct Context {
  std::vector<std::string> argv;
  std::unique_ptr<OutDir> out;

  OutDir& open(const std::string& command, const fs::path& dir) {
    out = std::make_unique<OutDir>(dir);
    out->manifest.command = command;
    out->manifest.argv = argv;
    out->manifest.started_at = aes::utc_timestamp();
    return *out;
  }
};

const aes::FeatureRegistry& registry_or_builtin(const std::string& path, aes::FeatureRegistry& storage) {
  if (path.empty()) return aes::FeatureRegistry::builtin();
  try {
    storage = aes::FeatureRegistry::load(path);
  } catch (const aes::InvariantViolation& e) {
    throw aes::ValidationError(std::string("feature registry rejected: ") + e.what());
  }
  return storage;
}

std::vector<aes::EssayRecord> load_records(const fs::path& path, std::optional<int> grade, OutDir& out) {
  auto loaded = aes::load_corpus(path, grade);
  if (!loaded.skipped.empty()) {
    std::string csv = "line,essay_id,reason\n";
    for (const auto& s : loaded.skipped) {
      std::string reason = s.reason;
      std::replace(reason.begin(), reason.end(), ',', ';');
      csv += std::to_string(s.line) + "," + s.id + "," + reason + "\n";
    }
    out.write("skipped.csv", csv);
  }
  return std::move(loaded.records);
}

// ---------------------------------------------------------------------------

struct ExtractArgs {
  fs::path corpus, annotations, freq, abstr, out;
  std::string registry;
  std::optional<int> grade;
};

int run_extract(Context& ctx, const ExtractArgs& a) {
  OutDir& out = ctx.open("extract", a.out);
  aes::FeatureRegistry storage;
  const auto& reg = registry_or_builtin(a.registry, storage);
  if (!a.registry.empty()) out.manifest.add_input(a.registry);
  for (const auto& p : {a.corpus, a.annotations, a.freq, a.abstr}) out.manifest.add_input(p);

  const auto records = load_records(a.corpus, a.grade, out);
  const auto freq = aes::FrequencyList::load(a.freq);
  const auto abstr = aes::AbstractnessLexicon::load(a.abstr);
  std::vector<aes::FeatureVector> rows;
  std::string flags = "essay_id,flags\n";
  for (const auto& r : records) {
    aes::EssayInputs in;
    const fs::path base = a.annotations / r.id;
    if (fs::exists(base.string() + ".conllu")) in.annotated = aes::load_conllu(base.string() + ".conllu");
    if (fs::exists(base.string() + ".corr.txt")) in.corrected = slurp(base.string() + ".corr.txt");
    if (fs::exists(base.string() + ".spell.tsv")) in.spelling = aes::load_spell_sidecar(base.string() + ".spell.tsv");
    rows.push_back(aes::assemble(r, in, freq, abstr, reg));
    std::string joined;
    for (const auto& f : rows.back().flags) joined += (joined.empty() ? "" : ";") + f;
    flags += r.id + "," + joined + "\n";
  }
  out.write("features.csv", aes::features_to_csv(rows, reg));
  out.write("flags.csv", flags);
  std::cout << "extracted " << reg.size() << " features for " << rows.size() << " essays\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct CvArgs {
  fs::path features, corpus, out;
  std::string aspect, regressors = "all", registry;
  std::size_t k = 10, folds = 10, trees = 100, min_leaf = 5, max_depth = 0;
  double lambda = 1.0;
  std::uint64_t seed = 0;
};

int run_cv(Context& ctx, const CvArgs& a) {
  OutDir& out = ctx.open("cv", a.out);
  out.manifest.add_input(a.features);
  out.manifest.add_input(a.corpus);
  out.manifest.seeds["seed"] = a.seed;
  aes::FeatureRegistry storage;
  const auto& reg = registry_or_builtin(a.registry, storage);

  const auto aspect = aes::aspect_from_key(a.aspect);
  if (!aspect) throw aes::ValidationError("unknown aspect '" + a.aspect + "'");
  std::vector<aes::RegressorKind> kinds;
  if (a.regressors == "all") {
    kinds = {aes::RegressorKind::OLS, aes::RegressorKind::Ridge, aes::RegressorKind::DecisionTree,
             aes::RegressorKind::RandomForest};
  } else {
    std::stringstream ss(a.regressors);
    for (std::string name; std::getline(ss, name, ',');) {
      const auto k = aes::regressor_from_name(name);
      if (!k) throw aes::ValidationError("unknown regressor '" + name + "' (ols, ridge, tree, forest)");
      kinds.push_back(*k);
    }
  }

  const auto features = aes::features_from_csv(slurp(a.features), reg);
  const auto records = load_records(a.corpus, std::nullopt, out);
  const auto ds = aes::build_dataset(features, records, *aspect, reg);
  const auto plan = aes::FoldPlan::make(ds.rows(), a.folds, a.seed);

  std::vector<aes::PipelineResult<double>> results;
  for (auto kind : kinds) {
    aes::RegressorSpec spec;
    spec.kind = kind;
    spec.lambda = a.lambda;
    spec.trees = a.trees;
    spec.min_leaf = a.min_leaf;
    spec.max_depth = a.max_depth;
    spec.seed = a.seed;
    spec.validate();
    results.push_back(aes::cross_validate(ds, spec, a.k, plan));
  }
  out.write("cv_report.json", aes::cv_report_json(results, *aspect, plan, ds));
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    if (results[i].mean_mae < results[best].mean_mae) best = i;
  }
  out.write("correlations.csv", aes::correlation_csv(results[best], ds));
  std::string preds = "essay_id,prediction,consensus\n";
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    char buf[96];
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", results[best].predictions(static_cast<Eigen::Index>(i)),
                  ds.y(static_cast<Eigen::Index>(i)));
    preds += ds.essay_ids[i] + buf;
  }
  out.write("predictions.csv", preds);
  for (const auto& r : results) {
    std::printf("%-6s mean MAE %.4f (sd %.4f), k_effective %zu\n", aes::regressor_name(r.spec.kind).c_str(),
                r.mean_mae, r.sd_mae, r.k_effective);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct GradeArgs {
  fs::path corpus, rubric, endpoint, out;
  std::optional<double> budget;
};

std::string prompts_jsonl(std::span<const aes::GradeJob> jobs) {
  std::string out;
  for (const auto& j : jobs) {
    out += json{{"essay_id", j.essay_id},
                {"aspect", std::string(aes::aspect_key(j.aspect))},
                {"instructions", j.prompt.instructions},
                {"user_text", j.prompt.user_text}}
               .dump() +
           "\n";
  }
  return out;
}

void print_ledger(const aes::RunLedger& l) {
  std::printf("calls %lld (requests %lld, cache hits %lld), failures %lld, parse failures %lld, cost $%.4f\n",
              static_cast<long long>(l.calls), static_cast<long long>(l.requests),
              static_cast<long long>(l.cache_hits), static_cast<long long>(l.failures),
              static_cast<long long>(l.parse_failures), l.estimated_cost);
}

// Refuses a run whose prompt tokens alone would already exceed the budget.
void precheck_budget(std::span<const aes::GradeJob> jobs, const aes::EndpointConfig& ep, std::optional<double> budget) {
  if (!budget) return;
  std::int64_t tokens = 0;
  for (const auto& j : jobs) tokens += aes::estimate_tokens(j.prompt.instructions) + aes::estimate_tokens(j.prompt.user_text);
  const double floor_cost = aes::estimate_cost(tokens, 0, ep.price_in, ep.price_out);
  if (floor_cost > *budget) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "estimated input cost $%.4f exceeds budget $%.4f", floor_cost, *budget);
    throw aes::BudgetExceeded(buf);
  }
}

int run_grade(Context& ctx, const GradeArgs& a) {
  OutDir& out = ctx.open("grade", a.out);
  for (const auto& p : {a.corpus, a.rubric, a.endpoint}) out.manifest.add_input(p);
  const auto rubric = aes::RubricConfig::load(a.rubric);
  const auto endpoint = aes::EndpointConfig::load(a.endpoint);
  const auto records = load_records(a.corpus, rubric.grade_level, out);
  const auto jobs = aes::grading_jobs(rubric, records);
  precheck_budget(jobs, endpoint, a.budget);

  auto provider = aes::make_provider(endpoint);
  aes::BatchOptions opts{a.budget, a.out / "responses"};
  const auto res = aes::run_jobs(jobs, *provider, endpoint, opts);
  out.write("scores/" + endpoint.source_label() + ".csv", aes::score_csv(res.outcomes, endpoint.source_label()));
  out.write("review.csv", aes::review_csv(res.outcomes));
  out.write("ledger.json", res.ledger.to_json());
  out.write("prompts.jsonl", prompts_jsonl(jobs));
  out.manifest.outputs.push_back("responses/");
  print_ledger(res.ledger);
  if (res.budget_exceeded) throw aes::BudgetExceeded("budget exhausted; remaining calls were not dispatched");
  if (res.ledger.failures > 0) {
    throw aes::TransportError(std::to_string(res.ledger.failures) + " calls failed after retries", false);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  fs::path corpus, scores, out;
};

int run_eval(Context& ctx, const EvalArgs& a) {
  OutDir& out = ctx.open("eval", a.out);
  out.manifest.add_input(a.corpus);
  out.manifest.add_input(a.scores);
  const auto records = load_records(a.corpus, std::nullopt, out);
  const auto table = aes::load_score_dir(a.scores);
  const auto rep = aes::evaluate(records, table);
  out.write("table1.csv", rep.table1_csv);
  out.write("fig2.csv", rep.fig2_csv);
  out.write("summary.json", rep.summary_json);
  std::cout << rep.table1_csv;
  return 0;
}

// ---------------------------------------------------------------------------

struct InjectArgs {
  fs::path corpus, rubric, endpoint, out;
  std::string payload_file;
  std::size_t sample = 100;
  std::uint64_t seed = 0;
  std::optional<double> budget;
};

int run_inject(Context& ctx, const InjectArgs& a) {
  OutDir& out = ctx.open("inject", a.out);
  for (const auto& p : {a.corpus, a.rubric, a.endpoint}) out.manifest.add_input(p);
  out.manifest.seeds["seed"] = a.seed;
  aes::InjectionConfig cfg;
  if (!a.payload_file.empty()) {
    out.manifest.add_input(a.payload_file);
    cfg.payload = slurp(a.payload_file);
    while (!cfg.payload.empty() && (cfg.payload.back() == '\n' || cfg.payload.back() == '\r')) cfg.payload.pop_back();
  }
  cfg.sample_size = a.sample;
  cfg.seed = a.seed;

  const auto rubric = aes::RubricConfig::load(a.rubric);
  const auto endpoint = aes::EndpointConfig::load(a.endpoint);
  const auto records = load_records(a.corpus, rubric.grade_level, out);
  auto provider = aes::make_provider(endpoint);
  aes::BatchOptions opts{a.budget, a.out / "responses"};
  const auto run = aes::run_injection(cfg, records, rubric, endpoint, *provider, opts);

  out.write("deltas.csv", run.report.to_csv());
  out.write("delta_summary.json", run.report.summary_json());
  out.write("prompts/baseline.jsonl", prompts_jsonl(run.baseline_jobs));
  out.write("prompts/injected.jsonl", prompts_jsonl(run.injected_jobs));
  json ledgers = {{"baseline", json::parse(run.baseline.ledger.to_json())},
                  {"injected", json::parse(run.injected.ledger.to_json())}};
  out.write("ledger.json", ledgers.dump(2) + "\n");
  out.manifest.outputs.push_back("responses/");
  std::printf("%zu essays, mean delta %.4f, min %d, max %d\n", run.report.rows.size(), run.report.mean_delta,
              run.report.min_delta, run.report.max_delta);
  if (run.budget_exceeded()) throw aes::BudgetExceeded("budget exhausted during the injection run");
  return 0;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  fs::path task, guidance, endpoint, out;
  std::vector<std::string> sources;
  std::size_t n = 20;
  double temp = 1.0;
  std::string rubric, grade_endpoint;
};

int run_generate(Context& ctx, const GenerateArgs& a) {
  OutDir& out = ctx.open("generate", a.out);
  for (const auto& p : {a.task, a.guidance, a.endpoint}) out.manifest.add_input(p);
  aes::GenerationTask task;
  task.task_prompt = slurp(a.task);
  task.guidance = slurp(a.guidance);
  for (const auto& s : a.sources) {
    out.manifest.add_input(s);
    task.sources.push_back(slurp(s));
  }
  const auto endpoint = aes::EndpointConfig::load(a.endpoint);
  auto provider = aes::make_provider(endpoint);
  const auto gen = aes::generate_essays(task, a.n, a.temp, endpoint, *provider);
  for (const auto& e : gen.essays) out.write("essays/essay_" + std::to_string(e.index) + ".txt", e.text);
  out.write("provenance.json", gen.manifest_json());
  std::printf("generated %zu essays, %zu duplicates\n", gen.essays.size(), gen.duplicate_count());

  if (!a.rubric.empty()) {
    if (a.grade_endpoint.empty()) throw aes::ValidationError("--rubric needs --grade-endpoint");
    out.manifest.add_input(a.rubric);
    out.manifest.add_input(a.grade_endpoint);
    const auto rubric = aes::RubricConfig::load(a.rubric);
    const auto grader = aes::EndpointConfig::load(a.grade_endpoint);
    std::vector<aes::EssayRecord> essays;
    for (const auto& e : gen.essays) {
      aes::EssayRecord r;
      r.id = "generated_" + std::to_string(e.index);
      r.grade_level = rubric.grade_level;
      r.text = e.text;
      essays.push_back(std::move(r));
    }
    auto grade_provider = aes::make_provider(grader);
    const auto res = aes::run_batch(rubric, grader, *grade_provider, essays, {std::nullopt, a.out / "responses"});
    out.write("scores.csv", aes::score_csv(res.outcomes, grader.source_label()));
    out.write("score_distribution.csv", aes::score_distribution_csv(aes::collect_sheets(res.outcomes)));
    out.write("ledger.json", res.ledger.to_json());
    out.manifest.outputs.push_back("responses/");
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  fs::path in, out;
};

std::string csv_as_markdown(const std::string& csv) {
  std::stringstream ss(csv);
  std::string md;
  bool header = true;
  for (std::string line; std::getline(ss, line);) {
    if (line.empty()) continue;
    std::string row = "|";
    std::size_t cols = 0;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) {
      row += " " + cell + " |";
      ++cols;
    }
    md += row + "\n";
    if (header) {
      md += "|";
      for (std::size_t i = 0; i < cols; ++i) md += "---|";
      md += "\n";
      header = false;
    }
  }
  return md;
}

int run_report(Context& ctx, const ReportArgs& a) {
  if (!fs::is_directory(a.in)) throw aes::ValidationError("not a directory: " + a.in.string());
  if (fs::weakly_canonical(a.in) == fs::weakly_canonical(a.out)) {
    throw aes::ValidationError("--in and --out must differ");
  }
  OutDir& out = ctx.open("report", a.out);
  out.manifest.add_input(a.in);

  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a.in)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  std::string md = "# Run summary\n\n";
  json reference;
  for (const auto& f : files) {
    const std::string name = f.filename().string();
    const std::string rel = fs::relative(f, a.in).generic_string();
    if (rel.find("responses/") != std::string::npos) continue;
    std::string tag = rel;
    std::replace(tag.begin(), tag.end(), '/', '_');
    if (name == "table1.csv" || name == "fig2.csv" || name == "deltas.csv" || name == "correlations.csv" ||
        name == "score_distribution.csv" || name == "predictions.csv") {
      const std::string csv = slurp(f);
      out.write("plots/" + tag, csv);
      if (name != "predictions.csv") md += "## " + rel + "\n\n" + csv_as_markdown(csv) + "\n";
    } else if (name == "summary.json") {
      const json j = json::parse(slurp(f));
      if (j.contains("reference_values")) reference = j["reference_values"];
    } else if (name == "cv_report.json" || name == "ledger.json" || name == "delta_summary.json") {
      md += "## " + rel + "\n\n```json\n" + slurp(f) + "```\n\n";
    }
  }
  if (!reference.is_null()) {
    md += "## Reference values\n\nPublished on a corpus that is not distributed; shown for comparison only.\n\n";
    for (const auto& [k, v] : reference.items()) {
      if (k == "note") continue;
      md += "- " + k + ": " + v.dump() + "\n";
    }
    md += "\n";
  }
  out.write("report.md", md);
  std::cout << "wrote " << (a.out / "report.md").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  ctx.argv.assign(argv, argv + argc);

  CLI::App app{"Essay scoring and evaluation harness"};
  app.set_version_flag("--version", std::string(aes::kToolVersion));
  app.require_subcommand(1);

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Compute the feature table");
  extract->add_option("--corpus", ex.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  extract->add_option("--annotations", ex.annotations, "Directory with <id>.conllu, <id>.corr.txt, <id>.spell.tsv")
      ->required()
      ->check(CLI::ExistingDirectory);
  extract->add_option("--freq", ex.freq, "Lemma frequency list")->required()->check(CLI::ExistingFile);
  extract->add_option("--abstr", ex.abstr, "Abstractness lexicon TSV")->required()->check(CLI::ExistingFile);
  extract->add_option("--registry", ex.registry, "Feature registry JSON (default: built in)");
  extract->add_option("--grade", ex.grade, "Keep only this grade level");
  extract->add_option("--out", ex.out)->required();

  CvArgs cv;
  auto* cvc = app.add_subcommand("cv", "Cross-validate regressors for one language aspect");
  cvc->add_option("--features", cv.features)->required()->check(CLI::ExistingFile);
  cvc->add_option("--corpus", cv.corpus)->required()->check(CLI::ExistingFile);
  cvc->add_option("--aspect", cv.aspect)->required();
  cvc->add_option("--regressor", cv.regressors, "ols, ridge, tree, forest, a comma list, or all");
  cvc->add_option("--k", cv.k, "Features kept by F-selection");
  cvc->add_option("--folds", cv.folds);
  cvc->add_option("--seed", cv.seed);
  cvc->add_option("--lambda", cv.lambda);
  cvc->add_option("--trees", cv.trees);
  cvc->add_option("--min-leaf", cv.min_leaf);
  cvc->add_option("--max-depth", cv.max_depth);
  cvc->add_option("--registry", cv.registry);
  cvc->add_option("--out", cv.out)->required();

  GradeArgs gr;
  auto* grade = app.add_subcommand("grade", "Grade a corpus with an LLM endpoint");
  grade->add_option("--corpus", gr.corpus)->required()->check(CLI::ExistingFile);
  grade->add_option("--rubric", gr.rubric)->required()->check(CLI::ExistingFile);
  grade->add_option("--endpoint", gr.endpoint)->required()->check(CLI::ExistingFile);
  grade->add_option("--budget", gr.budget, "USD ceiling");
  grade->add_option("--out", gr.out)->required();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Compare score tables with the human graders");
  eval->add_option("--corpus", ev.corpus)->required()->check(CLI::ExistingFile);
  eval->add_option("--scores", ev.scores)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--out", ev.out)->required();

  InjectArgs in;
  auto* inject = app.add_subcommand("inject", "Prompt-injection experiment");
  inject->add_option("--corpus", in.corpus)->required()->check(CLI::ExistingFile);
  inject->add_option("--rubric", in.rubric)->required()->check(CLI::ExistingFile);
  inject->add_option("--endpoint", in.endpoint)->required()->check(CLI::ExistingFile);
  inject->add_option("--sample", in.sample);
  inject->add_option("--seed", in.seed);
  inject->add_option("--payload-file", in.payload_file)->check(CLI::ExistingFile);
  inject->add_option("--budget", in.budget);
  inject->add_option("--out", in.out)->required();

  GenerateArgs ge;
  auto* generate = app.add_subcommand("generate", "Generate essays, optionally grading them");
  generate->add_option("--task", ge.task)->required()->check(CLI::ExistingFile);
  generate->add_option("--guidance", ge.guidance)->required()->check(CLI::ExistingFile);
  generate->add_option("--sources", ge.sources)->check(CLI::ExistingFile);
  generate->add_option("--n", ge.n);
  generate->add_option("--temp", ge.temp);
  generate->add_option("--endpoint", ge.endpoint)->required()->check(CLI::ExistingFile);
  generate->add_option("--rubric", ge.rubric)->check(CLI::ExistingFile);
  generate->add_option("--grade-endpoint", ge.grade_endpoint)->check(CLI::ExistingFile);
  generate->add_option("--out", ge.out)->required();

  ReportArgs rp;
  auto* report = app.add_subcommand("report", "Merge run outputs into a summary");
  report->add_option("--in", rp.in)->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", rp.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  int code = 0;
  try {
    if (*extract) code = run_extract(ctx, ex);
    else if (*cvc) code = run_cv(ctx, cv);
    else if (*grade) code = run_grade(ctx, gr);
    else if (*eval) code = run_eval(ctx, ev);
    else if (*inject) code = run_inject(ctx, in);
    else if (*generate) code = run_generate(ctx, ge);
    else if (*report) code = run_report(ctx, rp);
  } catch (const aes::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = 1;
  } catch (const aes::TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    code = 2;
  } catch (const aes::BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    code = 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    code = 3;
  }
  if (ctx.out) ctx.out->finish(code);
  return code;
}
