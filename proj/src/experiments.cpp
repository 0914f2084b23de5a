#include "aes/experiments.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <numeric>
#include <random>

#include <json.hpp>

#include "aes/regress.hpp"

namespace aes {

namespace {

using json = nlohmann::json;

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}

}  // namespace

void InjectionConfig::validate() const {
  if (payload.empty()) throw ValidationError("injection payload is empty");
  if (position != "end_of_essay") throw ValidationError("injection position must be end_of_essay");
  if (sample_size == 0) throw ValidationError("injection sample size must be positive");
}

std::string inject_payload(std::string_view essay_text, const InjectionConfig& cfg) {
  std::string out(essay_text);
  out += "\n";
  out += cfg.payload;
  return out;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k > n) {
    throw ValidationError("sample size " + std::to_string(k) + " exceeds corpus size " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  shuffle(order, rng);
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

void DeltaReport::finalize() {
  mean_delta = 0.0;
  min_delta = 0;
  max_delta = 0;
  if (rows.empty()) return;
  long sum = 0;
  min_delta = rows.front().delta;
  max_delta = rows.front().delta;
  for (const auto& r : rows) {
    if (r.delta != r.injected - r.baseline) throw InvariantViolation("delta row for " + r.essay_id + " is inconsistent");
    sum += r.delta;
    min_delta = std::min(min_delta, r.delta);
    max_delta = std::max(max_delta, r.delta);
  }
  mean_delta = static_cast<double>(sum) / static_cast<double>(rows.size());
}

std::string DeltaReport::to_csv() const {
  std::string out = "essay_id,baseline,injected,delta\n";
  for (const auto& r : rows) {
    out += r.essay_id + "," + std::to_string(r.baseline) + "," + std::to_string(r.injected) + "," +
           std::to_string(r.delta) + "\n";
  }
  return out;
}

std::string DeltaReport::summary_json() const {
  json j = {{"essays", rows.size()},
            {"incomplete", incomplete},
            {"mean_delta", fmt6(mean_delta)},
            {"min_delta", min_delta},
            {"max_delta", max_delta}};
  return j.dump(2) + "\n";
}

InjectionRun run_injection(const InjectionConfig& cfg, std::span<const EssayRecord> corpus, const RubricConfig& rubric,
                           const EndpointConfig& endpoint, Provider& provider, const BatchOptions& opts) {
  cfg.validate();
  const auto picks = sample_indices(corpus.size(), cfg.sample_size, cfg.seed);
  std::vector<EssayRecord> clean;
  std::vector<EssayRecord> dirty;
  for (std::size_t i : picks) {
    clean.push_back(corpus[i]);
    EssayRecord e = corpus[i];
    e.text = inject_payload(e.text, cfg);
    dirty.push_back(std::move(e));
  }

  InjectionRun run;
  run.baseline_jobs = grading_jobs(rubric, clean);
  run.injected_jobs = grading_jobs(rubric, dirty);
  run.baseline = run_jobs(run.baseline_jobs, provider, endpoint, opts);
  if (!run.baseline.budget_exceeded) run.injected = run_jobs(run.injected_jobs, provider, endpoint, opts);

  const auto before = collect_sheets(run.baseline.outcomes);
  const auto after = collect_sheets(run.injected.outcomes);
  for (const auto& e : clean) {
    const auto b = before.find(e.id);
    const auto a = after.find(e.id);
    if (b == before.end() || a == after.end() || !b->second.complete() || !a->second.complete()) {
      run.report.incomplete.push_back(e.id);
      continue;
    }
    DeltaRow row{e.id, b->second.total(), a->second.total(), 0};
    row.delta = row.injected - row.baseline;
    run.report.rows.push_back(row);
  }
  run.report.finalize();
  return run;
}

Prompt build_generation_prompt(const GenerationTask& task) {
  std::string user = task.task_prompt;
  for (const auto& s : task.sources) {
    user += "\n\n";
    user += s;
  }
  return {task.guidance, user};
}

std::size_t GenerationResult::duplicate_count() const {
  return static_cast<std::size_t>(
      std::count_if(essays.begin(), essays.end(), [](const GeneratedEssay& e) { return e.duplicate_of.has_value(); }));
}

std::string GenerationResult::manifest_json() const {
  json items = json::array();
  for (const auto& e : essays) {
    json j = {{"index", e.index},
              {"file", "essay_" + std::to_string(e.index) + ".txt"},
              {"text_sha256", e.text_sha256},
              {"prompt_sha256", e.prompt_sha256},
              {"model", e.model},
              {"temperature", e.temperature},
              {"nonce", e.nonce}};
    j["duplicate_of"] = e.duplicate_of ? json(*e.duplicate_of) : json(nullptr);
    items.push_back(j);
  }
  json doc = {{"essays", items}, {"duplicates", duplicate_count()}, {"ledger", json::parse(ledger.to_json())}};
  return doc.dump(2) + "\n";
}

GenerationResult generate_essays(const GenerationTask& task, std::size_t n, double temperature,
                                 const EndpointConfig& endpoint, Provider& provider) {
  if (n < 1) throw ValidationError("generation needs n >= 1");
  if (!(temperature >= 0.0)) throw ValidationError("generation temperature must be >= 0");
  if (task.task_prompt.empty()) throw ValidationError("generation task prompt is empty");
  endpoint.validate();

  const Prompt prompt = build_generation_prompt(task);
  const std::string prompt_hash = sha256_hex(prompt.instructions + "\n" + prompt.user_text);
  GenerationResult out;
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < n; ++i) {
    ChatRequest req;
    req.model = endpoint.model_id;
    req.instructions = prompt.instructions;
    req.user_text = prompt.user_text;
    req.temperature = temperature;
    req.max_tokens = endpoint.max_output_tokens;
    req.reasoning_effort = endpoint.reasoning_effort;
    req.essay_id = "generated_" + std::to_string(i);
    req.nonce = "sample-" + std::to_string(i);

    int attempts = 0;
    ++out.ledger.calls;
    ++out.ledger.requests;
    ChatResponse resp;
    try {
      resp = call_with_retry(provider, req, endpoint, &attempts);
    } catch (const TransportError&) {
      out.ledger.attempts += attempts;
      ++out.ledger.failures;
      throw;
    }
    out.ledger.attempts += attempts;
    out.ledger.input_tokens += resp.input_tokens;
    out.ledger.output_tokens += resp.output_tokens;

    GeneratedEssay g;
    g.index = i;
    g.text = resp.text;
    g.text_sha256 = sha256_hex(resp.text);
    g.prompt_sha256 = prompt_hash;
    g.model = endpoint.model_id;
    g.temperature = temperature;
    g.nonce = req.nonce;
    if (const auto it = seen.find(g.text_sha256); it != seen.end()) {
      g.duplicate_of = it->second;
    } else {
      seen.emplace(g.text_sha256, i);
    }
    out.essays.push_back(std::move(g));
  }
  out.ledger.estimated_cost =
      estimate_cost(out.ledger.input_tokens, out.ledger.output_tokens, endpoint.price_in, endpoint.price_out);
  return out;
}

std::string score_distribution_csv(const std::map<std::string, ModelSheet>& sheets) {
  std::array<int, 3 * kAspectCount + 1> counts{};
  for (const auto& [id, sheet] : sheets) {
    if (sheet.complete()) ++counts[static_cast<std::size_t>(sheet.total())];
  }
  std::string out = "total,count\n";
  for (std::size_t t = 0; t < counts.size(); ++t) {
    out += std::to_string(t) + "," + std::to_string(counts[t]) + "\n";
  }
  return out;
}

}  // namespace aes
