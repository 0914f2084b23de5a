#include "aes/llmgrade.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <openssl/evp.h>

#include "aes/regress.hpp"

namespace aes {

namespace {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(std::string("cannot read ") + what + ": " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

RubricAspect require_aspect(const std::string& key, const char* what) {
  const auto a = aspect_from_key(key);
  if (!a) throw ValidationError(std::string(what) + ": unknown aspect '" + key + "'");
  return *a;
}

}  // namespace

// ---------------------------------------------------------------------------
// Rubric and prompt

void RubricConfig::validate() const {
  if (grade_level != 9 && grade_level != 12) throw ValidationError("rubric grade_level must be 9 or 12");
  if (preface.empty() || grading_instructions.empty() || output_instructions.empty()) {
    throw ValidationError("rubric needs preface, grading_instructions and output_instructions");
  }
  for (RubricAspect a : kAllAspects) {
    const auto& r = aspects[index(a)];
    const std::string key(aspect_key(a));
    if (r.name.empty()) throw ValidationError("rubric aspect '" + key + "' has no name");
    for (int s = 0; s < 4; ++s) {
      if (r.descriptors[static_cast<std::size_t>(s)].empty()) {
        throw ValidationError("rubric aspect '" + key + "' is missing descriptor " + std::to_string(s));
      }
    }
  }
}

RubricConfig RubricConfig::parse(std::string_view json_text) {
  const json doc = parse_json(json_text, "rubric config");
  RubricConfig cfg;
  try {
    cfg.grade_level = doc.at("grade_level").get<int>();
    cfg.preface = doc.at("preface").get<std::string>();
    cfg.grading_instructions = doc.at("grading_instructions").get<std::string>();
    cfg.output_instructions = doc.at("output_instructions").get<std::string>();
    const json& aspects = doc.at("aspects");
    for (const auto& [key, item] : aspects.items()) {
      auto& r = cfg.aspects[index(require_aspect(key, "rubric config"))];
      r.name = item.at("name").get<std::string>();
      const json& d = item.at("descriptors");
      for (int s = 0; s < 4; ++s) {
        const auto k = std::to_string(s);
        if (d.contains(k)) r.descriptors[static_cast<std::size_t>(s)] = d[k].get<std::string>();
      }
      r.extra_notes = item.value("extra_notes", "");
      r.source_summaries = item.value("source_summaries", "");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("rubric config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RubricConfig RubricConfig::load(const std::filesystem::path& path) {
  return parse(read_file(path, "rubric config"));
}

std::string quote_essay(std::string_view essay_text) {
  std::string out = "\"\"\"";
  out += essay_text;
  out += "\"\"\"";
  return out;
}

Prompt build_prompt(const RubricConfig& cfg, RubricAspect aspect, std::string_view essay_text) {
  const AspectRubric& r = cfg.aspects[index(aspect)];
  for (int s = 0; s < 4; ++s) {
    if (r.descriptors[static_cast<std::size_t>(s)].empty()) {
      throw ValidationError("rubric aspect '" + std::string(aspect_key(aspect)) + "' is missing descriptor " +
                            std::to_string(s));
    }
  }
  std::string ins = cfg.preface;
  ins += "\nHere you will ONLY grade this aspect: ";
  ins += r.name;
  ins += ". ";
  ins += cfg.grading_instructions;
  ins += "\n";
  if (!r.source_summaries.empty()) {
    ins += r.source_summaries;
    ins += " Take this into account and grade:\n";
  }
  for (int s = 3; s >= 0; --s) {
    ins += std::to_string(s) + " if: " + r.descriptors[static_cast<std::size_t>(s)] + "\n";
  }
  if (!r.extra_notes.empty()) ins += r.extra_notes + "\n";
  ins += cfg.output_instructions;
  return {ins, quote_essay(essay_text)};
}

// ---------------------------------------------------------------------------
// Output parsing

ParsedGrade parse_grade(std::string_view raw, RubricAspect aspect) {
  std::string lower(raw);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

  // Last "hinne" that is followed (after optional whitespace) by a colon.
  std::optional<std::size_t> marker;
  std::size_t after = 0;
  for (std::size_t pos = lower.find("hinne"); pos != std::string::npos; pos = lower.find("hinne", pos + 1)) {
    std::size_t i = pos + 5;
    while (i < lower.size() && is_ws(lower[i])) ++i;
    if (i < lower.size() && lower[i] == ':') {
      marker = pos;
      after = i + 1;
    }
  }
  if (!marker) throw ParseFailure("no '" + std::string(kGradeMarker) + "' marker in model output");

  std::size_t i = after;
  while (i < raw.size() && is_ws(raw[i])) ++i;
  bool negative = false;
  if (i < raw.size() && (raw[i] == '-' || raw[i] == '+')) {
    negative = raw[i] == '-';
    ++i;
  }
  const std::size_t digits_begin = i;
  while (i < raw.size() && std::isdigit(static_cast<unsigned char>(raw[i]))) ++i;
  if (i == digits_begin) throw ParseFailure("marker not followed by an integer");
  const auto digits = raw.substr(digits_begin, i - digits_begin);
  if (digits.size() > 6) throw OutOfRange("grade " + std::string(digits) + " outside 0..3");
  int value = std::stoi(std::string(digits));
  if (negative) value = -value;
  if (value < 0 || value > kMaxAspectScore) {
    throw OutOfRange("grade " + std::to_string(value) + " outside 0..3");
  }
  return {aspect, value, trim(raw.substr(0, *marker)), std::string(raw)};
}

std::string format_grade(std::string_view reasoning, int score) {
  std::string out(reasoning);
  if (!out.empty()) out += ' ';
  out += std::string(kGradeMarker) + " " + std::to_string(score);
  return out;
}

// ---------------------------------------------------------------------------
// Endpoint configuration

void EndpointConfig::validate() const {
  if (kind != "http" && kind != "mock") throw ValidationError("endpoint kind must be 'http' or 'mock'");
  if (model_id.empty()) throw ValidationError("endpoint model_id is empty");
  if (!(temperature >= 0.0)) throw ValidationError("endpoint temperature must be >= 0");
  if (max_output_tokens < 1) throw ValidationError("endpoint max_output_tokens must be >= 1");
  if (max_retries < 0) throw ValidationError("endpoint max_retries must be >= 0");
  if (concurrency_limit < 1) throw ValidationError("endpoint concurrency_limit must be >= 1");
  if (!(price_in >= 0.0) || !(price_out >= 0.0)) throw ValidationError("endpoint prices must be >= 0");
  if (!(timeout_s > 0.0)) throw ValidationError("endpoint timeout_s must be > 0");
  if (backoff_base_ms < 0 || backoff_max_ms < 0) throw ValidationError("endpoint backoff must be >= 0");
  if (kind == "http") {
    if (base_url.empty()) throw ValidationError("http endpoint needs base_url");
    if (api_key_env.empty()) throw ValidationError("http endpoint needs api_key_env");
  }
  if (mock.mode != "fixed" && mock.mode != "hash" && mock.mode != "echo") {
    throw ValidationError("mock mode must be fixed, hash or echo");
  }
  if (!(mock.fault_rate >= 0.0 && mock.fault_rate < 1.0)) throw ValidationError("mock fault_rate must be in [0,1)");
  auto check = [](int s) {
    if (s < 0 || s > kMaxAspectScore) throw ValidationError("mock scores must be 0..3");
  };
  check(mock.default_score);
  for (const auto& [a, s] : mock.per_aspect) check(s);
  for (const auto& [e, m] : mock.script) {
    for (const auto& [a, s] : m) check(s);
  }
}

EndpointConfig EndpointConfig::parse(std::string_view json_text, const std::filesystem::path& base_dir) {
  const json doc = parse_json(json_text, "endpoint config");
  EndpointConfig c;
  try {
    c.kind = doc.value("kind", c.kind);
    c.base_url = doc.value("base_url", c.base_url);
    c.model_id = doc.value("model_id", c.model_id);
    c.label = doc.value("label", c.label);
    c.temperature = doc.value("temperature", c.temperature);
    c.max_output_tokens = doc.value("max_output_tokens", c.max_output_tokens);
    if (doc.contains("reasoning_effort") && !doc["reasoning_effort"].is_null()) {
      c.reasoning_effort = doc["reasoning_effort"].get<std::string>();
    }
    c.api_key_env = doc.value("api_key_env", c.api_key_env);
    c.timeout_s = doc.value("timeout_s", c.timeout_s);
    c.max_retries = doc.value("max_retries", c.max_retries);
    c.concurrency_limit = doc.value("concurrency_limit", c.concurrency_limit);
    c.price_in = doc.value("price_in", c.price_in);
    c.price_out = doc.value("price_out", c.price_out);
    c.backoff_base_ms = doc.value("backoff_base_ms", c.backoff_base_ms);
    c.backoff_max_ms = doc.value("backoff_max_ms", c.backoff_max_ms);
    if (doc.contains("mock")) {
      const json& m = doc["mock"];
      c.mock.mode = m.value("mode", c.mock.mode);
      c.mock.default_score = m.value("default_score", c.mock.default_score);
      if (m.contains("per_aspect")) {
        for (const auto& [k, v] : m["per_aspect"].items()) {
          c.mock.per_aspect[require_aspect(k, "mock per_aspect")] = v.get<int>();
        }
      }
      if (m.contains("script_csv")) {
        std::filesystem::path p = m["script_csv"].get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        ScoreTable table;
        parse_score_csv(read_file(p, "mock script"), table);
        for (const auto& [source, essays] : table) {
          for (const auto& [essay, sheet] : essays) {
            for (RubricAspect a : kAllAspects) {
              if (sheet.scores[index(a)]) c.mock.script[essay][a] = *sheet.scores[index(a)];
            }
          }
        }
      }
      c.mock.fault_rate = m.value("fault_rate", c.mock.fault_rate);
      c.mock.fault_seed = m.value("fault_seed", c.mock.fault_seed);
      c.mock.injection_marker = m.value("injection_marker", c.mock.injection_marker);
      c.mock.injection_bonus = m.value("injection_bonus", c.mock.injection_bonus);
      if (m.contains("fixed_reply")) c.mock.fixed_reply = m["fixed_reply"].get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("endpoint config: ") + e.what());
  }
  c.validate();
  return c;
}

EndpointConfig EndpointConfig::load(const std::filesystem::path& path) {
  return parse(read_file(path, "endpoint config"), path.parent_path());
}

// ---------------------------------------------------------------------------
// Providers

std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw InvariantViolation("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

int MockProvider::score_for(const ChatRequest& req) const {
  const RubricAspect aspect = req.aspect.value_or(RubricAspect::TitleIntro);
  int score = s_.default_score;
  if (const auto it = s_.per_aspect.find(aspect); it != s_.per_aspect.end()) score = it->second;
  if (const auto e = s_.script.find(req.essay_id); e != s_.script.end()) {
    if (const auto a = e->second.find(aspect); a != e->second.end()) score = a->second;
  }
  if (s_.mode == "hash") {
    const std::string h = sha256_hex(std::string(aspect_key(aspect)) + "\n" + req.user_text);
    score = static_cast<int>(std::stoul(h.substr(0, 8), nullptr, 16) % 4);
  }
  if (!s_.injection_marker.empty() && req.user_text.find(s_.injection_marker) != std::string::npos) {
    score = std::min(kMaxAspectScore, score + s_.injection_bonus);
  }
  return score;
}

ChatResponse MockProvider::complete(const ChatRequest& req, int attempt) {
  if (s_.fault_rate > 0.0) {
    std::uint64_t h = fnv1a(req.essay_id);
    h = fnv1a(req.aspect ? aspect_key(*req.aspect) : std::string_view("-"), h);
    h = fnv1a(req.user_text, h);
    h = fnv1a(req.nonce, h);
    const std::uint64_t draw = splitmix64(h ^ splitmix64(s_.fault_seed + static_cast<std::uint64_t>(attempt)));
    const double u = static_cast<double>(draw >> 11) * 0x1.0p-53;
    if (u < s_.fault_rate) throw TransportError("mock transient failure", true, 503);
  }
  ChatResponse resp;
  if (s_.fixed_reply) {
    resp.text = *s_.fixed_reply;
  } else if (s_.mode == "echo") {
    const std::string h = sha256_hex(req.instructions + "\n" + req.user_text + "\n" + req.nonce);
    resp.text = "Mock essay " + h.substr(0, 16) + ".\n\n" + req.user_text;
  } else {
    resp.text = format_grade("Seletus: mock: " + s_.mode + ".", score_for(req));
  }
  resp.input_tokens = estimate_tokens(req.instructions) + estimate_tokens(req.user_text);
  resp.output_tokens = estimate_tokens(resp.text);
  return resp;
}

std::unique_ptr<Provider> make_provider(const EndpointConfig& cfg) {
  cfg.validate();
  if (cfg.kind == "mock") return std::make_unique<MockProvider>(cfg.mock);
  return std::make_unique<HttpProvider>(cfg);
}

ChatResponse call_with_retry(Provider& provider, const ChatRequest& req, const EndpointConfig& cfg, int* attempts) {
  const int max_attempts = cfg.max_retries + 1;
  for (int attempt = 0;; ++attempt) {
    if (attempts) *attempts = attempt + 1;
    try {
      return provider.complete(req, attempt);
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt + 1 >= max_attempts) throw;
      double delay = static_cast<double>(cfg.backoff_base_ms) * std::pow(2.0, attempt);
      delay = std::min(delay, static_cast<double>(cfg.backoff_max_ms));
      const std::uint64_t jitter_draw =
          splitmix64(fnv1a(req.user_text, fnv1a(req.essay_id)) + static_cast<std::uint64_t>(attempt));
      delay += static_cast<double>(jitter_draw % 1000) / 1000.0 * static_cast<double>(cfg.backoff_base_ms);
      if (delay > 0.0) std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay));
    }
  }
}

// ---------------------------------------------------------------------------
// Cache

std::string cache_key(std::string_view model, std::string_view instructions, std::string_view user_text,
                      double temperature) {
  std::string material;
  material.reserve(model.size() + instructions.size() + user_text.size() + 64);
  // Length-prefixed fields so no two distinct tuples share a byte string.
  for (std::string_view part : {model, instructions, user_text}) {
    material += std::to_string(part.size());
    material += ':';
    material += part;
    material += '\n';
  }
  material += fmt17(temperature);
  return sha256_hex(material);
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::optional<ChatResponse> ResponseCache::get(const std::string& key) {
  std::lock_guard<std::mutex> lock(mu_);
  if (const auto it = memory_.find(key); it != memory_.end()) return it->second;
  if (dir_.empty()) return std::nullopt;
  const auto path = dir_ / (key + ".json");
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    const json j = json::parse(buf.str());
    ChatResponse r{j.at("text").get<std::string>(), j.at("input_tokens").get<std::int64_t>(),
                   j.at("output_tokens").get<std::int64_t>()};
    memory_.emplace(key, r);
    return r;
  } catch (const json::exception&) {
    // A torn or foreign file is treated as a miss and overwritten later.
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& key, const ChatRequest& req, const ChatResponse& resp) {
  std::lock_guard<std::mutex> lock(mu_);
  memory_[key] = resp;
  if (dir_.empty()) return;
  json j = {{"key", key},
            {"model", req.model},
            {"temperature", req.temperature},
            {"essay_id", req.essay_id},
            {"aspect", req.aspect ? std::string(aspect_key(*req.aspect)) : std::string()},
            {"instructions_sha256", sha256_hex(req.instructions)},
            {"user_text_sha256", sha256_hex(req.user_text)},
            {"text", resp.text},
            {"input_tokens", resp.input_tokens},
            {"output_tokens", resp.output_tokens}};
  const auto path = dir_ / (key + ".json");
  const auto tmp = dir_ / (key + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    out << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Ledger and batch

double estimate_cost(std::int64_t input_tokens, std::int64_t output_tokens, double price_in, double price_out) {
  return static_cast<double>(input_tokens) * price_in / 1e6 + static_cast<double>(output_tokens) * price_out / 1e6;
}

std::string RunLedger::to_json() const {
  json j = {{"calls", calls},
            {"requests", requests},
            {"attempts", attempts},
            {"input_tokens", input_tokens},
            {"output_tokens", output_tokens},
            {"estimated_cost_usd", estimated_cost},
            {"cache_hits", cache_hits},
            {"failures", failures},
            {"parse_failures", parse_failures},
            {"out_of_range", out_of_range}};
  return j.dump(2) + "\n";
}

BatchResult run_jobs(std::span<const GradeJob> jobs, Provider& provider, const EndpointConfig& endpoint,
                     const BatchOptions& opts) {
  endpoint.validate();
  ResponseCache cache(opts.cache_dir.value_or(std::filesystem::path{}));
  BatchResult result;
  result.outcomes.resize(jobs.size());

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  RunLedger& L = result.ledger;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const GradeJob& job = jobs[i];
      GradeOutcome& out = result.outcomes[i];
      out.essay_id = job.essay_id;
      out.aspect = job.aspect;
      if (stop.load()) {
        out.error = "budget: not run";
        continue;
      }

      ChatRequest req;
      req.model = endpoint.model_id;
      req.instructions = job.prompt.instructions;
      req.user_text = job.prompt.user_text;
      req.temperature = endpoint.temperature;
      req.max_tokens = endpoint.max_output_tokens;
      req.reasoning_effort = endpoint.reasoning_effort;
      req.essay_id = job.essay_id;
      req.aspect = job.aspect;
      out.cache_key = cache_key(req.model, req.instructions, req.user_text, req.temperature);

      std::optional<ChatResponse> resp = cache.get(out.cache_key);
      if (resp) {
        out.from_cache = true;
        std::lock_guard<std::mutex> lock(mu);
        ++L.calls;
        ++L.cache_hits;
      } else {
        int attempts = 0;
        try {
          resp = call_with_retry(provider, req, endpoint, &attempts);
        } catch (const TransportError& e) {
          out.error = std::string("transport: ") + e.what();
          std::lock_guard<std::mutex> lock(mu);
          ++L.calls;
          ++L.requests;
          L.attempts += attempts;
          ++L.failures;
          continue;
        }
        cache.put(out.cache_key, req, *resp);
        std::lock_guard<std::mutex> lock(mu);
        ++L.calls;
        ++L.requests;
        L.attempts += attempts;
        L.input_tokens += resp->input_tokens;
        L.output_tokens += resp->output_tokens;
        const double spent = estimate_cost(L.input_tokens, L.output_tokens, endpoint.price_in, endpoint.price_out);
        if (opts.budget && spent > *opts.budget) stop.store(true);
      }

      try {
        out.grade = parse_grade(resp->text, job.aspect);
      } catch (const OutOfRange& e) {
        out.error = std::string("out_of_range: ") + e.what();
        std::lock_guard<std::mutex> lock(mu);
        ++L.out_of_range;
      } catch (const ParseFailure& e) {
        out.error = std::string("parse: ") + e.what();
        std::lock_guard<std::mutex> lock(mu);
        ++L.parse_failures;
      }
    }
  };

  const std::size_t threads =
      std::min<std::size_t>(static_cast<std::size_t>(endpoint.concurrency_limit), std::max<std::size_t>(jobs.size(), 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  L.estimated_cost = estimate_cost(L.input_tokens, L.output_tokens, endpoint.price_in, endpoint.price_out);
  result.budget_exceeded = stop.load();
  if (L.calls != L.requests + L.cache_hits) throw InvariantViolation("ledger: calls != requests + cache hits");
  return result;
}

std::vector<GradeJob> grading_jobs(const RubricConfig& cfg, std::span<const EssayRecord> essays) {
  std::vector<GradeJob> jobs;
  jobs.reserve(essays.size() * kAspectCount);
  for (const auto& e : essays) {
    for (RubricAspect a : kAllAspects) jobs.push_back({e.id, a, build_prompt(cfg, a, e.text)});
  }
  return jobs;
}

BatchResult run_batch(const RubricConfig& cfg, const EndpointConfig& endpoint, Provider& provider,
                      std::span<const EssayRecord> essays, const BatchOptions& opts) {
  const auto jobs = grading_jobs(cfg, essays);
  return run_jobs(jobs, provider, endpoint, opts);
}

GradedEssay grade_essay(const RubricConfig& cfg, const EndpointConfig& endpoint, Provider& provider,
                        const EssayRecord& essay, const BatchOptions& opts) {
  auto res = run_batch(cfg, endpoint, provider, std::span<const EssayRecord>(&essay, 1), opts);
  GradedEssay g;
  for (const auto& o : res.outcomes) {
    if (o.grade) g.sheet.scores[index(o.aspect)] = o.grade->score;
  }
  g.outcomes = std::move(res.outcomes);
  return g;
}

std::map<std::string, ModelSheet> collect_sheets(std::span<const GradeOutcome> outcomes) {
  std::map<std::string, ModelSheet> out;
  for (const auto& o : outcomes) {
    auto& sheet = out[o.essay_id];
    if (o.grade) sheet.scores[index(o.aspect)] = o.grade->score;
  }
  return out;
}

std::string score_csv(std::span<const GradeOutcome> outcomes, std::string_view source) {
  std::string out = "essay_id,aspect,score,source\n";
  for (const auto& o : outcomes) {
    out += o.essay_id + "," + std::string(aspect_key(o.aspect)) + ",";
    if (o.grade) out += std::to_string(o.grade->score);
    out += "," + std::string(source) + "\n";
  }
  return out;
}

std::string review_csv(std::span<const GradeOutcome> outcomes) {
  std::string out = "essay_id,aspect,reason\n";
  for (const auto& o : outcomes) {
    if (o.error.empty()) continue;
    std::string reason = o.error;
    std::replace(reason.begin(), reason.end(), ',', ';');
    std::replace(reason.begin(), reason.end(), '\n', ' ');
    out += o.essay_id + "," + std::string(aspect_key(o.aspect)) + "," + reason + "\n";
  }
  return out;
}

}  // namespace aes
