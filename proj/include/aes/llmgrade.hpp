#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "aes/corpus.hpp"
#include "aes/errors.hpp"
#include "aes/metrics.hpp"

namespace aes {

// ---------------------------------------------------------------------------
// Rubric and prompt

struct AspectRubric {
  /// Aspect title as shown to the model, e.g. "Kirjavahemärgistus".
  std::string name;
  /// Indexed by score: descriptors[3] is the "3 if:" text.
  std::array<std::string, 4> descriptors;
  std::string extra_notes;
  /// Only meaningful for the source-use aspect.
  std::string source_summaries;
};

struct RubricConfig {
  int grade_level = 9;
  std::string preface;
  std::string grading_instructions;
  /// Ends with the line that introduces the essay.
  std::string output_instructions;
  std::array<AspectRubric, kAspectCount> aspects;

  /// Throws ValidationError if an aspect or descriptor is missing.
  void validate() const;
  static RubricConfig parse(std::string_view json_text);
  static RubricConfig load(const std::filesystem::path& path);
};

struct Prompt {
  std::string instructions;
  std::string user_text;
};

/// Instructions: preface, the single-aspect line, grading instructions,
/// source summaries (if any), descriptors 3 to 0, extra notes, output
/// instructions. User text: the essay in triple quotes.
Prompt build_prompt(const RubricConfig& cfg, RubricAspect aspect, std::string_view essay_text);
std::string quote_essay(std::string_view essay_text);

// ---------------------------------------------------------------------------
// Output parsing

inline constexpr std::string_view kGradeMarker = "Hinne:";

struct ParsedGrade {
  RubricAspect aspect = RubricAspect::TitleIntro;
  int score = 0;
  std::string reasoning;
  std::string raw;
};

class GradeParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No marker followed by an integer.
class ParseFailure : public GradeParseError {
 public:
  using GradeParseError::GradeParseError;
};

/// Marker found but the integer is outside 0..3.
class OutOfRange : public GradeParseError {
 public:
  using GradeParseError::GradeParseError;
};

/// Uses the last "Hinne:" marker (case-insensitive, optional whitespace).
ParsedGrade parse_grade(std::string_view raw, RubricAspect aspect);
std::string format_grade(std::string_view reasoning, int score);

// ---------------------------------------------------------------------------
// Endpoint and providers

struct MockSettings {
  /// "fixed" (default_score / per_aspect / script), "hash" (score derived
  /// from the prompt) or "echo" (returns text; used for generation).
  std::string mode = "fixed";
  int default_score = 2;
  std::map<RubricAspect, int> per_aspect;
  /// essay id -> aspect -> score; overrides per_aspect.
  std::map<std::string, std::map<RubricAspect, int>> script;
  /// Probability that an attempt fails with a retryable 503.
  double fault_rate = 0.0;
  std::uint64_t fault_seed = 0;
  /// When the user text contains this marker, each aspect score gets
  /// injection_bonus added, capped at 3.
  std::string injection_marker;
  int injection_bonus = 0;
  /// Returned verbatim instead of a grade, for parser fault tests.
  std::optional<std::string> fixed_reply;
};

struct EndpointConfig {
  /// "http" or "mock".
  std::string kind = "mock";
  std::string base_url;
  std::string model_id = "mock";
  /// Written to the score table's source column; defaults to model_id.
  std::string label;
  double temperature = 0.0;
  int max_output_tokens = 512;
  std::optional<std::string> reasoning_effort;
  std::string api_key_env;
  double timeout_s = 60.0;
  int max_retries = 5;
  int concurrency_limit = 4;
  /// USD per million tokens.
  double price_in = 0.0;
  double price_out = 0.0;
  int backoff_base_ms = 500;
  int backoff_max_ms = 30000;
  MockSettings mock;

  std::string source_label() const { return label.empty() ? model_id : label; }
  /// Throws ValidationError on out-of-range fields.
  void validate() const;
  static EndpointConfig parse(std::string_view json_text, const std::filesystem::path& base_dir = {});
  static EndpointConfig load(const std::filesystem::path& path);
};

struct ChatRequest {
  std::string model;
  std::string instructions;
  std::string user_text;
  double temperature = 0.0;
  int max_tokens = 512;
  std::optional<std::string> reasoning_effort;
  /// Bookkeeping only; never sent over the wire.
  std::string essay_id;
  std::optional<RubricAspect> aspect;
  std::string nonce;
};

struct ChatResponse {
  std::string text;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
};

class Provider {
 public:
  virtual ~Provider() = default;
  /// One attempt. Throws TransportError on failure.
  virtual ChatResponse complete(const ChatRequest& req, int attempt) = 0;
};

/// Chat-completions over HTTP(S) with a bearer key from the environment.
class HttpProvider : public Provider {
 public:
  explicit HttpProvider(EndpointConfig cfg);
  ChatResponse complete(const ChatRequest& req, int attempt) override;

 private:
  EndpointConfig cfg_;
  std::string api_key_;
  std::string scheme_host_;
  std::string path_;
};

/// Offline provider; pure function of (settings, request, attempt).
class MockProvider : public Provider {
 public:
  explicit MockProvider(MockSettings settings) : s_(std::move(settings)) {}
  ChatResponse complete(const ChatRequest& req, int attempt) override;

  /// The score this mock returns for a request (ignoring faults).
  int score_for(const ChatRequest& req) const;

 private:
  MockSettings s_;
};

std::unique_ptr<Provider> make_provider(const EndpointConfig& cfg);

/// Rough token estimate used by the mock: ceil(bytes / 4).
std::int64_t estimate_tokens(std::string_view text);

std::string sha256_hex(std::string_view data);

/// Retries retryable TransportErrors with exponential backoff and jitter.
/// `attempts` receives the number of attempts made.
ChatResponse call_with_retry(Provider& provider, const ChatRequest& req, const EndpointConfig& cfg,
                             int* attempts = nullptr);

// ---------------------------------------------------------------------------
// Cache, ledger and batch

/// Content address of a grading call.
std::string cache_key(std::string_view model, std::string_view instructions, std::string_view user_text,
                      double temperature);

/// One JSON file per response under `dir`, named by cache key; doubles as
/// the raw-response archive.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<ChatResponse> get(const std::string& key);
  void put(const std::string& key, const ChatRequest& req, const ChatResponse& resp);
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::mutex mu_;
  std::unordered_map<std::string, ChatResponse> memory_;
};

struct RunLedger {
  /// Grading calls issued (cache hits included).
  std::int64_t calls = 0;
  /// Calls answered over the provider; calls = requests + cache_hits.
  std::int64_t requests = 0;
  std::int64_t attempts = 0;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  double estimated_cost = 0.0;
  std::int64_t cache_hits = 0;
  /// Transport failures after retries.
  std::int64_t failures = 0;
  std::int64_t parse_failures = 0;
  std::int64_t out_of_range = 0;

  std::string to_json() const;
};

double estimate_cost(std::int64_t input_tokens, std::int64_t output_tokens, double price_in, double price_out);

struct GradeJob {
  std::string essay_id;
  RubricAspect aspect = RubricAspect::TitleIntro;
  Prompt prompt;
};

struct GradeOutcome {
  std::string essay_id;
  RubricAspect aspect = RubricAspect::TitleIntro;
  std::optional<ParsedGrade> grade;
  /// Empty on success; otherwise "transport: ...", "parse: ..." or
  /// "out_of_range: ...".
  std::string error;
  std::string cache_key;
  bool from_cache = false;
};

struct BatchOptions {
  /// Abort once the estimated cost exceeds this many USD.
  std::optional<double> budget;
  std::optional<std::filesystem::path> cache_dir;
};

struct BatchResult {
  /// In job order.
  std::vector<GradeOutcome> outcomes;
  RunLedger ledger;
  bool budget_exceeded = false;
};

/// Runs the jobs with at most concurrency_limit calls in flight. Results do
/// not depend on the concurrency level.
BatchResult run_jobs(std::span<const GradeJob> jobs, Provider& provider, const EndpointConfig& endpoint,
                     const BatchOptions& opts);

/// Nine jobs per essay, in corpus then aspect order.
std::vector<GradeJob> grading_jobs(const RubricConfig& cfg, std::span<const EssayRecord> essays);

BatchResult run_batch(const RubricConfig& cfg, const EndpointConfig& endpoint, Provider& provider,
                      std::span<const EssayRecord> essays, const BatchOptions& opts);

struct GradedEssay {
  ModelSheet sheet;
  std::vector<GradeOutcome> outcomes;
};

GradedEssay grade_essay(const RubricConfig& cfg, const EndpointConfig& endpoint, Provider& provider,
                        const EssayRecord& essay, const BatchOptions& opts = {});

/// Sheets by essay id.
std::map<std::string, ModelSheet> collect_sheets(std::span<const GradeOutcome> outcomes);

/// essay_id,aspect,score,source (empty score for failed aspects).
std::string score_csv(std::span<const GradeOutcome> outcomes, std::string_view source);
/// essay_id,aspect,reason for aspects needing human review.
std::string review_csv(std::span<const GradeOutcome> outcomes);

}  // namespace aes
