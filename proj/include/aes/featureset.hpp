#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "aes/corpus.hpp"
#include "aes/editlab.hpp"
#include "aes/textproc.hpp"
#include "aes/types.hpp"

namespace aes {

enum class FeatureCategory { Surface, Lexical, Grammatical, Error };

std::string_view category_name(FeatureCategory c);
std::optional<FeatureCategory> category_from_name(std::string_view name);

struct FeatureSpec {
  std::string name;
  FeatureCategory category = FeatureCategory::Surface;
  /// Subset of the five language aspects, in canonical order.
  std::vector<RubricAspect> aspects;
  /// True for proportions that must lie in [0, 1].
  bool bounded = false;

  bool has_aspect(RubricAspect a) const;
  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

inline constexpr std::size_t kFeatureCount = 108;

class FeatureRegistry {
 public:
  FeatureRegistry() = default;
  /// Throws InvariantViolation unless names are unique, every spec has at
  /// least one language aspect and the category/aspect cardinalities hold.
  explicit FeatureRegistry(std::vector<FeatureSpec> specs);

  /// The compiled-in registry.
  static const FeatureRegistry& builtin();
  /// Loads a registry file (JSON array of {name, category, aspects, bounded}).
  static FeatureRegistry load(const std::filesystem::path& path);
  static FeatureRegistry parse(std::string_view json_text);
  std::string to_json() const;

  const std::vector<FeatureSpec>& specs() const { return specs_; }
  std::size_t size() const { return specs_.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::vector<std::string> names() const;
  std::vector<std::string> names_for(RubricAspect a) const;
  std::size_t count(FeatureCategory c) const;
  std::size_t count(RubricAspect a) const;

 private:
  std::vector<FeatureSpec> specs_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

/// Lemma frequency list in rank order; matching is case-insensitive.
class FrequencyList {
 public:
  FrequencyList() = default;
  explicit FrequencyList(std::vector<std::string> lemmas);

  static FrequencyList parse(std::string_view contents);
  static FrequencyList load(const std::filesystem::path& path);

  /// True if `lemma` is among the first `top` entries.
  bool in_top(std::string_view lemma, std::size_t top) const;
  std::size_t size() const { return rank_.size(); }

 private:
  std::unordered_map<std::string, std::size_t> rank_;
};

/// Lemma -> abstractness rating 1..3.
class AbstractnessLexicon {
 public:
  AbstractnessLexicon() = default;

  static AbstractnessLexicon parse(std::string_view contents);
  static AbstractnessLexicon load(const std::filesystem::path& path);

  std::optional<int> rating(std::string_view lemma) const;
  void set(std::string_view lemma, int rating);
  std::size_t size() const { return ratings_.size(); }

 private:
  std::unordered_map<std::string, int> ratings_;
};

inline constexpr double kMtldThreshold = 0.72;
inline constexpr double kUberEpsilon = 1e-12;

/// Factor count of one MTLD pass, including the partial last factor.
double mtld_factors(std::span<const std::string> tokens, double threshold = kMtldThreshold);
/// N divided by the mean of forward and backward factor counts; N when that
/// mean is 0.
double mtld(std::span<const std::string> tokens, double threshold = kMtldThreshold);

/// Flags raised while computing a vector, e.g. "uber_sentinel".
using FeatureFlags = std::vector<std::string>;

NamedValues surface_features(const AnnotatedText& t);
NamedValues lexical_features(const AnnotatedText& t, const FrequencyList& freq,
                             const AbstractnessLexicon& abstr, FeatureFlags* flags = nullptr);
NamedValues grammatical_features(const AnnotatedText& t);

struct FeatureVector {
  std::string essay_id;
  /// Registry order.
  std::vector<double> values;
  FeatureFlags flags;

  double at(const FeatureRegistry& reg, std::string_view name) const;
};

struct EssayInputs {
  /// Morphologically annotated text; when absent, segment(record text) is used.
  std::optional<AnnotatedText> annotated;
  /// Corrected text; when absent the essay is treated as needing no edits.
  std::optional<std::string> corrected;
  std::vector<SpellCorrection> spelling;
};

/// Computes all registry features for one essay. Throws InvariantViolation if
/// an extractor emits a name the registry lacks (or misses one), or a value is
/// not finite.
FeatureVector assemble(const EssayRecord& essay, const EssayInputs& inputs,
                       const FrequencyList& freq, const AbstractnessLexicon& abstr,
                       const FeatureRegistry& reg = FeatureRegistry::builtin());

/// CSV with header "essay_id,<feature names...>", values printed with 17
/// significant digits.
std::string features_to_csv(std::span<const FeatureVector> rows, const FeatureRegistry& reg);
std::vector<FeatureVector> features_from_csv(std::string_view csv, const FeatureRegistry& reg);

}  // namespace aes
