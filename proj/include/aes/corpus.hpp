#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aes {

/// The nine rubric aspects, in canonical iteration order. The order is part
/// of every report layout and must not change.
enum class RubricAspect : std::size_t {
  TitleIntro = 0,
  ArgumentDevelopment,
  SourceUse,
  Conclusion,
  Vocabulary,
  Syntax,
  Orthography,
  Punctuation,
  Structuring,
};

inline constexpr std::size_t kAspectCount = 9;
inline constexpr int kMaxAspectScore = 3;
inline constexpr int kMaxTotal = kMaxAspectScore * static_cast<int>(kAspectCount);

inline constexpr std::array<RubricAspect, kAspectCount> kAllAspects = {
    RubricAspect::TitleIntro,  RubricAspect::ArgumentDevelopment, RubricAspect::SourceUse,
    RubricAspect::Conclusion,  RubricAspect::Vocabulary,          RubricAspect::Syntax,
    RubricAspect::Orthography, RubricAspect::Punctuation,         RubricAspect::Structuring,
};

/// Aspects scored by the feature-based regression pipeline.
inline constexpr std::array<RubricAspect, 5> kLanguageAspects = {
    RubricAspect::Vocabulary, RubricAspect::Syntax, RubricAspect::Orthography,
    RubricAspect::Punctuation, RubricAspect::Structuring,
};

constexpr std::size_t index(RubricAspect a) { return static_cast<std::size_t>(a); }

/// Canonical key used in corpus files, configs and CSV outputs
/// (e.g. "title_intro", "structuring").
std::string_view aspect_key(RubricAspect a);
std::optional<RubricAspect> aspect_from_key(std::string_view key);
bool is_language_aspect(RubricAspect a);

/// One grader's nine 0..3 scores.
class AspectScores {
 public:
  AspectScores() = default;
  /// Throws ValidationError if any score is outside 0..3.
  explicit AspectScores(const std::array<int, kAspectCount>& scores);

  int operator[](RubricAspect a) const { return scores_[index(a)]; }
  const std::array<int, kAspectCount>& values() const { return scores_; }
  int total() const;

  friend bool operator==(const AspectScores&, const AspectScores&) = default;

 private:
  std::array<int, kAspectCount> scores_{};
};

struct EssayRecord {
  std::string id;
  int grade_level = 9;
  std::string text;
  AspectScores scores_g1;
  AspectScores scores_g2;
  std::map<std::string, std::string> meta;

  friend bool operator==(const EssayRecord&, const EssayRecord&) = default;
};

/// Aspect-wise mean of the two graders. Values lie on the 0.5 grid and are
/// exactly representable as doubles.
struct ConsensusScores {
  std::array<double, kAspectCount> aspects{};
  double total = 0.0;

  double operator[](RubricAspect a) const { return aspects[index(a)]; }
};

ConsensusScores consensus(const EssayRecord& r);

struct SkippedRecord {
  std::size_t line = 0;
  std::string id;
  std::string reason;
};

struct LoadedCorpus {
  std::vector<EssayRecord> records;
  std::vector<SkippedRecord> skipped;
};

/// Reads a line-delimited JSON corpus. Records lacking a grader sheet, with
/// out-of-range scores or with a different grade level are skipped and
/// reported. Unreadable files, malformed lines and duplicate ids throw
/// ValidationError (the message carries the line number).
LoadedCorpus load_corpus(const std::filesystem::path& path, std::optional<int> grade_level = {});
LoadedCorpus parse_corpus(std::string_view contents, std::optional<int> grade_level = {});

std::string serialize_record(const EssayRecord& r);
std::string serialize_corpus(std::span<const EssayRecord> records);

/// Levels (1..5) of the four weighted upper-secondary components.
struct ComponentLevels {
  int content = 1;
  int spelling_grammar = 1;
  int style = 1;
  int structure = 1;
};

/// content x5 + spelling/grammar x4 + style x2 + structure x1, in [12, 60].
/// Throws ValidationError for a level outside 1..5.
int weighted_total_12(const ComponentLevels& levels);

}  // namespace aes
