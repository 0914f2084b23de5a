#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aes/textproc.hpp"
#include "aes/types.hpp"

namespace aes {

enum class EditKind {
  WordReplaced,
  WordMissing,
  WordUnnecessary,
  PunctReplaced,
  PunctMissing,
  PunctUnnecessary,
  Whitespace,
  WordOrder,
  Spelling,
  Mixed,
};

inline constexpr std::size_t kEditKindCount = 10;

std::string_view edit_kind_name(EditKind k);

/// Half-open token index range.
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool empty() const { return begin == end; }
  friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

struct Edit {
  EditKind kind;
  TokenRange orig;
  TokenRange corr;

  friend bool operator==(const Edit&, const Edit&) = default;
};

/// Flat view of one token as the aligner sees it.
struct EditToken {
  std::string surface;
  /// Empty when the text carries no lemma annotation.
  std::string lemma;
  bool is_word = true;
  std::size_t sentence = 0;
};

std::vector<EditToken> edit_tokens(const AnnotatedText& t, bool annotated);

/// One line of a spell-checker sidecar. token_index counts every token of
/// the original text (punctuation included) from zero.
struct SpellCorrection {
  std::size_t token_index = 0;
  std::string original;
  std::string corrected;
};

std::vector<SpellCorrection> parse_spell_sidecar(std::string_view contents);
std::vector<SpellCorrection> load_spell_sidecar(const std::filesystem::path& path);

struct EditSet {
  std::vector<Edit> edits;
  std::size_t word_count = 0;
  std::size_t sentence_count = 0;
  std::size_t spell_corrected_words = 0;

  std::size_t count(EditKind k) const;
};

enum class AlignOp { Match, Substitute, Insert, Delete };

/// One alignment column. For Insert, `orig` is the original position the
/// token is inserted before; for Delete, `corr` is the corrected position.
struct AlignStep {
  AlignOp op;
  std::size_t orig;
  std::size_t corr;
};

/// Minimum-cost token alignment: equal surfaces match for free; insertion,
/// deletion and substitution cost 1; substitution only pairs word with word
/// or punctuation with punctuation.
std::vector<AlignStep> align(std::span<const EditToken> orig, std::span<const EditToken> corr);
std::size_t script_cost(std::span<const AlignStep> steps);

/// Aligns and groups contiguous non-matching columns into edits. Moved words
/// (same lemma or case-folded form deleted and inserted within one sentence)
/// fold into WordOrder; groups mixing operation classes become Mixed.
/// Counts are taken from `orig`; spelling is never produced here.
EditSet align_and_classify(std::span<const EditToken> orig, std::span<const EditToken> corr);

/// Applies the sidecar corrections to the original, aligns the result with
/// the corrected text and adds one Spelling edit per sidecar line.
/// Throws ValidationError if a sidecar index is out of range, points at
/// punctuation or disagrees with the original surface.
EditSet build_edit_set(const AnnotatedText& original, const AnnotatedText& corrected,
                       bool original_annotated, std::span<const SpellCorrection> spelling);

/// The 23 error features, in registry order. Zero denominators yield 0.
NamedValues error_features(const EditSet& es);

}  // namespace aes
