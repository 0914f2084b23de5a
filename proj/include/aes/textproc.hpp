#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace aes {

/// Half-open range of Unicode scalar offsets into the essay text.
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct Token {
  std::string surface;
  std::string lemma;
  /// UPOS-style coarse tag; "PUNCT" for punctuation.
  std::string pos;
  std::map<std::string, std::string> feats;
  bool is_word = true;
  CharSpan span;

  /// Value of a morphological feature, or "" when absent.
  std::string_view feat(std::string_view name) const;
  bool has_feat(std::string_view name, std::string_view value) const;
};

using Sentence = std::vector<Token>;
using Paragraph = std::vector<Sentence>;

struct AnnotatedText {
  /// Text the token spans point into. For CoNLL-U input it is rebuilt from
  /// the forms (honouring SpaceAfter=No; paragraphs joined by blank lines).
  std::string text;
  std::vector<Paragraph> paragraphs;

  std::size_t word_count() const;
  std::size_t sentence_count() const;
  std::size_t paragraph_count() const { return paragraphs.size(); }

  /// Every token in reading order.
  std::vector<const Token*> tokens() const;
  std::vector<const Token*> words() const;
};

/// Rule-based segmentation used when no external annotation exists.
/// Paragraphs break on blank lines; sentences break after . ! ? or an
/// ellipsis when followed by an uppercase letter, a digit or the end of the
/// paragraph; punctuation is split off words. lemma == surface, pos is
/// "PUNCT", "NUM" or "X". Throws ValidationError on blank input.
AnnotatedText segment(std::string_view text);

/// Reads CoNLL-U. `# newpar` comments open a paragraph; multiword ranges
/// and empty nodes are skipped. Throws ValidationError on a line without
/// ten tab-separated columns (message carries the line number) or when no
/// sentence is present.
AnnotatedText parse_conllu(std::string_view contents);
AnnotatedText load_conllu(const std::filesystem::path& path);

/// Syllable estimate: vowel groups over a, e, i, o, u, õ, ä, ö, ü with an
/// extra break inside a group wherever a vowel is followed by a different
/// vowel other than e, i or u. Minimum 1. Throws ValidationError if the word
/// has no letter.
int count_syllables(std::string_view word);

/// Serialises to CoNLL-U (lemma/UPOS/FEATS, SpaceAfter=No where needed).
std::string to_conllu(const AnnotatedText& t);

}  // namespace aes
