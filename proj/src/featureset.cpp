#include "aes/featureset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aes/errors.hpp"
#include "aes/utf8.hpp"

namespace aes {

namespace {

using json = nlohmann::json;

struct Row {
  const char* name;
  FeatureCategory category;
  // Aspect letters: P punctuation, O orthography, T structuring, V vocabulary, S syntax.
  const char* aspects;
  bool bounded;
};

constexpr FeatureCategory kSur = FeatureCategory::Surface;
constexpr FeatureCategory kLex = FeatureCategory::Lexical;
constexpr FeatureCategory kGra = FeatureCategory::Grammatical;
constexpr FeatureCategory kErr = FeatureCategory::Error;

// clang-format off
constexpr Row kRows[] = {
    {"mean_word_len", kSur, "VS", false},
    {"mean_sent_len", kSur, "S", false},
    {"lix", kSur, "VS", false},
    {"smog", kSur, "V", false},
    {"fkgl", kSur, "S", false},
    {"paragraph_count", kSur, "T", false},
    {"para_words_mean", kSur, "T", false},
    {"para_words_sd", kSur, "T", false},
    {"para_words_maxdiff", kSur, "T", false},
    {"para_sents_mean", kSur, "T", false},
    {"para_sents_sd", kSur, "T", false},
    {"para_sents_maxdiff", kSur, "T", false},

    {"lemma_count", kLex, "V", false},
    {"ttr", kLex, "V", true},
    {"rttr", kLex, "V", false},
    {"cttr", kLex, "V", false},
    {"herdan_c", kLex, "V", true},
    {"maas", kLex, "V", false},
    {"uber", kLex, "V", false},
    {"mtld", kLex, "V", false},
    {"cvv", kLex, "V", false},
    {"noun_ttr", kLex, "V", true},
    {"verb_ttr", kLex, "V", true},
    {"adj_ttr", kLex, "V", true},
    {"adv_ttr", kLex, "V", true},
    {"rare_beyond_1000", kLex, "VS", true},
    {"rare_beyond_2000", kLex, "V", true},
    {"rare_beyond_3000", kLex, "V", true},
    {"rare_beyond_4000", kLex, "V", true},
    {"rare_beyond_5000", kLex, "VS", true},
    {"noun_abstractness", kLex, "V", false},
    {"lexical_density", kLex, "VS", true},

    {"noun_ratio", kGra, "VS", true},
    {"pronoun_ratio", kGra, "VS", true},
    {"adj_ratio", kGra, "VS", true},
    {"verb_ratio", kGra, "VS", true},
    {"adv_ratio", kGra, "VS", true},
    {"conj_ratio", kGra, "VS", true},
    {"adp_ratio", kGra, "VS", true},
    {"intj_ratio", kGra, "VS", true},
    {"pron_personal_ratio", kGra, "VS", true},
    {"pron_reflexive_ratio", kGra, "VS", true},
    {"pron_int_rel_ratio", kGra, "VS", true},
    {"pron_demonstrative_ratio", kGra, "VS", true},
    {"pron_indefinite_ratio", kGra, "VS", true},
    {"sconj_ratio", kGra, "VS", true},
    {"cconj_ratio", kGra, "VS", true},
    {"postposition_ratio", kGra, "VS", true},
    {"preposition_ratio", kGra, "VS", true},
    {"noun_verb_ratio", kGra, "VS", false},
    {"f_score", kGra, "VS", false},
    {"noun_case_forms", kGra, "S", false},
    {"pronoun_case_forms", kGra, "S", false},
    {"adj_case_forms", kGra, "S", false},
    {"nominal_case_forms", kGra, "S", false},
    {"plural_ratio", kGra, "S", true},
    {"noun_plural_ratio", kGra, "S", true},
    {"pronoun_plural_ratio", kGra, "S", true},
    {"adj_plural_ratio", kGra, "S", true},
    {"case_nom_ratio", kGra, "S", true},
    {"case_gen_ratio", kGra, "S", true},
    {"case_par_ratio", kGra, "S", true},
    {"case_ill_ratio", kGra, "S", true},
    {"case_ine_ratio", kGra, "S", true},
    {"case_ela_ratio", kGra, "S", true},
    {"case_all_ratio", kGra, "S", true},
    {"case_ade_ratio", kGra, "S", true},
    {"case_abl_ratio", kGra, "S", true},
    {"case_tra_ratio", kGra, "S", true},
    {"case_ter_ratio", kGra, "S", true},
    {"case_ess_ratio", kGra, "S", true},
    {"case_abe_ratio", kGra, "S", true},
    {"case_com_ratio", kGra, "S", true},
    {"mood_ind_ratio", kGra, "S", true},
    {"mood_cnd_ratio", kGra, "S", true},
    {"mood_imp_ratio", kGra, "S", true},
    {"finite_ratio", kGra, "S", true},
    {"infinitive_ratio", kGra, "S", true},
    {"participle_ratio", kGra, "S", true},
    {"gerund_ratio", kGra, "S", true},
    {"present_ratio", kGra, "S", true},
    {"past_ratio", kGra, "S", true},
    {"verb_plural_ratio", kGra, "S", true},
    {"passive_ratio", kGra, "S", true},
    {"negation_ratio", kGra, "S", true},

    {"word_replaced_count", kErr, "OTV", false},
    {"word_replaced_ratio", kErr, "OTV", true},
    {"word_missing_count", kErr, "V", false},
    {"word_missing_ratio", kErr, "V", true},
    {"word_unnecessary_count", kErr, "V", false},
    {"word_unnecessary_ratio", kErr, "V", true},
    {"punct_replaced_count", kErr, "P", false},
    {"punct_replaced_ratio", kErr, "P", true},
    {"punct_missing_count", kErr, "P", false},
    {"punct_missing_ratio", kErr, "P", true},
    {"punct_unnecessary_count", kErr, "P", false},
    {"punct_unnecessary_ratio", kErr, "P", true},
    {"whitespace_count", kErr, "O", false},
    {"whitespace_ratio", kErr, "O", true},
    {"word_order_count", kErr, "VS", false},
    {"word_order_ratio", kErr, "V", true},
    {"mixed_count", kErr, "OVS", false},
    {"mixed_ratio", kErr, "OV", true},
    {"spelling_corrections", kErr, "OT", false},
    {"spell_corrected_word_ratio", kErr, "OT", true},
    {"total_edit_count", kErr, "O", false},
    {"edits_per_word", kErr, "O", false},
    {"edits_per_sentence", kErr, "O", false},
};
// clang-format on

constexpr std::array<std::pair<char, RubricAspect>, 5> kAspectLetters = {{
    {'V', RubricAspect::Vocabulary},
    {'S', RubricAspect::Syntax},
    {'O', RubricAspect::Orthography},
    {'P', RubricAspect::Punctuation},
    {'T', RubricAspect::Structuring},
}};

std::vector<RubricAspect> aspects_from_letters(std::string_view letters) {
  std::vector<RubricAspect> out;
  for (char c : letters) {
    for (const auto& [l, a] : kAspectLetters) {
      if (l == c) out.push_back(a);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

constexpr std::array<std::size_t, 4> kCategoryCounts = {12, 20, 53, 23};

struct AspectCount {
  RubricAspect aspect;
  std::size_t count;
};

constexpr std::array<AspectCount, 5> kAspectCounts = {{
    {RubricAspect::Punctuation, 6},
    {RubricAspect::Orthography, 11},
    {RubricAspect::Structuring, 11},
    {RubricAspect::Vocabulary, 52},
    {RubricAspect::Syntax, 62},
}};

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(std::string("cannot read ") + what + ": " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto nl = s.find('\n', pos);
    if (nl == std::string_view::npos) nl = s.size();
    auto line = s.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    pos = nl + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
  double maxdiff = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.sd = std::sqrt(ss / static_cast<double>(xs.size()));
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  m.maxdiff = *hi - *lo;
  return m;
}

int syllables_or_one(const std::string& surface) {
  for (char32_t cp : utf8::decode(surface)) {
    if (utf8::is_letter(cp)) return count_syllables(surface);
  }
  return 1;
}

bool is_noun(const Token& t) { return t.pos == "NOUN" || t.pos == "PROPN"; }
bool is_verb(const Token& t) { return t.pos == "VERB" || t.pos == "AUX"; }
bool is_nominal(const Token& t) { return is_noun(t) || t.pos == "PRON" || t.pos == "ADJ"; }

std::string lemma_key(const Token& t) { return utf8::to_lower(t.lemma.empty() ? t.surface : t.lemma); }

// Unique lemmas over tokens, or 0 when there are none.
double pos_ttr(const std::vector<const Token*>& words, bool (*pred)(const Token&)) {
  std::set<std::string> types;
  std::size_t n = 0;
  for (const Token* w : words) {
    if (!pred(*w)) continue;
    ++n;
    types.insert(lemma_key(*w));
  }
  return ratio(static_cast<double>(types.size()), static_cast<double>(n));
}

// Case ratio columns; Add (additive) folds into illative.
constexpr std::array<std::string_view, 14> kCases = {"Nom", "Gen", "Par", "Ill", "Ine", "Ela", "All",
                                                     "Ade", "Abl", "Tra", "Ter", "Ess", "Abe", "Com"};

}  // namespace

std::string_view category_name(FeatureCategory c) {
  switch (c) {
    case FeatureCategory::Surface:
      return "surface";
    case FeatureCategory::Lexical:
      return "lexical";
    case FeatureCategory::Grammatical:
      return "grammatical";
    case FeatureCategory::Error:
      return "error";
  }
  return "";
}

std::optional<FeatureCategory> category_from_name(std::string_view name) {
  for (auto c : {FeatureCategory::Surface, FeatureCategory::Lexical, FeatureCategory::Grammatical,
                 FeatureCategory::Error}) {
    if (category_name(c) == name) return c;
  }
  return std::nullopt;
}

bool FeatureSpec::has_aspect(RubricAspect a) const {
  return std::find(aspects.begin(), aspects.end(), a) != aspects.end();
}

FeatureRegistry::FeatureRegistry(std::vector<FeatureSpec> specs) : specs_(std::move(specs)) {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const auto& s = specs_[i];
    if (s.name.empty()) throw InvariantViolation("feature registry: empty feature name");
    if (!by_name_.emplace(s.name, i).second) {
      throw InvariantViolation("feature registry: duplicate feature '" + s.name + "'");
    }
    if (s.aspects.empty()) {
      throw InvariantViolation("feature registry: '" + s.name + "' has no aspect");
    }
    for (RubricAspect a : s.aspects) {
      if (!is_language_aspect(a)) {
        throw InvariantViolation("feature registry: '" + s.name + "' tagged with non-language aspect " +
                                 std::string(aspect_key(a)));
      }
    }
  }
  if (specs_.size() != kFeatureCount) {
    throw InvariantViolation("feature registry: expected " + std::to_string(kFeatureCount) +
                             " features, found " + std::to_string(specs_.size()));
  }
  for (std::size_t c = 0; c < kCategoryCounts.size(); ++c) {
    const auto cat = static_cast<FeatureCategory>(c);
    if (count(cat) != kCategoryCounts[c]) {
      throw InvariantViolation("feature registry: category " + std::string(category_name(cat)) +
                               " has " + std::to_string(count(cat)) + " features, expected " +
                               std::to_string(kCategoryCounts[c]));
    }
  }
  for (const auto& ac : kAspectCounts) {
    if (count(ac.aspect) != ac.count) {
      throw InvariantViolation("feature registry: aspect " + std::string(aspect_key(ac.aspect)) +
                               " has " + std::to_string(count(ac.aspect)) + " features, expected " +
                               std::to_string(ac.count));
    }
  }
}

const FeatureRegistry& FeatureRegistry::builtin() {
  static const FeatureRegistry reg = [] {
    std::vector<FeatureSpec> specs;
    for (const auto& r : kRows) {
      specs.push_back({r.name, r.category, aspects_from_letters(r.aspects), r.bounded});
    }
    return FeatureRegistry(std::move(specs));
  }();
  return reg;
}

FeatureRegistry FeatureRegistry::parse(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("feature registry: ") + e.what());
  }
  if (!doc.is_array()) throw ValidationError("feature registry: expected a JSON array");
  std::vector<FeatureSpec> specs;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("name") || !item.contains("category") ||
        !item.contains("aspects")) {
      throw ValidationError("feature registry: entries need name, category and aspects");
    }
    FeatureSpec s;
    s.name = item["name"].get<std::string>();
    const auto cat = category_from_name(item["category"].get<std::string>());
    if (!cat) throw ValidationError("feature registry: unknown category for '" + s.name + "'");
    s.category = *cat;
    for (const auto& a : item["aspects"]) {
      const auto asp = aspect_from_key(a.get<std::string>());
      if (!asp) throw ValidationError("feature registry: unknown aspect for '" + s.name + "'");
      s.aspects.push_back(*asp);
    }
    std::sort(s.aspects.begin(), s.aspects.end());
    s.bounded = item.value("bounded", false);
    specs.push_back(std::move(s));
  }
  return FeatureRegistry(std::move(specs));
}

FeatureRegistry FeatureRegistry::load(const std::filesystem::path& path) {
  return parse(read_file(path, "feature registry"));
}

std::string FeatureRegistry::to_json() const {
  json doc = json::array();
  for (const auto& s : specs_) {
    json aspects = json::array();
    for (RubricAspect a : s.aspects) aspects.push_back(std::string(aspect_key(a)));
    doc.push_back({{"name", s.name},
                   {"category", std::string(category_name(s.category))},
                   {"aspects", aspects},
                   {"bounded", s.bounded}});
  }
  return doc.dump(2) + "\n";
}

std::optional<std::size_t> FeatureRegistry::index_of(std::string_view name) const {
  const auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> FeatureRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& s : specs_) out.push_back(s.name);
  return out;
}

std::vector<std::string> FeatureRegistry::names_for(RubricAspect a) const {
  std::vector<std::string> out;
  for (const auto& s : specs_) {
    if (s.has_aspect(a)) out.push_back(s.name);
  }
  return out;
}

std::size_t FeatureRegistry::count(FeatureCategory c) const {
  return static_cast<std::size_t>(
      std::count_if(specs_.begin(), specs_.end(), [c](const FeatureSpec& s) { return s.category == c; }));
}

std::size_t FeatureRegistry::count(RubricAspect a) const {
  return static_cast<std::size_t>(
      std::count_if(specs_.begin(), specs_.end(), [a](const FeatureSpec& s) { return s.has_aspect(a); }));
}

FrequencyList::FrequencyList(std::vector<std::string> lemmas) {
  for (std::size_t i = 0; i < lemmas.size(); ++i) {
    rank_.emplace(utf8::to_lower(lemmas[i]), i);
  }
}

FrequencyList FrequencyList::parse(std::string_view contents) {
  std::vector<std::string> lemmas;
  for (auto line : split_lines(contents)) {
    line = trim(line);
    if (!line.empty()) lemmas.emplace_back(line);
  }
  return FrequencyList(std::move(lemmas));
}

FrequencyList FrequencyList::load(const std::filesystem::path& path) {
  return parse(read_file(path, "frequency list"));
}

bool FrequencyList::in_top(std::string_view lemma, std::size_t top) const {
  const auto it = rank_.find(utf8::to_lower(lemma));
  return it != rank_.end() && it->second < top;
}

AbstractnessLexicon AbstractnessLexicon::parse(std::string_view contents) {
  AbstractnessLexicon lex;
  std::size_t line_no = 0;
  for (auto line : split_lines(contents)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ValidationError("abstractness lexicon line " + std::to_string(line_no) +
                            ": expected lemma<TAB>rating");
    }
    const auto rating = trim(line.substr(tab + 1));
    if (rating.size() != 1 || rating[0] < '1' || rating[0] > '3') {
      throw ValidationError("abstractness lexicon line " + std::to_string(line_no) +
                            ": rating must be 1, 2 or 3");
    }
    lex.set(line.substr(0, tab), rating[0] - '0');
  }
  return lex;
}

AbstractnessLexicon AbstractnessLexicon::load(const std::filesystem::path& path) {
  return parse(read_file(path, "abstractness lexicon"));
}

std::optional<int> AbstractnessLexicon::rating(std::string_view lemma) const {
  const auto it = ratings_.find(utf8::to_lower(lemma));
  if (it == ratings_.end()) return std::nullopt;
  return it->second;
}

void AbstractnessLexicon::set(std::string_view lemma, int rating) {
  ratings_[utf8::to_lower(lemma)] = rating;
}

double mtld_factors(std::span<const std::string> tokens, double threshold) {
  double factors = 0.0;
  std::set<std::string_view> types;
  std::size_t count = 0;
  double ttr = 1.0;
  for (const auto& tok : tokens) {
    types.insert(tok);
    ++count;
    ttr = static_cast<double>(types.size()) / static_cast<double>(count);
    if (ttr < threshold) {
      factors += 1.0;
      types.clear();
      count = 0;
      ttr = 1.0;
    }
  }
  if (count > 0) factors += (1.0 - ttr) / (1.0 - threshold);
  return factors;
}

double mtld(std::span<const std::string> tokens, double threshold) {
  const double n = static_cast<double>(tokens.size());
  std::vector<std::string> reversed(tokens.rbegin(), tokens.rend());
  const double mean = (mtld_factors(tokens, threshold) + mtld_factors(reversed, threshold)) / 2.0;
  return mean == 0.0 ? n : n / mean;
}

NamedValues surface_features(const AnnotatedText& t) {
  const auto words = t.words();
  const double w = static_cast<double>(words.size());
  const double s = static_cast<double>(t.sentence_count());
  if (words.empty() || s == 0.0) throw ValidationError("surface features need at least one word");

  double chars = 0.0;
  double long_words = 0.0;
  double syllables = 0.0;
  double polysyllables = 0.0;
  for (const Token* tok : words) {
    const auto len = static_cast<double>(utf8::length(tok->surface));
    chars += len;
    if (len > 6) long_words += 1.0;
    const int syl = syllables_or_one(tok->surface);
    syllables += syl;
    if (syl >= 3) polysyllables += 1.0;
  }

  std::vector<double> para_words;
  std::vector<double> para_sents;
  for (const auto& para : t.paragraphs) {
    double pw = 0.0;
    for (const auto& sent : para) {
      for (const auto& tok : sent) {
        if (tok.is_word) pw += 1.0;
      }
    }
    para_words.push_back(pw);
    para_sents.push_back(static_cast<double>(para.size()));
  }
  const auto pw = moments(para_words);
  const auto ps = moments(para_sents);

  return {
      {"mean_word_len", chars / w},
      {"mean_sent_len", w / s},
      {"lix", w / s + 100.0 * long_words / w},
      {"smog", 1.043 * std::sqrt(polysyllables * 30.0 / s) + 3.1291},
      {"fkgl", 0.39 * (w / s) + 11.8 * (syllables / w) - 15.59},
      {"paragraph_count", static_cast<double>(t.paragraph_count())},
      {"para_words_mean", pw.mean},
      {"para_words_sd", pw.sd},
      {"para_words_maxdiff", pw.maxdiff},
      {"para_sents_mean", ps.mean},
      {"para_sents_sd", ps.sd},
      {"para_sents_maxdiff", ps.maxdiff},
  };
}

NamedValues lexical_features(const AnnotatedText& t, const FrequencyList& freq,
                             const AbstractnessLexicon& abstr, FeatureFlags* flags) {
  const auto words = t.words();
  if (words.size() < 2) throw ValidationError("lexical features need at least two words");

  std::vector<std::string> lemmas;
  lemmas.reserve(words.size());
  for (const Token* w : words) lemmas.push_back(lemma_key(*w));
  const std::set<std::string> types(lemmas.begin(), lemmas.end());

  const double n = static_cast<double>(words.size());
  const double v = static_cast<double>(types.size());
  const double log_n = std::log(n);
  const double log_v = std::log(v);

  double uber = 0.0;
  if (types.size() == words.size()) {
    uber = log_n * log_n / kUberEpsilon;
    if (flags) flags->push_back("uber_sentinel");
  } else {
    uber = log_n * log_n / (log_n - log_v);
  }

  std::set<std::string> verb_types;
  double verb_tokens = 0.0;
  double content = 0.0;
  double abstract_sum = 0.0;
  double abstract_n = 0.0;
  for (const Token* w : words) {
    if (is_verb(*w)) {
      verb_tokens += 1.0;
      verb_types.insert(lemma_key(*w));
    }
    if (is_noun(*w) || w->pos == "VERB" || w->pos == "ADJ" || w->pos == "ADV") content += 1.0;
    if (is_noun(*w)) {
      if (const auto r = abstr.rating(lemma_key(*w))) {
        abstract_sum += *r;
        abstract_n += 1.0;
      }
    }
  }
  if (abstract_n == 0.0 && flags) flags->push_back("no_abstractness_match");

  NamedValues out = {
      {"lemma_count", v},
      {"ttr", v / n},
      {"rttr", v / std::sqrt(n)},
      {"cttr", v / std::sqrt(2.0 * n)},
      {"herdan_c", log_v / log_n},
      {"maas", (log_n - log_v) / (log_n * log_n)},
      {"uber", uber},
      {"mtld", mtld(lemmas)},
      {"cvv", verb_tokens == 0.0 ? 0.0 : static_cast<double>(verb_types.size()) / std::sqrt(2.0 * verb_tokens)},
      {"noun_ttr", pos_ttr(words, is_noun)},
      {"verb_ttr", pos_ttr(words, is_verb)},
      {"adj_ttr", pos_ttr(words, [](const Token& x) { return x.pos == "ADJ"; })},
      {"adv_ttr", pos_ttr(words, [](const Token& x) { return x.pos == "ADV"; })},
  };
  for (std::size_t tier = 1000; tier <= 5000; tier += 1000) {
    double rare = 0.0;
    for (const auto& l : lemmas) {
      if (!freq.in_top(l, tier)) rare += 1.0;
    }
    out.emplace_back("rare_beyond_" + std::to_string(tier), rare / n);
  }
  out.emplace_back("noun_abstractness", ratio(abstract_sum, abstract_n));
  out.emplace_back("lexical_density", content / n);
  return out;
}

NamedValues grammatical_features(const AnnotatedText& t) {
  const auto words = t.words();
  const double n = static_cast<double>(words.size());

  double noun = 0, pron = 0, adj = 0, verb = 0, adv = 0, cconj = 0, sconj = 0, adp = 0, intj = 0;
  double prs = 0, reflexive = 0, int_rel = 0, dem = 0, ind = 0;
  double post = 0, prep = 0;
  double nominal = 0, plural = 0, noun_pl = 0, pron_pl = 0, adj_pl = 0;
  std::set<std::string> noun_cases, pron_cases, adj_cases, all_cases;
  std::array<double, kCases.size()> cases{};
  double mood_ind = 0, mood_cnd = 0, mood_imp = 0, finite = 0, infinitive = 0, participle = 0,
         gerund = 0, present = 0, past = 0, verb_pl = 0, passive = 0, negation = 0;

  for (const Token* w : words) {
    const Token& tok = *w;
    if (is_noun(tok)) noun += 1;
    if (tok.pos == "PRON") {
      pron += 1;
      if (tok.has_feat("Reflex", "Yes")) {
        reflexive += 1;
      } else if (tok.has_feat("PronType", "Prs")) {
        prs += 1;
      }
      if (tok.has_feat("PronType", "Int") || tok.has_feat("PronType", "Rel")) int_rel += 1;
      if (tok.has_feat("PronType", "Dem")) dem += 1;
      if (tok.has_feat("PronType", "Ind")) ind += 1;
    }
    if (tok.pos == "ADJ") adj += 1;
    if (is_verb(tok)) verb += 1;
    if (tok.pos == "ADV") adv += 1;
    if (tok.pos == "CCONJ") cconj += 1;
    if (tok.pos == "SCONJ") sconj += 1;
    if (tok.pos == "ADP") {
      adp += 1;
      if (tok.has_feat("AdpType", "Post")) post += 1;
      if (tok.has_feat("AdpType", "Prep")) prep += 1;
    }
    if (tok.pos == "INTJ") intj += 1;

    if (is_nominal(tok)) {
      nominal += 1;
      const bool pl = tok.has_feat("Number", "Plur");
      if (pl) plural += 1;
      const std::string c(tok.feat("Case"));
      if (!c.empty()) all_cases.insert(c);
      if (is_noun(tok)) {
        if (pl) noun_pl += 1;
        if (!c.empty()) noun_cases.insert(c);
      } else if (tok.pos == "PRON") {
        if (pl) pron_pl += 1;
        if (!c.empty()) pron_cases.insert(c);
      } else {
        if (pl) adj_pl += 1;
        if (!c.empty()) adj_cases.insert(c);
      }
      for (std::size_t k = 0; k < kCases.size(); ++k) {
        if (c == kCases[k] || (kCases[k] == "Ill" && c == "Add")) cases[k] += 1;
      }
    }

    if (is_verb(tok)) {
      if (tok.has_feat("Mood", "Ind")) mood_ind += 1;
      if (tok.has_feat("Mood", "Cnd")) mood_cnd += 1;
      if (tok.has_feat("Mood", "Imp")) mood_imp += 1;
      if (tok.has_feat("VerbForm", "Fin")) finite += 1;
      if (tok.has_feat("VerbForm", "Inf") || tok.has_feat("VerbForm", "Sup")) infinitive += 1;
      if (tok.has_feat("VerbForm", "Part")) participle += 1;
      if (tok.has_feat("VerbForm", "Conv")) gerund += 1;
      if (tok.has_feat("Tense", "Pres")) present += 1;
      if (tok.has_feat("Tense", "Past")) past += 1;
      if (tok.has_feat("Number", "Plur")) verb_pl += 1;
      if (tok.has_feat("Voice", "Pass")) passive += 1;
    }
    if (tok.has_feat("Polarity", "Neg")) negation += 1;
  }

  const double conj = cconj + sconj;
  auto pct = [&](double x) { return ratio(x, n) * 100.0; };
  const double f_score =
      (pct(noun) + pct(adj) + pct(adp) - pct(pron) - pct(verb) - pct(adv) - pct(intj) + 100.0) / 2.0;

  NamedValues out = {
      {"noun_ratio", ratio(noun, n)},
      {"pronoun_ratio", ratio(pron, n)},
      {"adj_ratio", ratio(adj, n)},
      {"verb_ratio", ratio(verb, n)},
      {"adv_ratio", ratio(adv, n)},
      {"conj_ratio", ratio(conj, n)},
      {"adp_ratio", ratio(adp, n)},
      {"intj_ratio", ratio(intj, n)},
      {"pron_personal_ratio", ratio(prs, pron)},
      {"pron_reflexive_ratio", ratio(reflexive, pron)},
      {"pron_int_rel_ratio", ratio(int_rel, pron)},
      {"pron_demonstrative_ratio", ratio(dem, pron)},
      {"pron_indefinite_ratio", ratio(ind, pron)},
      {"sconj_ratio", ratio(sconj, conj)},
      {"cconj_ratio", ratio(cconj, conj)},
      {"postposition_ratio", ratio(post, adp)},
      {"preposition_ratio", ratio(prep, adp)},
      {"noun_verb_ratio", ratio(noun, verb)},
      {"f_score", f_score},
      {"noun_case_forms", static_cast<double>(noun_cases.size())},
      {"pronoun_case_forms", static_cast<double>(pron_cases.size())},
      {"adj_case_forms", static_cast<double>(adj_cases.size())},
      {"nominal_case_forms", static_cast<double>(all_cases.size())},
      {"plural_ratio", ratio(plural, nominal)},
      {"noun_plural_ratio", ratio(noun_pl, noun)},
      {"pronoun_plural_ratio", ratio(pron_pl, pron)},
      {"adj_plural_ratio", ratio(adj_pl, adj)},
  };
  for (std::size_t k = 0; k < kCases.size(); ++k) {
    out.emplace_back("case_" + utf8::to_lower(kCases[k]) + "_ratio", ratio(cases[k], nominal));
  }
  const NamedValues verbs = {
      {"mood_ind_ratio", ratio(mood_ind, verb)},
      {"mood_cnd_ratio", ratio(mood_cnd, verb)},
      {"mood_imp_ratio", ratio(mood_imp, verb)},
      {"finite_ratio", ratio(finite, verb)},
      {"infinitive_ratio", ratio(infinitive, verb)},
      {"participle_ratio", ratio(participle, verb)},
      {"gerund_ratio", ratio(gerund, verb)},
      {"present_ratio", ratio(present, verb)},
      {"past_ratio", ratio(past, verb)},
      {"verb_plural_ratio", ratio(verb_pl, verb)},
      {"passive_ratio", ratio(passive, verb)},
      {"negation_ratio", ratio(negation, n)},
  };
  out.insert(out.end(), verbs.begin(), verbs.end());
  return out;
}

double FeatureVector::at(const FeatureRegistry& reg, std::string_view name) const {
  const auto idx = reg.index_of(name);
  if (!idx || *idx >= values.size()) {
    throw ValidationError("unknown feature '" + std::string(name) + "'");
  }
  return values[*idx];
}

FeatureVector assemble(const EssayRecord& essay, const EssayInputs& inputs,
                       const FrequencyList& freq, const AbstractnessLexicon& abstr,
                       const FeatureRegistry& reg) {
  FeatureVector fv;
  fv.essay_id = essay.id;
  const AnnotatedText plain = segment(essay.text);
  const AnnotatedText& text = inputs.annotated ? *inputs.annotated : plain;
  if (!inputs.annotated) fv.flags.push_back("unannotated");

  // Edits align rule-segmented tokens; lemmas are used only when the
  // annotation tokenizes identically.
  bool lemmas_usable = false;
  if (inputs.annotated) {
    const auto a = inputs.annotated->tokens();
    const auto b = plain.tokens();
    lemmas_usable = a.size() == b.size() &&
                    std::equal(a.begin(), a.end(), b.begin(),
                               [](const Token* x, const Token* y) { return x->surface == y->surface; });
  }
  const AnnotatedText& edit_orig = lemmas_usable ? *inputs.annotated : plain;
  const AnnotatedText corrected = inputs.corrected ? segment(*inputs.corrected) : plain;
  const EditSet edits = build_edit_set(edit_orig, corrected, lemmas_usable, inputs.spelling);

  NamedValues all = surface_features(text);
  const auto lex = lexical_features(text, freq, abstr, &fv.flags);
  const auto gram = grammatical_features(text);
  const auto err = error_features(edits);
  all.insert(all.end(), lex.begin(), lex.end());
  all.insert(all.end(), gram.begin(), gram.end());
  all.insert(all.end(), err.begin(), err.end());

  if (all.size() != reg.size()) {
    throw InvariantViolation("extractors produced " + std::to_string(all.size()) +
                             " features, registry has " + std::to_string(reg.size()));
  }
  fv.values.assign(reg.size(), 0.0);
  std::vector<bool> seen(reg.size(), false);
  for (const auto& [name, value] : all) {
    const auto idx = reg.index_of(name);
    if (!idx) throw InvariantViolation("feature '" + name + "' is not in the registry");
    if (seen[*idx]) throw InvariantViolation("feature '" + name + "' produced twice");
    if (!std::isfinite(value)) {
      throw InvariantViolation("feature '" + name + "' is not finite for essay " + essay.id);
    }
    seen[*idx] = true;
    fv.values[*idx] = value;
  }
  return fv;
}

std::string features_to_csv(std::span<const FeatureVector> rows, const FeatureRegistry& reg) {
  std::string out = "essay_id";
  for (const auto& s : reg.specs()) out += "," + s.name;
  out += '\n';
  char buf[64];
  for (const auto& row : rows) {
    if (row.values.size() != reg.size()) {
      throw InvariantViolation("feature vector for " + row.essay_id + " has wrong length");
    }
    out += row.essay_id;
    for (double v : row.values) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::vector<FeatureVector> features_from_csv(std::string_view csv, const FeatureRegistry& reg) {
  const auto lines = split_lines(csv);
  if (lines.empty()) throw ValidationError("feature CSV is empty");
  auto split = [](std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      cells.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    return cells;
  };
  const auto header = split(lines[0]);
  if (header.empty() || header[0] != "essay_id") {
    throw ValidationError("feature CSV must start with an essay_id column");
  }
  std::vector<std::optional<std::size_t>> column_index;
  std::vector<bool> covered(reg.size(), false);
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto idx = reg.index_of(header[c]);
    if (idx) covered[*idx] = true;
    column_index.push_back(idx);
  }
  for (std::size_t i = 0; i < reg.size(); ++i) {
    if (!covered[i]) throw ValidationError("feature CSV lacks column '" + reg.specs()[i].name + "'");
  }

  std::vector<FeatureVector> out;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    if (trim(lines[l]).empty()) continue;
    const auto cells = split(lines[l]);
    if (cells.size() != header.size()) {
      throw ValidationError("feature CSV line " + std::to_string(l + 1) + ": expected " +
                            std::to_string(header.size()) + " cells");
    }
    FeatureVector fv;
    fv.essay_id = std::string(cells[0]);
    fv.values.assign(reg.size(), 0.0);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (!column_index[c - 1]) continue;
      const std::string cell(cells[c]);
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
        throw ValidationError("feature CSV line " + std::to_string(l + 1) + ": bad value '" + cell + "'");
      }
      fv.values[*column_index[c - 1]] = v;
    }
    out.push_back(std::move(fv));
  }
  return out;
}

}  // namespace aes
