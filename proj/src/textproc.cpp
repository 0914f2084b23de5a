#include "aes/textproc.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "aes/errors.hpp"
#include "aes/utf8.hpp"

namespace aes {

namespace {

bool is_vowel(char32_t cp) {
  switch (utf8::to_lower(cp)) {
    case U'a':
    case U'e':
    case U'i':
    case U'o':
    case U'u':
    case 0xF5:  // õ
    case 0xE4:  // ä
    case 0xF6:  // ö
    case 0xFC:  // ü
      return true;
    default:
      return false;
  }
}

bool is_terminal(std::u32string_view tok) {
  if (tok.size() != 1) return false;
  return tok[0] == U'.' || tok[0] == U'!' || tok[0] == U'?' || tok[0] == 0x2026;
}

bool is_closer(char32_t cp) {
  return cp == U')' || cp == U']' || cp == U'}' || cp == U'"' || cp == U'\'' || cp == 0x201D || cp == 0x201C ||
         cp == 0x2019 || cp == 0xBB;
}

// Characters allowed inside a word when flanked by word characters.
bool is_word_joiner(char32_t cp) { return cp == U'-' || cp == U'\'' || cp == 0x2019; }

struct RawToken {
  std::u32string text;
  std::size_t begin;
  bool punct;
};

std::vector<RawToken> tokenize_run(const std::u32string& s, std::size_t begin, std::size_t end) {
  std::vector<RawToken> out;
  std::size_t i = begin;
  while (i < end) {
    const char32_t cp = s[i];
    if (utf8::is_space(cp)) {
      ++i;
      continue;
    }
    if (utf8::is_punct(cp)) {
      out.push_back({std::u32string(1, cp), i, true});
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < end) {
      const char32_t c = s[j];
      if (utf8::is_space(c)) break;
      if (utf8::is_punct(c)) {
        // Keep e-post, ei'tea, 3.5 and 1,5 as single tokens.
        const bool inner = j + 1 < end && !utf8::is_space(s[j + 1]) && !utf8::is_punct(s[j + 1]);
        const bool joiner = is_word_joiner(c) ||
                            ((c == U'.' || c == U',') && utf8::is_digit(s[j - 1]) &&
                             inner && utf8::is_digit(s[j + 1]));
        if (!(joiner && inner)) break;
      }
      ++j;
    }
    out.push_back({s.substr(i, j - i), i, false});
    i = j;
  }
  return out;
}

bool all_digits(std::u32string_view t) {
  bool any = false;
  for (char32_t c : t) {
    if (utf8::is_digit(c)) {
      any = true;
    } else if (c != U'.' && c != U',') {
      return false;
    }
  }
  return any;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      parts.push_back(s.substr(pos));
      break;
    }
    parts.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
  return parts;
}

}  // namespace

std::string_view Token::feat(std::string_view name) const {
  const auto it = feats.find(std::string(name));
  return it == feats.end() ? std::string_view{} : std::string_view(it->second);
}

bool Token::has_feat(std::string_view name, std::string_view value) const {
  // Multi-valued features ("Int,Rel") match any listed value.
  const auto v = feat(name);
  if (v.empty()) return false;
  for (auto part : split(v, ',')) {
    if (part == value) return true;
  }
  return false;
}

std::size_t AnnotatedText::word_count() const {
  std::size_t n = 0;
  for (const auto& p : paragraphs)
    for (const auto& s : p)
      for (const auto& t : s) n += t.is_word ? 1 : 0;
  return n;
}

std::size_t AnnotatedText::sentence_count() const {
  std::size_t n = 0;
  for (const auto& p : paragraphs) n += p.size();
  return n;
}

std::vector<const Token*> AnnotatedText::tokens() const {
  std::vector<const Token*> out;
  for (const auto& p : paragraphs)
    for (const auto& s : p)
      for (const auto& t : s) out.push_back(&t);
  return out;
}

std::vector<const Token*> AnnotatedText::words() const {
  std::vector<const Token*> out;
  for (const auto& p : paragraphs)
    for (const auto& s : p)
      for (const auto& t : s)
        if (t.is_word) out.push_back(&t);
  return out;
}

AnnotatedText segment(std::string_view text) {
  const std::u32string s = utf8::decode(text);
  if (std::all_of(s.begin(), s.end(), [](char32_t c) { return utf8::is_space(c); })) {
    throw ValidationError("cannot segment empty text");
  }

  AnnotatedText out;
  out.text = std::string(text);

  // Paragraph boundaries: runs of lines that are empty or whitespace-only.
  std::vector<std::pair<std::size_t, std::size_t>> para_ranges;
  {
    std::size_t line_start = 0;
    std::size_t para_start = 0;
    bool in_para = false;
    for (std::size_t i = 0; i <= s.size(); ++i) {
      if (i < s.size() && s[i] != U'\n') continue;
      const bool blank = std::all_of(s.begin() + line_start, s.begin() + i,
                                     [](char32_t c) { return utf8::is_space(c); });
      if (blank) {
        if (in_para) para_ranges.emplace_back(para_start, line_start);
        in_para = false;
      } else if (!in_para) {
        para_start = line_start;
        in_para = true;
      }
      line_start = i + 1;
    }
    if (in_para) para_ranges.emplace_back(para_start, s.size());
  }

  for (const auto& [pb, pe] : para_ranges) {
    const auto raw = tokenize_run(s, pb, pe);
    if (raw.empty()) continue;
    Paragraph para;
    Sentence sent;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const auto& r = raw[i];
      Token t;
      t.surface = utf8::encode(r.text);
      t.lemma = t.surface;
      t.is_word = !r.punct;
      t.pos = r.punct ? "PUNCT" : (all_digits(r.text) ? "NUM" : "X");
      t.span = {r.begin, r.begin + r.text.size()};
      sent.push_back(std::move(t));

      if (r.punct && is_terminal(r.text)) {
        // Closing quotes and brackets glued to the terminator stay with it.
        while (i + 1 < raw.size() && raw[i + 1].punct && is_closer(raw[i + 1].text.front()) &&
               raw[i + 1].begin == raw[i].begin + raw[i].text.size()) {
          const auto& q = raw[++i];
          Token c;
          c.surface = utf8::encode(q.text);
          c.lemma = c.surface;
          c.is_word = false;
          c.pos = "PUNCT";
          c.span = {q.begin, q.begin + q.text.size()};
          sent.push_back(std::move(c));
        }
        if (i + 1 >= raw.size()) break;
        const auto& next = raw[i + 1];
        // Repeated terminators ("?!", "...") stay in the current sentence.
        if (next.punct && is_terminal(next.text)) continue;
        const bool spaced = next.begin > raw[i].begin + raw[i].text.size();
        const char32_t first = next.text.front();
        if (spaced && (utf8::is_upper(first) || utf8::is_digit(first))) {
          para.push_back(std::move(sent));
          sent.clear();
        }
      }
    }
    if (!sent.empty()) para.push_back(std::move(sent));
    out.paragraphs.push_back(std::move(para));
  }
  return out;
}

AnnotatedText parse_conllu(std::string_view contents) {
  AnnotatedText out;
  std::u32string rebuilt;
  bool pending_newpar = false;
  bool pending_space = false;
  Sentence sent;
  std::size_t line_no = 0;

  // Tokens are buffered per sentence; spans are assigned when the sentence
  // is committed and its paragraph placement is known.
  struct Pending {
    Token tok;
    bool space_after;
  };
  std::vector<Pending> buffer;

  auto commit_buffer = [&] {
    if (buffer.empty()) return;
    const bool new_par = out.paragraphs.empty() || pending_newpar;
    if (new_par && !out.paragraphs.empty()) {
      rebuilt += U"\n\n";
    } else if (!new_par && pending_space) {
      rebuilt += U' ';
    }
    pending_space = false;
    for (std::size_t i = 0; i < buffer.size(); ++i) {
      auto& p = buffer[i];
      if (i > 0 && buffer[i - 1].space_after) rebuilt += U' ';
      const auto form = utf8::decode(p.tok.surface);
      p.tok.span = {rebuilt.size(), rebuilt.size() + form.size()};
      rebuilt += form;
      sent.push_back(std::move(p.tok));
    }
    pending_space = buffer.back().space_after;
    buffer.clear();
    if (out.paragraphs.empty() || pending_newpar) {
      out.paragraphs.emplace_back();
      pending_newpar = false;
    }
    out.paragraphs.back().push_back(std::move(sent));
    sent.clear();
  };

  std::size_t pos = 0;
  while (pos <= contents.size()) {
    const auto nl = contents.find('\n', pos);
    const auto end = nl == std::string_view::npos ? contents.size() : nl;
    std::string_view line = contents.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      commit_buffer();
    } else if (line.front() == '#') {
      std::string_view c = line.substr(1);
      while (!c.empty() && c.front() == ' ') c.remove_prefix(1);
      if (c.rfind("newpar", 0) == 0 && (c.size() == 6 || c[6] == ' ' || c[6] == '=')) {
        commit_buffer();
        pending_newpar = true;
      }
    } else {
      const auto cols = split(line, '\t');
      if (cols.size() != 10) {
        throw ValidationError("CoNLL-U line " + std::to_string(line_no) + ": expected 10 columns, got " +
                              std::to_string(cols.size()));
      }
      const auto id = cols[0];
      if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) {
        if (nl == std::string_view::npos) break;
        continue;
      }
      if (id.empty() || !std::all_of(id.begin(), id.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw ValidationError("CoNLL-U line " + std::to_string(line_no) + ": bad token id '" +
                              std::string(id) + "'");
      }
      Pending p;
      p.tok.surface = std::string(cols[1]);
      if (p.tok.surface.empty()) {
        throw ValidationError("CoNLL-U line " + std::to_string(line_no) + ": empty FORM");
      }
      p.tok.lemma = cols[2] == "_" && cols[1] != "_" ? std::string(cols[1]) : std::string(cols[2]);
      p.tok.pos = std::string(cols[3]);
      p.tok.is_word = p.tok.pos != "PUNCT";
      if (cols[5] != "_" && !cols[5].empty()) {
        for (auto kv : split(cols[5], '|')) {
          const auto eq = kv.find('=');
          if (eq == std::string_view::npos) {
            throw ValidationError("CoNLL-U line " + std::to_string(line_no) + ": bad FEATS item '" +
                                  std::string(kv) + "'");
          }
          p.tok.feats[std::string(kv.substr(0, eq))] = std::string(kv.substr(eq + 1));
        }
      }
      p.space_after = true;
      if (cols[9] != "_") {
        for (auto kv : split(cols[9], '|')) {
          if (kv == "SpaceAfter=No") p.space_after = false;
        }
      }
      buffer.push_back(std::move(p));
    }
    if (nl == std::string_view::npos) break;
  }
  commit_buffer();

  if (out.paragraphs.empty()) throw ValidationError("CoNLL-U input contains no sentences");
  out.text = utf8::encode(rebuilt);
  return out;
}

AnnotatedText load_conllu(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read CoNLL-U file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_conllu(buf.str());
}

int count_syllables(std::string_view word) {
  const auto cps = utf8::decode(word);
  if (std::none_of(cps.begin(), cps.end(), [](char32_t c) { return utf8::is_letter(c); })) {
    throw ValidationError("count_syllables: no letters in '" + std::string(word) + "'");
  }
  int count = 0;
  char32_t prev = 0;
  bool in_group = false;
  for (char32_t raw : cps) {
    const char32_t c = utf8::to_lower(raw);
    if (is_vowel(c)) {
      if (!in_group) {
        ++count;
        in_group = true;
      } else if (c != prev && c != U'e' && c != U'i' && c != U'u') {
        ++count;
      }
      prev = c;
    } else {
      in_group = false;
      prev = 0;
    }
  }
  return std::max(count, 1);
}

std::string to_conllu(const AnnotatedText& t) {
  std::string out;
  for (const auto& para : t.paragraphs) {
    bool first = true;
    for (const auto& sent : para) {
      if (first) out += "# newpar\n";
      first = false;
      for (std::size_t i = 0; i < sent.size(); ++i) {
        const auto& tok = sent[i];
        std::string feats;
        for (const auto& [k, v] : tok.feats) {
          if (!feats.empty()) feats += '|';
          feats += k + "=" + v;
        }
        const bool space_after = i + 1 >= sent.size() ||
                                 sent[i + 1].span.begin > tok.span.end;
        out += std::to_string(i + 1) + '\t' + tok.surface + '\t' + tok.lemma + '\t' +
               (tok.pos.empty() ? "_" : tok.pos) + "\t_\t" + (feats.empty() ? "_" : feats) +
               "\t_\t_\t_\t" + (space_after ? "_" : "SpaceAfter=No") + '\n';
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace aes
