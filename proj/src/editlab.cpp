#include "aes/editlab.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include "aes/errors.hpp"
#include "aes/utf8.hpp"

namespace aes {

namespace {

constexpr std::array<std::string_view, kEditKindCount> kKindNames = {
    "word_replaced",     "word_missing", "word_unnecessary", "punct_replaced", "punct_missing",
    "punct_unnecessary", "whitespace",   "word_order",       "spelling",       "mixed",
};

// Operation classes used for grouping: {word, punct} x {sub, ins, del}.
enum class OpClass { WordSub, WordIns, WordDel, PunctSub, PunctIns, PunctDel };

EditKind kind_for(OpClass c) {
  switch (c) {
    case OpClass::WordSub:
      return EditKind::WordReplaced;
    case OpClass::WordIns:
      return EditKind::WordMissing;
    case OpClass::WordDel:
      return EditKind::WordUnnecessary;
    case OpClass::PunctSub:
      return EditKind::PunctReplaced;
    case OpClass::PunctIns:
      return EditKind::PunctMissing;
    case OpClass::PunctDel:
      return EditKind::PunctUnnecessary;
  }
  throw InvariantViolation("unknown operation class");
}

OpClass op_class(const AlignStep& s, std::span<const EditToken> orig,
                 std::span<const EditToken> corr) {
  switch (s.op) {
    case AlignOp::Substitute:
      return orig[s.orig].is_word ? OpClass::WordSub : OpClass::PunctSub;
    case AlignOp::Insert:
      return corr[s.corr].is_word ? OpClass::WordIns : OpClass::PunctIns;
    case AlignOp::Delete:
      return orig[s.orig].is_word ? OpClass::WordDel : OpClass::PunctDel;
    case AlignOp::Match:
      break;
  }
  throw InvariantViolation("match step has no operation class");
}

bool same_word(const EditToken& a, const EditToken& b) {
  if (utf8::to_lower(a.surface) == utf8::to_lower(b.surface)) return true;
  return !a.lemma.empty() && !b.lemma.empty() &&
         utf8::to_lower(a.lemma) == utf8::to_lower(b.lemma);
}

struct Half {
  std::size_t col;
  std::size_t token;
};

struct Interval {
  std::size_t lo;
  std::size_t hi;  // inclusive
};

TokenRange span_of(std::span<const AlignStep> steps, std::size_t lo, std::size_t hi, bool orig_side) {
  std::optional<std::size_t> first;
  std::optional<std::size_t> last;
  for (std::size_t c = lo; c <= hi; ++c) {
    const auto& s = steps[c];
    const bool has = orig_side ? s.op != AlignOp::Insert : s.op != AlignOp::Delete;
    if (!has) continue;
    const std::size_t idx = orig_side ? s.orig : s.corr;
    if (!first) first = idx;
    last = idx;
  }
  if (!first) {
    const std::size_t at = orig_side ? steps[lo].orig : steps[lo].corr;
    return {at, at};
  }
  return {*first, *last + 1};
}

}  // namespace

std::string_view edit_kind_name(EditKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::size_t EditSet::count(EditKind k) const {
  return static_cast<std::size_t>(
      std::count_if(edits.begin(), edits.end(), [k](const Edit& e) { return e.kind == k; }));
}

std::vector<EditToken> edit_tokens(const AnnotatedText& t, bool annotated) {
  std::vector<EditToken> out;
  std::size_t sentence = 0;
  for (const auto& para : t.paragraphs) {
    for (const auto& sent : para) {
      for (const auto& tok : sent) {
        out.push_back({tok.surface, annotated ? tok.lemma : std::string{}, tok.is_word, sentence});
      }
      ++sentence;
    }
  }
  return out;
}

std::vector<SpellCorrection> parse_spell_sidecar(std::string_view contents) {
  std::vector<SpellCorrection> out;
  std::istringstream in{std::string(contents)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw ValidationError("spell sidecar line " + std::to_string(line_no) +
                            ": expected token_index<TAB>original<TAB>corrected");
    }
    SpellCorrection c;
    try {
      std::size_t used = 0;
      const auto idx = std::stoull(line.substr(0, t1), &used);
      if (used != t1) throw std::invalid_argument("trailing");
      c.token_index = static_cast<std::size_t>(idx);
    } catch (const std::exception&) {
      throw ValidationError("spell sidecar line " + std::to_string(line_no) + ": bad token index");
    }
    c.original = line.substr(t1 + 1, t2 - t1 - 1);
    c.corrected = line.substr(t2 + 1);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<SpellCorrection> load_spell_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read spell sidecar: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spell_sidecar(buf.str());
}

std::vector<AlignStep> align(std::span<const EditToken> orig, std::span<const EditToken> corr) {
  const std::size_t n = orig.size();
  const std::size_t m = corr.size();
  constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max() / 4;
  std::vector<std::size_t> dist((n + 1) * (m + 1), kInf);
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return dist[i * (m + 1) + j]; };
  auto diag_cost = [&](std::size_t i, std::size_t j) -> std::size_t {
    const auto& a = orig[i - 1];
    const auto& b = corr[j - 1];
    if (a.surface == b.surface) return 0;
    if (a.is_word != b.is_word) return kInf;
    return 1;
  };

  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t best = std::min(at(i - 1, j) + 1, at(i, j - 1) + 1);
      const auto d = diag_cost(i, j);
      if (d != kInf) best = std::min(best, at(i - 1, j - 1) + d);
      at(i, j) = best;
    }
  }

  // Backtrace from the end; preference order match, substitute, delete, insert.
  std::vector<AlignStep> steps;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const auto d = diag_cost(i, j);
      if (d == 0 && at(i, j) == at(i - 1, j - 1)) {
        steps.push_back({AlignOp::Match, i - 1, j - 1});
        --i, --j;
        continue;
      }
      if (d == 1 && at(i, j) == at(i - 1, j - 1) + 1) {
        steps.push_back({AlignOp::Substitute, i - 1, j - 1});
        --i, --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      steps.push_back({AlignOp::Delete, i - 1, j});
      --i;
      continue;
    }
    if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      steps.push_back({AlignOp::Insert, i, j - 1});
      --j;
      continue;
    }
    throw InvariantViolation("alignment backtrace found no predecessor");
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

std::size_t script_cost(std::span<const AlignStep> steps) {
  return static_cast<std::size_t>(std::count_if(
      steps.begin(), steps.end(), [](const AlignStep& s) { return s.op != AlignOp::Match; }));
}

EditSet align_and_classify(std::span<const EditToken> orig, std::span<const EditToken> corr) {
  EditSet out;
  out.word_count = static_cast<std::size_t>(
      std::count_if(orig.begin(), orig.end(), [](const EditToken& t) { return t.is_word; }));
  std::set<std::size_t> sentences;
  for (const auto& t : orig) sentences.insert(t.sentence);
  out.sentence_count = sentences.size();

  const auto steps = align(orig, corr);
  const std::size_t cols = steps.size();

  // Contiguous runs of non-matching columns.
  std::vector<Interval> groups;
  for (std::size_t c = 0; c < cols; ++c) {
    if (steps[c].op == AlignOp::Match) continue;
    if (!groups.empty() && groups.back().hi + 1 == c) {
      groups.back().hi = c;
    } else {
      groups.push_back({c, c});
    }
  }
  if (groups.empty()) return out;

  // Deleted and inserted word halves, in column order.
  std::vector<Half> deleted;
  std::vector<Half> inserted;
  for (std::size_t c = 0; c < cols; ++c) {
    const auto& s = steps[c];
    if ((s.op == AlignOp::Delete || s.op == AlignOp::Substitute) && orig[s.orig].is_word) {
      deleted.push_back({c, s.orig});
    }
    if ((s.op == AlignOp::Insert || s.op == AlignOp::Substitute) && corr[s.corr].is_word) {
      inserted.push_back({c, s.corr});
    }
  }

  std::vector<bool> del_paired(cols, false);
  std::vector<bool> ins_paired(cols, false);
  std::vector<Interval> moves;
  for (const auto& d : deleted) {
    for (const auto& ins : inserted) {
      if (ins_paired[ins.col] || ins.col == d.col) continue;
      if (orig[d.token].sentence != corr[ins.token].sentence) continue;
      if (!same_word(orig[d.token], corr[ins.token])) continue;
      del_paired[d.col] = true;
      ins_paired[ins.col] = true;
      moves.push_back({std::min(d.col, ins.col), std::max(d.col, ins.col)});
      break;
    }
  }

  // Merge move intervals with each other and with any group they touch.
  std::vector<Interval> regions;
  if (!moves.empty()) {
    std::vector<Interval> pool = moves;
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto& r : pool) {
        for (const auto& g : groups) {
          if (g.hi >= r.lo && g.lo <= r.hi && (g.lo < r.lo || g.hi > r.hi)) {
            r.lo = std::min(r.lo, g.lo);
            r.hi = std::max(r.hi, g.hi);
            changed = true;
          }
        }
      }
      std::sort(pool.begin(), pool.end(), [](const Interval& a, const Interval& b) {
        return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
      });
      std::vector<Interval> merged;
      for (const auto& r : pool) {
        if (!merged.empty() && r.lo <= merged.back().hi) {
          if (r.hi > merged.back().hi) {
            merged.back().hi = r.hi;
            changed = true;
          } else if (r.lo != merged.back().lo || r.hi != merged.back().hi) {
            changed = true;
          }
        } else {
          merged.push_back(r);
        }
      }
      if (merged.size() != pool.size()) changed = true;
      pool = std::move(merged);
    }
    regions = std::move(pool);
  }

  auto in_region = [&](const Interval& g) {
    return std::any_of(regions.begin(), regions.end(),
                       [&](const Interval& r) { return g.lo >= r.lo && g.hi <= r.hi; });
  };

  struct Pending {
    std::size_t col;
    Edit edit;
  };
  std::vector<Pending> found;

  for (const auto& r : regions) {
    bool accounted = true;
    for (std::size_t c = r.lo; c <= r.hi && accounted; ++c) {
      const auto& s = steps[c];
      switch (s.op) {
        case AlignOp::Match:
          break;
        case AlignOp::Delete:
          accounted = del_paired[c];
          break;
        case AlignOp::Insert:
          accounted = ins_paired[c];
          break;
        case AlignOp::Substitute:
          accounted = del_paired[c] && ins_paired[c];
          break;
      }
    }
    found.push_back({r.lo,
                     {accounted ? EditKind::WordOrder : EditKind::Mixed,
                      span_of(steps, r.lo, r.hi, true), span_of(steps, r.lo, r.hi, false)}});
  }

  for (const auto& g : groups) {
    if (in_region(g)) continue;
    const Edit base{EditKind::Mixed, span_of(steps, g.lo, g.hi, true),
                    span_of(steps, g.lo, g.hi, false)};

    // Whitespace: the same word characters, split or joined differently.
    bool words_only = true;
    std::string orig_join;
    std::string corr_join;
    for (std::size_t i = base.orig.begin; i < base.orig.end; ++i) {
      words_only = words_only && orig[i].is_word;
      orig_join += orig[i].surface;
    }
    for (std::size_t j = base.corr.begin; j < base.corr.end; ++j) {
      words_only = words_only && corr[j].is_word;
      corr_join += corr[j].surface;
    }
    if (words_only && !base.orig.empty() && !base.corr.empty() &&
        (base.orig.end - base.orig.begin) != (base.corr.end - base.corr.begin) &&
        utf8::to_lower(orig_join) == utf8::to_lower(corr_join)) {
      found.push_back({g.lo, {EditKind::Whitespace, base.orig, base.corr}});
      continue;
    }

    std::optional<OpClass> cls;
    bool uniform = true;
    for (std::size_t c = g.lo; c <= g.hi; ++c) {
      const auto oc = op_class(steps[c], orig, corr);
      if (cls && *cls != oc) uniform = false;
      cls = oc;
    }
    Edit e = base;
    e.kind = uniform ? kind_for(*cls) : EditKind::Mixed;
    found.push_back({g.lo, e});
  }

  std::sort(found.begin(), found.end(),
            [](const Pending& a, const Pending& b) { return a.col < b.col; });
  for (auto& p : found) out.edits.push_back(p.edit);
  return out;
}

EditSet build_edit_set(const AnnotatedText& original, const AnnotatedText& corrected,
                       bool original_annotated, std::span<const SpellCorrection> spelling) {
  const auto orig = edit_tokens(original, original_annotated);
  const auto corr = edit_tokens(corrected, false);

  std::set<std::size_t> corrected_words;
  for (const auto& sc : spelling) {
    if (sc.token_index >= orig.size()) {
      throw ValidationError("spell sidecar token index " + std::to_string(sc.token_index) +
                            " out of range (" + std::to_string(orig.size()) + " tokens)");
    }
    const auto& tok = orig[sc.token_index];
    if (!tok.is_word) {
      throw ValidationError("spell sidecar token index " + std::to_string(sc.token_index) +
                            " points at punctuation");
    }
    if (tok.surface != sc.original) {
      throw ValidationError("spell sidecar token " + std::to_string(sc.token_index) + " is '" +
                            tok.surface + "', sidecar says '" + sc.original + "'");
    }
    corrected_words.insert(sc.token_index);
  }

  // The corrected text is taken to start from the spell-checked original,
  // so spelling fixes are applied before alignment and not counted twice.
  auto spelled = orig;
  for (const auto& sc : spelling) spelled[sc.token_index].surface = sc.corrected;
  EditSet es = align_and_classify(spelled, corr);
  for (const auto& sc : spelling) {
    es.edits.push_back({EditKind::Spelling, {sc.token_index, sc.token_index + 1}, {0, 0}});
  }
  es.spell_corrected_words = corrected_words.size();
  return es;
}

NamedValues error_features(const EditSet& es) {
  auto ratio = [](double num, double den) { return den == 0.0 ? 0.0 : num / den; };
  std::array<double, kEditKindCount> counts{};
  for (const auto& e : es.edits) counts[static_cast<std::size_t>(e.kind)] += 1.0;

  double total = 0.0;
  for (std::size_t k = 0; k < kEditKindCount; ++k) {
    if (static_cast<EditKind>(k) != EditKind::Spelling) total += counts[k];
  }

  NamedValues out;
  out.reserve(23);
  for (std::size_t k = 0; k < kEditKindCount; ++k) {
    const auto kind = static_cast<EditKind>(k);
    if (kind == EditKind::Spelling) continue;
    const std::string name(edit_kind_name(kind));
    out.emplace_back(name + "_count", counts[k]);
    out.emplace_back(name + "_ratio", ratio(counts[k], total));
  }
  out.emplace_back("spelling_corrections", counts[static_cast<std::size_t>(EditKind::Spelling)]);
  out.emplace_back("spell_corrected_word_ratio",
                   ratio(static_cast<double>(es.spell_corrected_words),
                         static_cast<double>(es.word_count)));
  out.emplace_back("total_edit_count", total);
  out.emplace_back("edits_per_word", ratio(total, static_cast<double>(es.word_count)));
  out.emplace_back("edits_per_sentence", ratio(total, static_cast<double>(es.sentence_count)));
  return out;
}

}  // namespace aes
