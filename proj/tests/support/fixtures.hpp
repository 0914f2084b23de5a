#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "aes/corpus.hpp"
#include "aes/editlab.hpp"
#include "aes/featureset.hpp"
#include "aes/textproc.hpp"

namespace aes::testing {

inline std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(AES_FIXTURE_DIR) / rel; }
inline std::filesystem::path data_file(const std::string& rel) { return std::filesystem::path(AES_DATA_DIR) / rel; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::vector<std::string>> read_tsv(const std::filesystem::path& p, bool skip_header = true) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first && skip_header) {
      first = false;
      continue;
    }
    first = false;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      cells.push_back(line.substr(start, tab - start));
    }
    cells.push_back(line.substr(start));
    rows.push_back(std::move(cells));
  }
  return rows;
}

struct EditPair {
  std::string id;
  std::string original;
  std::string corrected;
  std::vector<SpellCorrection> spelling;
};

inline std::vector<EditPair> load_edit_pairs() {
  std::vector<EditPair> out;
  std::istringstream in(slurp(fixture("edits/pairs.jsonl")));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    EditPair p{j.at("id"), j.at("original"), j.at("corrected"), {}};
    for (const auto& s : j.at("spelling")) {
      p.spelling.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::string>(), s.at(2).get<std::string>()});
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct GoldenEdit {
  std::string id;
  std::string kind;
  Edit edit;
};

inline std::vector<GoldenEdit> load_edit_golden() {
  static constexpr EditKind kinds[] = {
      EditKind::WordReplaced, EditKind::WordMissing, EditKind::WordUnnecessary, EditKind::PunctReplaced,
      EditKind::PunctMissing, EditKind::PunctUnnecessary, EditKind::Whitespace, EditKind::WordOrder,
      EditKind::Spelling,     EditKind::Mixed,
  };
  std::vector<GoldenEdit> out;
  for (const auto& r : read_tsv(fixture("edits/golden.tsv"))) {
    GoldenEdit g{r.at(0), r.at(1), {}};
    bool found = false;
    for (EditKind k : kinds) {
      if (edit_kind_name(k) == r.at(1)) {
        g.edit.kind = k;
        found = true;
      }
    }
    if (!found) throw std::runtime_error("unknown edit kind " + r.at(1));
    g.edit.orig = {std::stoul(r.at(2)), std::stoul(r.at(3))};
    g.edit.corr = {std::stoul(r.at(4)), std::stoul(r.at(5))};
    out.push_back(std::move(g));
  }
  return out;
}

/// Edits for one pair from the rule-based segmenter.
inline EditSet edits_for(const EditPair& p) {
  return build_edit_set(segment(p.original), segment(p.corrected), false, p.spelling);
}

/// The bundled fixture essay with all its sidecars.
inline FeatureVector fixture_features() {
  const auto corpus = load_corpus(fixture("essay/corpus.jsonl"));
  EssayInputs in;
  in.annotated = load_conllu(fixture("essay/fx001.conllu"));
  in.corrected = slurp(fixture("essay/fx001.corr.txt"));
  in.spelling = load_spell_sidecar(fixture("essay/fx001.spell.tsv"));
  return assemble(corpus.records.at(0), in, FrequencyList::load(fixture("essay/freq.txt")),
                  AbstractnessLexicon::load(fixture("essay/abstractness.tsv")));
}

/// feature -> value from the hand-computed golden sheet.
inline std::vector<std::pair<std::string, double>> golden_features() {
  std::vector<std::pair<std::string, double>> out;
  std::istringstream in(slurp(fixture("essay/golden_features.csv")));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    out.emplace_back(line.substr(0, comma), std::stod(line.substr(comma + 1)));
  }
  return out;
}

}  // namespace aes::testing
