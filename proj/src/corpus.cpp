#include "aes/corpus.hpp"

#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aes/errors.hpp"

namespace aes {

namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, kAspectCount> kAspectKeys = {
    "title_intro", "argument_development", "source_use", "conclusion", "vocabulary",
    "syntax",      "orthography",          "punctuation", "structuring",
};

// Returns an empty optional and fills `why` when the sheet is absent or invalid.
std::optional<AspectScores> read_sheet(const json& obj, const char* field, std::string& why) {
  if (!obj.contains(field) || obj[field].is_null()) {
    why = std::string("missing ") + field;
    return std::nullopt;
  }
  const json& sheet = obj[field];
  if (!sheet.is_object()) {
    why = std::string(field) + " is not an object";
    return std::nullopt;
  }
  std::array<int, kAspectCount> scores{};
  for (RubricAspect a : kAllAspects) {
    const auto key = std::string(aspect_key(a));
    if (!sheet.contains(key) || !sheet[key].is_number_integer()) {
      why = std::string(field) + "." + key + " missing or not an integer";
      return std::nullopt;
    }
    const int v = sheet[key].get<int>();
    if (v < 0 || v > kMaxAspectScore) {
      why = std::string(field) + "." + key + " out of range: " + std::to_string(v);
      return std::nullopt;
    }
    scores[index(a)] = v;
  }
  for (const auto& [key, _] : sheet.items()) {
    if (!aspect_from_key(key)) {
      why = std::string(field) + " has unknown aspect key '" + key + "'";
      return std::nullopt;
    }
  }
  return AspectScores(scores);
}

json sheet_to_json(const AspectScores& s) {
  json j = json::object();
  for (RubricAspect a : kAllAspects) j[std::string(aspect_key(a))] = s[a];
  return j;
}

}  // namespace

std::string_view aspect_key(RubricAspect a) { return kAspectKeys[index(a)]; }

std::optional<RubricAspect> aspect_from_key(std::string_view key) {
  for (RubricAspect a : kAllAspects) {
    if (aspect_key(a) == key) return a;
  }
  return std::nullopt;
}

bool is_language_aspect(RubricAspect a) {
  for (RubricAspect l : kLanguageAspects) {
    if (l == a) return true;
  }
  return false;
}

AspectScores::AspectScores(const std::array<int, kAspectCount>& scores) : scores_(scores) {
  for (int v : scores_) {
    if (v < 0 || v > kMaxAspectScore) {
      throw ValidationError("aspect score out of range 0..3: " + std::to_string(v));
    }
  }
}

int AspectScores::total() const { return std::accumulate(scores_.begin(), scores_.end(), 0); }

ConsensusScores consensus(const EssayRecord& r) {
  ConsensusScores c;
  for (RubricAspect a : kAllAspects) {
    c.aspects[index(a)] = (r.scores_g1[a] + r.scores_g2[a]) / 2.0;
    c.total += c.aspects[index(a)];
  }
  return c;
}

LoadedCorpus parse_corpus(std::string_view contents, std::optional<int> grade_level) {
  LoadedCorpus out;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= contents.size()) {
    const auto nl = contents.find('\n', pos);
    const auto end = nl == std::string_view::npos ? contents.size() : nl;
    std::string_view line = contents.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (nl == std::string_view::npos) break;
      continue;
    }

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError("corpus line " + std::to_string(line_no) + ": malformed record: " +
                            e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
        !obj.contains("text") || !obj["text"].is_string() || !obj.contains("grade") ||
        !obj["grade"].is_number_integer()) {
      throw ValidationError("corpus line " + std::to_string(line_no) +
                            ": record needs string 'id', string 'text' and integer 'grade'");
    }

    EssayRecord rec;
    rec.id = obj["id"].get<std::string>();
    rec.grade_level = obj["grade"].get<int>();
    rec.text = obj["text"].get<std::string>();
    if (rec.id.empty()) {
      throw ValidationError("corpus line " + std::to_string(line_no) + ": empty id");
    }
    if (!seen.insert(rec.id).second) {
      throw ValidationError("corpus line " + std::to_string(line_no) + ": duplicate id '" +
                            rec.id + "'");
    }

    auto skip = [&](std::string reason) {
      out.skipped.push_back({line_no, rec.id, std::move(reason)});
    };
    if (rec.grade_level != 9 && rec.grade_level != 12) {
      skip("grade must be 9 or 12");
      continue;
    }
    if (grade_level && rec.grade_level != *grade_level) {
      skip("grade " + std::to_string(rec.grade_level) + " does not match requested " +
           std::to_string(*grade_level));
      continue;
    }
    std::string why;
    auto g1 = read_sheet(obj, "scores_g1", why);
    if (!g1) {
      skip(why);
      continue;
    }
    auto g2 = read_sheet(obj, "scores_g2", why);
    if (!g2) {
      skip(why);
      continue;
    }
    rec.scores_g1 = *g1;
    rec.scores_g2 = *g2;

    if (obj.contains("meta") && obj["meta"].is_object()) {
      for (const auto& [k, v] : obj["meta"].items()) {
        rec.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
    out.records.push_back(std::move(rec));
    if (nl == std::string_view::npos) break;
  }
  return out;
}

LoadedCorpus load_corpus(const std::filesystem::path& path, std::optional<int> grade_level) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read corpus file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), grade_level);
}

std::string serialize_record(const EssayRecord& r) {
  json j;
  j["id"] = r.id;
  j["grade"] = r.grade_level;
  j["text"] = r.text;
  j["scores_g1"] = sheet_to_json(r.scores_g1);
  j["scores_g2"] = sheet_to_json(r.scores_g2);
  if (!r.meta.empty()) j["meta"] = r.meta;
  return j.dump();
}

std::string serialize_corpus(std::span<const EssayRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += serialize_record(r);
    out += '\n';
  }
  return out;
}

int weighted_total_12(const ComponentLevels& levels) {
  auto check = [](int level, const char* name) {
    if (level < 1 || level > 5) {
      throw ValidationError(std::string(name) + " level must be in 1..5, got " +
                            std::to_string(level));
    }
    return level;
  };
  return check(levels.content, "content") * 5 +
         check(levels.spelling_grammar, "spelling/grammar") * 4 +
         check(levels.style, "style") * 2 + check(levels.structure, "structure") * 1;
}

}  // namespace aes
