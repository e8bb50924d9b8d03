#include "docgraph/corpus.hpp"

#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>

#include "docgraph/csv.hpp"
#include "docgraph/error.hpp"
#include "json.hpp"

namespace docgraph {

using nlohmann::json;

int current_year() {
  const auto now = std::chrono::system_clock::now();
  const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(now)};
  return static_cast<int>(ymd.year());
}

namespace {

void validate(const Article& a, std::vector<std::string>& warnings) {
  if (a.id.empty()) throw ValidationError("article with empty id");
  if (a.year < 1900 || a.year > current_year()) {
    throw ValidationError("article " + a.id + ": year " + std::to_string(a.year) + " outside [1900, current year]");
  }
  if (!a.affiliations.empty() && a.affiliations.size() != a.authors.size()) {
    throw ValidationError("article " + a.id + ": " + std::to_string(a.authors.size()) + " authors but " +
                          std::to_string(a.affiliations.size()) + " affiliations");
  }
  if (a.affiliations.empty() && !a.authors.empty()) warnings.push_back("article " + a.id + ": no affiliations");
  std::int64_t cumulative = 0;
  for (const auto& [year, count] : a.citations_per_year) {
    if (count < 0) throw ValidationError("article " + a.id + ": negative citation count in " + std::to_string(year));
    cumulative += count;
  }
  if (a.total_citations < cumulative) {
    throw ValidationError("article " + a.id + ": total_citations " + std::to_string(a.total_citations) +
                          " below per-year sum " + std::to_string(cumulative));
  }
}

std::vector<std::string> string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key) || j[key].is_null()) return out;
  for (const auto& v : j[key]) out.push_back(v.get<std::string>());
  return out;
}

Article article_from_json(const json& j, std::size_t line, std::vector<std::string>& warnings) {
  Article a;
  if (!j.is_object()) throw ParseError("expected a JSON object", line);
  if (!j.contains("id")) throw ParseError("missing required field `id`", line);
  a.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
  if (!j.contains("year")) throw ParseError("missing required field `year`", line);
  a.year = j["year"].get<int>();

  auto text = [&](const char* key, std::string& dst) {
    if (j.contains(key) && !j[key].is_null()) {
      dst = j[key].get<std::string>();
    } else {
      warnings.push_back("line " + std::to_string(line) + ": missing `" + key + "`");
    }
  };
  text("title", a.title);
  text("abstract", a.abstract);
  text("journal", a.journal);
  if (j.contains("field_label")) a.field = j["field_label"].get<std::string>();
  else if (j.contains("field")) a.field = j["field"].get<std::string>();

  a.keywords = string_list(j, "keywords");
  a.authors = string_list(j, "authors");
  a.subject_areas = string_list(j, "subject_areas");
  a.references = string_list(j, "references");
  if (j.contains("affiliations")) {
    for (const auto& af : j["affiliations"]) {
      if (af.is_array()) {
        a.affiliations.push_back({af.at(0).get<std::string>(), af.size() > 1 ? af.at(1).get<std::string>() : ""});
      } else {
        a.affiliations.push_back({af.value("id", ""), af.value("country", "")});
      }
    }
  }
  if (j.contains("citations_per_year")) {
    for (const auto& [year, count] : j["citations_per_year"].items()) {
      a.citations_per_year[std::stoi(year)] = count.get<std::int64_t>();
    }
  }
  if (j.contains("total_citations")) {
    a.total_citations = j["total_citations"].get<std::int64_t>();
  } else {
    for (const auto& [y, c] : a.citations_per_year) a.total_citations += c;
    warnings.push_back("line " + std::to_string(line) + ": missing `total_citations`, using per-year sum");
  }
  return a;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

Corpus load_csv_pair(const std::filesystem::path& articles_path, const std::filesystem::path& edges_path) {
  std::ifstream in(articles_path);
  if (!in) throw ValidationError("cannot open " + articles_path.string());
  std::vector<std::string> warnings;
  std::vector<std::string> header, row;
  std::size_t line = 1;
  if (!read_csv_record(in, header, line)) throw ParseError("empty articles.csv", 1);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  if (!col.count("id") || !col.count("year")) throw ParseError("articles.csv needs `id` and `year` columns", 1);

  std::vector<Article> articles;
  std::unordered_map<std::string, std::size_t> first_line;
  while (true) {
    const std::size_t record_line = line;
    if (!read_csv_record(in, row, line)) break;
    if (row.size() == 1 && row[0].empty()) continue;
    auto get = [&](const char* name) -> std::string {
      auto it = col.find(name);
      if (it == col.end() || it->second >= row.size()) return {};
      return row[it->second];
    };
    Article a;
    a.id = get("id");
    try {
      a.year = std::stoi(get("year"));
    } catch (const std::exception&) {
      throw ParseError("bad year `" + get("year") + "`", record_line);
    }
    a.title = get("title");
    a.abstract = get("abstract");
    a.journal = get("journal");
    a.field = get("field_label");
    if (a.field.empty()) a.field = get("field");
    a.keywords = split(get("keywords"), ';');
    a.authors = split(get("authors"), ';');
    a.subject_areas = split(get("subject_areas"), ';');
    for (const auto& af : split(get("affiliations"), ';')) {
      const auto bar = af.find('|');
      a.affiliations.push_back({af.substr(0, bar), bar == std::string::npos ? "" : af.substr(bar + 1)});
    }
    for (const auto& yc : split(get("citations_per_year"), ';')) {
      const auto colon = yc.find(':');
      if (colon == std::string::npos) throw ParseError("bad citations_per_year entry `" + yc + "`", record_line);
      a.citations_per_year[std::stoi(yc.substr(0, colon))] = std::stoll(yc.substr(colon + 1));
    }
    const std::string total = get("total_citations");
    if (total.empty()) {
      for (const auto& [y, c] : a.citations_per_year) a.total_citations += c;
    } else {
      a.total_citations = std::stoll(total);
    }
    if (a.abstract.empty()) warnings.push_back("line " + std::to_string(record_line) + ": missing `abstract`");
    auto [it, inserted] = first_line.emplace(a.id, record_line);
    if (!inserted) {
      throw ValidationError("duplicate id `" + a.id + "` on lines " + std::to_string(it->second) + " and " +
                            std::to_string(record_line));
    }
    articles.push_back(std::move(a));
  }

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < articles.size(); ++i) index[articles[i].id] = i;
  std::ifstream ein(edges_path);
  if (ein) {
    line = 1;
    if (!read_csv_record(ein, header, line)) header.clear();
    std::size_t src_col = 0, dst_col = 1;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == "src") src_col = i;
      if (header[i] == "dst") dst_col = i;
    }
    while (true) {
      const std::size_t record_line = line;
      if (!read_csv_record(ein, row, line)) break;
      if (row.size() == 1 && row[0].empty()) continue;
      if (row.size() <= std::max(src_col, dst_col)) throw ParseError("edges.csv: expected src,dst", record_line);
      auto it = index.find(row[src_col]);
      if (it == index.end()) {
        warnings.push_back("edges.csv line " + std::to_string(record_line) + ": unknown citing id " + row[src_col]);
        continue;
      }
      articles[it->second].references.push_back(row[dst_col]);
    }
  } else {
    warnings.push_back("no edges file at " + edges_path.string());
  }
  return Corpus::from_articles(std::move(articles), std::move(warnings));
}

}  // namespace

Corpus Corpus::from_articles(std::vector<Article> articles, std::vector<std::string> warnings) {
  Corpus c;
  c.warnings_ = std::move(warnings);
  for (std::size_t i = 0; i < articles.size(); ++i) {
    validate(articles[i], c.warnings_);
    auto [it, inserted] = c.id_to_index_.emplace(articles[i].id, i);
    if (!inserted) {
      throw ValidationError("duplicate id `" + articles[i].id + "` at records " + std::to_string(it->second + 1) +
                            " and " + std::to_string(i + 1));
    }
  }
  c.articles_ = std::move(articles);
  c.internal_refs_.resize(c.articles_.size());
  c.external_refs_.assign(c.articles_.size(), 0);
  for (std::size_t i = 0; i < c.articles_.size(); ++i) {
    for (const auto& ref : c.articles_[i].references) {
      auto it = c.id_to_index_.find(ref);
      if (it == c.id_to_index_.end()) {
        ++c.external_refs_[i];
      } else {
        c.internal_refs_[i].push_back(it->second);
      }
    }
  }
  return c;
}

std::optional<std::size_t> Corpus::index_of(const std::string& id) const {
  auto it = id_to_index_.find(id);
  if (it == id_to_index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Corpus::internal_reference_total() const {
  std::size_t n = 0;
  for (const auto& r : internal_refs_) n += r.size();
  return n;
}

std::size_t Corpus::external_reference_total() const {
  return std::accumulate(external_refs_.begin(), external_refs_.end(), std::size_t{0});
}

Corpus parse_corpus_jsonl(std::istream& in) {
  std::vector<Article> articles;
  std::vector<std::string> warnings;
  std::unordered_map<std::string, std::size_t> first_line;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), line);
    }
    Article a;
    try {
      a = article_from_json(j, line, warnings);
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line);
    }
    auto [it, inserted] = first_line.emplace(a.id, line);
    if (!inserted) {
      throw ValidationError("duplicate id `" + a.id + "` on lines " + std::to_string(it->second) + " and " +
                            std::to_string(line));
    }
    articles.push_back(std::move(a));
  }
  return Corpus::from_articles(std::move(articles), std::move(warnings));
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const std::optional<std::filesystem::path>& edges) {
  if (format == CorpusFormat::csv_pair) {
    return load_csv_pair(path, edges.value_or(path.parent_path() / "edges.csv"));
  }
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse_corpus_jsonl(in);
}

void write_corpus_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const Article& a : corpus.articles()) {
    json j;
    j["id"] = a.id;
    j["title"] = a.title;
    j["abstract"] = a.abstract;
    j["keywords"] = a.keywords;
    j["authors"] = a.authors;
    json affs = json::array();
    for (const auto& af : a.affiliations) affs.push_back({af.id, af.country});
    j["affiliations"] = affs;
    j["journal"] = a.journal;
    j["field_label"] = a.field;
    j["year"] = a.year;
    j["subject_areas"] = a.subject_areas;
    json cites = json::object();
    for (const auto& [y, c] : a.citations_per_year) cites[std::to_string(y)] = c;
    j["citations_per_year"] = cites;
    j["total_citations"] = a.total_citations;
    j["references"] = a.references;
    out << j.dump() << '\n';
  }
}

bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  std::string field;
  bool quoted = false, any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get(c);
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      ++line;
      fields.push_back(std::move(field));
      return true;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", line);
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

}  // namespace docgraph
