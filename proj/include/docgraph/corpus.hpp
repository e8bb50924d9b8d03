#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace docgraph {

struct Affiliation {
  std::string id;
  std::string country;
};

struct Article {
  std::string id;
  std::string title;
  std::string abstract;
  std::vector<std::string> keywords;
  std::vector<std::string> authors;
  // Aligned with authors.
  std::vector<Affiliation> affiliations;
  std::string journal;
  std::string field;
  int year = 0;
  std::vector<std::string> subject_areas;
  std::map<int, std::int64_t> citations_per_year;
  std::int64_t total_citations = 0;
  std::vector<std::string> references;
};

enum class CorpusFormat { jsonl, csv_pair };

// Immutable, densely indexed article collection. References that do not
// resolve to an article in the collection are kept and counted as external.
class Corpus {
 public:
  Corpus() = default;

  // Throws ValidationError on duplicate ids or invariant violations.
  static Corpus from_articles(std::vector<Article> articles, std::vector<std::string> warnings = {});

  std::size_t size() const { return articles_.size(); }
  const Article& operator[](std::size_t i) const { return articles_[i]; }
  const std::vector<Article>& articles() const { return articles_; }

  std::optional<std::size_t> index_of(const std::string& id) const;
  const std::vector<std::size_t>& internal_references(std::size_t i) const { return internal_refs_[i]; }
  std::size_t external_reference_count(std::size_t i) const { return external_refs_[i]; }
  std::size_t internal_reference_total() const;
  std::size_t external_reference_total() const;

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::vector<Article> articles_;
  std::unordered_map<std::string, std::size_t> id_to_index_;
  std::vector<std::vector<std::size_t>> internal_refs_;
  std::vector<std::size_t> external_refs_;
  std::vector<std::string> warnings_;
};

// jsonl: one Article object per line. csv_pair: `path` is articles.csv and
// `edges` (defaulting to edges.csv beside it) holds `src,dst` references.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const std::optional<std::filesystem::path>& edges = std::nullopt);

Corpus parse_corpus_jsonl(std::istream& in);

void write_corpus_jsonl(const Corpus& corpus, std::ostream& out);

int current_year();

}  // namespace docgraph
