#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "docgraph/corpus.hpp"

namespace docgraph {

using TokenList = std::vector<std::string>;
// stem -> most frequent surface form carrying that stem
using StemTable = std::unordered_map<std::string, std::string>;

const std::unordered_set<std::string>& english_stopwords();

std::string porter_stem(std::string_view word);

// Lowercase, split on anything that is not an ASCII letter/digit. Bytes >= 0x80
// are kept inside tokens so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text);

struct PreprocessConfig {
  std::unordered_set<std::string> stopwords = english_stopwords();
  // Phrases (journal trademarks, copyright lines) removed case-insensitively
  // before tokenizing.
  std::vector<std::string> removal_phrases;
  StemTable stem_table;
};

// Lowercased, stopword-free, digit-normalized tokens of 3x title, 3x each
// keyword, then the abstract. No stemming.
TokenList surface_tokens(const Article& article, const PreprocessConfig& cfg);

// Counts surface forms over every article's surface_tokens. Ties go to the
// lexicographically smallest form.
StemTable build_stem_table(const Corpus& corpus, const PreprocessConfig& cfg);

// Stems then maps each stem through cfg.stem_table; stems missing from the
// table map to the surface word itself.
TokenList preprocess(const Article& article, const PreprocessConfig& cfg);

// Fills cfg.stem_table from the corpus when it is empty.
std::vector<TokenList> preprocess_corpus(const Corpus& corpus, PreprocessConfig cfg);

class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> document_frequency);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(std::size_t id) const { return tokens_[id]; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t document_frequency(std::size_t id) const { return df_[id]; }
  std::optional<std::size_t> id(const std::string& token) const;

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> df_;
  std::unordered_map<std::string, std::size_t> word_to_id_;
};

// Keeps tokens with min_df <= df <= max_df * n; ids follow lexicographic
// order. Throws ValidationError when nothing survives.
Vocabulary build_vocabulary(const std::vector<TokenList>& docs, std::size_t min_df = 5, double max_df = 0.65);

}  // namespace docgraph
