#include "docgraph/text.hpp"

#include <algorithm>
#include <map>

#include "docgraph/error.hpp"

namespace docgraph {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool all_digits(const std::string& t) {
  return std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string strip_phrases(std::string_view text, const std::vector<std::string>& phrases) {
  std::string s = lowercase(text);
  for (const auto& phrase : phrases) {
    const std::string p = lowercase(phrase);
    if (p.empty()) continue;
    for (auto pos = s.find(p); pos != std::string::npos; pos = s.find(p, pos)) s.replace(pos, p.size(), " ");
  }
  return s;
}

void append_normalized(std::string_view text, const PreprocessConfig& cfg, TokenList& out) {
  for (auto& t : tokenize(strip_phrases(text, cfg.removal_phrases))) {
    if (cfg.stopwords.contains(t)) continue;
    if (all_digits(t)) t = "num";
    out.push_back(std::move(t));
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

TokenList surface_tokens(const Article& article, const PreprocessConfig& cfg) {
  TokenList title, out;
  append_normalized(article.title, cfg, title);
  for (int r = 0; r < 3; ++r) out.insert(out.end(), title.begin(), title.end());
  // Each keyword is repeated three times in place.
  for (const auto& k : article.keywords) {
    TokenList one;
    append_normalized(k, cfg, one);
    for (int r = 0; r < 3; ++r) out.insert(out.end(), one.begin(), one.end());
  }
  append_normalized(article.abstract, cfg, out);
  return out;
}

StemTable build_stem_table(const Corpus& corpus, const PreprocessConfig& cfg) {
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  for (const auto& a : corpus.articles()) {
    for (const auto& t : surface_tokens(a, cfg)) ++counts[porter_stem(t)][t];
  }
  StemTable table;
  for (const auto& [stem, forms] : counts) {
    // std::map iteration is lexicographic, so strict > keeps the smallest on ties.
    const std::string* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [form, c] : forms) {
      if (c > best_count) {
        best = &form;
        best_count = c;
      }
    }
    table.emplace(stem, *best);
  }
  return table;
}

TokenList preprocess(const Article& article, const PreprocessConfig& cfg) {
  TokenList out = surface_tokens(article, cfg);
  for (auto& t : out) {
    const auto it = cfg.stem_table.find(porter_stem(t));
    if (it != cfg.stem_table.end()) t = it->second;
  }
  return out;
}

std::vector<TokenList> preprocess_corpus(const Corpus& corpus, PreprocessConfig cfg) {
  if (cfg.stem_table.empty()) cfg.stem_table = build_stem_table(corpus, cfg);
  std::vector<TokenList> docs;
  docs.reserve(corpus.size());
  for (const auto& a : corpus.articles()) docs.push_back(preprocess(a, cfg));
  return docs;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> document_frequency)
    : tokens_(std::move(tokens)), df_(std::move(document_frequency)) {
  if (tokens_.size() != df_.size()) throw ValidationError("vocabulary: token and frequency counts differ");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!word_to_id_.emplace(tokens_[i], i).second) throw ValidationError("vocabulary: duplicate token " + tokens_[i]);
  }
}

std::optional<std::size_t> Vocabulary::id(const std::string& token) const {
  const auto it = word_to_id_.find(token);
  if (it == word_to_id_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocabulary(const std::vector<TokenList>& docs, std::size_t min_df, double max_df) {
  if (min_df < 1) throw ValidationError("min_df must be at least 1");
  if (!(max_df > 0.0 && max_df <= 1.0)) throw ValidationError("max_df must lie in (0, 1]");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : docs) {
    std::vector<std::string> distinct(doc.begin(), doc.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (const auto& t : distinct) ++df[t];
  }
  const double cap = max_df * static_cast<double>(docs.size());
  std::vector<std::string> tokens;
  std::vector<std::size_t> freq;
  for (const auto& [t, f] : df) {
    if (f >= min_df && static_cast<double>(f) <= cap) {
      tokens.push_back(t);
      freq.push_back(f);
    }
  }
  if (tokens.empty()) throw ValidationError("empty vocabulary: no token satisfies the document-frequency bounds");
  return Vocabulary(std::move(tokens), std::move(freq));
}

}  // namespace docgraph
