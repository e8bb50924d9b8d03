#include <array>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "docgraph/error.hpp"
#include "docgraph/textembed.hpp"

namespace docgraph {

namespace {

constexpr std::array<char, 4> kMagic{'E', 'M', 'B', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ValidationError("embedding: truncated binary header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

EmbeddingMatrix read_tsv(std::istream& in) {
  EmbeddingMatrix e;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t d = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() < 2) throw ParseError("expected an id and at least one value", line_no);
    if (rows.empty()) d = fields.size() - 1;
    if (fields.size() - 1 != d) {
      throw ParseError("dimension " + std::to_string(fields.size() - 1) + " differs from " + std::to_string(d), line_no);
    }
    std::vector<double> row;
    row.reserve(d);
    for (std::size_t j = 1; j < fields.size(); ++j) {
      float v = 0.0f;
      const auto* first = fields[j].data();
      const auto* last = first + fields[j].size();
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) throw ParseError("bad value '" + std::string(fields[j]) + "'", line_no);
      row.push_back(static_cast<double>(v));
    }
    e.ids.emplace_back(fields[0]);
    rows.push_back(std::move(row));
  }
  e.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) e.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return e;
}

EmbeddingMatrix read_binary(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  const std::uint32_t d = get_u32(in);
  EmbeddingMatrix e;
  e.values.resize(n, d);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) {
      const std::uint32_t bits = get_u32(in);
      e.values(i, j) = static_cast<double>(std::bit_cast<float>(bits));
    }
  }
  const std::string rest{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (n > 0) {
    for (auto id : split(rest, '\n')) e.ids.emplace_back(id);
    if (e.ids.size() == n + 1 && e.ids.back().empty()) e.ids.pop_back();
  }
  if (e.ids.size() != n) {
    throw ValidationError("embedding: binary file lists " + std::to_string(e.ids.size()) + " ids for " +
                          std::to_string(n) + " rows");
  }
  return e;
}

}  // namespace

std::string to_string(EmbeddingKind k) {
  switch (k) {
    case EmbeddingKind::lda_theta: return "lda-theta";
    case EmbeddingKind::pvdm: return "pvdm";
    case EmbeddingKind::external: return "external";
    case EmbeddingKind::gnn: return "gnn";
    case EmbeddingKind::tfidf: return "tfidf";
  }
  return "?";
}

EmbeddingKind embedding_kind_from_name(const std::string& name) {
  for (auto k : {EmbeddingKind::lda_theta, EmbeddingKind::pvdm, EmbeddingKind::external, EmbeddingKind::gnn,
                 EmbeddingKind::tfidf}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown embedding kind: " + name);
}

void EmbeddingMatrix::validate() const {
  if (static_cast<Eigen::Index>(ids.size()) != values.rows()) {
    throw ValidationError("embedding has " + std::to_string(values.rows()) + " rows but " +
                          std::to_string(ids.size()) + " ids");
  }
  if (values.rows() > 0 && values.cols() < 1) throw ValidationError("embedding dimension must be at least 1");
  if (!values.allFinite()) throw ValidationError("embedding contains non-finite values");
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw ValidationError("embedding: duplicate id " + id);
  }
}

void write_embedding_tsv(const EmbeddingMatrix& e, std::ostream& out) {
  e.validate();
  char buf[32];
  for (Eigen::Index i = 0; i < e.values.rows(); ++i) {
    const auto& id = e.ids[static_cast<std::size_t>(i)];
    if (id.find_first_of("\t\n") != std::string::npos) throw ValidationError("embedding id contains a tab or newline");
    out << id;
    for (Eigen::Index j = 0; j < e.values.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(static_cast<float>(e.values(i, j))));
      out << '\t' << buf;
    }
    out << '\n';
  }
}

void write_embedding_binary(const EmbeddingMatrix& e, std::ostream& out) {
  e.validate();
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, static_cast<std::uint32_t>(e.values.rows()));
  put_u32(out, static_cast<std::uint32_t>(e.values.cols()));
  for (Eigen::Index i = 0; i < e.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.values.cols(); ++j) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(e.values(i, j))));
    }
  }
  for (std::size_t i = 0; i < e.ids.size(); ++i) {
    if (e.ids[i].find('\n') != std::string::npos) throw ValidationError("embedding id contains a newline");
    if (i) out << '\n';
    out << e.ids[i];
  }
}

void export_embedding(const EmbeddingMatrix& e, const std::filesystem::path& path, EmbeddingFormat format) {
  if (e.values.size() == 0) throw ValidationError("refusing to export an empty embedding");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  if (format == EmbeddingFormat::binary) {
    write_embedding_binary(e, out);
  } else {
    write_embedding_tsv(e, out);
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

EmbeddingMatrix read_embedding(std::istream& in) {
  std::array<char, 4> head{};
  in.read(head.data(), head.size());
  if (in.gcount() == 4 && head == kMagic) return read_binary(in);
  in.clear();
  in.seekg(0);
  return read_tsv(in);
}

EmbeddingMatrix read_embedding(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open embedding file " + path.string());
  return read_embedding(in);
}

EmbeddingMatrix align_embedding(const EmbeddingMatrix& e, const std::vector<std::string>& expected_ids) {
  std::unordered_map<std::string, Eigen::Index> row;
  for (std::size_t i = 0; i < e.ids.size(); ++i) {
    if (!row.emplace(e.ids[i], static_cast<Eigen::Index>(i)).second) {
      throw ValidationError("embedding: duplicate id " + e.ids[i]);
    }
  }
  std::vector<std::string> missing;
  for (const auto& id : expected_ids) {
    if (!row.contains(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
    if (missing.size() > 20) list += ", ...";
    throw ValidationError("embedding is missing " + std::to_string(missing.size()) + " ids: " + list);
  }
  EmbeddingMatrix out;
  out.kind = e.kind;
  out.ids = expected_ids;
  out.values.resize(static_cast<Eigen::Index>(expected_ids.size()), e.values.cols());
  for (std::size_t i = 0; i < expected_ids.size(); ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) = e.values.row(row.at(expected_ids[i]));
  }
  out.validate();
  return out;
}

EmbeddingMatrix load_external_embeddings(const std::filesystem::path& path, const std::vector<std::string>& expected_ids) {
  EmbeddingMatrix e = read_embedding(path);
  e.kind = EmbeddingKind::external;
  return align_embedding(e, expected_ids);
}

}  // namespace docgraph
