#include "equifair/embedding.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "equifair/error.hpp"

namespace equifair {

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string line_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> vocabulary, std::size_t dim, std::vector<double> values)
    : vocabulary_(std::move(vocabulary)), dim_(dim), values_(std::move(values)) {
  require(dim_ > 0 || vocabulary_.empty(), ErrorCategory::format, "embedding dimension must be positive");
  require(values_.size() == vocabulary_.size() * dim_, ErrorCategory::format,
          "embedding value count does not match vocabulary size times dimension");
  index_.reserve(vocabulary_.size());
  for (std::size_t i = 0; i < vocabulary_.size(); ++i)
    require(index_.emplace(vocabulary_[i], i).second, ErrorCategory::format,
            "duplicate token: " + vocabulary_[i]);
}

std::optional<std::size_t> EmbeddingMatrix::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  require(ec == std::errc(), ErrorCategory::io, "cannot format value");
  return std::string(buf, ptr);
}

EmbeddingMatrix read_embeddings(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCategory::format, "line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_spaces(line);
  std::size_t count = 0, dim = 0;
  require(header.size() == 2 && parse_number(header[0], count) && parse_number(header[1], dim) && dim > 0,
          ErrorCategory::format, line_error(1, "malformed header, expected '<vocab_size> <dimension>'"));

  std::vector<std::string> vocab;
  std::vector<double> values;
  vocab.reserve(count);
  values.reserve(count * dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_spaces(line);
    if (fields.empty()) continue;
    require(fields.size() == dim + 1, ErrorCategory::format,
            line_error(line_no, "expected " + std::to_string(dim) + " values, found " +
                                    std::to_string(fields.size() - 1)));
    vocab.emplace_back(fields[0]);
    for (std::size_t j = 1; j <= dim; ++j) {
      double v = 0.0;
      require(parse_number(fields[j], v), ErrorCategory::format,
              line_error(line_no, "cannot parse value '" + std::string(fields[j]) + "'"));
      values.push_back(v);
    }
  }
  require(vocab.size() == count, ErrorCategory::format,
          "header declares " + std::to_string(count) + " words, file has " + std::to_string(vocab.size()));
  return EmbeddingMatrix(std::move(vocab), dim, std::move(values));
}

void write_embeddings(const EmbeddingMatrix& emb, std::ostream& out) {
  out << emb.size() << ' ' << emb.dim() << '\n';
  for (std::size_t i = 0; i < emb.size(); ++i) {
    out << emb.token(i);
    for (double v : emb.row(i)) out << ' ' << format_double(v);
    out << '\n';
  }
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCategory::missing_file, "cannot open embeddings: " + path.string());
  return read_embeddings(in);
}

void save_embeddings(const EmbeddingMatrix& emb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCategory::io, "cannot write embeddings: " + path.string());
  write_embeddings(emb, out);
  require(out.good(), ErrorCategory::io, "write failed: " + path.string());
}

}  // namespace equifair
