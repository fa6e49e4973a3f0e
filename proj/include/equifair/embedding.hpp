#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace equifair {

// Vocabulary-indexed dense vectors, row-major. Immutable after construction.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  // Throws Error(format) on duplicate tokens or a value count that is not
  // vocabulary.size() * dim.
  EmbeddingMatrix(std::vector<std::string> vocabulary, std::size_t dim, std::vector<double> values);

  std::size_t size() const noexcept { return vocabulary_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
  const std::string& token(std::size_t i) const { return vocabulary_.at(i); }
  std::span<const double> row(std::size_t i) const { return std::span(values_).subspan(i * dim_, dim_); }
  std::span<const double> values() const noexcept { return values_; }
  std::optional<std::size_t> find(std::string_view token) const;

 private:
  std::vector<std::string> vocabulary_;
  std::size_t dim_ = 0;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Plain-text interchange layout: "<vocab_size> <dim>" then one
// "<token> <v_1> ... <v_d>" line per word, single spaces, shortest
// round-trip decimal rendering.
EmbeddingMatrix read_embeddings(std::istream& in);
void write_embeddings(const EmbeddingMatrix& emb, std::ostream& out);

EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingMatrix& emb, const std::filesystem::path& path);

// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace equifair
