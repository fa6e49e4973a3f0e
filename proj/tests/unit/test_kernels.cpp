#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "equifair/kernels.hpp"

using namespace equifair::kernels;

namespace {

struct Fixture {
  std::vector<std::uint32_t> group;
  std::vector<std::uint8_t> y, y_hat;
  std::vector<double> scores;
  std::vector<std::uint64_t> keys;
};

Fixture make(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Fixture f;
  for (std::size_t i = 0; i < n; ++i) {
    f.group.push_back(static_cast<std::uint32_t>(gen() % 5));
    f.y.push_back(gen() % 2);
    f.y_hat.push_back(gen() % 2);
    f.scores.push_back(static_cast<double>(gen() % 101) / 100.0);
    f.keys.push_back(gen());
  }
  return f;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("serial and omp confusion counts agree") {
  const auto f = make(50000, 1);
  const auto s = serial::count_confusion(f.group, f.y, f.y_hat, 5);
  const auto o = omp::count_confusion(f.group, f.y, f.y_hat, 5);
  CHECK(s == o);
  std::size_t total = 0;
  for (const auto& c : s) total += c.positives() + c.negatives();
  CHECK(total == 50000);
}

TEST_CASE("serial and omp randomized application agree") {
  const auto f = make(50000, 2);
  const std::vector<double> p0{0.0, 0.1, 0.3, 0.5, 1.0}, p1{1.0, 0.9, 0.6, 0.5, 0.0};
  CHECK(serial::apply_flip(f.group, f.y_hat, f.keys, p0, p1, 7) == omp::apply_flip(f.group, f.y_hat, f.keys, p0, p1, 7));
  CHECK(serial::apply_flip(f.group, f.y_hat, f.keys, p0, p1, 7) != serial::apply_flip(f.group, f.y_hat, f.keys, p0, p1, 8));

  std::vector<ThresholdMixture> mix{{{0.5, 1.0}},
                                    {{0.2, 0.3}, {0.7, 0.7}},
                                    {{0.1, 0.2}, {0.4, 0.5}, {0.9, 0.3}},
                                    {{std::numeric_limits<double>::infinity(), 1.0}},
                                    {{0.0, 1.0}}};
  const auto s = serial::apply_mixture(f.group, f.scores, f.keys, mix, 9);
  CHECK(s == omp::apply_mixture(f.group, f.scores, f.keys, mix, 9));
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (f.group[i] == 0) CHECK(s[i] == (f.scores[i] >= 0.5));
    if (f.group[i] == 3) CHECK(s[i] == 0);
    if (f.group[i] == 4) CHECK(s[i] == 1);
  }
}

TEST_CASE("serial and omp row kernels agree bitwise") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n(0.0, 1.0);
  const std::size_t rows = 3000, dim = 25;
  std::vector<double> data(rows * dim);
  for (double& v : data) v = n(gen);
  for (std::size_t j = 0; j < dim; ++j) data[7 * dim + j] = 0.0;  // degenerate row
  std::vector<double> basis(2 * dim, 0.0);
  basis[0] = 1.0;
  basis[dim + 1] = 1.0;
  std::vector<std::size_t> idx(rows);
  for (std::size_t i = 0; i < rows; ++i) idx[i] = i;

  auto a = data, b = data;
  std::vector<RowStatus> sa(rows), sb(rows);
  serial::normalize_rows({a, dim}, idx, 1e-8, sa);
  omp::normalize_rows({b, dim}, idx, 1e-8, sb);
  CHECK(bitwise_equal(a, b));
  CHECK(sa == sb);
  CHECK(sa[7] == RowStatus::degenerate);

  serial::neutralize_rows({a, dim}, {basis, dim}, idx, 1e-8, sa);
  omp::neutralize_rows({b, dim}, {basis, dim}, idx, 1e-8, sb);
  CHECK(bitwise_equal(a, b));
  CHECK(sa == sb);
  for (std::size_t r = 0; r < rows; ++r) {
    if (sa[r] != RowStatus::ok) continue;
    CHECK(std::abs(a[r * dim]) <= 1e-15);
    CHECK(std::abs(a[r * dim + 1]) <= 1e-15);
  }
  CHECK(max_threads() >= 1);
}
