#include "symred/multi_index.hpp"

#include <algorithm>
#include <stdexcept>

namespace symred {

MultiIndex::MultiIndex(std::vector<int> counts) : counts_(std::move(counts)) {
  for (int c : counts_) {
    if (c < 0) throw std::invalid_argument("multi-index entries must be non-negative");
    order_ += c;
  }
  trim();
}

MultiIndex MultiIndex::unit(std::size_t var, int count) {
  std::vector<int> c(var + 1, 0);
  c[var] = count;
  return MultiIndex(std::move(c));
}

void MultiIndex::trim() {
  while (!counts_.empty() && counts_.back() == 0) counts_.pop_back();
}

MultiIndex MultiIndex::operator+(const MultiIndex& other) const {
  std::vector<int> c(std::max(size(), other.size()), 0);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = (*this)[i] + other[i];
  return MultiIndex(std::move(c));
}

MultiIndex MultiIndex::raised(std::size_t var, int count) const {
  return *this + unit(var, count);
}

MultiIndex MultiIndex::operator-(const MultiIndex& other) const {
  std::vector<int> c(std::max(size(), other.size()), 0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] = (*this)[i] - other[i];
    if (c[i] < 0) throw std::invalid_argument("multi-index difference would be negative");
  }
  return MultiIndex(std::move(c));
}

bool MultiIndex::precedes(const MultiIndex& other) const {
  for (std::size_t i = 0; i < size(); ++i) {
    if (counts_[i] > other[i]) return false;
  }
  return true;
}

int compare_graded_lex(const MultiIndex& a, const MultiIndex& b) {
  if (a.order() != b.order()) return a.order() < b.order() ? -1 : 1;
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
  }
  return 0;
}

MultiIndex componentwise_max(const MultiIndex& a, const MultiIndex& b) {
  std::vector<int> c(std::max(a.size(), b.size()), 0);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = std::max(a[i], b[i]);
  return MultiIndex(std::move(c));
}

}  // namespace symred
