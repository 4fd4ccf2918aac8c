#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace symred {

/// Derivative counts per independent variable. Trailing zeros are trimmed so
/// that a multi-index does not depend on how many variables were declared.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> counts);
  MultiIndex(std::initializer_list<int> counts) : MultiIndex(std::vector<int>(counts)) {}

  static MultiIndex unit(std::size_t var, int count = 1);

  int operator[](std::size_t var) const { return var < counts_.size() ? counts_[var] : 0; }
  std::size_t size() const { return counts_.size(); }
  const std::vector<int>& counts() const { return counts_; }
  int order() const { return order_; }
  bool empty() const { return order_ == 0; }

  MultiIndex operator+(const MultiIndex& other) const;
  MultiIndex raised(std::size_t var, int count = 1) const;
  /// Componentwise difference; requires other <= *this componentwise.
  MultiIndex operator-(const MultiIndex& other) const;

  /// True if this <= other in every component.
  bool precedes(const MultiIndex& other) const;

  bool operator==(const MultiIndex& other) const { return counts_ == other.counts_; }

 private:
  void trim();

  std::vector<int> counts_;
  int order_ = 0;
};

/// Graded-lex ranking: total order first, then the earlier variable with the
/// larger count ranks higher.
int compare_graded_lex(const MultiIndex& a, const MultiIndex& b);

MultiIndex componentwise_max(const MultiIndex& a, const MultiIndex& b);

}  // namespace symred
