#pragma once

// External clustering evaluation: purity, NMI (geometric-mean
// normalization, natural log) and the plain Rand index.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mvitcc {

struct ContingencyTable {
  std::size_t rows = 0;  // predicted clusters
  std::size_t cols = 0;  // true classes
  std::vector<std::uint64_t> counts;  // row-major
  std::uint64_t n = 0;

  std::uint64_t operator()(std::size_t r, std::size_t c) const { return counts[r * cols + c]; }
};

struct MetricReport {
  double purity = 0.0;
  double nmi = 0.0;
  double rand_index = 0.0;
};

/// Labels are compacted in increasing value order, so the table has one row
/// per distinct predicted label and one column per distinct class.
ContingencyTable contingency(std::span<const std::uint32_t> pred,
                             std::span<const std::uint32_t> truth);

double purity(const ContingencyTable& t);
double nmi(const ContingencyTable& t);
double rand_index(const ContingencyTable& t);
double rand_index(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> truth);

MetricReport evaluate(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> truth);

}  // namespace mvitcc
