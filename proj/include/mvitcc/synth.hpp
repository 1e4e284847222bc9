#pragma once

// Planted block-structure multi-view co-occurrence generator.
//
// Sample s belongs to row cluster s mod k; feature f of view i belongs to
// column cluster f mod l_i. Block masses are
//
//   p(x_hat, y_hat) = (1 - eta) [y_hat == x_hat mod l] / k + eta / (k l),
//
// spread uniformly over the member cells of each block, and T_i counts are
// drawn from one multinomial per view.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mvitcc/info.hpp"

namespace mvitcc {

struct SynthViewSpec {
  std::size_t n_features = 0;
  std::size_t feature_clusters = 1;
  double noise = 0.0;
  std::uint64_t total_count = 1;
};

struct SynthSpec {
  std::size_t n_samples = 0;
  std::size_t row_clusters = 1;
  std::vector<SynthViewSpec> views;
  std::uint64_t seed = 0;

  /// Throws kInfeasible if the spec cannot be generated.
  void validate() const;
};

struct SynthDataset {
  std::vector<ViewMatrix> views;
  std::vector<std::uint32_t> row_labels;
  std::vector<std::vector<std::uint32_t>> column_labels;
};

/// Expected block mass p(x_hat, y_hat) of one view, k x l.
DenseMatrix planted_block_mass(std::size_t k, const SynthViewSpec& view);

SynthDataset generate(const SynthSpec& spec);

}  // namespace mvitcc
