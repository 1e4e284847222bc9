#include "mvitcc/synth.hpp"

#include <algorithm>
#include <random>
#include <string>

namespace mvitcc {

void SynthSpec::validate() const {
  if (n_samples == 0) throw Error(ErrorKind::kInfeasible, "need at least one sample");
  if (row_clusters == 0 || row_clusters > n_samples) {
    throw Error(ErrorKind::kInfeasible, "row clusters must lie in [1, n_samples]");
  }
  if (views.empty()) throw Error(ErrorKind::kInfeasible, "need at least one view");
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& v = views[i];
    const std::string where = "view " + std::to_string(i) + ": ";
    if (v.n_features == 0) throw Error(ErrorKind::kInfeasible, where + "need at least one feature");
    if (v.feature_clusters == 0 || v.feature_clusters > v.n_features) {
      throw Error(ErrorKind::kInfeasible, where + "feature clusters must lie in [1, n_features]");
    }
    if (!(v.noise >= 0.0 && v.noise <= 1.0)) {
      throw Error(ErrorKind::kInfeasible, where + "noise must lie in [0, 1]");
    }
    if (v.total_count == 0) throw Error(ErrorKind::kInfeasible, where + "total count must be >= 1");
  }
}

DenseMatrix planted_block_mass(std::size_t k, const SynthViewSpec& view) {
  const std::size_t l = view.feature_clusters;
  DenseMatrix block(k, l);
  const double kd = static_cast<double>(k);
  const double ld = static_cast<double>(l);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < l; ++c) {
      const double diagonal = c == r % l ? (1.0 - view.noise) / kd : 0.0;
      block(r, c) = diagonal + view.noise / (kd * ld);
    }
  }
  return block;
}

SynthDataset generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_samples;
  const std::size_t k = spec.row_clusters;

  SynthDataset data;
  data.row_labels.resize(n);
  std::vector<std::size_t> row_sizes(k, 0);
  for (std::size_t s = 0; s < n; ++s) {
    data.row_labels[s] = static_cast<std::uint32_t>(s % k);
    ++row_sizes[s % k];
  }

  for (std::size_t v = 0; v < spec.views.size(); ++v) {
    const auto& view = spec.views[v];
    const std::size_t m = view.n_features;
    const std::size_t l = view.feature_clusters;
    std::vector<std::uint32_t> col_labels(m);
    std::vector<std::size_t> col_sizes(l, 0);
    for (std::size_t f = 0; f < m; ++f) {
      col_labels[f] = static_cast<std::uint32_t>(f % l);
      ++col_sizes[f % l];
    }
    const DenseMatrix block = planted_block_mass(k, view);

    // Multinomial over all cells, drawn as a chain of conditional binomials.
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(v)};
    std::mt19937_64 gen(seq);
    std::vector<Entry> entries;
    std::uint64_t remaining = view.total_count;
    double remaining_mass = 1.0;
    Entry last_cell{};
    for (std::size_t x = 0; x < n && remaining > 0; ++x) {
      const std::size_t xh = data.row_labels[x];
      for (std::size_t y = 0; y < m && remaining > 0; ++y) {
        const std::size_t yh = col_labels[y];
        const double p = block(xh, yh) / static_cast<double>(row_sizes[xh] * col_sizes[yh]);
        if (p == 0.0) continue;
        last_cell = {x, y, 0.0};
        std::uint64_t count = remaining;
        if (remaining_mass > p) {
          const double q = std::clamp(p / remaining_mass, 0.0, 1.0);
          std::binomial_distribution<std::uint64_t> draw(remaining, q);
          count = draw(gen);
        }
        remaining_mass -= p;
        remaining -= count;
        if (count > 0) entries.push_back({x, y, static_cast<double>(count)});
      }
    }
    // Floating-point leftovers from the chain go to the last positive cell.
    if (remaining > 0) {
      if (entries.empty() || entries.back().row != last_cell.row ||
          entries.back().col != last_cell.col) {
        entries.push_back(last_cell);
      }
      entries.back().value += static_cast<double>(remaining);
    }
    data.views.emplace_back(n, m, std::move(entries));
    data.column_labels.push_back(std::move(col_labels));
  }
  return data;
}

}  // namespace mvitcc
