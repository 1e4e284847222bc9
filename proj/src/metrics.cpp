#include "mvitcc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mvitcc/error.hpp"

namespace mvitcc {

namespace {

std::vector<std::uint32_t> compact(std::span<const std::uint32_t> labels, std::size_t& distinct) {
  std::vector<std::uint32_t> values(labels.begin(), labels.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  distinct = values.size();
  std::vector<std::uint32_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i] = static_cast<std::uint32_t>(
        std::lower_bound(values.begin(), values.end(), labels[i]) - values.begin());
  }
  return out;
}

std::uint64_t pairs(std::uint64_t m) { return m < 2 ? 0 : m * (m - 1) / 2; }

double entropy_of_counts(const std::vector<std::uint64_t>& counts, double n) {
  double h = 0.0;
  for (const auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

bool is_bijection(const ContingencyTable& t) {
  if (t.rows != t.cols) return false;
  for (std::size_t r = 0; r < t.rows; ++r) {
    std::size_t nonzero = 0;
    for (std::size_t c = 0; c < t.cols; ++c) nonzero += t(r, c) != 0;
    if (nonzero != 1) return false;
  }
  for (std::size_t c = 0; c < t.cols; ++c) {
    std::size_t nonzero = 0;
    for (std::size_t r = 0; r < t.rows; ++r) nonzero += t(r, c) != 0;
    if (nonzero != 1) return false;
  }
  return true;
}

}  // namespace

ContingencyTable contingency(std::span<const std::uint32_t> pred,
                             std::span<const std::uint32_t> truth) {
  if (pred.size() != truth.size()) {
    throw Error(ErrorKind::kDimension, "prediction and truth differ in length");
  }
  if (pred.empty()) throw Error(ErrorKind::kDomain, "contingency needs at least one item");
  ContingencyTable t;
  const auto p = compact(pred, t.rows);
  const auto q = compact(truth, t.cols);
  t.counts.assign(t.rows * t.cols, 0);
  for (std::size_t i = 0; i < p.size(); ++i) ++t.counts[p[i] * t.cols + q[i]];
  t.n = pred.size();
  return t;
}

double purity(const ContingencyTable& t) {
  if (t.n == 0) throw Error(ErrorKind::kDomain, "purity of an empty table");
  std::uint64_t hits = 0;
  for (std::size_t r = 0; r < t.rows; ++r) {
    std::uint64_t best = 0;
    for (std::size_t c = 0; c < t.cols; ++c) best = std::max(best, t(r, c));
    hits += best;
  }
  return static_cast<double>(hits) / static_cast<double>(t.n);
}

double nmi(const ContingencyTable& t) {
  if (t.n == 0) throw Error(ErrorKind::kDomain, "nmi of an empty table");
  if (is_bijection(t)) return 1.0;
  const double n = static_cast<double>(t.n);
  std::vector<std::uint64_t> row_sums(t.rows, 0);
  std::vector<std::uint64_t> col_sums(t.cols, 0);
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (std::size_t c = 0; c < t.cols; ++c) {
      row_sums[r] += t(r, c);
      col_sums[c] += t(r, c);
    }
  }
  const double h_pred = entropy_of_counts(row_sums, n);
  const double h_true = entropy_of_counts(col_sums, n);
  if (h_pred == 0.0 || h_true == 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (std::size_t c = 0; c < t.cols; ++c) {
      const auto v = t(r, c);
      if (v == 0) continue;
      const double p = static_cast<double>(v) / n;
      mi += p * std::log(p * n * n /
                         (static_cast<double>(row_sums[r]) * static_cast<double>(col_sums[c])));
    }
  }
  return std::clamp(mi / std::sqrt(h_pred * h_true), 0.0, 1.0);
}

double rand_index(const ContingencyTable& t) {
  if (t.n < 2) throw Error(ErrorKind::kDomain, "rand index needs at least two items");
  std::uint64_t same_both = 0;
  std::vector<std::uint64_t> row_sums(t.rows, 0);
  std::vector<std::uint64_t> col_sums(t.cols, 0);
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (std::size_t c = 0; c < t.cols; ++c) {
      same_both += pairs(t(r, c));
      row_sums[r] += t(r, c);
      col_sums[c] += t(r, c);
    }
  }
  std::uint64_t same_pred = 0;
  std::uint64_t same_true = 0;
  for (const auto s : row_sums) same_pred += pairs(s);
  for (const auto s : col_sums) same_true += pairs(s);
  const std::uint64_t total = pairs(t.n);
  // different-in-both = total - same_pred - same_true + same_both
  const std::uint64_t agree = total + 2 * same_both - same_pred - same_true;
  return static_cast<double>(agree) / static_cast<double>(total);
}

double rand_index(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> truth) {
  if (pred.size() != truth.size()) {
    throw Error(ErrorKind::kDimension, "prediction and truth differ in length");
  }
  if (pred.size() < 2) throw Error(ErrorKind::kDomain, "rand index needs at least two items");
  return rand_index(contingency(pred, truth));
}

MetricReport evaluate(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> truth) {
  const auto t = contingency(pred, truth);
  MetricReport report;
  report.purity = purity(t);
  report.nmi = nmi(t);
  report.rand_index = t.n >= 2 ? rand_index(t) : 1.0;
  return report;
}

}  // namespace mvitcc
