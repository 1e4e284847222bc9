#include "mvitcc/info.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mvitcc {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNormalization: return "normalization error";
    case ErrorKind::kDimension: return "dimension error";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kIndex: return "index error";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kLength: return "length error";
    case ErrorKind::kConsistency: return "consistency error";
    case ErrorKind::kInfeasible: return "infeasible configuration";
    case ErrorKind::kSize: return "size error";
    case ErrorKind::kInvariant: return "internal invariant violated";
    case ErrorKind::kIo: return "I/O error";
  }
  return "error";
}

namespace {

constexpr double kDistributionTolerance = 1e-9;

void require_distribution(std::span<const double> d, const char* what) {
  double sum = 0.0;
  for (const double v : d) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::kDomain, std::string(what) + ": entries must be finite and >= 0");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kDistributionTolerance) {
    throw Error(ErrorKind::kDomain, std::string(what) + ": entries must sum to 1");
  }
}

void require_same_shape(const ViewJoint& j, const CoclusterSummary& s) {
  if (s.row_of.size() != j.n_rows() || s.col_of.size() != j.n_cols()) {
    throw Error(ErrorKind::kDimension, "summary does not match joint dimensions");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ViewMatrix

ViewMatrix::ViewMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<Entry> entries)
    : n_rows_(n_rows), n_cols_(n_cols) {
  if (n_rows == 0 || n_cols == 0) {
    throw Error(ErrorKind::kDimension, "view matrix must have at least one row and column");
  }
  entries_.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.row >= n_rows || e.col >= n_cols) {
      throw Error(ErrorKind::kIndex, "entry (" + std::to_string(e.row) + ", " +
                                         std::to_string(e.col) + ") outside matrix bounds");
    }
    if (!(e.value >= 0.0) || !std::isfinite(e.value)) {
      throw Error(ErrorKind::kDomain, "counts must be finite and nonnegative");
    }
    if (e.value > 0.0) entries_.push_back(e);
  }
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  const auto dup = std::adjacent_find(entries_.begin(), entries_.end(),
                                      [](const Entry& a, const Entry& b) {
                                        return a.row == b.row && a.col == b.col;
                                      });
  if (dup != entries_.end()) {
    throw Error(ErrorKind::kFormat, "duplicate coordinate (" + std::to_string(dup->row) + ", " +
                                        std::to_string(dup->col) + ")");
  }
}

ViewMatrix ViewMatrix::from_dense(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n == 0 ? 0 : rows.front().size();
  std::vector<Entry> entries;
  for (std::size_t r = 0; r < n; ++r) {
    if (rows[r].size() != m) throw Error(ErrorKind::kDimension, "ragged dense matrix");
    for (std::size_t c = 0; c < m; ++c) {
      if (rows[r][c] != 0.0) entries.push_back({r, c, rows[r][c]});
    }
  }
  return ViewMatrix(n, m, std::move(entries));
}

double ViewMatrix::total() const noexcept {
  double sum = 0.0;
  for (const auto& e : entries_) sum += e.value;
  return sum;
}

double DenseMatrix::sum() const noexcept {
  return std::accumulate(data_.begin(), data_.end(), 0.0);
}

// ---------------------------------------------------------------------------
// ViewJoint

double ViewJoint::at(std::size_t x, std::size_t y) const {
  const auto begin = row_cols_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[x]);
  const auto end = row_cols_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[x + 1]);
  const auto it = std::lower_bound(begin, end, y);
  if (it == end || *it != y) return 0.0;
  return row_values_[static_cast<std::size_t>(it - row_cols_.begin())];
}

double ViewJoint::total() const noexcept {
  return std::accumulate(row_values_.begin(), row_values_.end(), 0.0);
}

std::vector<std::vector<double>> ViewJoint::to_dense() const {
  std::vector<std::vector<double>> dense(n_rows_, std::vector<double>(n_cols_, 0.0));
  for (std::size_t x = 0; x < n_rows_; ++x) {
    for (std::size_t i = row_offsets_[x]; i < row_offsets_[x + 1]; ++i) {
      dense[x][row_cols_[i]] = row_values_[i];
    }
  }
  return dense;
}

ViewJoint normalize(const ViewMatrix& m, double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorKind::kDomain, "smoothing alpha must be finite and >= 0");
  }
  const std::size_t n = m.n_rows();
  const std::size_t cols = m.n_cols();
  const double total = m.total() + alpha * static_cast<double>(n) * static_cast<double>(cols);
  if (!(total > 0.0)) {
    throw Error(ErrorKind::kNormalization, "cannot normalize an all-zero matrix");
  }

  ViewJoint j;
  j.n_rows_ = n;
  j.n_cols_ = cols;
  j.row_offsets_.assign(n + 1, 0);

  if (alpha == 0.0) {
    j.row_cols_.reserve(m.nnz());
    j.row_values_.reserve(m.nnz());
    for (const auto& e : m.entries()) {
      ++j.row_offsets_[e.row + 1];
      j.row_cols_.push_back(e.col);
      j.row_values_.push_back(e.value / total);
    }
  } else {
    // Smoothing touches every cell, so the joint becomes dense.
    auto entries = m.entries();
    std::size_t next = 0;
    j.row_cols_.reserve(n * cols);
    j.row_values_.reserve(n * cols);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        double count = alpha;
        if (next < entries.size() && entries[next].row == r && entries[next].col == c) {
          count += entries[next].value;
          ++next;
        }
        ++j.row_offsets_[r + 1];
        j.row_cols_.push_back(c);
        j.row_values_.push_back(count / total);
      }
    }
  }
  std::partial_sum(j.row_offsets_.begin(), j.row_offsets_.end(), j.row_offsets_.begin());

  // Column-major copy via counting sort; rows stay ascending within a column.
  j.col_offsets_.assign(cols + 1, 0);
  for (const auto c : j.row_cols_) ++j.col_offsets_[c + 1];
  std::partial_sum(j.col_offsets_.begin(), j.col_offsets_.end(), j.col_offsets_.begin());
  j.col_rows_.resize(j.row_cols_.size());
  j.col_values_.resize(j.row_cols_.size());
  std::vector<std::size_t> cursor(j.col_offsets_.begin(), j.col_offsets_.end() - 1);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = j.row_offsets_[r]; i < j.row_offsets_[r + 1]; ++i) {
      const std::size_t slot = cursor[j.row_cols_[i]]++;
      j.col_rows_[slot] = r;
      j.col_values_[slot] = j.row_values_[i];
    }
  }

  auto px = std::make_shared<std::vector<double>>(n, 0.0);
  auto py = std::make_shared<std::vector<double>>(cols, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    double sum = 0.0;
    for (std::size_t i = j.row_offsets_[r]; i < j.row_offsets_[r + 1]; ++i) sum += j.row_values_[i];
    (*px)[r] = sum;
  }
  for (std::size_t c = 0; c < cols; ++c) {
    double sum = 0.0;
    for (std::size_t i = j.col_offsets_[c]; i < j.col_offsets_[c + 1]; ++i) sum += j.col_values_[i];
    (*py)[c] = sum;
  }
  j.marginal_x_ = std::move(px);
  j.marginal_y_ = std::move(py);
  return j;
}

// ---------------------------------------------------------------------------
// Information quantities

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error(ErrorKind::kDimension, "kl_divergence: distributions differ in length");
  }
  require_distribution(p, "kl_divergence p");
  require_distribution(q, "kl_divergence q");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return kInfinity;
    sum += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(sum, 0.0);
}

double entropy(std::span<const double> d) {
  require_distribution(d, "entropy");
  double sum = 0.0;
  for (const double v : d) {
    if (v > 0.0) sum -= v * std::log(v);
  }
  return std::max(sum, 0.0);
}

double mutual_information(const ViewJoint& j) {
  const auto px = j.marginal_x();
  const auto py = j.marginal_y();
  const auto offsets = j.row_offsets();
  const auto cols = j.row_cols();
  const auto values = j.row_values();
  double sum = 0.0;
  for (std::size_t x = 0; x < j.n_rows(); ++x) {
    for (std::size_t i = offsets[x]; i < offsets[x + 1]; ++i) {
      const double p = values[i];
      sum += p * std::log(p / (px[x] * py[cols[i]]));
    }
  }
  return std::max(sum, 0.0);
}

double mutual_information(const DenseMatrix& joint) {
  std::vector<double> pr(joint.rows(), 0.0);
  std::vector<double> pc(joint.cols(), 0.0);
  for (std::size_t r = 0; r < joint.rows(); ++r) {
    for (std::size_t c = 0; c < joint.cols(); ++c) {
      const double v = joint(r, c);
      if (v < 0.0) throw Error(ErrorKind::kDomain, "mutual_information: negative cell");
      pr[r] += v;
      pc[c] += v;
    }
  }
  double sum = 0.0;
  for (std::size_t r = 0; r < joint.rows(); ++r) {
    for (std::size_t c = 0; c < joint.cols(); ++c) {
      const double v = joint(r, c);
      if (v > 0.0) sum += v * std::log(v / (pr[r] * pc[c]));
    }
  }
  return std::max(sum, 0.0);
}

// ---------------------------------------------------------------------------
// Co-cluster summary

CoclusterSummary build_summary(const ViewJoint& j, const RowAssignment& rows,
                               const ColumnAssignment& cols) {
  if (rows.size() != j.n_rows() || cols.size() != j.n_cols()) {
    throw Error(ErrorKind::kDimension, "assignment lengths do not match joint dimensions");
  }
  CoclusterSummary s;
  s.block_mass = DenseMatrix(rows.clusters(), cols.clusters(), 0.0);
  s.row_cluster_mass.assign(rows.clusters(), 0.0);
  s.col_cluster_mass.assign(cols.clusters(), 0.0);
  s.row_of.assign(rows.labels().begin(), rows.labels().end());
  s.col_of.assign(cols.labels().begin(), cols.labels().end());
  s.marginal_x = j.shared_marginal_x();
  s.marginal_y = j.shared_marginal_y();

  const auto offsets = j.row_offsets();
  const auto col_idx = j.row_cols();
  const auto values = j.row_values();
  for (std::size_t x = 0; x < j.n_rows(); ++x) {
    const std::size_t xh = s.row_of[x];
    for (std::size_t i = offsets[x]; i < offsets[x + 1]; ++i) {
      s.block_mass(xh, s.col_of[col_idx[i]]) += values[i];
    }
  }
  const auto px = j.marginal_x();
  const auto py = j.marginal_y();
  for (std::size_t x = 0; x < px.size(); ++x) s.row_cluster_mass[s.row_of[x]] += px[x];
  for (std::size_t y = 0; y < py.size(); ++y) s.col_cluster_mass[s.col_of[y]] += py[y];
  return s;
}

double approx_prob(const CoclusterSummary& s, std::size_t x, std::size_t y) {
  if (x >= s.row_of.size() || y >= s.col_of.size()) {
    throw Error(ErrorKind::kIndex, "approx_prob: index out of range");
  }
  const std::size_t xh = s.row_of[x];
  const std::size_t yh = s.col_of[y];
  const double pxh = s.row_cluster_mass[xh];
  const double pyh = s.col_cluster_mass[yh];
  if (pxh == 0.0 || pyh == 0.0) return 0.0;
  return s.block_mass(xh, yh) * ((*s.marginal_x)[x] / pxh) * ((*s.marginal_y)[y] / pyh);
}

double view_loss(const ViewJoint& j, const CoclusterSummary& s) {
  require_same_shape(j, s);
  const auto px = j.marginal_x();
  const auto py = j.marginal_y();
  const auto offsets = j.row_offsets();
  const auto cols = j.row_cols();
  const auto values = j.row_values();
  double sum = 0.0;
  for (std::size_t x = 0; x < j.n_rows(); ++x) {
    const std::size_t xh = s.row_of[x];
    const double pxh = s.row_cluster_mass[xh];
    for (std::size_t i = offsets[x]; i < offsets[x + 1]; ++i) {
      const std::size_t y = cols[i];
      const std::size_t yh = s.col_of[y];
      const double p = values[i];
      sum += p * std::log(p * pxh * s.col_cluster_mass[yh] /
                          (px[x] * py[y] * s.block_mass(xh, yh)));
    }
  }
  return std::max(sum, 0.0);
}

void row_candidate_costs(const ViewJoint& j, const CoclusterSummary& s, std::size_t x,
                         std::span<double> out) {
  require_same_shape(j, s);
  if (x >= j.n_rows()) throw Error(ErrorKind::kIndex, "row_candidate_costs: sample out of range");
  if (out.size() != s.k()) throw Error(ErrorKind::kDimension, "row_candidate_costs: bad output size");
  const double px = j.marginal_x()[x];
  const auto py = j.marginal_y();
  const auto offsets = j.row_offsets();
  const auto cols = j.row_cols();
  const auto values = j.row_values();
  for (std::size_t c = 0; c < s.k(); ++c) {
    const double pc = s.row_cluster_mass[c];
    double sum = 0.0;
    for (std::size_t i = offsets[x]; i < offsets[x + 1]; ++i) {
      const std::size_t y = cols[i];
      const std::size_t yh = s.col_of[y];
      const double block = s.block_mass(c, yh);
      if (block == 0.0) {
        sum = kInfinity;
        break;
      }
      const double p = values[i];
      sum += p * std::log(p * pc * s.col_cluster_mass[yh] / (px * py[y] * block));
    }
    out[c] = std::max(sum, 0.0);
  }
}

void col_candidate_costs(const ViewJoint& j, const CoclusterSummary& s, std::size_t y,
                         std::span<double> out) {
  require_same_shape(j, s);
  if (y >= j.n_cols()) throw Error(ErrorKind::kIndex, "col_candidate_costs: feature out of range");
  if (out.size() != s.l()) throw Error(ErrorKind::kDimension, "col_candidate_costs: bad output size");
  const double py = j.marginal_y()[y];
  const auto px = j.marginal_x();
  const auto offsets = j.col_offsets();
  const auto rows = j.col_rows();
  const auto values = j.col_values();
  for (std::size_t c = 0; c < s.l(); ++c) {
    const double pc = s.col_cluster_mass[c];
    double sum = 0.0;
    for (std::size_t i = offsets[y]; i < offsets[y + 1]; ++i) {
      const std::size_t x = rows[i];
      const std::size_t xh = s.row_of[x];
      const double block = s.block_mass(xh, c);
      if (block == 0.0) {
        sum = kInfinity;
        break;
      }
      const double p = values[i];
      sum += p * std::log(p * pc * s.row_cluster_mass[xh] / (py * px[x] * block));
    }
    out[c] = std::max(sum, 0.0);
  }
}

double row_candidate_cost(const ViewJoint& j, const CoclusterSummary& s, std::size_t x,
                          std::size_t candidate) {
  if (candidate >= s.k()) throw Error(ErrorKind::kIndex, "row candidate cluster out of range");
  std::vector<double> costs(s.k());
  row_candidate_costs(j, s, x, costs);
  return costs[candidate];
}

double col_candidate_cost(const ViewJoint& j, const CoclusterSummary& s, std::size_t y,
                          std::size_t candidate) {
  if (candidate >= s.l()) throw Error(ErrorKind::kIndex, "column candidate cluster out of range");
  std::vector<double> costs(s.l());
  col_candidate_costs(j, s, y, costs);
  return costs[candidate];
}

}  // namespace mvitcc
