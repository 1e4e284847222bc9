#pragma once

// Discrete probability machinery for co-occurrence matrices: normalization
// into empirical joints, KL divergence, mutual information, entropy, and the
// co-cluster summary that defines the block approximation
//
//   p_hat(x, y) = p(x_hat, y_hat) * p(x) / p(x_hat) * p(y) / p(y_hat).
//
// All information quantities are in nats. Costs use +infinity as an ordinary
// value (ordered above every finite cost).

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "mvitcc/error.hpp"

namespace mvitcc {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Entry {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;

  friend bool operator==(const Entry&, const Entry&) = default;
};

/// Raw sparse nonnegative co-occurrence counts for one view.
///
/// Entries are kept sorted row-major; explicit zeros are dropped on
/// construction. Throws kDomain for negative or non-finite counts, kIndex for
/// out-of-range coordinates, kFormat for duplicate coordinates.
class ViewMatrix {
 public:
  ViewMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<Entry> entries);

  static ViewMatrix from_dense(const std::vector<std::vector<double>>& rows);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  std::span<const Entry> entries() const noexcept { return entries_; }
  double total() const noexcept;

  friend bool operator==(const ViewMatrix&, const ViewMatrix&) = default;

 private:
  std::size_t n_rows_;
  std::size_t n_cols_;
  std::vector<Entry> entries_;
};

/// Small dense row-major matrix, used for k x l block masses.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }
  double sum() const noexcept;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Normalized empirical joint p(X, Y) stored both row-major (CSR) and
/// column-major (CSC), with marginals computed from the stored cells.
/// Every stored cell is strictly positive. Instances are immutable.
class ViewJoint {
 public:
  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return row_values_.size(); }

  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const std::size_t> row_cols() const noexcept { return row_cols_; }
  std::span<const double> row_values() const noexcept { return row_values_; }

  std::span<const std::size_t> col_offsets() const noexcept { return col_offsets_; }
  std::span<const std::size_t> col_rows() const noexcept { return col_rows_; }
  std::span<const double> col_values() const noexcept { return col_values_; }

  std::span<const double> marginal_x() const noexcept { return *marginal_x_; }
  std::span<const double> marginal_y() const noexcept { return *marginal_y_; }
  const std::shared_ptr<const std::vector<double>>& shared_marginal_x() const noexcept {
    return marginal_x_;
  }
  const std::shared_ptr<const std::vector<double>>& shared_marginal_y() const noexcept {
    return marginal_y_;
  }

  /// p(x, y); zero for cells that are not stored.
  double at(std::size_t x, std::size_t y) const;
  double total() const noexcept;
  std::vector<std::vector<double>> to_dense() const;

 private:
  friend ViewJoint normalize(const ViewMatrix& m, double alpha);

  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_offsets_;
  std::vector<std::size_t> row_cols_;
  std::vector<double> row_values_;
  std::vector<std::size_t> col_offsets_;
  std::vector<std::size_t> col_rows_;
  std::vector<double> col_values_;
  std::shared_ptr<const std::vector<double>> marginal_x_;
  std::shared_ptr<const std::vector<double>> marginal_y_;
};

/// Map from items to cluster indices in [0, clusters).
template <class Tag>
class Assignment {
 public:
  Assignment() = default;
  Assignment(std::vector<std::uint32_t> labels, std::size_t clusters)
      : labels_(std::move(labels)), clusters_(clusters) {
    if (clusters_ == 0) {
      throw Error(ErrorKind::kDomain, "assignment needs at least one cluster");
    }
    for (const auto c : labels_) {
      if (c >= clusters_) {
        throw Error(ErrorKind::kIndex, "cluster index out of range in assignment");
      }
    }
  }

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t clusters() const noexcept { return clusters_; }
  std::uint32_t operator[](std::size_t i) const { return labels_[i]; }
  std::span<const std::uint32_t> labels() const noexcept { return labels_; }

  void set(std::size_t item, std::uint32_t cluster) {
    if (cluster >= clusters_) {
      throw Error(ErrorKind::kIndex, "cluster index out of range in assignment");
    }
    labels_.at(item) = cluster;
  }

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(clusters_, 0);
    for (const auto c : labels_) ++sizes[c];
    return sizes;
  }

  /// Identity map onto `n` singleton clusters.
  static Assignment identity(std::size_t n) {
    std::vector<std::uint32_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::uint32_t>(i);
    return Assignment(std::move(labels), n);
  }

  friend bool operator==(const Assignment&, const Assignment&) = default;

 private:
  std::vector<std::uint32_t> labels_;
  std::size_t clusters_ = 1;
};

using RowAssignment = Assignment<struct RowTag>;
using ColumnAssignment = Assignment<struct ColumnTag>;

/// The quantities defining p_hat for one view under a co-clustering.
/// Holds shared references to the source joint's marginals, so it stays
/// valid independently of the ViewJoint object's lifetime.
struct CoclusterSummary {
  DenseMatrix block_mass;                 // p(x_hat, y_hat)
  std::vector<double> row_cluster_mass;   // p(x_hat)
  std::vector<double> col_cluster_mass;   // p(y_hat)
  std::vector<std::uint32_t> row_of;      // C_X
  std::vector<std::uint32_t> col_of;      // C_Y
  std::shared_ptr<const std::vector<double>> marginal_x;
  std::shared_ptr<const std::vector<double>> marginal_y;

  std::size_t k() const noexcept { return row_cluster_mass.size(); }
  std::size_t l() const noexcept { return col_cluster_mass.size(); }
};

ViewJoint normalize(const ViewMatrix& m, double alpha = 0.0);

double kl_divergence(std::span<const double> p, std::span<const double> q);
double entropy(std::span<const double> d);
double mutual_information(const ViewJoint& j);
/// Mutual information of a dense joint (e.g. a block-mass matrix).
double mutual_information(const DenseMatrix& joint);

CoclusterSummary build_summary(const ViewJoint& j, const RowAssignment& rows,
                               const ColumnAssignment& cols);

double approx_prob(const CoclusterSummary& s, std::size_t x, std::size_t y);

/// D(p(X,Y) || p_hat(X,Y)) over the stored cells of `j`.
double view_loss(const ViewJoint& j, const CoclusterSummary& s);

/// p(x) * D(p(Y|x) || p_hat(Y | x_hat = candidate)).
double row_candidate_cost(const ViewJoint& j, const CoclusterSummary& s, std::size_t x,
                          std::size_t candidate);
/// p(y) * D(p(X|y) || p_hat(X | y_hat = candidate)).
double col_candidate_cost(const ViewJoint& j, const CoclusterSummary& s, std::size_t y,
                          std::size_t candidate);

/// Costs of every row cluster for sample `x`, written into `out` (size k).
void row_candidate_costs(const ViewJoint& j, const CoclusterSummary& s, std::size_t x,
                         std::span<double> out);
/// Costs of every column cluster for feature `y`, written into `out` (size l).
void col_candidate_costs(const ViewJoint& j, const CoclusterSummary& s, std::size_t y,
                         std::span<double> out);

}  // namespace mvitcc
