#pragma once

// Multi-view information-theoretic co-clustering by block-coordinate descent.
//
// One iteration is: weighted row step (shared sample clusters), per-view
// column steps, recomputation of the per-view losses Q_i, and the closed-form
// maximum-entropy weight update w_i ∝ exp(-Q_i / lambda). Summaries are
// rebuilt after each assignment step, so every step is an exact blockwise
// minimizer and the objective never increases. Single-view ITCC is the K = 1
// configuration.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mvitcc/info.hpp"
#include "mvitcc/metrics.hpp"

namespace mvitcc {

struct SolverConfig {
  std::size_t k = 2;
  std::vector<std::size_t> l;  // one feature-cluster count per view
  double lambda = 1.0;
  double epsilon = 1e-6;
  int max_iter = 20;
  std::uint64_t seed = 0;
  int restarts = 1;
  double alpha = 0.0;
  int threads = 0;  // 0 = all available cores

  /// Throws kDomain when a field is outside its admissible range.
  void validate() const;
};

class WeightVector {
 public:
  WeightVector() = default;
  explicit WeightVector(std::vector<double> w);

  static WeightVector uniform(std::size_t views);

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> values() const noexcept { return w_; }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  std::vector<double> w_;
};

struct TraceEntry {
  int iteration = 0;
  double objective = 0.0;
  double weighted_loss = 0.0;
  std::vector<double> weights;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct SolverState {
  RowAssignment rows;
  std::vector<ColumnAssignment> cols;
  std::vector<CoclusterSummary> summaries;
  WeightVector weights;
  std::vector<double> losses;  // Q_i under the current summaries
  std::vector<TraceEntry> trace;
};

/// Items moved by empty-cluster repair during one assignment step. For a row
/// step only `items` is used; for a column step `per_view[i]` lists the
/// features of view i.
struct StepReport {
  std::size_t changed = 0;
  std::vector<std::size_t> items;
  std::vector<std::vector<std::size_t>> per_view;
};

struct FitResult {
  SolverState state;
  SolverConfig config;
  int iterations = 0;
  bool converged = false;
  int best_restart = 0;
  std::uint64_t best_restart_seed = 0;
  double objective = 0.0;
  std::optional<MetricReport> metrics;
};

/// Cost comparisons treat `a` as strictly better than `b` only when it wins
/// by more than this fraction of the item's mass scale. Floating-point noise
/// of a few ulps therefore never moves an item off an exact tie.
inline constexpr double kTieTolerance = 1e-10;

/// Index of the minimal cost under the tie rule: keep `current` when it is
/// within tolerance of the minimum, otherwise the smallest index that is.
/// `scale` is the item's mass (p(x) or a weighted sum of them).
std::size_t select_cluster(std::span<const double> costs, std::size_t current, double scale);

SolverState initialize(const SolverConfig& config, std::span<const ViewJoint> views,
                       int restart_index);

/// State from explicit assignments with uniform weights.
SolverState initialize_from(const SolverConfig& config, std::span<const ViewJoint> views,
                            RowAssignment rows, std::vector<ColumnAssignment> cols);

StepReport row_step(SolverState& state, std::span<const ViewJoint> views, int threads = 0);
StepReport column_step(SolverState& state, std::span<const ViewJoint> views, int threads = 0);

WeightVector weight_step(std::span<const double> losses, double lambda);

/// J = sum_i w_i Q_i + lambda sum_i w_i ln w_i.
double objective(std::span<const double> losses, const WeightVector& weights, double lambda);
double objective(const SolverState& state, double lambda);
double weighted_loss(std::span<const double> losses, const WeightVector& weights);

void iterate_once(SolverState& state, std::span<const ViewJoint> views, const SolverConfig& config);

/// Runs one trajectory from `state` until convergence or max_iter.
/// Returns {iterations used, converged}.
std::pair<int, bool> run_trajectory(SolverState& state, std::span<const ViewJoint> views,
                                    const SolverConfig& config);

FitResult fit(const SolverConfig& config, std::span<const ViewJoint> views,
              std::optional<std::span<const std::uint32_t>> labels = std::nullopt);

/// Normalizes every matrix with `config.alpha`, then fits.
FitResult fit(const SolverConfig& config, std::span<const ViewMatrix> matrices,
              std::optional<std::span<const std::uint32_t>> labels = std::nullopt);

/// Single-view ITCC: the K = 1 configuration.
FitResult fit_itcc(const ViewJoint& view, std::size_t k, std::size_t l,
                   const SolverConfig& base = {});

}  // namespace mvitcc
