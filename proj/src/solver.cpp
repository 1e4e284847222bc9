#include "mvitcc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <omp.h>

namespace mvitcc {

namespace {

constexpr double kHardMaxLambda = 1e-12;

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

void check_views(const SolverConfig& config, std::span<const ViewJoint> views) {
  config.validate();
  if (views.empty()) throw Error(ErrorKind::kDomain, "at least one view is required");
  if (config.l.size() != views.size()) {
    throw Error(ErrorKind::kDomain, "expected " + std::to_string(views.size()) +
                                        " feature-cluster counts, got " +
                                        std::to_string(config.l.size()));
  }
  const std::size_t n = views.front().n_rows();
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].n_rows() != n) {
      throw Error(ErrorKind::kConsistency,
                  "view " + std::to_string(i) + " has " + std::to_string(views[i].n_rows()) +
                      " samples, expected " + std::to_string(n));
    }
  }
  if (n < config.k) {
    throw Error(ErrorKind::kInfeasible, "k = " + std::to_string(config.k) + " exceeds the " +
                                            std::to_string(n) + " samples");
  }
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].n_cols() < config.l[i]) {
      throw Error(ErrorKind::kInfeasible, "view " + std::to_string(i) + ": l = " +
                                              std::to_string(config.l[i]) + " exceeds the " +
                                              std::to_string(views[i].n_cols()) + " features");
    }
  }
}

// First `clusters` items go to clusters 0..clusters-1, the rest uniformly at random.
std::vector<std::uint32_t> first_k_then_random(std::size_t items, std::size_t clusters,
                                               std::mt19937_64& gen) {
  std::vector<std::uint32_t> labels(items);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(clusters - 1));
  for (std::size_t i = 0; i < items; ++i) {
    labels[i] = i < clusters ? static_cast<std::uint32_t>(i) : pick(gen);
  }
  return labels;
}

void refresh(SolverState& state, std::span<const ViewJoint> views, std::size_t view) {
  state.summaries[view] = build_summary(views[view], state.rows, state.cols[view]);
  state.losses[view] = view_loss(views[view], state.summaries[view]);
}

void refresh_all(SolverState& state, std::span<const ViewJoint> views) {
  state.summaries.resize(views.size());
  state.losses.resize(views.size());
  for (std::size_t i = 0; i < views.size(); ++i) refresh(state, views, i);
}

// Weighted row costs of sample x against every row cluster.
void weighted_row_costs(const SolverState& state, std::span<const ViewJoint> views,
                        std::size_t x, std::span<double> out, std::span<double> scratch,
                        double& scale) {
  std::fill(out.begin(), out.end(), 0.0);
  scale = 0.0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const double w = state.weights[i];
    if (w == 0.0) continue;
    row_candidate_costs(views[i], state.summaries[i], x, scratch);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += w * scratch[c];
    scale += w * views[i].marginal_x()[x];
  }
}

// Moves one item into each empty cluster, taking the donor item (from a
// cluster of size >= 2) with the largest cost at its own cluster.
template <class Assign>
std::vector<std::size_t> repair_empty(Assign& assign, std::span<const double> own_cost) {
  std::vector<std::size_t> moved;
  auto sizes = assign.cluster_sizes();
  std::vector<bool> taken(assign.size(), false);
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] != 0) continue;
    std::size_t best = assign.size();
    for (std::size_t item = 0; item < assign.size(); ++item) {
      if (taken[item] || sizes[assign[item]] < 2) continue;
      if (best == assign.size() || own_cost[item] > own_cost[best]) best = item;
    }
    if (best == assign.size()) break;  // fewer items than clusters
    --sizes[assign[best]];
    ++sizes[c];
    assign.set(best, static_cast<std::uint32_t>(c));
    taken[best] = true;
    moved.push_back(best);
  }
  return moved;
}

bool has_empty(const std::vector<std::size_t>& sizes) {
  return std::find(sizes.begin(), sizes.end(), 0) != sizes.end();
}

}  // namespace

void SolverConfig::validate() const {
  if (k < 1) throw Error(ErrorKind::kDomain, "k must be >= 1");
  if (l.empty()) throw Error(ErrorKind::kDomain, "at least one feature-cluster count is required");
  for (const auto li : l) {
    if (li < 1) throw Error(ErrorKind::kDomain, "every l must be >= 1");
  }
  if (!(lambda > 0.0)) throw Error(ErrorKind::kDomain, "lambda must be > 0");
  if (!(epsilon >= 0.0)) throw Error(ErrorKind::kDomain, "epsilon must be >= 0");
  if (max_iter < 1) throw Error(ErrorKind::kDomain, "max_iter must be >= 1");
  if (restarts < 1) throw Error(ErrorKind::kDomain, "restarts must be >= 1");
  if (!(alpha >= 0.0)) throw Error(ErrorKind::kDomain, "alpha must be >= 0");
  if (threads < 0) throw Error(ErrorKind::kDomain, "threads must be >= 0");
}

WeightVector::WeightVector(std::vector<double> w) : w_(std::move(w)) {
  if (w_.empty()) throw Error(ErrorKind::kDomain, "weight vector must not be empty");
  double sum = 0.0;
  for (const double v : w_) {
    if (!(v >= 0.0)) throw Error(ErrorKind::kDomain, "weights must be nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::kDomain, "weights must sum to 1");
}

WeightVector WeightVector::uniform(std::size_t views) {
  return WeightVector(std::vector<double>(views, 1.0 / static_cast<double>(views)));
}

std::size_t select_cluster(std::span<const double> costs, std::size_t current, double scale) {
  const double best = *std::min_element(costs.begin(), costs.end());
  const double limit = best + kTieTolerance * scale;
  if (costs[current] <= limit) return current;
  for (std::size_t c = 0; c < costs.size(); ++c) {
    if (costs[c] <= limit) return c;
  }
  return current;
}

SolverState initialize(const SolverConfig& config, std::span<const ViewJoint> views,
                       int restart_index) {
  check_views(config, views);
  std::mt19937_64 gen(config.seed + static_cast<std::uint64_t>(restart_index));
  RowAssignment rows(first_k_then_random(views.front().n_rows(), config.k, gen), config.k);
  std::vector<ColumnAssignment> cols;
  cols.reserve(views.size());
  for (std::size_t i = 0; i < views.size(); ++i) {
    cols.emplace_back(first_k_then_random(views[i].n_cols(), config.l[i], gen), config.l[i]);
  }
  return initialize_from(config, views, std::move(rows), std::move(cols));
}

SolverState initialize_from(const SolverConfig& config, std::span<const ViewJoint> views,
                            RowAssignment rows, std::vector<ColumnAssignment> cols) {
  check_views(config, views);
  if (rows.clusters() != config.k || rows.size() != views.front().n_rows()) {
    throw Error(ErrorKind::kDimension, "row assignment does not match configuration");
  }
  if (cols.size() != views.size()) {
    throw Error(ErrorKind::kDimension, "one column assignment per view is required");
  }
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (cols[i].clusters() != config.l[i] || cols[i].size() != views[i].n_cols()) {
      throw Error(ErrorKind::kDimension,
                  "column assignment of view " + std::to_string(i) + " does not match");
    }
  }
  SolverState state;
  state.rows = std::move(rows);
  state.cols = std::move(cols);
  state.weights = WeightVector::uniform(views.size());
  refresh_all(state, views);
  state.trace.push_back({0, objective(state, config.lambda),
                         weighted_loss(state.losses, state.weights),
                         std::vector<double>(state.weights.values().begin(),
                                             state.weights.values().end())});
  return state;
}

StepReport row_step(SolverState& state, std::span<const ViewJoint> views, int threads) {
  const std::size_t n = state.rows.size();
  const std::size_t k = state.rows.clusters();
  std::vector<std::uint32_t> next(n);

#pragma omp parallel num_threads(resolve_threads(threads))
  {
    std::vector<double> costs(k);
    std::vector<double> scratch(k);
#pragma omp for schedule(static)
    for (std::size_t x = 0; x < n; ++x) {
      double scale = 0.0;
      weighted_row_costs(state, views, x, costs, scratch, scale);
      next[x] = static_cast<std::uint32_t>(select_cluster(costs, state.rows[x], scale));
    }
  }

  StepReport report;
  for (std::size_t x = 0; x < n; ++x) report.changed += next[x] != state.rows[x];
  state.rows = RowAssignment(std::move(next), k);
  refresh_all(state, views);

  if (has_empty(state.rows.cluster_sizes())) {
    std::vector<double> own(n);
    std::vector<double> costs(k);
    std::vector<double> scratch(k);
    for (std::size_t x = 0; x < n; ++x) {
      double scale = 0.0;
      weighted_row_costs(state, views, x, costs, scratch, scale);
      own[x] = costs[state.rows[x]];
    }
    report.items = repair_empty(state.rows, own);
    refresh_all(state, views);
  }
  return report;
}

StepReport column_step(SolverState& state, std::span<const ViewJoint> views, int threads) {
  StepReport report;
  report.per_view.resize(views.size());
  const int workers = resolve_threads(threads);
  for (std::size_t i = 0; i < views.size(); ++i) {
    const ViewJoint& view = views[i];
    const std::size_t m = view.n_cols();
    const std::size_t l = state.cols[i].clusters();
    std::vector<std::uint32_t> next(m);

#pragma omp parallel num_threads(workers)
    {
      std::vector<double> costs(l);
#pragma omp for schedule(static)
      for (std::size_t y = 0; y < m; ++y) {
        col_candidate_costs(view, state.summaries[i], y, costs);
        next[y] = static_cast<std::uint32_t>(
            select_cluster(costs, state.cols[i][y], view.marginal_y()[y]));
      }
    }

    for (std::size_t y = 0; y < m; ++y) report.changed += next[y] != state.cols[i][y];
    state.cols[i] = ColumnAssignment(std::move(next), l);
    refresh(state, views, i);

    if (has_empty(state.cols[i].cluster_sizes())) {
      std::vector<double> own(m);
      std::vector<double> costs(l);
      for (std::size_t y = 0; y < m; ++y) {
        col_candidate_costs(view, state.summaries[i], y, costs);
        own[y] = costs[state.cols[i][y]];
      }
      report.per_view[i] = repair_empty(state.cols[i], own);
      refresh(state, views, i);
    }
  }
  return report;
}

WeightVector weight_step(std::span<const double> losses, double lambda) {
  if (losses.empty()) throw Error(ErrorKind::kDomain, "weight_step needs at least one loss");
  if (!(lambda > 0.0)) throw Error(ErrorKind::kDomain, "lambda must be > 0");
  for (const double q : losses) {
    if (!std::isfinite(q)) throw Error(ErrorKind::kInvariant, "view loss is not finite");
  }
  const double q_min = *std::min_element(losses.begin(), losses.end());
  std::vector<double> w(losses.size(), 0.0);
  if (lambda < kHardMaxLambda) {
    const auto ties = static_cast<double>(std::count(losses.begin(), losses.end(), q_min));
    for (std::size_t i = 0; i < losses.size(); ++i) w[i] = losses[i] == q_min ? 1.0 / ties : 0.0;
    return WeightVector(std::move(w));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    w[i] = std::exp(-(losses[i] - q_min) / lambda);
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return WeightVector(std::move(w));
}

double weighted_loss(std::span<const double> losses, const WeightVector& weights) {
  double sum = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (weights[i] > 0.0) sum += weights[i] * losses[i];
  }
  return sum;
}

double objective(std::span<const double> losses, const WeightVector& weights, double lambda) {
  if (losses.size() != weights.size()) {
    throw Error(ErrorKind::kDimension, "objective: losses and weights differ in length");
  }
  double neg_entropy = 0.0;
  for (const double w : weights.values()) {
    if (w > 0.0) neg_entropy += w * std::log(w);
  }
  return weighted_loss(losses, weights) + lambda * neg_entropy;
}

double objective(const SolverState& state, double lambda) {
  return objective(state.losses, state.weights, lambda);
}

void iterate_once(SolverState& state, std::span<const ViewJoint> views,
                  const SolverConfig& config) {
  row_step(state, views, config.threads);
  column_step(state, views, config.threads);
  state.weights = weight_step(state.losses, config.lambda);
  const int iteration = state.trace.empty() ? 1 : state.trace.back().iteration + 1;
  state.trace.push_back({iteration, objective(state, config.lambda),
                         weighted_loss(state.losses, state.weights),
                         std::vector<double>(state.weights.values().begin(),
                                             state.weights.values().end())});
}

std::pair<int, bool> run_trajectory(SolverState& state, std::span<const ViewJoint> views,
                                    const SolverConfig& config) {
  for (int t = 1; t <= config.max_iter; ++t) {
    const double before = state.trace.back().objective;
    iterate_once(state, views, config);
    const double after = state.trace.back().objective;
    if (std::abs(before - after) <= config.epsilon * std::max(1.0, std::abs(before))) {
      return {t, true};
    }
  }
  return {config.max_iter, false};
}

FitResult fit(const SolverConfig& config, std::span<const ViewJoint> views,
              std::optional<std::span<const std::uint32_t>> labels) {
  check_views(config, views);
  if (labels && labels->size() != views.front().n_rows()) {
    throw Error(ErrorKind::kLength, "expected " + std::to_string(views.front().n_rows()) +
                                        " labels, got " + std::to_string(labels->size()));
  }
  std::optional<FitResult> best;
  for (int r = 0; r < config.restarts; ++r) {
    FitResult candidate;
    candidate.config = config;
    candidate.state = initialize(config, views, r);
    const auto [iterations, converged] = run_trajectory(candidate.state, views, config);
    candidate.iterations = iterations;
    candidate.converged = converged;
    candidate.best_restart = r;
    candidate.best_restart_seed = config.seed + static_cast<std::uint64_t>(r);
    candidate.objective = candidate.state.trace.back().objective;
    if (!best || candidate.objective < best->objective) best = std::move(candidate);
  }
  if (labels) best->metrics = evaluate(best->state.rows.labels(), *labels);
  return std::move(*best);
}

FitResult fit(const SolverConfig& config, std::span<const ViewMatrix> matrices,
              std::optional<std::span<const std::uint32_t>> labels) {
  config.validate();
  std::vector<ViewJoint> views;
  views.reserve(matrices.size());
  for (const auto& m : matrices) views.push_back(normalize(m, config.alpha));
  return fit(config, std::span<const ViewJoint>(views), labels);
}

FitResult fit_itcc(const ViewJoint& view, std::size_t k, std::size_t l,
                   const SolverConfig& base) {
  SolverConfig config = base;
  config.k = k;
  config.l = {l};
  return fit(config, std::span<const ViewJoint>(&view, 1));
}

}  // namespace mvitcc
