#include "mvitcc/oracle.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

namespace mvitcc {

namespace {

struct Layout {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::size_t> m;
  std::vector<std::size_t> l;
};

// Mixed-radix decode; the first sample is the most significant digit, so
// increasing index means lexicographically increasing assignments.
void decode(std::uint64_t index, const Layout& layout, std::vector<std::uint32_t>& rows,
            std::vector<std::vector<std::uint32_t>>& cols) {
  for (std::size_t v = layout.m.size(); v-- > 0;) {
    for (std::size_t y = layout.m[v]; y-- > 0;) {
      cols[v][y] = static_cast<std::uint32_t>(index % layout.l[v]);
      index /= layout.l[v];
    }
  }
  for (std::size_t x = layout.n; x-- > 0;) {
    rows[x] = static_cast<std::uint32_t>(index % layout.k);
    index /= layout.k;
  }
}

bool canonical(std::span<const std::uint32_t> labels) {
  std::int64_t highest = -1;
  for (const auto c : labels) {
    if (static_cast<std::int64_t>(c) > highest + 1) return false;
    highest = std::max<std::int64_t>(highest, c);
  }
  return true;
}

struct Evaluation {
  double objective = kInfinity;
  std::vector<double> losses;
  WeightVector weights;
};

Evaluation evaluate_config(std::span<const ViewJoint> views, const Layout& layout,
                           const std::vector<std::uint32_t>& rows,
                           const std::vector<std::vector<std::uint32_t>>& cols, double lambda) {
  Evaluation e;
  const RowAssignment row_assign(rows, layout.k);
  e.losses.resize(views.size());
  for (std::size_t v = 0; v < views.size(); ++v) {
    const ColumnAssignment col_assign(cols[v], layout.l[v]);
    e.losses[v] = view_loss(views[v], build_summary(views[v], row_assign, col_assign));
  }
  e.weights = weight_step(e.losses, lambda);
  e.objective = objective(e.losses, e.weights, lambda);
  return e;
}

// p(item) * D(p(. | item) || q_candidate), evaluated densely.
double direct_cost(std::span<const double> profile, double mass,
                   std::span<const double> candidate_profile) {
  if (mass == 0.0) return 0.0;
  double total = 0.0;
  for (const double v : candidate_profile) total += v;
  if (total == 0.0) return kInfinity;  // empty candidate cluster
  return mass * kl_divergence(profile, candidate_profile);
}

// Frozen-summary profiles p_hat(Y | x_hat = c) and p_hat(X | y_hat = c).
std::vector<double> row_profile(const CoclusterSummary& s, std::span<const double> py,
                                std::size_t c) {
  std::vector<double> q(py.size(), 0.0);
  const double pc = s.row_cluster_mass[c];
  if (pc == 0.0) return q;
  for (std::size_t y = 0; y < py.size(); ++y) {
    const double pyh = s.col_cluster_mass[s.col_of[y]];
    if (pyh == 0.0) continue;
    q[y] = (py[y] / pyh) * (s.block_mass(c, s.col_of[y]) / pc);
  }
  return q;
}

std::vector<double> col_profile(const CoclusterSummary& s, std::span<const double> px,
                                std::size_t c) {
  std::vector<double> q(px.size(), 0.0);
  const double pc = s.col_cluster_mass[c];
  if (pc == 0.0) return q;
  for (std::size_t x = 0; x < px.size(); ++x) {
    const double pxh = s.row_cluster_mass[s.row_of[x]];
    if (pxh == 0.0) continue;
    q[x] = (px[x] / pxh) * (s.block_mass(s.row_of[x], c) / pc);
  }
  return q;
}

std::size_t expected_choice(std::span<const double> costs, std::size_t current, double scale) {
  double best = kInfinity;
  for (const double c : costs) best = std::min(best, c);
  const double limit = best + kTieTolerance * scale;
  if (costs[current] <= limit) return current;
  for (std::size_t c = 0; c < costs.size(); ++c) {
    if (costs[c] <= limit) return c;
  }
  return current;
}

template <class Assign>
bool alone(const Assign& assign, std::size_t item) {
  const auto sizes = assign.cluster_sizes();
  return sizes[assign[item]] == 1;
}

}  // namespace

OracleResult exhaustive_min(std::span<const ViewJoint> views, std::size_t k,
                            std::span<const std::size_t> l, double lambda, int threads) {
  if (views.empty() || l.size() != views.size()) {
    throw Error(ErrorKind::kDomain, "exhaustive_min: one feature-cluster count per view required");
  }
  if (k == 0 || !(lambda > 0.0)) throw Error(ErrorKind::kDomain, "exhaustive_min: bad k or lambda");
  Layout layout;
  layout.n = views.front().n_rows();
  layout.k = k;
  double size = std::pow(static_cast<double>(k), static_cast<double>(layout.n));
  for (std::size_t v = 0; v < views.size(); ++v) {
    if (views[v].n_rows() != layout.n) {
      throw Error(ErrorKind::kConsistency, "exhaustive_min: views disagree on sample count");
    }
    if (l[v] == 0) throw Error(ErrorKind::kDomain, "exhaustive_min: bad l");
    layout.m.push_back(views[v].n_cols());
    layout.l.push_back(l[v]);
    size *= std::pow(static_cast<double>(l[v]), static_cast<double>(views[v].n_cols()));
  }
  if (size > kMaxEnumeration) {
    throw Error(ErrorKind::kSize, "exhaustive_min: search space of " + std::to_string(size) +
                                      " assignments exceeds the limit");
  }
  const auto total = static_cast<std::uint64_t>(size);
  const int workers = threads > 0 ? threads : omp_get_max_threads();

  double best_j = kInfinity;
  std::uint64_t best_index = total;

#pragma omp parallel num_threads(workers)
  {
    std::vector<std::uint32_t> rows(layout.n);
    std::vector<std::vector<std::uint32_t>> cols(views.size());
    for (std::size_t v = 0; v < views.size(); ++v) cols[v].resize(layout.m[v]);
    double local_j = kInfinity;
    std::uint64_t local_index = total;
#pragma omp for schedule(static)
    for (std::uint64_t index = 0; index < total; ++index) {
      decode(index, layout, rows, cols);
      const double j = evaluate_config(views, layout, rows, cols, lambda).objective;
      if (j < local_j) {
        local_j = j;
        local_index = index;
      }
    }
#pragma omp critical
    {
      if (local_j < best_j || (local_j == best_j && local_index < best_index)) {
        best_j = local_j;
        best_index = local_index;
      }
    }
  }

  const double tolerance = 1e-12 * std::max(1.0, std::abs(best_j));
  std::size_t count = 0;
#pragma omp parallel num_threads(workers) reduction(+ : count)
  {
    std::vector<std::uint32_t> rows(layout.n);
    std::vector<std::vector<std::uint32_t>> cols(views.size());
    for (std::size_t v = 0; v < views.size(); ++v) cols[v].resize(layout.m[v]);
#pragma omp for schedule(static)
    for (std::uint64_t index = 0; index < total; ++index) {
      decode(index, layout, rows, cols);
      bool is_canonical = canonical(rows);
      for (std::size_t v = 0; v < views.size() && is_canonical; ++v) {
        is_canonical = canonical(cols[v]);
      }
      if (!is_canonical) continue;
      if (evaluate_config(views, layout, rows, cols, lambda).objective <= best_j + tolerance) {
        ++count;
      }
    }
  }

  std::vector<std::uint32_t> rows(layout.n);
  std::vector<std::vector<std::uint32_t>> cols(views.size());
  for (std::size_t v = 0; v < views.size(); ++v) cols[v].resize(layout.m[v]);
  decode(best_index, layout, rows, cols);
  auto best = evaluate_config(views, layout, rows, cols, lambda);

  OracleResult result;
  result.global_min_J = best.objective;
  result.rows = RowAssignment(rows, k);
  for (std::size_t v = 0; v < views.size(); ++v) result.cols.emplace_back(cols[v], layout.l[v]);
  result.weights = std::move(best.weights);
  result.losses = std::move(best.losses);
  result.optimum_count = count;
  return result;
}

BlockwiseVerdict check_blockwise(const SolverState& before, const SolverState& after,
                                 std::span<const ViewJoint> views, StepKind kind,
                                 const StepReport& report) {
  BlockwiseVerdict verdict;
  const auto fail = [&](std::string message, std::size_t item, std::optional<std::size_t> view) {
    verdict.pass = false;
    verdict.message = std::move(message);
    verdict.item = item;
    verdict.view = view;
    return verdict;
  };

  if (kind == StepKind::kRow) {
    const std::size_t n = before.rows.size();
    const std::size_t k = before.rows.clusters();
    std::vector<CoclusterSummary> frozen;
    std::vector<std::vector<std::vector<double>>> dense;
    std::vector<std::vector<std::vector<double>>> profiles(views.size());
    for (std::size_t v = 0; v < views.size(); ++v) {
      frozen.push_back(build_summary(views[v], before.rows, before.cols[v]));
      dense.push_back(views[v].to_dense());
      for (std::size_t c = 0; c < k; ++c) {
        profiles[v].push_back(row_profile(frozen[v], views[v].marginal_y(), c));
      }
    }
    for (std::size_t x = 0; x < n; ++x) {
      if (std::find(report.items.begin(), report.items.end(), x) != report.items.end()) {
        if (!alone(after.rows, x)) {
          return fail("sample " + std::to_string(x) + " was repaired but is not alone in cluster " +
                          std::to_string(after.rows[x]),
                      x, std::nullopt);
        }
        continue;
      }
      std::vector<double> costs(k, 0.0);
      double scale = 0.0;
      for (std::size_t v = 0; v < views.size(); ++v) {
        const double w = before.weights[v];
        if (w == 0.0) continue;
        const double px = views[v].marginal_x()[x];
        scale += w * px;
        std::vector<double> conditional(dense[v][x]);
        if (px > 0.0) {
          for (double& value : conditional) value /= px;
        }
        for (std::size_t c = 0; c < k; ++c) {
          costs[c] += w * direct_cost(conditional, px, profiles[v][c]);
        }
      }
      const std::size_t expected = expected_choice(costs, before.rows[x], scale);
      if (after.rows[x] != expected) {
        return fail("sample " + std::to_string(x) + ": assigned to cluster " +
                        std::to_string(after.rows[x]) + ", argmin is cluster " +
                        std::to_string(expected),
                    x, std::nullopt);
      }
    }
    return verdict;
  }

  for (std::size_t v = 0; v < views.size(); ++v) {
    const std::size_t m = before.cols[v].size();
    const std::size_t l = before.cols[v].clusters();
    const CoclusterSummary frozen = build_summary(views[v], before.rows, before.cols[v]);
    const auto joint = views[v].to_dense();
    std::vector<std::vector<double>> profiles;
    for (std::size_t c = 0; c < l; ++c) {
      profiles.push_back(col_profile(frozen, views[v].marginal_x(), c));
    }
    const std::vector<std::size_t> repaired =
        v < report.per_view.size() ? report.per_view[v] : std::vector<std::size_t>{};
    for (std::size_t y = 0; y < m; ++y) {
      if (std::find(repaired.begin(), repaired.end(), y) != repaired.end()) {
        if (!alone(after.cols[v], y)) {
          return fail("feature " + std::to_string(y) + " was repaired but is not alone", y, v);
        }
        continue;
      }
      const double py = views[v].marginal_y()[y];
      std::vector<double> conditional(joint.size());
      for (std::size_t x = 0; x < joint.size(); ++x) {
        conditional[x] = py > 0.0 ? joint[x][y] / py : 0.0;
      }
      std::vector<double> costs(l);
      for (std::size_t c = 0; c < l; ++c) costs[c] = direct_cost(conditional, py, profiles[c]);
      const std::size_t expected = expected_choice(costs, before.cols[v][y], py);
      if (after.cols[v][y] != expected) {
        return fail("view " + std::to_string(v) + " feature " + std::to_string(y) +
                        ": assigned to cluster " + std::to_string(after.cols[v][y]) +
                        ", argmin is cluster " + std::to_string(expected),
                    y, v);
      }
    }
  }
  return verdict;
}

}  // namespace mvitcc
