#pragma once

// Brute-force verification backend for tiny instances.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvitcc/info.hpp"
#include "mvitcc/solver.hpp"

namespace mvitcc {

inline constexpr double kMaxEnumeration = 1e7;

struct OracleResult {
  double global_min_J = kInfinity;
  RowAssignment rows;
  std::vector<ColumnAssignment> cols;
  WeightVector weights;
  std::vector<double> losses;
  /// Minimizers counted once per relabeling class.
  std::size_t optimum_count = 0;
};

/// Enumerates every row and column assignment, evaluates the objective with
/// closed-form optimal weights and returns the global minimum. Ties go to the
/// lexicographically smallest assignment (rows first, then views in order).
/// Throws kSize when k^n * prod_i l_i^m_i exceeds kMaxEnumeration.
OracleResult exhaustive_min(std::span<const ViewJoint> views, std::size_t k,
                            std::span<const std::size_t> l, double lambda, int threads = 0);

enum class StepKind { kRow, kColumn };

struct BlockwiseVerdict {
  bool pass = true;
  std::string message;
  std::optional<std::size_t> item;
  std::optional<std::size_t> view;
};

/// Re-derives every item's argmin for one assignment step by direct
/// enumeration against summaries rebuilt from `before`, and checks that
/// `after` matches it under the current-cluster-wins tie rule. Items listed
/// in `report` as moved by empty-cluster repair must instead be alone in
/// their new cluster.
BlockwiseVerdict check_blockwise(const SolverState& before, const SolverState& after,
                                 std::span<const ViewJoint> views, StepKind kind,
                                 const StepReport& report);

}  // namespace mvitcc
