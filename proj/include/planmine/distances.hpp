#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace planmine {

/// Point sets are row-major: one point per row.
using PointSet = Eigen::MatrixXd;

/// Symmetric Hausdorff distance max(h(A,B), h(B,A)) under the Euclidean
/// norm. Both sets must be non-empty with equal dimension.
[[nodiscard]] double hausdorff(const PointSet& a, const PointSet& b);

/// Minimum-cost perfect matching on a square cost matrix (Hungarian
/// method, O(n^3)). Returns assignment[row] = column.
[[nodiscard]] std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

struct WassersteinOptions {
  std::size_t assignment_limit = 256;
  int resamples = 10;
  std::uint64_t seed = 0;
};

/// Uniform-weight 1-Wasserstein distance between two empirical
/// distributions. Equal sizes within the assignment limit are solved
/// exactly. Otherwise every set larger than min(|A|, |B|, limit) is
/// uniformly subsampled to that size, each draw is solved exactly, and the
/// result is the mean over `resamples` draws.
[[nodiscard]] double wasserstein(const PointSet& a, const PointSet& b,
                                 const WassersteinOptions& options = {});

}  // namespace planmine
