#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "planmine/distances.hpp"
#include "planmine/types.hpp"

namespace planmine {

/// Principal components of a point set, truncated to the smallest count
/// whose cumulative explained-variance ratio reaches the target.
struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;            // m x d, orthonormal rows
  std::vector<double> explained_ratios;  // all components, descending
  int retained = 0;                      // m

  [[nodiscard]] double retained_ratio() const;
  [[nodiscard]] PointSet project(const PointSet& points) const;
  [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& point) const;
};

/// Requires >= 2 points. Every component is sign-normalised so that its
/// largest-magnitude entry is positive. Identical points throw
/// ErrorKind::degenerate_data.
[[nodiscard]] PcaModel fit_pca(const PointSet& points, double variance_target);

struct KMeansOptions {
  int n_init = 10;
  int max_iters = 300;
  double tol = 1e-6;
};

struct KMeansResult {
  std::vector<int> assignments;
  PointSet centroids;  // k x d
  double inertia = 0.0;
};

/// k-means++ seeding, Lloyd iterations, best of n_init restarts by inertia.
/// On return each point is assigned to its nearest centroid (ties to the
/// lower cluster index) and inertia is measured against those centroids.
[[nodiscard]] KMeansResult kmeans(const PointSet& points, int k, std::uint64_t seed,
                                  const KMeansOptions& options = {});

/// Mean silhouette over all points. Singleton clusters score 0, as does a
/// point whose a and b are both 0. Needs at least two non-empty clusters.
[[nodiscard]] double mean_silhouette(const PointSet& points, const std::vector<int>& assignments);

struct ClusteringResult {
  int k = 0;
  std::vector<int> assignments;
  PointSet centroids;
  std::vector<std::pair<int, double>> silhouettes;  // (k, mean silhouette) per tried k
  double inertia = 0.0;
};

/// Tries every k in [k_min, min(k_max, n - 1)] and keeps the one with the
/// highest mean silhouette; ties go to the smaller k.
[[nodiscard]] ClusteringResult select_k_and_cluster(const PointSet& points, const PipelineConfig& config);

[[nodiscard]] PointSet to_point_set(const std::vector<Vector>& vectors);

}  // namespace planmine
