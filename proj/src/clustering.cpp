#include "planmine/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <Eigen/Eigenvalues>

#include "planmine/error.hpp"
#include "planmine/random.hpp"

namespace planmine {

namespace {

// Cumulative-ratio comparisons tolerate summation error so that a target of
// 1.0 stops at the numerical rank.
constexpr double kRatioSlack = 1e-12;

int nearest_centroid(const PointSet& points, Eigen::Index row, const PointSet& centroids, double* sq_dist) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (points.row(row) - centroids.row(c)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (sq_dist != nullptr) *sq_dist = best_d;
  return best;
}

PointSet seed_plus_plus(const PointSet& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  PointSet centroids(k, points.cols());
  centroids.row(0) = points.row(static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n))));
  std::vector<double> closest(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) closest[i] = (points.row(i) - centroids.row(0)).squaredNorm();

  for (int c = 1; c < k; ++c) {
    const double total = std::accumulate(closest.begin(), closest.end(), 0.0);
    Eigen::Index pick = n - 1;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
    } else {
      const double target = uniform01(rng) * total;
      double running = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        running += closest[i];
        if (running > target && closest[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    centroids.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      closest[i] = std::min(closest[i], (points.row(i) - centroids.row(c)).squaredNorm());
    }
  }
  return centroids;
}

KMeansResult lloyd(const PointSet& points, int k, Rng& rng, const KMeansOptions& options) {
  const Eigen::Index n = points.rows();
  KMeansResult result;
  result.centroids = seed_plus_plus(points, k, rng);
  result.assignments.assign(static_cast<std::size_t>(n), -1);

  for (int iter = 0; iter < options.max_iters; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = nearest_centroid(points, i, result.centroids, nullptr);
      changed |= c != result.assignments[i];
      result.assignments[i] = c;
    }
    if (!changed && iter > 0) break;

    PointSet sums = PointSet::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(result.assignments[i]) += points.row(i);
      ++counts[result.assignments[i]];
    }
    // Repair empty clusters by moving the point farthest from its centroid.
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      Eigen::Index farthest = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (counts[result.assignments[i]] <= 1) continue;
        const double d = (points.row(i) - result.centroids.row(result.assignments[i])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          farthest = i;
        }
      }
      if (farthest < 0) continue;
      const int donor = result.assignments[farthest];
      sums.row(donor) -= points.row(farthest);
      --counts[donor];
      sums.row(c) = points.row(farthest);
      counts[c] = 1;
      result.assignments[farthest] = c;
    }

    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      const Eigen::RowVectorXd updated = sums.row(c) / counts[c];
      shift = std::max(shift, (updated - result.centroids.row(c)).norm());
      result.centroids.row(c) = updated;
    }
    if (shift < options.tol) break;
  }

  result.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double d = 0.0;
    result.assignments[i] = nearest_centroid(points, i, result.centroids, &d);
    result.inertia += d;
  }
  return result;
}

}  // namespace

double PcaModel::retained_ratio() const {
  return std::accumulate(explained_ratios.begin(), explained_ratios.begin() + retained, 0.0);
}

PointSet PcaModel::project(const PointSet& points) const {
  return (points.rowwise() - mean.transpose()) * components.transpose();
}

Eigen::VectorXd PcaModel::project(const Eigen::VectorXd& point) const {
  return components * (point - mean);
}

PcaModel fit_pca(const PointSet& points, double variance_target) {
  require(points.rows() >= 2, "fit_pca: need at least 2 points");
  require(variance_target > 0.0 && variance_target <= 1.0, "fit_pca: variance target must lie in (0, 1]");

  PcaModel model;
  model.mean = points.colwise().mean().transpose();
  const PointSet centered = points.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd covariance =
      (centered.transpose() * centered) / static_cast<double>(points.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
  if (solver.info() != Eigen::Success) fail(ErrorKind::degenerate_data, "fit_pca: eigendecomposition failed");

  // Eigen returns ascending eigenvalues; walk them in descending order.
  const Eigen::Index d = covariance.rows();
  const Eigen::VectorXd& values = solver.eigenvalues();
  const double largest = std::max(values(d - 1), 0.0);
  if (largest <= 0.0) fail(ErrorKind::degenerate_data, "fit_pca: all points are identical");

  std::vector<double> clamped(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    const double value = values(d - 1 - i);
    clamped[i] = value > largest * 1e-12 ? value : 0.0;
  }
  const double total = std::accumulate(clamped.begin(), clamped.end(), 0.0);
  model.explained_ratios.reserve(clamped.size());
  for (const double value : clamped) model.explained_ratios.push_back(value / total);

  double cumulative = 0.0;
  int retained = 0;
  while (retained < d) {
    cumulative += model.explained_ratios[retained];
    ++retained;
    if (cumulative >= variance_target - kRatioSlack) break;
  }
  model.retained = retained;

  model.components.resize(retained, d);
  for (int r = 0; r < retained; ++r) {
    Eigen::VectorXd axis = solver.eigenvectors().col(d - 1 - r);
    Eigen::Index argmax = 0;
    axis.cwiseAbs().maxCoeff(&argmax);
    if (axis(argmax) < 0.0) axis = -axis;
    model.components.row(r) = axis.transpose();
  }
  return model;
}

KMeansResult kmeans(const PointSet& points, int k, std::uint64_t seed, const KMeansOptions& options) {
  require(k >= 1, "kmeans: k must be >= 1");
  require(k <= points.rows(), "kmeans: k exceeds the number of points");
  require(options.n_init >= 1 && options.max_iters >= 1, "kmeans: n_init and max_iters must be >= 1");

  Rng rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int run = 0; run < options.n_init; ++run) {
    KMeansResult candidate = lloyd(points, k, rng, options);
    if (candidate.inertia < best.inertia) best = std::move(candidate);
  }
  return best;
}

double mean_silhouette(const PointSet& points, const std::vector<int>& assignments) {
  require(static_cast<Eigen::Index>(assignments.size()) == points.rows(),
          "mean_silhouette: one assignment per point required");
  require(!assignments.empty(), "mean_silhouette: no points");
  const int labels = *std::max_element(assignments.begin(), assignments.end()) + 1;
  std::vector<int> sizes(static_cast<std::size_t>(labels), 0);
  for (const int a : assignments) {
    require(a >= 0, "mean_silhouette: negative cluster label");
    ++sizes[a];
  }
  const auto populated = std::count_if(sizes.begin(), sizes.end(), [](int s) { return s > 0; });
  require(populated >= 2, "mean_silhouette: need at least two non-empty clusters");

  const Eigen::Index n = points.rows();
  double total = 0.0;
  std::vector<double> sums(static_cast<std::size_t>(labels));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int own = assignments[i];
    if (sizes[own] == 1) continue;  // singleton contributes 0
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) sums[assignments[j]] += (points.row(i) - points.row(j)).norm();
    }
    const double a = sums[own] / (sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < labels; ++c) {
      if (c != own && sizes[c] > 0) b = std::min(b, sums[c] / sizes[c]);
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

ClusteringResult select_k_and_cluster(const PointSet& points, const PipelineConfig& config) {
  config.validate();
  const auto n = static_cast<int>(points.rows());
  require(n >= config.k_min + 1, "select_k_and_cluster: need at least k_min + 1 points");
  const int k_hi = std::min(config.k_max, n - 1);
  const KMeansOptions options{config.n_init, config.max_iters, config.tol};

  ClusteringResult best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int k = config.k_min; k <= k_hi; ++k) {
    KMeansResult run = kmeans(points, k, config.seed, options);
    const auto distinct = std::set<int>(run.assignments.begin(), run.assignments.end()).size();
    const double score = distinct >= 2 ? mean_silhouette(points, run.assignments) : -1.0;
    best.silhouettes.emplace_back(k, score);
    if (score > best_score) {
      best_score = score;
      best.k = k;
      best.assignments = std::move(run.assignments);
      best.centroids = std::move(run.centroids);
      best.inertia = run.inertia;
    }
  }
  return best;
}

PointSet to_point_set(const std::vector<Vector>& vectors) {
  if (vectors.empty()) return PointSet(0, 0);
  const auto dim = static_cast<Eigen::Index>(vectors.front().dim());
  PointSet points(static_cast<Eigen::Index>(vectors.size()), dim);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    require(static_cast<Eigen::Index>(vectors[i].dim()) == dim, "vectors must share a dimension");
    for (Eigen::Index j = 0; j < dim; ++j) points(static_cast<Eigen::Index>(i), j) = vectors[i].values[j];
  }
  return points;
}

}  // namespace planmine
