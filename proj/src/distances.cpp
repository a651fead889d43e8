#include "planmine/distances.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "planmine/error.hpp"
#include "planmine/random.hpp"

namespace planmine {

namespace {

void check_sets(const PointSet& a, const PointSet& b, const char* what) {
  require(a.rows() > 0 && b.rows() > 0, std::string(what) + ": point sets must be non-empty");
  require(a.cols() == b.cols(), std::string(what) + ": point sets must share a dimension");
}

double directed_hausdorff(const PointSet& from, const PointSet& to) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < from.rows(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < to.rows() && nearest > worst; ++j) {
      nearest = std::min(nearest, (from.row(i) - to.row(j)).squaredNorm());
    }
    worst = std::max(worst, nearest);
  }
  return std::sqrt(worst);
}

Eigen::MatrixXd pairwise_distances(const PointSet& a, const PointSet& b) {
  Eigen::MatrixXd cost(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) cost(i, j) = (a.row(i) - b.row(j)).norm();
  }
  return cost;
}

double exact_transport(const PointSet& a, const PointSet& b) {
  const Eigen::MatrixXd cost = pairwise_distances(a, b);
  const auto match = solve_assignment(cost);
  double total = 0.0;
  for (std::size_t i = 0; i < match.size(); ++i) total += cost(static_cast<Eigen::Index>(i), match[i]);
  return total / static_cast<double>(match.size());
}

PointSet subsample(const PointSet& points, Eigen::Index size, Rng& rng) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), 0);
  for (Eigen::Index i = 0; i < size; ++i) {  // partial Fisher-Yates
    const auto remaining = static_cast<std::uint64_t>(points.rows() - i);
    const auto pick = i + static_cast<Eigen::Index>(uniform_index(rng, remaining));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick)]);
  }
  PointSet out(size, points.cols());
  for (Eigen::Index i = 0; i < size; ++i) out.row(i) = points.row(order[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

double hausdorff(const PointSet& a, const PointSet& b) {
  check_sets(a, b, "hausdorff");
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  require(cost.rows() == cost.cols(), "assignment: cost matrix must be square");
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // Potentials u (rows), v (columns); p[j] = row matched to column j; all 1-based
  // with column 0 as the virtual start.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int row = 1; row <= n; ++row) {
    p[0] = row;
    int col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const int i0 = p[col0];
      double delta = inf;
      int col1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (reduced < minv[j]) {
          minv[j] = reduced;
          way[j] = col0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          col1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      col0 = col1;
    } while (p[col0] != 0);
    do {
      const int col1 = way[col0];
      p[col0] = p[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) assignment[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  return assignment;
}

double wasserstein(const PointSet& a, const PointSet& b, const WassersteinOptions& options) {
  check_sets(a, b, "wasserstein");
  require(options.assignment_limit >= 1, "wasserstein: assignment_limit must be >= 1");
  require(options.resamples >= 1, "wasserstein: resamples must be >= 1");
  const auto limit = static_cast<Eigen::Index>(options.assignment_limit);
  const Eigen::Index size = std::min({a.rows(), b.rows(), limit});
  if (a.rows() == size && b.rows() == size) return exact_transport(a, b);

  Rng rng(options.seed);
  double sum = 0.0;
  for (int draw = 0; draw < options.resamples; ++draw) {
    const PointSet sa = a.rows() > size ? subsample(a, size, rng) : a;
    const PointSet sb = b.rows() > size ? subsample(b, size, rng) : b;
    sum += exact_transport(sa, sb);
  }
  return sum / options.resamples;
}

}  // namespace planmine
