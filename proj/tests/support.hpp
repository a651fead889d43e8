#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "planmine/api.hpp"
#include "planmine/clustering.hpp"
#include "planmine/distances.hpp"
#include "planmine/llm.hpp"
#include "planmine/random.hpp"
#include "planmine/store.hpp"

#include "httplib.h"

namespace testsupport {

using planmine::PointSet;

std::filesystem::path fixtures_dir();
std::filesystem::path mock_fixtures();  // the 100-use-case pandas domain
std::filesystem::path binary_path();

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

CommandResult run_command(const std::string& command);
std::string shell_quote(const std::string& s);

// Oracles ---------------------------------------------------------------------

/// Hausdorff by enumerating every pair.
double brute_hausdorff(const PointSet& a, const PointSet& b);

/// Equal-size 1-Wasserstein by trying every permutation (n <= 8).
double brute_wasserstein(const PointSet& a, const PointSet& b);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd m);

/// Mean silhouette straight from the definition.
double brute_silhouette(const PointSet& points, const std::vector<int>& assignments);

PointSet uniform_points(planmine::Rng& rng, int n, int d);
double gaussian(planmine::Rng& rng);

/// `per_cluster` points around each row of `centers`, in blocks.
PointSet gaussian_blobs(planmine::Rng& rng, const PointSet& centers, int per_cluster, double sigma);

/// n points in d dims along three random orthonormal directions with std
/// 5, 4, 3, plus isotropic noise of std 0.2.
PointSet three_direction_data(planmine::Rng& rng, int n, int d);

/// Covariance eigenvalue ratios from the Jacobi oracle, descending.
std::vector<double> covariance_ratios(const PointSet& points);

/// Three centers in a 20x20 box, pairwise at least 5 apart.
PointSet blob_centers(planmine::Rng& rng);

/// Empty when every point sits with its nearest centroid, each centroid is
/// the mean of its members and `inertia` matches; otherwise what failed.
std::string local_optimality_violation(const PointSet& points, const std::vector<int>& assignments,
                                       const PointSet& centroids, double inertia);

// Fixtures ----------------------------------------------------------------------

struct MetricCase {
  const char* name;
  const char* code;
  int loc;
  int cyclomatic;
  int length;      // Halstead N
  int vocabulary;  // Halstead n
  int cognitive;
};

const std::vector<MetricCase>& metric_cases();
double expected_volume(const MetricCase& c);

/// Fifty annotated programs covering zero-comment, consecutive-comment,
/// trailing-blank, CRLF and string-embedded '#' cases.
std::vector<std::string> segmentation_corpus();

// HTTP harness --------------------------------------------------------------------

/// A store, a mock gateway and the API on a loopback port.
class ApiHarness {
 public:
  ApiHarness(const std::filesystem::path& store_path, const std::filesystem::path& fixtures);
  ~ApiHarness();

  planmine::Store& store() { return store_; }
  planmine::Gateway& gateway() { return gateway_; }
  planmine::ApiService& api() { return api_; }
  httplib::Client& client() { return *client_; }
  [[nodiscard]] int port() const { return port_; }

 private:
  planmine::Store store_;
  planmine::Gateway gateway_;
  planmine::ApiService api_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::unique_ptr<httplib::Client> client_;
};

/// Empty when every group lists existing plans of its domain, each plan's
/// group_id agrees with the group listing it, no group is empty and every
/// plan's changeable areas are well formed; otherwise the first violation.
std::string api_integrity_violation(httplib::Client& client, planmine::Id domain_id);

/// Random create/duplicate/edit/delete/group requests, checking integrity
/// after every step. Returns the first violation or unexpected status.
std::string run_api_fuzz(httplib::Client& client, planmine::Id domain_id, std::uint64_t seed, int steps);

/// Runs the mock pipeline for the pandas fixture domain into `store`.
planmine::Id run_fixture_pipeline(planmine::Store& store, std::uint64_t seed = 7);

}  // namespace testsupport
