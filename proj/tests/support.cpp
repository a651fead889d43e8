#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <optional>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "planmine/embedding.hpp"
#include "planmine/pipeline.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using namespace planmine;

fs::path fixtures_dir() { return PLANMINE_FIXTURES; }
fs::path mock_fixtures() { return fixtures_dir() / "mock_pandas"; }
fs::path binary_path() { return PLANMINE_BINARY; }

TempDir::TempDir() {
  std::string pattern = (fs::temp_directory_path() / "planmine-test-XXXXXX").string();
  if (mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

CommandResult run_command(const std::string& command) {
  CommandResult result;
  FILE* pipe = popen((command + " 2>&1").c_str(), "r");
  if (pipe == nullptr) return result;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) result.output.append(buf, n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (const char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

// Oracles ---------------------------------------------------------------------

double brute_hausdorff(const PointSet& a, const PointSet& b) {
  auto directed = [](const PointSet& from, const PointSet& to) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < from.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < to.rows(); ++j) {
        double sum = 0.0;
        for (Eigen::Index k = 0; k < from.cols(); ++k) sum += (from(i, k) - to(j, k)) * (from(i, k) - to(j, k));
        best = std::min(best, std::sqrt(sum));
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

double brute_wasserstein(const PointSet& a, const PointSet& b) {
  const auto n = static_cast<int>(a.rows());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double sum = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) {
        const double diff = a(i, k) - b(perm[static_cast<std::size_t>(i)], k);
        sum += diff * diff;
      }
      total += std::sqrt(sum);
    }
    best = std::min(best, total / n);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd m) {
  const Eigen::Index n = m.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
    }
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(m(p, q)) < 1e-300) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double mkp = m(k, p);
          const double mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double mpk = m(p, k);
          const double mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
      }
    }
  }
  std::vector<double> values(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) values[static_cast<std::size_t>(i)] = m(i, i);
  std::sort(values.rbegin(), values.rend());
  return values;
}

double brute_silhouette(const PointSet& points, const std::vector<int>& assignments) {
  const auto n = static_cast<std::size_t>(points.rows());
  auto dist = [&](std::size_t i, std::size_t j) {
    return (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j))).norm();
  };
  const int k = *std::max_element(assignments.begin(), assignments.end()) + 1;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sum[static_cast<std::size_t>(assignments[j])] += dist(i, j);
      ++count[static_cast<std::size_t>(assignments[j])];
    }
    const auto own = static_cast<std::size_t>(assignments[i]);
    if (count[own] == 0) continue;  // singleton scores 0
    const double a = sum[own] / count[own];
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (c != own && count[c] > 0) b = std::min(b, sum[c] / count[c]);
    }
    const double denom = std::max(a, b);
    if (denom > 0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

PointSet uniform_points(Rng& rng, int n, int d) {
  PointSet p(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) p(i, j) = uniform01(rng) * 2.0 - 1.0;
  }
  return p;
}

double gaussian(Rng& rng) {
  double u = uniform01(rng);
  while (u <= 0.0) u = uniform01(rng);
  const double v = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

PointSet gaussian_blobs(Rng& rng, const PointSet& centers, int per_cluster, double sigma) {
  PointSet p(centers.rows() * per_cluster, centers.cols());
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    for (int i = 0; i < per_cluster; ++i) {
      for (Eigen::Index j = 0; j < centers.cols(); ++j) {
        p(c * per_cluster + i, j) = centers(c, j) + sigma * gaussian(rng);
      }
    }
  }
  return p;
}

// Fixtures ------------------------------------------------------------------------

const std::vector<MetricCase>& metric_cases() {
  static const std::vector<MetricCase> cases = {
      {"assignment", "x = 1", 1, 1, 3, 3, 0},
      {"boolean if", "if a and b or c:\n    pass\n", 2, 4, 8, 8, 3},
      {"call", "print(\"hi\")", 1, 1, 4, 4, 0},
      {"comment only", "# just a comment\n\n", 0, 1, 0, 0, 0},
      {"for loop", "for i in range(10):\n    total = total + i\n", 2, 2, 13, 11, 1},
      {"while loop", "while x > 0:\n    x -= 1\n", 2, 2, 8, 7, 1},
      {"nested if in for", "for row in rows:\n    if row:\n        print(row)\n", 3, 3, 12, 9, 3},
      {"elif chain", "if x:\n    y = 1\nelif z:\n    y = 2\nelse:\n    y = 3\n", 6, 3, 17, 11, 3},
      {"try except", "try:\n    f()\nexcept ValueError:\n    g()\n", 4, 2, 11, 8, 1},
      {"function", "def add(a, b):\n    return a + b\n", 2, 1, 12, 10, 0},
      {"keywords in string", "s = \"if and or while\"", 1, 1, 3, 3, 0},
      {"keywords in comment", "x = 2  # if a or b\n", 1, 1, 3, 3, 0},
      {"method calls", "df = pd.read_csv(\"a.csv\")\ndf.head()\n", 2, 1, 13, 9, 0},
      {"deep nesting",
       "for a in b:\n    for c in a:\n        while c:\n            if c and a:\n                c = c - 1\n", 5, 6,
       23, 12, 11},
      {"blank lines", "# header\n\nx = 1\n\n# trailing\n", 1, 1, 3, 3, 0},
      {"boolean chain", "ok = a and b and c or d", 1, 4, 9, 8, 3},
      {"comprehension", "squares = [n * n for n in nums if n > 0]", 1, 3, 15, 12, 0},
      {"if else in for", "for x in xs:\n    if x:\n        pass\n    else:\n        break\n", 5, 3, 12, 9, 4},
      {"class", "class A:\n    def f(self):\n        return self.x\n", 3, 1, 13, 11, 0},
      {"while try", "while True:\n    try:\n        step()\n    except Exception:\n        break\n", 5, 3, 12, 10, 3},
  };
  return cases;
}

double expected_volume(const MetricCase& c) {
  return c.vocabulary == 0 ? 0.0 : c.length * std::log2(static_cast<double>(c.vocabulary));
}

std::vector<std::string> segmentation_corpus() {
  std::vector<std::string> corpus = {
      "",
      "x = 1",
      "x = 1\n",
      "import os\nprint(os.getcwd())\n",
      "# only a comment\n",
      "# one\n# two\n",
      "\n\n\n",
      "# Load\ndf = load()\n",
      "# Load\n# the data\ndf = load()\n\n# Show\nprint(df)\n",
      "import pandas as pd\n\n# Read\ndf = pd.read_csv('a.csv')\n",
      "# Step one\nx = 1\n# Step two\ny = 2\n# Step three\nz = 3",
      "# Read\ndf = read()\n\n\n\n",
      "# Read\ndf = read()\n# trailing comment\n",
      "# Read\ndf = read()\n# trailing comment\n\n\n",
      "# Windows\r\nx = 1\r\n# lines\r\ny = 2\r\n",
      "s = \"# not a comment\"\n# real\nt = s\n",
      "doc = \"\"\"\n# inside a docstring\n\"\"\"\n# after\nprint(doc)\n",
      "def f():\n    # inner goal\n    return 1\n\n# outer goal\nf()\n",
      "# Goal with trailing spaces   \n\n\nx = 1\n",
      "#no space after marker\nvalue = 3\n",
      "x = 1  # inline comment\n# boundary\ny = 2\n",
      "# Émoji ✓ goal\nname = \"ünïcode\"\n",
      "for i in range(3):\n    # loop body\n    print(i)\n",
      "# Unterminated string next\ns = 'abc\n",
      "\t# tabbed comment\n\tx = 1\n",
  };
  // Seeded random assemblies of the same kinds of lines.
  const std::vector<std::string> pool = {"# subgoal", "# another subgoal", "x = 1", "    y = f(x)",
                                          "print('# hash in string')", "", "   ", "if x:", "    pass",
                                          "z = [i for i in range(3)]  # inline", "'''", "text # maybe"};
  Rng rng(20240611);
  while (corpus.size() < 50) {
    std::string program;
    const auto lines = 1 + uniform_index(rng, 14);
    for (std::uint64_t i = 0; i < lines; ++i) {
      program += pool[uniform_index(rng, pool.size())];
      const auto ending = uniform_index(rng, 10);
      program += ending == 0 ? "\r\n" : "\n";
    }
    if (uniform_index(rng, 3) == 0 && !program.empty()) program.pop_back();  // no final newline
    const auto trailing = uniform_index(rng, 4);
    for (std::uint64_t i = 0; i < trailing; ++i) program += "\n";
    corpus.push_back(std::move(program));
  }
  return corpus;
}

// HTTP harness ----------------------------------------------------------------------

ApiHarness::ApiHarness(const fs::path& store_path, const fs::path& fixtures)
    : store_(store_path),
      gateway_(std::make_shared<MockProvider>(fixtures), GatewayOptions{4, 0, std::chrono::milliseconds(1)}),
      api_(store_, gateway_) {
  api_.install(server_);
  port_ = server_.bind_to_any_port("127.0.0.1");
  thread_ = std::thread([this] { server_.listen_after_bind(); });
  server_.wait_until_ready();
  client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  client_->set_keep_alive(true);
  client_->set_tcp_nodelay(true);
}

ApiHarness::~ApiHarness() {
  client_.reset();
  server_.stop();
  thread_.join();
}

Id run_fixture_pipeline(Store& store, std::uint64_t seed) {
  Gateway gateway(std::make_shared<MockProvider>(mock_fixtures()));
  HashingEmbedder embedder;
  PipelineOptions options;
  options.domain_name = "pandas-basics";
  options.library = "pandas";
  options.config.seed = seed;
  return run_pipeline(store, gateway, embedder, options).domain_id;
}

// n points in d dims: three latent directions with std 5, 4, 3 plus
// isotropic noise of std 0.2.
PointSet three_direction_data(Rng& rng, int n, int d) {
  Eigen::MatrixXd basis(d, 3);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < 3; ++j) basis(i, j) = gaussian(rng);
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, 3);
  const double scale[3] = {5.0, 4.0, 3.0};
  PointSet points(n, d);
  for (int r = 0; r < n; ++r) {
    Eigen::VectorXd p = Eigen::VectorXd::Constant(d, 1.5);
    for (int j = 0; j < 3; ++j) p += scale[j] * gaussian(rng) * q.col(j);
    for (int i = 0; i < d; ++i) p(i) += 0.2 * gaussian(rng);
    points.row(r) = p.transpose();
  }
  return points;
}

std::vector<double> covariance_ratios(const PointSet& points) {
  const Eigen::RowVectorXd mean = points.colwise().mean();
  const Eigen::MatrixXd centered = points.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(points.rows() - 1);
  auto values = jacobi_eigenvalues(cov);
  double total = 0.0;
  for (double v : values) total += v;
  for (double& v : values) v /= total;
  return values;
}

PointSet blob_centers(Rng& rng) {
  // Random centers in a 20x20 box, redrawn until pairwise >= 5 apart.
  while (true) {
    PointSet c(3, 2);
    for (int i = 0; i < 3; ++i) {
      c(i, 0) = uniform01(rng) * 20.0;
      c(i, 1) = uniform01(rng) * 20.0;
    }
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) ok = ok && (c.row(i) - c.row(j)).norm() >= 5.0;
    }
    if (ok) return c;
  }
}

std::string local_optimality_violation(const PointSet& points, const std::vector<int>& assignments,
                                       const PointSet& centroids, double inertia) {
  const auto k = centroids.rows();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const int own = assignments[static_cast<std::size_t>(i)];
    const double d_own = (points.row(i) - centroids.row(own)).squaredNorm();
    for (Eigen::Index c = 0; c < k; ++c) {
      if ((points.row(i) - centroids.row(c)).squaredNorm() + 1e-12 < d_own) {
        return "point " + std::to_string(i) + " is closer to another centroid";
      }
    }
    sums.row(own) += points.row(i);
    ++counts[static_cast<std::size_t>(own)];
    total += d_own;
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) return "cluster " + std::to_string(c) + " is empty";
    const Eigen::RowVectorXd mean = sums.row(c) / counts[static_cast<std::size_t>(c)];
    if ((mean - centroids.row(c)).norm() > 1e-9) return "centroid " + std::to_string(c) + " is not its members' mean";
  }
  if (std::abs(total - inertia) > 1e-9 * std::max(1.0, total)) return "reported inertia differs from the recomputed one";
  return {};
}

namespace {

using nlohmann::json;

std::optional<json> get_json(httplib::Client& client, const std::string& path) {
  const auto res = client.Get(path);
  if (!res || res->status != 200) return std::nullopt;
  return json::parse(res->body);
}

std::string integrity_of(const json& plans, const json& groups, Id domain_id) {
  std::map<Id, std::optional<Id>> plan_group;
  for (const auto& p : plans) {
    const Id id = p["id"].get<Id>();
    if (p["domain_id"].get<Id>() != domain_id) return "plan " + std::to_string(id) + " is in another domain";
    plan_group[id] = p["group_id"].is_null() ? std::nullopt : std::optional<Id>(p["group_id"].get<Id>());
    const auto solution = p["solution"].get<std::string>();
    std::size_t last_end = 0;
    for (const auto& a : p["changeable_areas"]) {
      const auto start = a["start"].get<std::size_t>();
      const auto end = a["end"].get<std::size_t>();
      if (start >= end || end > solution.size() || start < last_end) {
        return "plan " + std::to_string(id) + " has a malformed changeable area";
      }
      last_end = end;
    }
  }
  std::map<Id, Id> listed;
  for (const auto& g : groups) {
    const Id gid = g["id"].get<Id>();
    if (g["plan_ids"].empty()) return "group " + std::to_string(gid) + " is empty";
    for (const auto& pid_json : g["plan_ids"]) {
      const Id pid = pid_json.get<Id>();
      const auto it = plan_group.find(pid);
      if (it == plan_group.end()) return "group " + std::to_string(gid) + " lists missing plan " + std::to_string(pid);
      if (it->second != gid) return "plan " + std::to_string(pid) + " does not point back at group " + std::to_string(gid);
      if (!listed.emplace(pid, gid).second) return "plan " + std::to_string(pid) + " is listed twice";
    }
  }
  for (const auto& [pid, gid] : plan_group) {
    if (gid && !listed.contains(pid)) return "plan " + std::to_string(pid) + " points at a group that does not list it";
  }
  return {};
}

}  // namespace

std::string api_integrity_violation(httplib::Client& client, Id domain_id) {
  const auto base = "/domains/" + std::to_string(domain_id);
  const auto plans = get_json(client, base + "/plans");
  const auto groups = get_json(client, base + "/groups");
  if (!plans || !groups) return "listing failed";
  return integrity_of(*plans, *groups, domain_id);
}

std::string run_api_fuzz(httplib::Client& client, Id domain_id, std::uint64_t seed, int steps) {
  Rng rng(seed);
  const auto base = "/domains/" + std::to_string(domain_id);
  const auto programs = get_json(client, base + "/programs");
  const auto candidates = get_json(client, base + "/candidates");
  if (!programs || !candidates || programs->empty() || candidates->empty()) return "domain has no corpus";
  auto pick = [&](const json& list) -> const json& { return list[uniform_index(rng, list.size())]; };

  for (int step = 0; step < steps; ++step) {
    const auto plans = get_json(client, base + "/plans");
    const auto groups = get_json(client, base + "/groups");
    if (!plans || !groups) return "listing failed at step " + std::to_string(step);
    if (auto v = integrity_of(*plans, *groups, domain_id); !v.empty()) return "step " + std::to_string(step) + ": " + v;

    const auto op = uniform_index(rng, 10);
    std::string label;
    httplib::Result res{nullptr, httplib::Error::Unknown};
    std::set<int> allowed;
    auto post = [&](const std::string& path, const json& body) {
      return client.Post(path, body.dump(), "application/json");
    };
    const bool have_plans = !plans->empty();
    const json* plan = have_plans ? &pick(*plans) : nullptr;
    const std::string plan_path = plan ? "/plans/" + std::to_string((*plan)["id"].get<Id>()) : "";

    if (op == 0 || (!have_plans && op >= 3 && op <= 8)) {
      label = "create empty";
      res = post("/plans", {{"mode", "empty"}, {"source_ref", domain_id}});
      allowed = {201};
    } else if (op == 1) {
      const auto& program = pick(*programs);
      const auto size = program["annotated_source"].get<std::string>().size();
      const auto a = uniform_index(rng, size + 1);
      const auto b = uniform_index(rng, size + 1);
      label = "create from selection";
      res = post("/plans", {{"mode", "from_selection"},
                            {"source_ref", program["id"]},
                            {"selection", {{"start", std::min(a, b)}, {"end", std::max(a, b)}}}});
      allowed = {201, 422};
    } else if (op == 2) {
      label = "create from candidate";
      res = post("/plans", {{"mode", "from_candidate"}, {"source_ref", pick(*candidates)["id"]}});
      allowed = {201};
    } else if (op == 3) {
      label = "duplicate";
      res = post(plan_path + "/duplicate", json::object());
      allowed = {201};
    } else if (op == 4) {
      label = "delete";
      res = client.Delete(plan_path);
      allowed = {204};
    } else if (op == 5) {
      const auto solution = (*plan)["solution"].get<std::string>();
      const bool stale = uniform_index(rng, 4) == 0;
      label = stale ? "patch stale" : "patch";
      json body = {{"solution", solution.substr(0, uniform_index(rng, solution.size() + 1))},
                   {"canvas_x", uniform01(rng) * 1000.0},
                   {"version", (*plan)["version"].get<std::int64_t>() + (stale ? 1 : 0)}};
      res = client.Patch(plan_path, body.dump(), "application/json");
      allowed = {stale ? 409 : 200};
    } else if (op == 6) {
      const auto size = (*plan)["solution"].get<std::string>().size();
      const auto a = uniform_index(rng, size + 1);
      const auto b = uniform_index(rng, size + 1);
      label = "add area";
      res = post(plan_path + "/changeable-areas", {{"start", std::min(a, b)}, {"end", std::max(a, b)}});
      allowed = {201, 422};
    } else if (op == 7) {
      label = "remove area";
      res = client.Delete(plan_path + "/changeable-areas/" + std::to_string(uniform_index(rng, 3)));
      allowed = {200, 404};
    } else if (op == 8) {
      std::vector<Id> ids;
      const auto count = 1 + uniform_index(rng, 3);
      for (std::uint64_t i = 0; i < count; ++i) {
        const Id id = pick(*plans)["id"].get<Id>();
        if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
      }
      const bool move = uniform_index(rng, 2) == 0;
      label = "create group";
      res = post("/groups", {{"name", "g" + std::to_string(step)}, {"plan_ids", ids}, {"move", move}});
      allowed = move ? std::set<int>{201} : std::set<int>{201, 409};
    } else {
      if (groups->empty()) continue;
      const auto& group = pick(*groups);
      json body = {{"name", "renamed" + std::to_string(step)}};
      if (have_plans && uniform_index(rng, 2) == 0) {
        body["plan_ids"] = json::array({pick(*plans)["id"]});
        body["move"] = true;
      }
      label = "patch group";
      res = client.Patch("/groups/" + std::to_string(group["id"].get<Id>()), body.dump(), "application/json");
      allowed = {200};
    }
    if (!res) return "step " + std::to_string(step) + " (" + label + "): no response";
    if (!allowed.contains(res->status)) {
      return "step " + std::to_string(step) + " (" + label + "): status " + std::to_string(res->status) + " " + res->body;
    }
  }
  return api_integrity_violation(client, domain_id);
}

}  // namespace testsupport
