#include "doctest.h"

#include <cstdlib>

#include "planmine/config.hpp"
#include "planmine/error.hpp"
#include "support.hpp"

using namespace planmine;
using testsupport::TempDir;
using testsupport::write_text;

namespace {

ErrorKind load_error(const std::filesystem::path& path) {
  try {
    (void)load_config(path);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::io;
}

}  // namespace

TEST_CASE("defaults") {
  const AppConfig c;
  CHECK(c.port == 8080);
  CHECK(c.provider == "mock");
  CHECK(c.pipeline.pca_variance == 0.90);
  CHECK(c.pipeline.k_min == 2);
  CHECK(c.pipeline.k_max == 10);
  CHECK(c.pipeline.top_clusters == 10);
  CHECK(c.pipeline.n_representatives == 4);
}

TEST_CASE("keys are read and relative paths resolve against the file") {
  TempDir dir;
  write_text(dir / "app.conf",
             "# settings\n"
             "store = data/p.db\n"
             "fixtures=/abs/fx\n"
             "  port = 9001  \n"
             "\n"
             "pca_variance = 0.8\n"
             "k_max = 6\n"
             "seed = 18446744073709551615\n"
             "backoff_ms = 5\n"
             "timeout_seconds = 7\n"
             "embedding_dim = 64\n"
             "record_dir = rec\n");
  const auto c = load_config(dir / "app.conf");
  CHECK(c.store == dir / "data/p.db");
  CHECK(c.fixtures == "/abs/fx");
  CHECK(c.port == 9001);
  CHECK(c.pipeline.pca_variance == 0.8);
  CHECK(c.pipeline.k_max == 6);
  CHECK(c.pipeline.seed == 18446744073709551615ull);
  CHECK(c.gateway.backoff == std::chrono::milliseconds(5));
  CHECK(c.remote.timeout_seconds == 7);
  CHECK(c.remote_embedding.timeout_seconds == 7);
  CHECK(c.pipeline.embedding_dim == 64);
  CHECK(c.remote_embedding.dim == 64);
  CHECK(c.record_dir == dir / "rec");
}

TEST_CASE("bad files are usage errors") {
  TempDir dir;
  CHECK(load_error(dir / "missing.conf") == ErrorKind::usage);
  write_text(dir / "a.conf", "colour = blue\n");
  CHECK(load_error(dir / "a.conf") == ErrorKind::usage);
  write_text(dir / "b.conf", "port = eighty\n");
  CHECK(load_error(dir / "b.conf") == ErrorKind::usage);
  write_text(dir / "c.conf", "port 80\n");
  CHECK(load_error(dir / "c.conf") == ErrorKind::usage);
  write_text(dir / "d.conf", "k_min = 1\n");
  CHECK(load_error(dir / "d.conf") == ErrorKind::usage);
  write_text(dir / "e.conf", "pca_variance = 0.9x\n");
  CHECK(load_error(dir / "e.conf") == ErrorKind::usage);
}

TEST_CASE("providers are built from the configuration") {
  AppConfig c;
  c.fixtures = testsupport::mock_fixtures();
  CHECK(make_provider(c)->id() == "mock");
  CHECK(make_embedder(c)->dim() == 256);
  c.provider = "other";
  CHECK_THROWS_AS((void)make_provider(c), Error);
  c.embedding = "other";
  CHECK_THROWS_AS((void)make_embedder(c), Error);

  c.provider = "remote";
  c.remote.api_key_env = "PLANMINE_UNSET_KEY_FOR_TEST";
  ::unsetenv("PLANMINE_UNSET_KEY_FOR_TEST");
  try {
    (void)make_provider(c);
    FAIL("expected usage error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::usage);
  }
}
