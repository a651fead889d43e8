#include "cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "planmine/api.hpp"
#include "planmine/config.hpp"
#include "planmine/corpus.hpp"
#include "planmine/error.hpp"
#include "planmine/evaluation.hpp"
#include "planmine/pipeline.hpp"
#include "planmine/text.hpp"

#include "httplib.h"

namespace planmine {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config_path;
  std::string store;
};

AppConfig resolve_config(const Common& common) {
  AppConfig config = common.config_path.empty() ? AppConfig{} : load_config(common.config_path);
  if (!common.store.empty()) config.store = common.store;
  return config;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << content;
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

Domain domain_by_name(Store& store, const std::string& name) {
  auto domain = store.transact([&] { return store.find_domain_by_name(name); });
  if (!domain) fail(ErrorKind::not_found, "no domain named '" + name + "'");
  return *domain;
}

// pipeline run ----------------------------------------------------------------

struct PipelineArgs {
  std::string domain;
  std::string library;
  std::string provider;
  std::optional<std::uint64_t> seed;
  std::string fixtures;
  std::string embedding;
};

int pipeline_run(const Common& common, const PipelineArgs& args, std::ostream& out) {
  AppConfig config = resolve_config(common);
  if (!args.provider.empty()) config.provider = args.provider;
  if (!args.fixtures.empty()) config.fixtures = args.fixtures;
  if (!args.embedding.empty()) config.embedding = args.embedding;
  if (args.seed) config.pipeline.seed = *args.seed;

  Gateway gateway(make_provider(config), config.gateway);
  const auto embedder = make_embedder(config);
  Store store(config.store);

  PipelineOptions options;
  options.domain_name = args.domain;
  options.library = args.library;
  options.language = config.language;
  options.config = config.pipeline;
  options.workers = config.workers;
  const RunManifest manifest = run_pipeline(store, gateway, *embedder, options);

  const fs::path manifest_file = manifest_path(config.store);
  write_file(manifest_file, manifest.to_json().dump(2) + "\n");

  out << "domain " << manifest.domain << " (id " << manifest.domain_id << ")\n";
  for (const auto& stage : manifest.stages) {
    char seconds[32];
    std::snprintf(seconds, sizeof seconds, "%.2f", stage.seconds);
    out << "  " << to_string(stage.stage) << (stage.skipped ? "  skipped" : "  done") << "  " << seconds << "s\n";
  }
  out << "use cases " << manifest.use_cases << ", programs " << manifest.programs << ", valid "
      << manifest.valid_programs << ", snippets " << manifest.snippets << ", clusters " << manifest.clusters << "\n";
  out << "manifest " << manifest_file.string() << "\n";
  return exit_ok;
}

// eval run ------------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> corpora;
  std::string pairs;
  std::string out;
  bool star = false;
  std::string space = "pca";
};

std::pair<std::string, std::string> split_once(const std::string& s, char sep, const std::string& what) {
  const auto at = s.find(sep);
  if (at == std::string::npos || at == 0 || at + 1 == s.size()) {
    fail(ErrorKind::usage, what + " '" + s + "' must look like a" + sep + "b");
  }
  return {s.substr(0, at), s.substr(at + 1)};
}

std::vector<std::pair<std::string, std::string>> parse_pairs(const std::string& text_value) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::stringstream in(text_value);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto trimmed = std::string(text::trim(item));
    if (trimmed.empty()) continue;
    pairs.push_back(split_once(trimmed, ':', "pair"));
  }
  return pairs;
}

// A JSON corpus is an array of code strings or of {"code", "embedding"?}.
EvaluationCorpus json_corpus(const std::string& label, const fs::path& path) {
  EvaluationCorpus corpus;
  corpus.label = label;
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::usage, path.string() + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("members")) doc = doc["members"];
  if (!doc.is_array()) fail(ErrorKind::usage, path.string() + ": expected an array of members");
  bool all_embedded = true;
  std::vector<Vector> embeddings;
  for (const auto& member : doc) {
    if (member.is_string()) {
      corpus.codes.push_back(member.get<std::string>());
      all_embedded = false;
      continue;
    }
    if (!member.is_object() || !member.contains("code") || !member["code"].is_string()) {
      fail(ErrorKind::usage, path.string() + ": each member needs a string 'code'");
    }
    corpus.codes.push_back(member["code"].get<std::string>());
    if (member.contains("embedding") && member["embedding"].is_array()) {
      embeddings.push_back(Vector{member["embedding"].get<std::vector<float>>()});
    } else {
      all_embedded = false;
    }
  }
  if (all_embedded) corpus.embeddings = std::move(embeddings);
  return corpus;
}

EvaluationCorpus load_corpus(const std::string& argument, bool star, const AppConfig& config,
                             std::optional<Store>& store, EmbeddingProvider& embedder) {
  const auto [label, source] = split_once(argument, '=', "corpus");
  EvaluationCorpus corpus;
  const fs::path path(source);
  if (fs::is_directory(path)) {
    corpus.label = label;
    CorpusFilter filter;
    filter.exclude_test_files = false;
    for (const auto& program : scan_corpus(path, filter)) corpus.codes.push_back(program.raw_source);
  } else if (fs::is_regular_file(path)) {
    corpus = json_corpus(label, path);
  } else {
    if (!fs::exists(config.store)) {
      fail(ErrorKind::usage, "corpus '" + label + "': '" + source + "' is neither a path nor a domain (no store)");
    }
    if (!store) store.emplace(config.store);
    const auto domain = store->transact([&] { return store->find_domain_by_name(source); });
    if (!domain) fail(ErrorKind::usage, "corpus '" + label + "': '" + source + "' is neither a path nor a domain");
    corpus = domain_corpus(*store, domain->id, label, star);
  }
  if (corpus.embeddings.empty() && !corpus.codes.empty()) corpus.embeddings = embedder.embed_batch(corpus.codes);
  return corpus;
}

int eval_run(const Common& common, const EvalArgs& args, std::ostream& out) {
  const AppConfig config = resolve_config(common);
  EvalOptions options;
  if (args.space == "raw") {
    options.space = DistanceSpace::raw;
  } else if (args.space != "pca") {
    fail(ErrorKind::usage, "--space must be pca or raw");
  }
  options.pca_variance = config.pipeline.pca_variance;
  options.wasserstein.seed = config.pipeline.seed;

  const auto pairs = parse_pairs(args.pairs);
  const auto embedder = make_embedder(config);
  std::optional<Store> store;
  std::vector<EvaluationCorpus> corpora;
  for (const auto& argument : args.corpora) corpora.push_back(load_corpus(argument, args.star, config, store, *embedder));

  const EvaluationReport report = evaluate(corpora, pairs, options);
  if (!args.out.empty()) write_file(args.out, report.to_json().dump(2) + "\n");
  out << report.table();
  return exit_ok;
}

// serve -----------------------------------------------------------------------------

int serve(const Common& common, std::optional<int> port_override, std::ostream& out) {
  AppConfig config = resolve_config(common);
  if (port_override) config.port = *port_override;

  // Block the stop signals before any thread starts so only the waiter sees them.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGTERM);
  sigaddset(&stop_signals, SIGINT);
  sigset_t previous;
  pthread_sigmask(SIG_BLOCK, &stop_signals, &previous);

  Gateway gateway(make_provider(config), config.gateway);
  Store store(config.store);
  ApiService api(store, gateway,
                 ApiOptions{std::chrono::seconds(config.session_ttl_seconds), config.cors_origin});
  httplib::Server server;
  api.install(server);

  int port = config.port;
  if (port == 0) {
    port = server.bind_to_any_port(config.host);
    if (port < 0) {
      pthread_sigmask(SIG_SETMASK, &previous, nullptr);
      fail(ErrorKind::io, "cannot bind " + config.host);
    }
  } else if (!server.bind_to_port(config.host, port)) {
    pthread_sigmask(SIG_SETMASK, &previous, nullptr);
    fail(ErrorKind::io, "cannot bind " + config.host + ":" + std::to_string(port) + " (port in use?)");
  }

  std::thread waiter([&] {
    int signal_number = 0;
    sigwait(&stop_signals, &signal_number);
    server.stop();
  });
  out << "listening on http://" << config.host << ":" << port << std::endl;
  server.listen_after_bind();
  // Wake the waiter if the server stopped for another reason.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  pthread_sigmask(SIG_SETMASK, &previous, nullptr);
  out << "stopped" << std::endl;
  return exit_ok;
}

// export / import / ingest -----------------------------------------------------------

int export_domain(const Common& common, const std::string& domain_name, const std::string& format,
                  const std::string& out_path, std::ostream& out) {
  const AppConfig config = resolve_config(common);
  if (!fs::exists(config.store)) fail(ErrorKind::usage, "store " + config.store.string() + " does not exist");
  Store store(config.store);
  const Domain domain = domain_by_name(store, domain_name);
  std::string doc;
  if (format == "snapshot") {
    doc = snapshot_domain(store, domain.id).dump(2) + "\n";
  } else {
    ExportFormat parsed{};
    try {
      parsed = export_format_from_string(format);
    } catch (const Error& e) {
      fail(ErrorKind::usage, e.what());
    }
    doc = export_plans(store, domain.id, parsed);
  }
  if (out_path.empty()) {
    out << doc;
  } else {
    write_file(out_path, doc);
  }
  return exit_ok;
}

int import_domain(const Common& common, const std::string& domain_name, const std::string& file, std::ostream& out) {
  const AppConfig config = resolve_config(common);
  Store store(config.store);
  const Domain domain = domain_by_name(store, domain_name);
  const auto count = import_plans(store, domain.id, read_file(file));
  out << "imported " << count << " plans into " << domain.name << "\n";
  return exit_ok;
}

int ingest(const Common& common, const std::string& domain_name, const std::string& library, const std::string& dir,
           const std::vector<std::string>& required, std::ostream& out) {
  const AppConfig config = resolve_config(common);
  Store store(config.store);
  const auto programs = store.transact([&] {
    auto domain = store.find_domain_by_name(domain_name);
    if (!domain) domain = store.create_domain(domain_name, library, config.language);
    CorpusFilter filter;
    filter.required_substrings = required;
    return ingest_corpus(store, domain->id, dir, filter);
  });
  out << "ingested " << programs.size() << " programs into " << domain_name << "\n";
  return exit_ok;
}

int exit_code_for(ErrorKind kind) { return kind == ErrorKind::usage ? exit_usage : exit_failure; }

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mine programming plans from generated example programs."};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path, "key = value settings file");
    cmd->add_option("--store", common.store, "SQLite store path");
  };

  auto* pipeline = app.add_subcommand("pipeline", "Generation and clustering pipeline");
  pipeline->require_subcommand(1);
  auto* pipeline_cmd = pipeline->add_subcommand("run", "Run every unfinished stage for a domain");
  PipelineArgs pipeline_args;
  pipeline_cmd->add_option("--domain", pipeline_args.domain, "domain name")->required();
  pipeline_cmd->add_option("--library", pipeline_args.library, "library the examples should use")->required();
  pipeline_cmd->add_option("--provider", pipeline_args.provider, "completion provider")
      ->check(CLI::IsMember({"mock", "remote"}));
  pipeline_cmd->add_option("--seed", pipeline_args.seed, "clustering seed");
  pipeline_cmd->add_option("--fixtures", pipeline_args.fixtures, "mock fixture directory");
  pipeline_cmd->add_option("--embedding", pipeline_args.embedding, "embedding provider")
      ->check(CLI::IsMember({"hashing", "remote"}));
  add_common(pipeline_cmd);

  auto* eval = app.add_subcommand("eval", "Compare code corpora");
  eval->require_subcommand(1);
  auto* eval_cmd = eval->add_subcommand("run", "Metric means and distances per corpus");
  EvalArgs eval_args;
  eval_cmd->add_option("--corpus", eval_args.corpora, "label=path|domain (repeatable)")->required();
  eval_cmd->add_option("--pairs", eval_args.pairs, "a:b,c:d");
  eval_cmd->add_option("--out", eval_args.out, "report JSON path");
  eval_cmd->add_flag("--star", eval_args.star, "domain corpora: representatives of the top candidates only");
  eval_cmd->add_option("--space", eval_args.space, "distance space")->check(CLI::IsMember({"pca", "raw"}));
  add_common(eval_cmd);

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  std::optional<int> port;
  serve_cmd->add_option("--port", port, "override the configured port (0 picks a free one)");
  add_common(serve_cmd);

  auto* export_cmd = app.add_subcommand("export", "Write a domain's plans");
  std::string export_domain_name;
  std::string format = "json";
  std::string export_out;
  export_cmd->add_option("--domain", export_domain_name)->required();
  export_cmd->add_option("--format", format)->check(CLI::IsMember({"json", "markdown", "snapshot"}));
  export_cmd->add_option("--out", export_out);
  add_common(export_cmd);

  auto* import_cmd = app.add_subcommand("import", "Append plans from an export JSON file");
  std::string import_domain_name;
  std::string import_file;
  import_cmd->add_option("--domain", import_domain_name)->required();
  import_cmd->add_option("file", import_file)->required();
  add_common(import_cmd);

  auto* ingest_cmd = app.add_subcommand("ingest", "Load an existing code corpus into a domain");
  std::string ingest_domain_name;
  std::string ingest_library;
  std::string ingest_dir;
  std::vector<std::string> required_substrings;
  ingest_cmd->add_option("--domain", ingest_domain_name)->required();
  ingest_cmd->add_option("--library", ingest_library)->required();
  ingest_cmd->add_option("--require", required_substrings, "keep only files containing this text");
  ingest_cmd->add_option("dir", ingest_dir)->required()->check(CLI::ExistingDirectory);
  add_common(ingest_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*pipeline_cmd) return pipeline_run(common, pipeline_args, out);
    if (*eval_cmd) return eval_run(common, eval_args, out);
    if (*serve_cmd) {
      if (common.config_path.empty()) fail(ErrorKind::usage, "serve needs --config");
      return serve(common, port, out);
    }
    if (*export_cmd) return export_domain(common, export_domain_name, format, export_out, out);
    if (*import_cmd) return import_domain(common, import_domain_name, import_file, out);
    if (*ingest_cmd) return ingest(common, ingest_domain_name, ingest_library, ingest_dir, required_substrings, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_failure;
  }
  return exit_usage;
}

}  // namespace planmine
