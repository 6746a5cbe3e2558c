// adaptfuse: run experiment suites, print summary tables, serve live sessions.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>

#include "adaptfuse/harness.hpp"
#include "adaptfuse/service.hpp"

namespace fs = std::filesystem;
using namespace adaptfuse;

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const auto v = std::stoull(item, &used);
    if (used != item.size()) throw ConfigError("--seeds", "not an integer: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("--seeds", "empty seed list");
  return out;
}

Backend parse_backend(const std::string& s, const char* flag) {
  if (s == "synthetic") return Backend::kSynthetic;
  if (s == "http") return Backend::kHttp;
  throw ConfigError(flag, "expected 'synthetic' or 'http'");
}

int cmd_run(const std::string& config_path, const std::string& out_dir, const std::string& seeds,
            const std::string& backend, const std::string& base_url, std::size_t jobs) {
  SuiteConfig cfg = load_suite_config(config_path);
  if (!seeds.empty()) cfg.seeds = parse_seed_list(seeds);
  if (!backend.empty()) cfg.backend = parse_backend(backend, "--backend");
  if (!base_url.empty()) cfg.http.base_url = base_url;
  if (jobs > 0) cfg.jobs = jobs;
  const RunSummary summary = run_suite(cfg, out_dir);
  std::cout << summary_csv(summary);
  std::cerr << "wrote " << cfg.seeds.size() * cfg.variants.size() << " record files and "
            << (fs::path(out_dir) / "summary.csv").string() << "\n";
  return 0;
}

int cmd_report(const std::string& in_dir, const std::string& table, const std::string& out_file) {
  const auto records = read_records(in_dir);
  if (records.empty()) throw std::runtime_error("no records found under " + in_dir);
  std::string csv;
  if (table == "rounds") csv = rounds_table_csv(summarize(records));
  else if (table == "ablation") csv = ablation_table_csv(summarize(records));
  else if (table == "schedule") csv = schedule_csv(fusion_schedule_report(records));
  else throw ConfigError("--table", "expected rounds, ablation or schedule");
  if (out_file.empty()) {
    std::cout << csv;
  } else {
    std::ofstream f(out_file, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out_file);
    f << csv;
  }
  return 0;
}

httplib::Server* g_server = nullptr;
extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const std::string& host, int port, const std::string& backend, const std::string& base_url,
              const std::string& model, int ttl_minutes, const std::string& cors, const std::string& snapshot) {
  SessionServiceConfig cfg;
  cfg.backend = parse_backend(backend, "--backend");
  if (!base_url.empty()) cfg.http.base_url = base_url;
  if (!model.empty()) cfg.http.model = model;
  cfg.http.load_api_key_from_env();
  cfg.idle_ttl = std::chrono::minutes(ttl_minutes);
  SessionManager sessions(cfg);

  httplib::Server srv;
  register_routes(srv, sessions, cors);
  g_server = &srv;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  std::atomic<bool> running{true};
  std::thread sweeper([&] {
    while (running) {
      for (int i = 0; i < 60 && running; ++i) std::this_thread::sleep_for(std::chrono::seconds(1));
      sessions.sweep();
    }
  });
  std::cerr << "listening on " << host << ":" << port << "\n";
  const bool ok = srv.listen(host, port);
  running = false;
  sweeper.join();
  if (!snapshot.empty()) sessions.snapshot_to(snapshot);
  if (!ok) {
    std::cerr << "error: could not listen on " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential preference learning with fused symbolic and sampled predictions"};
  app.require_subcommand(1);

  std::string config, out_dir = "results", seeds, backend, base_url;
  std::size_t jobs = 0;
  auto* run = app.add_subcommand("run", "Run an experiment suite from a JSON config");
  run->add_option("--config", config, "Suite configuration file")->required();
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--seeds", seeds, "Comma-separated seeds, overrides the config");
  run->add_option("--backend", backend, "synthetic or http, overrides the config");
  run->add_option("--base-url", base_url, "Chat-completions server for the http backend");
  run->add_option("--jobs", jobs, "Worker threads");

  std::string in_dir, table = "rounds", report_out;
  auto* report = app.add_subcommand("report", "Print a summary table from a run directory");
  report->add_option("--in", in_dir, "Run output directory")->required();
  report->add_option("--table", table, "rounds, ablation or schedule")->capture_default_str();
  report->add_option("--out", report_out, "Write the CSV here instead of stdout");

  std::string host = "0.0.0.0", serve_backend = "synthetic", serve_url, model, cors = "*", snapshot;
  int port = 8080, ttl = 30;
  auto* serve = app.add_subcommand("serve", "Serve live sessions over HTTP");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str()->envname("ADAPTFUSE_PORT");
  serve->add_option("--backend", serve_backend, "synthetic or http")->capture_default_str()->envname("ADAPTFUSE_BACKEND");
  serve->add_option("--base-url", serve_url, "Chat-completions server for the http backend")->envname("ADAPTFUSE_BASE_URL");
  serve->add_option("--model", model, "Model name sent to the chat-completions server");
  serve->add_option("--ttl-minutes", ttl, "Idle session lifetime")->capture_default_str();
  serve->add_option("--cors-origin", cors, "Allowed browser origin")->capture_default_str();
  serve->add_option("--snapshot", snapshot, "Write session states to this file on shutdown");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, out_dir, seeds, backend, base_url, jobs);
    if (*report) return cmd_report(in_dir, table, report_out);
    if (*serve) return cmd_serve(host, port, serve_backend, serve_url, model, ttl, cors, snapshot);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
