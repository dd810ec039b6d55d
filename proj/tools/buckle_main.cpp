// Command line front end: run, sweep, diagnose and certify.

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "buckle/config.hpp"
#include "buckle/pipeline.hpp"

namespace {

// Hardware threads, capped by BUCKLE_THREADS when it holds a positive integer.
unsigned worker_cap() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BUCKLE_THREADS")) {
    unsigned cap = 0;
    const std::string s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), cap);
    if (ec == std::errc{} && ptr == s.data() + s.size() && cap > 0) n = std::min(n, cap);
  }
  return n;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized buckling-load shape optimization on a uniform grid"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress lines");

  std::string config_path, resume_path;
  auto* run = app.add_subcommand("run", "Epsilon continuation from a config file");
  run->add_option("config", config_path, "key = value config file");
  run->add_option("--resume", resume_path, "Continue from a checkpoint (uses its embedded config)");

  std::string sweep_config;
  auto* sweep = app.add_subcommand("sweep", "Independent cold starts over the epsilon schedule");
  sweep->add_option("config", sweep_config, "key = value config file")->required();

  std::string field_path, lambda;
  auto* diag = app.add_subcommand("diagnose", "Field diagnostics for a dumped field, JSON on stdout");
  diag->add_option("field", field_path, "BUCKLE-FIELD dump")->required();
  diag->add_option("lambda", lambda, "Eigenvalue used to form U")->required();

  std::string mask_path;
  auto* cert = app.add_subcommand("certify", "Buckling eigenvalue of a dumped mask, JSON on stdout");
  cert->add_option("mask", mask_path, "BUCKLE-MASK dump")->required();

  app.add_subcommand("keys", "List config keys with defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : buckle::kExitConfig;
  }

  buckle::PipelineOptions opts;
  opts.log = quiet ? nullptr : &std::cerr;
  opts.threads = worker_cap();

  if (*run) {
    if (!resume_path.empty()) return buckle::resume_command(resume_path, opts, std::cerr);
    if (config_path.empty()) {
      std::cerr << "error: run needs a config file or --resume <checkpoint>\n";
      return buckle::kExitConfig;
    }
    return buckle::run_command_from_file(config_path, opts, std::cerr);
  }
  if (*sweep) {
    opts.mode = buckle::PipelineMode::Sweep;
    return buckle::run_command_from_file(sweep_config, opts, std::cerr);
  }
  if (*diag) return buckle::diagnose_command(field_path, lambda, std::cout, std::cerr);
  if (*cert) return buckle::certify_command(mask_path, std::cout, std::cerr);
  std::cout << buckle::config_reference();
  return buckle::kExitOk;
}
