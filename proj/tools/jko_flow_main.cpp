// Scenario-driven batch runner for the gradient-flow laboratory.
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jkoflow/scenario.hpp"

namespace {

int run_many(const std::vector<std::string>& paths, const jkoflow::ScenarioOptions& opts,
             int jobs) {
  if (paths.size() <= 1 || jobs <= 1) {
    int worst = 0;
    for (const auto& p : paths) worst = std::max(worst, jkoflow::run_scenario(p, opts));
    return worst;
  }
  // independent scenarios in parallel worker processes
  int worst = 0;
  std::size_t next = 0;
  int active = 0;
  auto reap = [&]() {
    int status = 0;
    if (waitpid(-1, &status, 0) > 0) {
      --active;
      if (WIFEXITED(status)) worst = std::max(worst, WEXITSTATUS(status));
      else worst = std::max(worst, 1);
    }
  };
  while (next < paths.size() || active > 0) {
    if (next < paths.size() && active < jobs) {
      const pid_t pid = fork();
      if (pid == 0) _exit(jkoflow::run_scenario(paths[next], opts));
      if (pid < 0) {
        std::cerr << "fork failed\n";
        return 1;
      }
      ++next;
      ++active;
    } else {
      reap();
    }
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"JKO gradient-flow laboratory"};
  app.require_subcommand(1);

  std::vector<std::string> run_paths;
  std::string oracle_path;
  jkoflow::ScenarioOptions opts;
  int jobs = 1;

  CLI::App* run = app.add_subcommand("run", "execute scenario files");
  run->add_option("scenarios", run_paths, "scenario files")->required()->expected(-1);
  run->add_option("--out", opts.out_dir, "output directory (overrides JKO_FLOW_OUT)");
  run->add_option("--jobs", jobs, "parallel scenario processes")->check(CLI::PositiveNumber);
  run->add_option("--snapshot-every", opts.snapshot_every, "density snapshot cadence");
  run->add_flag("--verbose", opts.verbose, "chatty progress output");

  CLI::App* oracle = app.add_subcommand("oracle", "compare one step against the brute-force reference");
  oracle->add_option("scenario", oracle_path, "scenario file")->required();
  oracle->add_option("--out", opts.out_dir, "output directory");
  oracle->add_flag("--verbose", opts.verbose, "chatty progress output");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return run_many(run_paths, opts, jobs);
  return jkoflow::compare_oracle(oracle_path, opts);
}
