// Command-line front end for the reno engine. Talks to the engine exclusively
// through the C API in reno/reno.h.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <reno/reno.h>

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  int emit_every = -1;  // -1: use the config's output.emit_every
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file")
      ->required();
  cmd->add_option("--override", args.overrides,
                  "section.key=value override, repeatable");
  cmd->add_option("--out", args.out_dir, "output directory (default: config output.directory)");
  cmd->add_option("--emit-every", args.emit_every,
                  "write frame_<t>.ppm every K iterations (0 disables)");
  cmd->add_option("--jobs", args.jobs, "worker threads for batch runs")
      ->check(CLI::PositiveNumber);
}

int exit_code_for(reno_status status) {
  switch (status) {
    case RENO_OK: return 0;
    case RENO_STATUS_CONFIG: return 2;
    case RENO_STATUS_NUMERIC: return 3;
    default: return 1;
  }
}

int finish(reno_status status) {
  if (status != RENO_OK) {
    std::fprintf(stderr, "error: %s: %s\n", reno_status_name(status), reno_last_error());
  }
  return exit_code_for(status);
}

reno_status load_experiment(const CommonArgs& args, reno_experiment** out) {
  std::vector<const char*> overrides;
  overrides.reserve(args.overrides.size());
  for (const std::string& ov : args.overrides) overrides.push_back(ov.c_str());
  return reno_experiment_load(args.config_path.c_str(), overrides.data(), overrides.size(),
                              out);
}

const char* dir_or_null(const CommonArgs& args) {
  return args.out_dir.empty() ? nullptr : args.out_dir.c_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reward-driven noise optimization for one-step toy generators"};
  app.require_subcommand(1);

  CommonArgs run_args, sweep_args, loo_args, ablate_args;
  std::string loo_term;
  int loo_seeds = 50;
  int ablate_seeds = 50;

  CLI::App* run_cmd = app.add_subcommand("run", "single optimization run (first seed)");
  add_common(run_cmd, run_args);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "one run per configured seed");
  add_common(sweep_cmd, sweep_args);

  CLI::App* loo_cmd = app.add_subcommand("loo", "leave-one-out reward study");
  add_common(loo_cmd, loo_args);
  loo_cmd->add_option("--term", loo_term, "hold out only this term (default: each in turn)");
  loo_cmd->add_option("--seeds", loo_seeds, "seeds per held-out term")
      ->check(CLI::PositiveNumber);

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "all reward-subset combinations");
  add_common(ablate_cmd, ablate_args);
  ablate_cmd->add_option("--seeds", ablate_seeds, "seeds per subset")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  const CommonArgs& args = run_cmd->parsed()     ? run_args
                           : sweep_cmd->parsed() ? sweep_args
                           : loo_cmd->parsed()   ? loo_args
                                                 : ablate_args;

  reno_experiment* experiment = nullptr;
  reno_status status = load_experiment(args, &experiment);
  if (status != RENO_OK) return finish(status);

  if (run_cmd->parsed()) {
    status = reno_experiment_run(experiment, dir_or_null(args), args.emit_every);
  } else if (sweep_cmd->parsed()) {
    status = reno_experiment_sweep(experiment, dir_or_null(args), args.emit_every, args.jobs);
  } else if (loo_cmd->parsed()) {
    status = reno_experiment_loo(experiment, loo_term.empty() ? nullptr : loo_term.c_str(),
                                 loo_seeds, args.jobs, dir_or_null(args));
  } else {
    status = reno_experiment_ablate(experiment, ablate_seeds, args.jobs, dir_or_null(args));
  }

  reno_experiment_free(experiment);
  return finish(status);
}
