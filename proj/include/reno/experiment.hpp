#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "reno/config.hpp"
#include "reno/optimizer.hpp"

namespace reno {

// Pure computation: one optimization run under the config with a given seed.
RunRecord execute_run(const ExperimentConfig& cfg, std::uint64_t seed);

// Writes best.ppm / trajectory.csv / summary.json (per output.formats) into
// `dir`; emit_every > 0 additionally writes frame_<t>.ppm every k iterations.
// Every artifact except summary.json's wall_time_seconds field is
// byte-reproducible from (config, seed).
void write_run_artifacts(const ExperimentConfig& cfg, std::uint64_t seed,
                         const std::string& dir, int emit_every);

// `run` subcommand: single run with the first configured seed.
void run_single(const ExperimentConfig& cfg, const std::string& out_dir, int emit_every);

// `sweep` subcommand: one run per configured seed into seed_<k>/ directories
// plus sweep_summary.{csv,json}.
void run_sweep(const ExperimentConfig& cfg, const std::string& out_dir, int emit_every,
               int jobs);

struct RunSummary {
  std::uint64_t seed = 0;
  double best_reward = 0.0;
  int best_iteration = 0;
  std::vector<double> initial_terms;  // per-term values at t = 0
  std::vector<double> best_terms;     // per-term values at the best iterate
  double combined_full = 0.0;         // full-suite weighted total at the best iterate
};

struct StudyGroup {
  std::string label;
  std::vector<bool> active;
  std::vector<RunSummary> runs;
  std::vector<double> mean_change;      // per term: mean(best - initial)
  std::vector<double> improve_percent;  // per term: % of runs with best > initial
};

struct StudyResult {
  std::vector<std::string> term_names;
  std::vector<StudyGroup> groups;
};

// Optimizes with the held-out term's weight set to zero and reports how the
// held-out term moved anyway. Empty `held_out` runs one group per term.
// Study seeds are first_configured_seed + 0..n_seeds-1.
StudyResult run_leave_one_out(const ExperimentConfig& cfg, const std::string& held_out,
                              int n_seeds, int jobs);

// One optimization per (mask, seed); masks select which terms keep their
// weights. Masks must be non-empty.
StudyResult run_reward_ablation(const ExperimentConfig& cfg,
                                const std::vector<std::vector<bool>>& masks, int n_seeds,
                                int jobs);

std::vector<std::vector<bool>> all_nonempty_masks(std::size_t n_terms);

void write_study_artifacts(const StudyResult& study, const std::string& dir,
                           const std::string& stem);

// Recomputes a group's aggregates from its per-run summaries.
void aggregate_group(StudyGroup& group);

// Runs fn(0..n-1) on `jobs` threads (jobs <= 1 runs inline); results must be
// written to disjoint slots. The first worker exception is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace reno
