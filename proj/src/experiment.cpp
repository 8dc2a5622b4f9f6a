#include "reno/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "reno/errors.hpp"
#include "reno/image_io.hpp"

namespace reno {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("failed writing " + path);
}

bool wants_format(const ExperimentConfig& cfg, const std::string& fmt) {
  for (const std::string& f : cfg.formats) {
    if (f == fmt) return true;
  }
  return false;
}

std::string trajectory_csv(const RunRecord& record) {
  std::string out = "t,R_t";
  for (const std::string& name : record.term_names) out += "," + csv_field(name);
  out += ",K,grad_pre,grad_post,eps_norm,is_new_best\r\n";
  for (const IterationRow& row : record.rows) {
    out += std::to_string(row.t) + "," + fmt_double(row.reward_total);
    for (double v : row.per_term) out += "," + fmt_double(v);
    out += "," + fmt_double(row.k_eps);
    out += "," + fmt_double(row.grad_pre_norm);
    out += "," + fmt_double(row.grad_post_norm);
    out += "," + fmt_double(row.eps_norm);
    out += row.is_new_best ? ",1\r\n" : ",0\r\n";
  }
  return out;
}

ordered_json config_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["generator"] = {{"kind", generator_kind_name(cfg.generator_kind)},
                    {"noise_dim", cfg.noise_dim},
                    {"image_height", cfg.image_height},
                    {"image_width", cfg.image_width},
                    {"weight_seed", cfg.weight_seed}};
  j["prompt"] = cfg.prompt_text;
  ordered_json terms = ordered_json::array();
  for (const TermConfig& t : cfg.terms) {
    terms.push_back({{"name", t.name},
                     {"kind", reward_kind_name(t.kind)},
                     {"weight", t.weight},
                     {"lo", t.lo},
                     {"hi", t.hi},
                     {"seed", t.seed}});
  }
  j["criterion"] = {{"terms", terms}, {"lambda_reg", cfg.lambda_reg}};
  j["optimizer"] = {{"steps", cfg.steps},
                    {"learning_rate", cfg.resolved_learning_rate()},
                    {"momentum", cfg.momentum},
                    {"clip_norm", cfg.clip_norm},
                    {"nesterov", cfg.nesterov}};
  return j;
}

std::string summary_json(const ExperimentConfig& cfg, std::uint64_t seed,
                         const RunRecord& record) {
  bool any_weighted = false;
  for (const TermConfig& t : cfg.terms) any_weighted = any_weighted || t.weight > 0.0;

  ordered_json j;
  j["config"] = config_json(cfg);
  j["seed"] = seed;
  j["evaluations"] = record.rows.size();
  j["selection"] = any_weighted ? "reward" : "objective";
  ordered_json best;
  best["reward"] = record.best.reward;
  best["iteration"] = record.best.iteration;
  best["eps_norm"] = record.best.eps.norm();
  best["eps"] = record.best.eps.values;
  j["best"] = best;
  j["wall_time_seconds"] = record.wall_time_seconds;
  return j.dump(2) + "\n";
}

}  // namespace

RunRecord execute_run(const ExperimentConfig& cfg, std::uint64_t seed) {
  GeneratorSpec generator = cfg.build_generator();
  PromptEmbedding prompt = cfg.build_prompt();
  CriterionSpec criterion = cfg.build_criterion();
  return reno_run(generator, prompt, criterion, cfg.optimizer_config(seed));
}

void write_run_artifacts(const ExperimentConfig& cfg, std::uint64_t seed,
                         const std::string& dir, int emit_every) {
  fs::create_directories(dir);

  GeneratorSpec generator = cfg.build_generator();
  PromptEmbedding prompt = cfg.build_prompt();
  CriterionSpec criterion = cfg.build_criterion();
  CriterionObjective objective(generator, prompt, criterion);
  OptimizerConfig opt = cfg.optimizer_config(seed);

  RunRecord record;
  if (emit_every > 0 && wants_format(cfg, "ppm")) {
    // Step manually so intermediate frames can be written as they appear.
    record.config = opt;
    record.noise_dim = cfg.noise_dim;
    record.term_names = objective.term_names();
    OptimizerState state = init_optimizer_state(cfg.noise_dim, opt);
    auto start = std::chrono::steady_clock::now();
    for (int t = 0; t <= opt.steps; ++t) {
      std::vector<double> eval_point = state.eps.values;
      record.rows.push_back(reno_step(state, opt, objective));
      if (t % emit_every == 0) {
        ad::Tape tape;
        ad::Tensor image = generate(tape, generator, tape.leaf(ad::Tensor::vector(eval_point)),
                                    prompt);
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%04d.ppm", t);
        write_ppm(image, (fs::path(dir) / name).string());
      }
    }
    record.best = state.best;
    record.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  } else {
    record = reno_run(objective, cfg.noise_dim, opt);
  }

  if (wants_format(cfg, "ppm")) {
    write_ppm(record.best.image, (fs::path(dir) / "best.ppm").string());
  }
  if (wants_format(cfg, "csv")) {
    write_text_file((fs::path(dir) / "trajectory.csv").string(), trajectory_csv(record));
  }
  if (wants_format(cfg, "json")) {
    write_text_file((fs::path(dir) / "summary.json").string(),
                    summary_json(cfg, seed, record));
  }
}

void run_single(const ExperimentConfig& cfg, const std::string& out_dir, int emit_every) {
  write_run_artifacts(cfg, cfg.seeds.front(), out_dir, emit_every);
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void run_sweep(const ExperimentConfig& cfg, const std::string& out_dir, int emit_every,
               int jobs) {
  fs::create_directories(out_dir);
  parallel_for(cfg.seeds.size(), jobs, [&](std::size_t i) {
    std::uint64_t seed = cfg.seeds[i];
    write_run_artifacts(cfg, seed, (fs::path(out_dir) / ("seed_" + std::to_string(seed))).string(),
                        emit_every);
  });

  // Aggregate after the joins; recompute from the pure runs so the summary is
  // independent of scheduling.
  std::vector<RunRecord> records(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), jobs, [&](std::size_t i) {
    records[i] = execute_run(cfg, cfg.seeds[i]);
  });

  std::string csv = "seed,best_reward,best_iteration,initial_reward\r\n";
  ordered_json j;
  j["config"] = config_json(cfg);
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RunRecord& r = records[i];
    csv += std::to_string(cfg.seeds[i]) + "," + fmt_double(r.best.reward) + "," +
           std::to_string(r.best.iteration) + "," + fmt_double(r.rows.front().reward_total) +
           "\r\n";
    rows.push_back({{"seed", cfg.seeds[i]},
                    {"best_reward", r.best.reward},
                    {"best_iteration", r.best.iteration},
                    {"initial_reward", r.rows.front().reward_total}});
  }
  j["runs"] = rows;
  write_text_file((fs::path(out_dir) / "sweep_summary.csv").string(), csv);
  write_text_file((fs::path(out_dir) / "sweep_summary.json").string(), j.dump(2) + "\n");
}

namespace {

RunSummary summarize_run(const ExperimentConfig& cfg, const RunRecord& record,
                         std::uint64_t seed) {
  RunSummary s;
  s.seed = seed;
  s.best_reward = record.best.reward;
  s.best_iteration = record.best.iteration;
  s.initial_terms = record.rows.front().per_term;
  s.best_terms = record.rows.at(static_cast<std::size_t>(record.best.iteration)).per_term;
  s.combined_full = 0.0;
  for (std::size_t k = 0; k < cfg.terms.size(); ++k) {
    s.combined_full += cfg.terms[k].weight * s.best_terms[k];
  }
  return s;
}

std::string mask_label(const ExperimentConfig& cfg, const std::vector<bool>& active) {
  std::string label;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (!active[i]) continue;
    if (!label.empty()) label += "+";
    label += cfg.terms[i].name;
  }
  return label;
}

StudyGroup run_group(const ExperimentConfig& cfg, const GeneratorSpec& generator,
                     const PromptEmbedding& prompt, std::string label,
                     const std::vector<bool>& active, int n_seeds, int jobs) {
  CriterionSpec criterion = cfg.build_masked_criterion(active);
  StudyGroup group;
  group.label = std::move(label);
  group.active = active;
  group.runs.resize(static_cast<std::size_t>(n_seeds));
  std::uint64_t base_seed = cfg.seeds.front();
  parallel_for(static_cast<std::size_t>(n_seeds), jobs, [&](std::size_t i) {
    std::uint64_t seed = base_seed + i;
    RunRecord record = reno_run(generator, prompt, criterion, cfg.optimizer_config(seed));
    group.runs[i] = summarize_run(cfg, record, seed);
  });
  aggregate_group(group);
  return group;
}

}  // namespace

void aggregate_group(StudyGroup& group) {
  if (group.runs.empty()) {
    group.mean_change.clear();
    group.improve_percent.clear();
    return;
  }
  std::size_t n_terms = group.runs.front().initial_terms.size();
  group.mean_change.assign(n_terms, 0.0);
  group.improve_percent.assign(n_terms, 0.0);
  for (const RunSummary& run : group.runs) {
    for (std::size_t k = 0; k < n_terms; ++k) {
      double change = run.best_terms[k] - run.initial_terms[k];
      group.mean_change[k] += change;
      if (run.best_terms[k] > run.initial_terms[k]) group.improve_percent[k] += 1.0;
    }
  }
  double n = static_cast<double>(group.runs.size());
  for (std::size_t k = 0; k < n_terms; ++k) {
    group.mean_change[k] /= n;
    group.improve_percent[k] *= 100.0 / n;
  }
}

StudyResult run_leave_one_out(const ExperimentConfig& cfg, const std::string& held_out,
                              int n_seeds, int jobs) {
  if (n_seeds < 1) throw std::invalid_argument("run_leave_one_out: n_seeds must be >= 1");
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < cfg.terms.size(); ++i) {
    if (held_out.empty() || cfg.terms[i].name == held_out) targets.push_back(i);
  }
  if (targets.empty()) {
    throw std::invalid_argument("run_leave_one_out: no term named '" + held_out + "'");
  }

  GeneratorSpec generator = cfg.build_generator();
  PromptEmbedding prompt = cfg.build_prompt();

  StudyResult study;
  for (const TermConfig& t : cfg.terms) study.term_names.push_back(t.name);
  for (std::size_t idx : targets) {
    std::vector<bool> active(cfg.terms.size(), true);
    active[idx] = false;
    study.groups.push_back(run_group(cfg, generator, prompt, "holdout:" + cfg.terms[idx].name,
                                     active, n_seeds, jobs));
  }
  return study;
}

StudyResult run_reward_ablation(const ExperimentConfig& cfg,
                                const std::vector<std::vector<bool>>& masks, int n_seeds,
                                int jobs) {
  if (n_seeds < 1) throw std::invalid_argument("run_reward_ablation: n_seeds must be >= 1");
  GeneratorSpec generator = cfg.build_generator();
  PromptEmbedding prompt = cfg.build_prompt();

  StudyResult study;
  for (const TermConfig& t : cfg.terms) study.term_names.push_back(t.name);
  for (const std::vector<bool>& mask : masks) {
    if (mask.size() != cfg.terms.size()) {
      throw std::invalid_argument("run_reward_ablation: mask size does not match term count");
    }
    if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
      throw std::invalid_argument("run_reward_ablation: empty mask");
    }
    study.groups.push_back(
        run_group(cfg, generator, prompt, mask_label(cfg, mask), mask, n_seeds, jobs));
  }
  return study;
}

std::vector<std::vector<bool>> all_nonempty_masks(std::size_t n_terms) {
  std::vector<std::vector<bool>> masks;
  std::size_t total = std::size_t{1} << n_terms;
  for (std::size_t bits = 1; bits < total; ++bits) {
    std::vector<bool> mask(n_terms, false);
    for (std::size_t i = 0; i < n_terms; ++i) mask[i] = (bits >> i) & 1;
    masks.push_back(std::move(mask));
  }
  return masks;
}

void write_study_artifacts(const StudyResult& study, const std::string& dir,
                           const std::string& stem) {
  fs::create_directories(dir);

  std::string csv = "group,seed,best_reward,best_iteration,combined_full";
  for (const std::string& name : study.term_names) csv += ",initial_" + csv_field(name);
  for (const std::string& name : study.term_names) csv += ",best_" + csv_field(name);
  csv += "\r\n";
  for (const StudyGroup& group : study.groups) {
    for (const RunSummary& run : group.runs) {
      csv += csv_field(group.label) + "," + std::to_string(run.seed) + "," +
             fmt_double(run.best_reward) + "," + std::to_string(run.best_iteration) + "," +
             fmt_double(run.combined_full);
      for (double v : run.initial_terms) csv += "," + fmt_double(v);
      for (double v : run.best_terms) csv += "," + fmt_double(v);
      csv += "\r\n";
    }
  }
  write_text_file((fs::path(dir) / (stem + ".csv")).string(), csv);

  ordered_json j;
  j["term_names"] = study.term_names;
  ordered_json groups = ordered_json::array();
  for (const StudyGroup& group : study.groups) {
    ordered_json g;
    g["label"] = group.label;
    g["active"] = group.active;
    g["runs"] = group.runs.size();
    ordered_json change, improve;
    for (std::size_t k = 0; k < study.term_names.size(); ++k) {
      change[study.term_names[k]] = group.mean_change[k];
      improve[study.term_names[k]] = group.improve_percent[k];
    }
    g["mean_change"] = change;
    g["improve_percent"] = improve;
    groups.push_back(g);
  }
  j["groups"] = groups;
  write_text_file((fs::path(dir) / (stem + "_summary.json")).string(), j.dump(2) + "\n");
}

}  // namespace reno
