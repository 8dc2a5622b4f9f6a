#include "reno/reno.h"

#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "reno/config.hpp"
#include "reno/criteria.hpp"
#include "reno/errors.hpp"
#include "reno/experiment.hpp"
#include "reno/generator.hpp"
#include "reno/image_io.hpp"
#include "reno/optimizer.hpp"

struct reno_generator {
  reno::GeneratorSpec spec;
};

struct reno_criterion {
  reno::CriterionSpec spec;
};

struct reno_run_result {
  reno::RunRecord record;
};

struct reno_experiment {
  reno::ExperimentConfig config;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

// Runs `fn`, translating exceptions into status codes + the thread-local
// message.
template <typename Fn>
reno_status guarded(Fn&& fn) {
  try {
    fn();
    return RENO_OK;
  } catch (const reno::ConfigError& e) {
    set_error(e.what());
    return RENO_STATUS_CONFIG;
  } catch (const reno::NumericError& e) {
    set_error(e.what());
    return RENO_STATUS_NUMERIC;
  } catch (const reno::IoError& e) {
    set_error(e.what());
    return RENO_STATUS_IO;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return RENO_STATUS_INVALID_ARGUMENT;
  } catch (const std::domain_error& e) {
    set_error(e.what());
    return RENO_STATUS_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    set_error(e.what());
    return RENO_STATUS_INTERNAL;
  } catch (...) {
    set_error("unknown error");
    return RENO_STATUS_INTERNAL;
  }
}

reno_status require(bool ok, const char* message) {
  if (ok) return RENO_OK;
  set_error(message);
  return RENO_STATUS_INVALID_ARGUMENT;
}

reno::OptimizerConfig to_cpp(const reno_opt_config& c, double lambda_reg) {
  reno::OptimizerConfig out;
  out.steps = c.steps;
  out.learning_rate = c.learning_rate;
  out.momentum = c.momentum;
  out.clip_norm = c.clip_norm;
  out.lambda_reg = lambda_reg;
  out.seed = c.seed;
  out.nesterov = c.nesterov != 0;
  return out;
}

std::string experiment_out_dir(const reno_experiment* e, const char* out_dir);
int experiment_emit_every(const reno_experiment* e, int32_t emit_every);

}  // namespace

extern "C" {

const char* reno_status_name(reno_status status) {
  switch (status) {
    case RENO_OK: return "ok";
    case RENO_STATUS_INVALID_ARGUMENT: return "invalid_argument";
    case RENO_STATUS_CONFIG: return "config_error";
    case RENO_STATUS_NUMERIC: return "numeric_error";
    case RENO_STATUS_IO: return "io_error";
    case RENO_STATUS_INTERNAL: return "internal_error";
  }
  return "unknown";
}

const char* reno_last_error(void) { return g_last_error.c_str(); }

const char* reno_version(void) { return "0.1.0"; }

void reno_opt_config_defaults(reno_opt_config* out) {
  if (!out) return;
  out->steps = 50;
  out->learning_rate = 5.0;
  out->momentum = 0.9;
  out->clip_norm = 0.1;
  out->seed = 0;
  out->nesterov = 0;
}

reno_status reno_generator_create(const char* kind, int32_t noise_dim, int32_t height,
                                  int32_t width, uint64_t weight_seed, reno_generator** out) {
  if (reno_status s = require(kind && out, "kind and out must be non-null")) return s;
  return guarded([&] {
    if (noise_dim < 2) throw std::invalid_argument("noise_dim must be >= 2");
    if (height < 1 || width < 1) throw std::invalid_argument("image dimensions must be >= 1");
    auto g = std::make_unique<reno_generator>();
    g->spec = reno::make_generator(reno::parse_generator_kind(kind),
                                   static_cast<std::size_t>(noise_dim),
                                   static_cast<std::size_t>(height),
                                   static_cast<std::size_t>(width), weight_seed);
    *out = g.release();
  });
}

reno_status reno_generator_save(const reno_generator* g, const char* path) {
  if (reno_status s = require(g && path, "generator and path must be non-null")) return s;
  return guarded([&] { reno::save_generator(g->spec, path); });
}

reno_status reno_generator_load(const char* path, reno_generator** out) {
  if (reno_status s = require(path && out, "path and out must be non-null")) return s;
  return guarded([&] {
    auto g = std::make_unique<reno_generator>();
    g->spec = reno::load_generator(path);
    *out = g.release();
  });
}

void reno_generator_free(reno_generator* g) { delete g; }

reno_status reno_criterion_create(double lambda_reg, reno_criterion** out) {
  if (reno_status s = require(out != nullptr, "out must be non-null")) return s;
  return guarded([&] {
    if (lambda_reg < 0.0) throw std::invalid_argument("lambda_reg must be >= 0");
    auto c = std::make_unique<reno_criterion>();
    c->spec.lambda_reg = lambda_reg;
    *out = c.release();
  });
}

reno_status reno_criterion_create_default(double lambda_reg, reno_criterion** out) {
  if (reno_status s = require(out != nullptr, "out must be non-null")) return s;
  return guarded([&] {
    if (lambda_reg < 0.0) throw std::invalid_argument("lambda_reg must be >= 0");
    auto c = std::make_unique<reno_criterion>();
    c->spec = reno::default_criterion(lambda_reg);
    *out = c.release();
  });
}

reno_status reno_criterion_add_term(reno_criterion* c, const char* kind, double lo, double hi,
                                    double weight, uint64_t seed) {
  if (reno_status s = require(c && kind, "criterion and kind must be non-null")) return s;
  return guarded([&] {
    c->spec.terms.push_back(
        reno::make_toy_reward(reno::parse_reward_kind(kind), {lo, hi}, weight, seed));
  });
}

reno_status reno_criterion_add_color_term(reno_criterion* c, char channel, double weight,
                                          int32_t height, int32_t width) {
  if (reno_status s = require(c != nullptr, "criterion must be non-null")) return s;
  return guarded([&] {
    if (height < 1 || width < 1) throw std::invalid_argument("image dimensions must be >= 1");
    c->spec.terms.push_back(reno::make_color_reward(
        reno::parse_channel(std::string(1, channel)), weight, static_cast<std::size_t>(height),
        static_cast<std::size_t>(width)));
  });
}

void reno_criterion_free(reno_criterion* c) { delete c; }

reno_status reno_optimize(const reno_generator* g, const reno_criterion* c, const char* prompt,
                          const reno_opt_config* config, reno_run_result** out) {
  if (reno_status s =
          require(g && c && prompt && config && out, "all arguments must be non-null")) {
    return s;
  }
  return guarded([&] {
    reno::PromptEmbedding embedding = reno::embed_prompt(prompt);
    auto result = std::make_unique<reno_run_result>();
    result->record = reno::reno_run(g->spec, embedding, c->spec,
                                    to_cpp(*config, c->spec.lambda_reg));
    *out = result.release();
  });
}

reno_status reno_result_best_reward(const reno_run_result* r, double* out) {
  if (reno_status s = require(r && out, "result and out must be non-null")) return s;
  *out = r->record.best.reward;
  return RENO_OK;
}

reno_status reno_result_best_iteration(const reno_run_result* r, int32_t* out) {
  if (reno_status s = require(r && out, "result and out must be non-null")) return s;
  *out = r->record.best.iteration;
  return RENO_OK;
}

reno_status reno_result_row_count(const reno_run_result* r, size_t* out) {
  if (reno_status s = require(r && out, "result and out must be non-null")) return s;
  *out = r->record.rows.size();
  return RENO_OK;
}

reno_status reno_result_reward_at(const reno_run_result* r, size_t t, double* out) {
  if (reno_status s = require(r && out, "result and out must be non-null")) return s;
  if (t >= r->record.rows.size()) {
    set_error("row index out of range");
    return RENO_STATUS_INVALID_ARGUMENT;
  }
  *out = r->record.rows[t].reward_total;
  return RENO_OK;
}

reno_status reno_result_image(const reno_run_result* r, const double** data, int32_t* height,
                              int32_t* width, int32_t* channels) {
  if (reno_status s = require(r && data && height && width && channels,
                              "all arguments must be non-null")) {
    return s;
  }
  const reno::ad::Tensor& image = r->record.best.image;
  if (image.shape.size() != 3) {
    set_error("result holds no image");
    return RENO_STATUS_INVALID_ARGUMENT;
  }
  *data = image.data.data();
  *height = static_cast<int32_t>(image.shape[0]);
  *width = static_cast<int32_t>(image.shape[1]);
  *channels = static_cast<int32_t>(image.shape[2]);
  return RENO_OK;
}

reno_status reno_result_write_ppm(const reno_run_result* r, const char* path) {
  if (reno_status s = require(r && path, "result and path must be non-null")) return s;
  return guarded([&] { reno::write_ppm(r->record.best.image, path); });
}

void reno_result_free(reno_run_result* r) { delete r; }

reno_status reno_experiment_load(const char* path, const char* const* overrides,
                                 size_t n_overrides, reno_experiment** out) {
  if (reno_status s = require(path && out, "path and out must be non-null")) return s;
  if (reno_status s = require(n_overrides == 0 || overrides != nullptr,
                              "overrides must be non-null when n_overrides > 0")) {
    return s;
  }
  return guarded([&] {
    std::vector<std::string> ov(overrides, overrides + n_overrides);
    auto e = std::make_unique<reno_experiment>();
    e->config = reno::load_config(path, ov);
    *out = e.release();
  });
}

reno_status reno_experiment_run(const reno_experiment* e, const char* out_dir,
                                int32_t emit_every) {
  if (reno_status s = require(e != nullptr, "experiment must be non-null")) return s;
  return guarded([&] {
    reno::run_single(e->config, experiment_out_dir(e, out_dir),
                     experiment_emit_every(e, emit_every));
  });
}

reno_status reno_experiment_sweep(const reno_experiment* e, const char* out_dir,
                                  int32_t emit_every, int32_t jobs) {
  if (reno_status s = require(e != nullptr, "experiment must be non-null")) return s;
  return guarded([&] {
    reno::run_sweep(e->config, experiment_out_dir(e, out_dir),
                    experiment_emit_every(e, emit_every), jobs);
  });
}

reno_status reno_experiment_loo(const reno_experiment* e, const char* held_out_term,
                                int32_t n_seeds, int32_t jobs, const char* out_dir) {
  if (reno_status s = require(e != nullptr, "experiment must be non-null")) return s;
  return guarded([&] {
    reno::StudyResult study = reno::run_leave_one_out(
        e->config, held_out_term ? held_out_term : "", n_seeds, jobs);
    reno::write_study_artifacts(study, experiment_out_dir(e, out_dir), "loo");
  });
}

reno_status reno_experiment_ablate(const reno_experiment* e, int32_t n_seeds, int32_t jobs,
                                   const char* out_dir) {
  if (reno_status s = require(e != nullptr, "experiment must be non-null")) return s;
  return guarded([&] {
    reno::StudyResult study = reno::run_reward_ablation(
        e->config, reno::all_nonempty_masks(e->config.terms.size()), n_seeds, jobs);
    reno::write_study_artifacts(study, experiment_out_dir(e, out_dir), "ablation");
  });
}

void reno_experiment_free(reno_experiment* e) { delete e; }

}  // extern "C"

namespace {

std::string experiment_out_dir(const reno_experiment* e, const char* out_dir) {
  return out_dir && *out_dir ? out_dir : e->config.output_directory;
}

int experiment_emit_every(const reno_experiment* e, int32_t emit_every) {
  return emit_every < 0 ? e->config.emit_every : emit_every;
}

}  // namespace
