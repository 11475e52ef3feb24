#include "biasforge/biasforge.h"

#include <cstring>
#include <exception>
#include <string>

#include "biasforge/commands.hpp"
#include "biasforge/counterfactual.hpp"
#include "biasforge/dataset_io.hpp"
#include "biasforge/error.hpp"
#include "biasforge/parallel.hpp"
#include "biasforge/params_io.hpp"
#include "biasforge/world_sim.hpp"

struct bf_params {
  biasforge::ModelParams value;
};

struct bf_dataset {
  biasforge::FullSampleDataset value;
};

namespace {

thread_local std::string g_last_error;

bf_status status_for(biasforge::ErrorKind kind) {
  switch (biasforge::exit_code_for(kind)) {
    case 3: return BF_ERR_IO;
    case 5: return BF_ERR_DEGENERATE;
    default: return BF_ERR_CONFIG;
  }
}

template <class F>
bf_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const biasforge::Error& e) {
    g_last_error = std::string(biasforge::to_string(e.kind())) + " error: " + e.what();
    return status_for(e.kind());
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return BF_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "internal error";
    return BF_ERR_INTERNAL;
  }
}

bf_status null_argument(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return BF_ERR_CONFIG;
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

biasforge::CommandOptions options(int has_seed, uint64_t seed) {
  biasforge::CommandOptions o;
  if (has_seed) o.seed = seed;
  return o;
}

bf_status from_exit(int code) { return code == 4 ? BF_NOT_CONVERGED : BF_OK; }

}  // namespace

extern "C" {

const char* bf_version(void) { return biasforge::kToolVersion; }

const char* bf_last_error(void) { return g_last_error.c_str(); }

void bf_set_threads(size_t n) { biasforge::set_worker_count_override(n); }

void bf_string_free(char* s) { delete[] s; }

bf_status bf_params_preset(const char* name, bf_params** out) {
  if (!name || !out) return null_argument("name/out");
  return guarded([&] {
    *out = new bf_params{biasforge::preset_by_name(name)};
    return BF_OK;
  });
}

bf_status bf_params_load(const char* path, bf_params** out) {
  if (!path || !out) return null_argument("path/out");
  return guarded([&] {
    *out = new bf_params{biasforge::load_params(path)};
    return BF_OK;
  });
}

bf_status bf_params_from_json(const char* json, bf_params** out) {
  if (!json || !out) return null_argument("json/out");
  return guarded([&] {
    biasforge::Json j;
    try {
      j = biasforge::Json::parse(json);
    } catch (const biasforge::Json::parse_error& e) {
      throw biasforge::Error(biasforge::ErrorKind::Config, std::string("invalid JSON: ") + e.what());
    }
    *out = new bf_params{biasforge::params_from_json(j)};
    return BF_OK;
  });
}

bf_status bf_params_to_json(const bf_params* p, char** json_out) {
  if (!p || !json_out) return null_argument("params/json_out");
  return guarded([&] {
    *json_out = copy_string(biasforge::dump_json(biasforge::params_to_json(p->value)));
    return BF_OK;
  });
}

bf_status bf_params_get(const bf_params* p, const char* name, double* value) {
  if (!p || !name || !value) return null_argument("params/name/value");
  return guarded([&] {
    const auto v = biasforge::get_parameter(p->value, name);
    if (!v)
      throw biasforge::Error(biasforge::ErrorKind::Config,
                             std::string("unknown parameter '") + name + "'");
    *value = *v;
    return BF_OK;
  });
}

bf_status bf_params_set(bf_params* p, const char* name, double value) {
  if (!p || !name) return null_argument("params/name");
  return guarded([&] {
    biasforge::ModelParams next = p->value;
    biasforge::set_parameter(next, name, value);
    next.validate();
    p->value = std::move(next);
    return BF_OK;
  });
}

void bf_params_free(bf_params* p) { delete p; }

bf_status bf_dataset_generate(const char* world_config_json, bf_dataset** out) {
  if (!world_config_json || !out) return null_argument("config/out");
  return guarded([&] {
    biasforge::Json j;
    try {
      j = biasforge::Json::parse(world_config_json);
    } catch (const biasforge::Json::parse_error& e) {
      throw biasforge::Error(biasforge::ErrorKind::Config, std::string("invalid JSON: ") + e.what());
    }
    const auto config = biasforge::world_config_from_json(j);
    *out = new bf_dataset{biasforge::simulate_full_sample(config)};
    return BF_OK;
  });
}

bf_status bf_dataset_load(const char* dir, bf_dataset** out) {
  if (!dir || !out) return null_argument("dir/out");
  return guarded([&] {
    *out = new bf_dataset{biasforge::read_full_sample(dir)};
    return BF_OK;
  });
}

bf_status bf_dataset_save(const bf_dataset* d, const char* dir) {
  if (!d || !dir) return null_argument("dataset/dir");
  return guarded([&] {
    biasforge::write_full_sample(dir, d->value);
    return BF_OK;
  });
}

size_t bf_dataset_applicant_count(const bf_dataset* d) { return d ? d->value.applicant_count() : 0; }

size_t bf_dataset_application_count(const bf_dataset* d) {
  return d ? d->value.application_count() : 0;
}

void bf_dataset_free(bf_dataset* d) { delete d; }

bf_status bf_scenario_report(const bf_dataset* d, const bf_params* p, const char* scenario,
                             char** json_out) {
  if (!d || !p || !scenario || !json_out) return null_argument("dataset/params/scenario/json_out");
  return guarded([&] {
    using namespace biasforge;
    Json out;
    if (std::string(scenario) == "grid") {
      out = grid_to_json(scenario_grid(d->value, p->value));
    } else {
      out = to_json(run_scenario(d->value, ScenarioConfig::for_cell(parse_scenario(scenario), p->value)));
    }
    *json_out = copy_string(dump_json(out));
    return BF_OK;
  });
}

bf_status bf_update_belief(const bf_params* p, double prior_mean, const double signals[4],
                           double* posterior_mean) {
  if (!p || !signals || !posterior_mean) return null_argument("params/signals/posterior_mean");
  return guarded([&] {
    biasforge::RepaymentSignals s;
    for (biasforge::SignalKind k : biasforge::kAllSignals) s.set(k, signals[static_cast<int>(k)]);
    *posterior_mean = biasforge::update_belief({prior_mean, 0.0}, s, p->value).mean;
    return BF_OK;
  });
}

bf_status bf_run_generate(const char* config_path, const char* out_dir, int has_seed,
                          uint64_t seed) {
  if (!config_path || !out_dir) return null_argument("config_path/out_dir");
  return guarded([&] {
    return from_exit(biasforge::cmd_generate(config_path, out_dir, options(has_seed, seed)));
  });
}

bf_status bf_run_estimate(const char* data_dir, const char* config_path, const char* out_path,
                          int has_seed, uint64_t seed) {
  if (!data_dir || !config_path || !out_path) return null_argument("data_dir/config_path/out_path");
  return guarded([&] {
    return from_exit(
        biasforge::cmd_estimate(data_dir, config_path, out_path, options(has_seed, seed)));
  });
}

bf_status bf_run_counterfact(const char* data_dir, const char* params_path, const char* out_dir,
                             const char* scenario, const char* convention, int has_seed,
                             uint64_t seed) {
  if (!data_dir || !params_path || !out_dir || !scenario)
    return null_argument("data_dir/params_path/out_dir/scenario");
  return guarded([&] {
    return from_exit(biasforge::cmd_counterfact(data_dir, params_path, out_dir, scenario,
                                                convention ? convention : "expected",
                                                options(has_seed, seed)));
  });
}

bf_status bf_run_ml_audit(const char* data_dir, const char* params_path,
                          const char* audit_config_path, const char* out_dir, int has_seed,
                          uint64_t seed) {
  if (!data_dir || !params_path || !audit_config_path || !out_dir)
    return null_argument("data_dir/params_path/audit_config_path/out_dir");
  return guarded([&] {
    return from_exit(biasforge::cmd_ml_audit(data_dir, params_path, audit_config_path, out_dir,
                                             options(has_seed, seed)));
  });
}

}  // extern "C"
