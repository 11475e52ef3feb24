// Command-line front end. Talks to the library only through the C API.
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "biasforge/biasforge.h"

namespace {

int report(bf_status status) {
  if (status != BF_OK && status != BF_NOT_CONVERGED)
    std::fprintf(stderr, "biasforge: %s\n", bf_last_error());
  if (status == BF_NOT_CONVERGED) std::fprintf(stderr, "biasforge: estimation did not converge\n");
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Biased loan-approval model: simulation, estimation, counterfactuals, ML audits"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(bf_version()));

  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: BIASFORGE_THREADS or all cores)");
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = app.add_option("--seed", seed, "Override every seed in the config");
  seed_opt->configurable(false);

  std::string config, out, data, params, scenario = "grid", convention = "expected", preset_name;

  auto* gen = app.add_subcommand("generate", "Simulate a full-sample dataset");
  gen->add_option("--config", config, "World config JSON")->required();
  gen->add_option("--out", out, "Output directory")->required();

  auto* est = app.add_subcommand("estimate", "Fit evaluator parameters to a decision log");
  est->add_option("--data", data, "Directory with applicants/loans/signals/decisions CSVs")->required();
  est->add_option("--config", config, "Estimation config JSON")->required();
  est->add_option("--out", out, "Report JSON path")->required();

  auto* cf = app.add_subcommand("counterfact", "Run the de-biasing scenario grid");
  cf->add_option("--data", data, "Full-sample dataset directory")->required();
  cf->add_option("--params", params, "Evaluator params JSON")->required();
  cf->add_option("--out", out, "Output directory")->required();
  cf->add_option("--scenario", scenario, "baseline | pref0 | belief0 | both0 | grid");
  cf->add_option("--convention", convention, "expected | sampled");

  auto* ml = app.add_subcommand("ml-audit", "Train learners on scenario worlds and audit them");
  ml->add_option("--data", data, "Full-sample dataset directory")->required();
  ml->add_option("--params", params, "Evaluator params JSON")->required();
  ml->add_option("--config", config, "Audit config JSON")->required();
  ml->add_option("--out", out, "Output directory")->required();

  auto* pre = app.add_subcommand("preset", "Print a built-in parameter preset as JSON");
  pre->add_option("name", preset_name, "Preset name")->default_val("table2-v1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(BF_ERR_CONFIG);
  }

  if (threads > 0) bf_set_threads(threads);
  const int has_seed = seed_opt->count() > 0 ? 1 : 0;

  if (*gen) return report(bf_run_generate(config.c_str(), out.c_str(), has_seed, seed));
  if (*est)
    return report(bf_run_estimate(data.c_str(), config.c_str(), out.c_str(), has_seed, seed));
  if (*cf)
    return report(bf_run_counterfact(data.c_str(), params.c_str(), out.c_str(), scenario.c_str(),
                                     convention.c_str(), has_seed, seed));
  if (*ml)
    return report(bf_run_ml_audit(data.c_str(), params.c_str(), config.c_str(), out.c_str(),
                                  has_seed, seed));
  if (*pre) {
    bf_params* p = nullptr;
    if (bf_params_preset(preset_name.c_str(), &p) != BF_OK) return report(BF_ERR_CONFIG);
    char* json = nullptr;
    const bf_status st = bf_params_to_json(p, &json);
    if (st == BF_OK) std::cout << json;
    bf_string_free(json);
    bf_params_free(p);
    return report(st);
  }
  return 0;
}
