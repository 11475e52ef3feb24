#include "biasforge/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fcntl.h>
#include <unistd.h>

#include <openssl/evp.h>

#include "biasforge/counterfactual.hpp"
#include "biasforge/dataset_io.hpp"
#include "biasforge/error.hpp"
#include "biasforge/estimator.hpp"
#include "biasforge/ml_audit.hpp"
#include "biasforge/params_io.hpp"
#include "biasforge/world_sim.hpp"

namespace biasforge {
namespace fs = std::filesystem;
namespace {

constexpr const char* kLockName = ".biasforge.lock";

// Advisory lock: one writer per output directory.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / kLockName) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
      throw Error(ErrorKind::Io, "output directory " + dir.string() +
                                     " is locked by another run (remove " + path_.string() +
                                     " if stale)");
    ::close(fd);
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
};

using Clock = std::chrono::steady_clock;

struct Manifest {
  std::string command;
  Json config;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  Clock::time_point start = Clock::now();

  void write(const fs::path& path) const {
    const double wall = std::chrono::duration<double>(Clock::now() - start).count();
    write_json_file(path, {{"command", command},
                           {"config_hash", config_hash(config)},
                           {"seed", seed},
                           {"tool_version", kToolVersion},
                           {"inputs", inputs},
                           {"outputs", outputs},
                           {"wall_time", wall}});
  }
};

Json read_config(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return read_json_file(path);
}

}  // namespace

std::string config_hash(const Json& config) {
  const std::string text = config.dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::Numerical, "sha256 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

int cmd_generate(const fs::path& config_path, const fs::path& out_dir,
                 const CommandOptions& options) {
  Json config = read_config(config_path);
  if (options.seed) config["seed"] = *options.seed;
  WorldConfig world = world_config_from_json(config);

  std::optional<ModelParams> evaluator;
  std::uint64_t decision_seed = world.seed;
  if (config.contains("evaluator")) {
    const Json& ev = config["evaluator"];
    evaluator = params_from_json(cfg::require(ev, "params", "/evaluator"));
    decision_seed = cfg::get_or<std::uint64_t>(ev, "decision_seed", "/evaluator", world.seed);
    if (options.seed) decision_seed = *options.seed;
  }

  DirLock lock(out_dir);
  Manifest m;
  m.command = "generate";
  m.config = config;
  m.seed = world.seed;
  m.inputs = {config_path.string()};
  const FullSampleDataset ds = simulate_full_sample(world);
  write_full_sample(out_dir, ds);
  m.outputs = {"applicants.csv", "loans.csv", "signals.csv", "outcomes.csv"};
  if (evaluator) {
    const auto records =
        simulate_decisions(ds, *evaluator, DecisionMode::SampleDecisions, decision_seed);
    write_decisions(out_dir / "decisions.csv", ds, records);
    m.outputs.push_back("decisions.csv");
  }
  m.write(out_dir / "manifest.json");
  return 0;
}

int cmd_estimate(const fs::path& data_dir, const fs::path& config_path, const fs::path& out_path,
                 const CommandOptions& options) {
  Json config = read_config(config_path);
  if (options.seed) config["seed"] = *options.seed;
  const EstimationConfig est = estimation_config_from_json(config);
  const DecisionLog log = read_decision_log(data_dir);

  const fs::path out_dir = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
  DirLock lock(out_dir);
  Manifest m;
  m.command = "estimate";
  m.config = config;
  m.seed = est.seed;
  m.inputs = {data_dir.string(), config_path.string()};
  const EstimateReport report = fit(log, est);
  write_json_file(out_path, to_json(report));
  m.outputs = {out_path.filename().string()};
  m.write(fs::path(out_path.string() + ".manifest.json"));
  return report.converged ? 0 : 4;
}

int cmd_counterfact(const fs::path& data_dir, const fs::path& params_path, const fs::path& out_dir,
                    const std::string& scenario, const std::string& convention,
                    const CommandOptions& options) {
  const bool grid = scenario == "grid";
  const ScenarioCell cell = grid ? ScenarioCell::Baseline : parse_scenario(scenario);
  TprConvention conv;
  if (convention == "expected") conv = TprConvention::Expected;
  else if (convention == "sampled") conv = TprConvention::Sampled;
  else throw Error(ErrorKind::Config, "unknown TPR convention '" + convention + "'");
  if (!fs::exists(params_path)) throw Error(ErrorKind::Io, "cannot open " + params_path.string());
  const ModelParams params = load_params(params_path);
  const std::uint64_t seed = options.seed.value_or(0);
  const FullSampleDataset ds = read_full_sample(data_dir);

  DirLock lock(out_dir);
  Manifest m;
  m.command = "counterfact";
  m.config = {{"params", params_to_json(params)},
              {"scenario", scenario},
              {"convention", convention},
              {"seed", seed}};
  m.seed = seed;
  m.inputs = {data_dir.string(), params_path.string()};

  std::vector<ScenarioReport> reports;
  Json out;
  for (ScenarioCell c : kScenarioGrid) {
    if (!grid && c != cell) continue;
    ScenarioConfig sc = ScenarioConfig::for_cell(c, params);
    sc.convention = conv;
    sc.seed = seed;
    reports.push_back(run_scenario(ds, sc));
    if (grid) out[std::string(to_string(c))] = to_json(reports.back());
    else out = to_json(reports.back());
  }
  write_json_file(out_dir / "scenarios.json", out);
  write_text_file(out_dir / "scenarios.csv", reports_csv(reports));
  m.outputs = {"scenarios.json", "scenarios.csv"};
  m.write(out_dir / "manifest.json");
  return 0;
}

int cmd_ml_audit(const fs::path& data_dir, const fs::path& params_path,
                 const fs::path& audit_config_path, const fs::path& out_dir,
                 const CommandOptions& options) {
  if (!fs::exists(params_path)) throw Error(ErrorKind::Io, "cannot open " + params_path.string());
  const ModelParams params = load_params(params_path);
  Json config = read_config(audit_config_path);
  if (options.seed) config["seed"] = *options.seed;
  const bool grid = config.is_object() && config.value("scenario", Json("baseline")) == "grid";
  Json single = config;
  if (grid) single["scenario"] = "baseline";
  const AuditConfig base = audit_config_from_json(single, params);
  const FullSampleDataset ds = read_full_sample(data_dir);

  DirLock lock(out_dir);
  Manifest m;
  m.command = "ml-audit";
  m.config = {{"audit", config}, {"params", params_to_json(params)}};
  m.seed = base.seed;
  m.inputs = {data_dir.string(), params_path.string(), audit_config_path.string()};

  std::vector<ScenarioReport> reports;
  Json report_json, models;
  for (ScenarioCell c : kScenarioGrid) {
    if (!grid && c != base.scenario.cell()) continue;
    AuditConfig ac = base;
    ac.scenario = ScenarioConfig::for_cell(c, params);
    const AuditResult r = audit(ds, ac);
    reports.push_back(r.report);
    const std::string key(to_string(c));
    if (grid) {
      report_json[key] = to_json(r);
      models[key] = r.model;
    } else {
      report_json = to_json(r);
      models = r.model;
    }
  }
  write_json_file(out_dir / "audit.json", report_json);
  write_text_file(out_dir / "audit.csv", reports_csv(reports));
  write_json_file(out_dir / "model.json", models);
  m.outputs = {"audit.json", "audit.csv", "model.json"};
  m.write(out_dir / "manifest.json");
  return 0;
}

}  // namespace biasforge
