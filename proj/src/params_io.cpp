#include "biasforge/params_io.hpp"

#include <string>

namespace biasforge {

ModelParams table2_preset() {
  ModelParams p;
  p.beta = {{"constant", -0.8961},       {"first_app_month", -0.0201}, {"housing", 0.1458},
            {"education", 0.2443},       {"income", 0.0936},           {"dpi", 0.1176}};
  p.beta_male = -0.1042;
  p.c_male = 0.2390;
  p.z = 0.0154;
  p.signal_maps[SignalKind::D] = {-0.0138, 0.5219, 0.0097, SignalTransform::Log1p};
  p.signal_maps[SignalKind::A] = {0.3492, 0.3788, 0.9780, SignalTransform::Identity};
  p.signal_maps[SignalKind::H] = {0.9803, 0.1252, 0.0121, SignalTransform::Identity};
  p.sigma_q0 = 1.0;
  p.signal_noise_sd = {{SignalKind::D, 1.0}, {SignalKind::A, 1.0}, {SignalKind::H, 1.0}};
  p.updater = Updater::WeightedSum;
  p.shock = ShockDistribution::Logistic;
  return p;
}

ModelParams preset_by_name(std::string_view name) {
  if (name == "table2" || name == kTable2PresetName) return table2_preset();
  throw Error(ErrorKind::Config, "unknown parameter preset '" + std::string(name) + "'");
}

Json params_to_json(const ModelParams& params) {
  Json j;
  Json beta = Json::array();
  for (const auto& c : params.beta) beta.push_back({{"name", c.name}, {"value", c.value}});
  j["beta"] = beta;
  j["beta_male"] = params.beta_male;
  j["c_male"] = params.c_male;
  j["z"] = params.z;
  Json signals = Json::object();
  for (const auto& [kind, m] : params.signal_maps) {
    signals[std::string(to_string(kind))] = {{"slope", m.slope},
                                             {"intercept", m.intercept},
                                             {"weight", m.weight},
                                             {"transform", std::string(to_string(m.transform))}};
  }
  j["signals"] = signals;
  j["sigma_q0"] = params.sigma_q0;
  Json noise = Json::object();
  for (const auto& [kind, sd] : params.signal_noise_sd) noise[std::string(to_string(kind))] = sd;
  j["signal_noise_sd"] = noise;
  j["updater"] = std::string(to_string(params.updater));
  j["shock"] = std::string(to_string(params.shock));
  return j;
}

ModelParams params_from_json(const Json& input) {
  if (input.is_object() && input.contains("estimates")) return params_from_json(input["estimates"]);
  if (input.is_string()) return preset_by_name(input.get<std::string>());
  if (input.is_object() && input.contains("preset"))
    return preset_by_name(cfg::get<std::string>(input, "preset", ""));

  ModelParams p;
  const Json& beta = cfg::require(input, "beta", "");
  if (!beta.is_array()) throw Error(ErrorKind::Config, "field /beta must be an array");
  for (std::size_t i = 0; i < beta.size(); ++i) {
    const std::string path = "/beta/" + std::to_string(i);
    p.beta.push_back({cfg::get<std::string>(beta[i], "name", path),
                      cfg::get<double>(beta[i], "value", path)});
  }
  p.beta_male = cfg::get<double>(input, "beta_male", "");
  p.c_male = cfg::get<double>(input, "c_male", "");
  p.z = cfg::get<double>(input, "z", "");
  const Json& signals = cfg::require(input, "signals", "");
  if (!signals.is_object()) throw Error(ErrorKind::Config, "field /signals must be an object");
  for (const auto& [key, m] : signals.items()) {
    const std::string path = "/signals/" + key;
    SignalMap map;
    map.slope = cfg::get<double>(m, "slope", path);
    map.intercept = cfg::get<double>(m, "intercept", path);
    map.weight = cfg::get<double>(m, "weight", path);
    map.transform = parse_transform(cfg::get_or<std::string>(
        m, "transform", path, key == "D" ? "log1p" : "identity"));
    p.signal_maps[parse_signal(key)] = map;
  }
  p.sigma_q0 = cfg::get_or<double>(input, "sigma_q0", "", 1.0);
  if (input.contains("signal_noise_sd")) {
    for (const auto& [key, sd] : input["signal_noise_sd"].items()) {
      if (!sd.is_number())
        throw Error(ErrorKind::Config, "field /signal_noise_sd/" + key + " must be a number");
      p.signal_noise_sd[parse_signal(key)] = sd.get<double>();
    }
  }
  p.updater = parse_updater(cfg::get_or<std::string>(input, "updater", "", "weighted_sum"));
  p.shock = parse_shock(cfg::get_or<std::string>(input, "shock", "", "logistic"));
  p.validate();
  return p;
}

ModelParams load_params(const std::filesystem::path& path) {
  return params_from_json(read_json_file(path));
}

void save_params(const std::filesystem::path& path, const ModelParams& params) {
  Json j = params_to_json(params);
  write_json_file(path, j);
}

}  // namespace biasforge
