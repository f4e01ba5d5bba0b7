#pragma once

#include "invctl/bounds.hpp"
#include "invctl/error.hpp"
#include "invctl/kernels.hpp"
#include "invctl/plants.hpp"
#include "invctl/types.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace invctl {

struct KernelSpec {
  std::string family = "squared_exponential";  // or laplacian, matern52, ard_matern52
  double signal_scale = 1.0;
  std::vector<double> length_scales;  // empty: per-dimension std of the training inputs
  std::vector<double> grid_signal_scales;
  std::vector<double> grid_length_multipliers;

  bool has_grid() const { return !grid_signal_scales.empty() || !grid_length_multipliers.empty(); }
};

struct RunConfig {
  // run
  std::string plant = "numerical";
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  bool noisy = false;

  // data
  int order = 2;
  int delay = 1;
  GridPairing pairing = GridPairing::independent;
  int inputs_per_state = 10;
  int trajectory_length = 200;

  // kernel / fit
  KernelSpec kernel;
  double lambda = 0.0;
  double lambda_noisy = 1.0;

  // bounds
  double L_f = numerical::L_f;
  double L_c = numerical::L_c;
  std::optional<double> Gamma = 1.0;  // absent: safety factor times the fitted norm estimate
  double Gamma_safety = 2.0;
  EtaMode eta_mode = EtaMode::explicit_form;
  double eta_denominator = 16.0;
  GammaMode gamma_mode = GammaMode::composed;
  double gamma_slope = 1.005;

  // controller
  std::vector<double> deltas;
  int kappa_bar = 20;

  // simulate
  std::vector<Vector> initial_states;
  int horizon = 10;
  int steady_state_from = 0;  // first step of the tail statistic in the summary

  // noise, used with --noisy
  double sigma_dataset = 0.01;
  double sigma_online = 0.01;

  // verify
  int verify_samples = 1000;
  int verify_grid = 10;
  int sphere_samples = 200;
  int geometry_configs = 100;

  double active_lambda() const { return noisy ? lambda_noisy : lambda; }
  NoiseSpec noise() const { return noisy ? NoiseSpec{sigma_dataset, sigma_online, seed} : NoiseSpec{0.0, 0.0, seed}; }

  void validate() const {
    if (plant != "numerical" && plant != "pendulum") throw ConfigError("plant must be numerical or pendulum");
    if (order != 2) throw ConfigError("both benchmark plants have order 2");
    if ((plant == "numerical" && delay != 1) || (plant == "pendulum" && delay != 2))
      throw ConfigError("delay does not match the plant");
    if (inputs_per_state < 1) throw ConfigError("inputs_per_state must be at least 1");
    if (trajectory_length < order + delay) throw ConfigError("trajectory_length too short");
    if (!(lambda >= 0.0) || !(lambda_noisy >= 0.0)) throw ConfigError("lambda must be non-negative");
    if (!(kernel.signal_scale > 0.0)) throw ConfigError("signal_scale must be positive");
    for (double l : kernel.length_scales)
      if (!(l > 0.0)) throw ConfigError("length scales must be positive");
    if (kernel.family != "ard_matern52" && kernel.length_scales.size() > 1)
      throw ConfigError("isotropic kernels take one length scale");
    if (kernel.family == "ard_matern52" && !kernel.length_scales.empty() &&
        kernel.length_scales.size() != static_cast<std::size_t>(2 * order))
      throw ConfigError("ARD kernel needs one length scale per input dimension");
    if (kernel.family != "ard_matern52") kernel_family_from_string(kernel.family);
    for (double s : kernel.grid_signal_scales)
      if (!(s > 0.0)) throw ConfigError("grid signal scales must be positive");
    for (double s : kernel.grid_length_multipliers)
      if (!(s > 0.0)) throw ConfigError("grid length multipliers must be positive");
    if (Gamma && !(*Gamma >= 0.0)) throw ConfigError("Gamma must be non-negative");
    if (!(Gamma_safety > 0.0)) throw ConfigError("Gamma_safety must be positive");
    if (!(L_f > 0.0) || !(L_c > 0.0)) throw ConfigError("Lipschitz constants must be positive");
    if (!(eta_denominator > 0.0)) throw ConfigError("eta_denominator must be positive");
    if (!(gamma_slope > 0.0)) throw ConfigError("gamma_slope must be positive");
    if (deltas.empty()) throw ConfigError("deltas must not be empty");
    for (std::size_t k = 0; k < deltas.size(); ++k) {
      if (!(deltas[k] > 0.0)) throw ConfigError("deltas must be positive");
      if (k > 0 && !(deltas[k] > deltas[k - 1])) throw ConfigError("deltas must be strictly ascending");
    }
    if (kappa_bar < 1) throw ConfigError("kappa_bar must be at least 1");
    if (horizon < 1) throw ConfigError("horizon must be at least 1");
    if (initial_states.empty()) throw ConfigError("initial_states must not be empty");
    for (const auto& z : initial_states)
      if (z.size() != 2 * order - 1) throw ConfigError("initial state dimension must be 2n-1");
    if (!(sigma_dataset >= 0.0) || !(sigma_online >= 0.0)) throw ConfigError("noise std must be non-negative");
    if (verify_samples < 1 || verify_grid < 2 || sphere_samples < 1 || geometry_configs < 1)
      throw ConfigError("verify counts must be positive");
  }
};

/// Settings that reproduce each benchmark experiment.
inline RunConfig default_config(const std::string& plant) {
  RunConfig c;
  c.plant = plant;
  if (plant == "numerical") {
    c.delay = 1;
    c.kernel.family = "squared_exponential";
    c.kernel.signal_scale = 1.0;
    c.kernel.length_scales = {2.0 * std::sqrt(2.0)};
    c.L_f = numerical::L_f;
    c.L_c = numerical::L_c;
    c.Gamma = 1.0;
    c.eta_mode = EtaMode::explicit_form;
    c.eta_denominator = 16.0;
    c.gamma_mode = GammaMode::composed;
    c.deltas = {0.1, 0.2, 0.3, 0.4, 0.5, 1.0, 1.5, 2.0, 3.0};
    c.kappa_bar = 20;
    for (double a : {-1.0, -0.5, 0.0, 0.5, 1.0}) c.initial_states.push_back((Vector(3) << a, a, 0.0).finished());
    c.horizon = 10;
    c.steady_state_from = 4;
  } else if (plant == "pendulum") {
    const PendulumPlant p;
    c.delay = 2;
    c.kernel.family = "ard_matern52";
    c.kernel.signal_scale = 5.0;
    c.kernel.length_scales = {};
    c.kernel.grid_length_multipliers = {0.5, 1.0, 2.0};
    c.lambda = 0.0;
    c.lambda_noisy = 1.0;
    c.L_f = p.lipschitz_f();
    c.L_c = p.lipschitz_c();
    c.Gamma = std::nullopt;
    c.Gamma_safety = 2.0;
    c.eta_mode = EtaMode::profile;
    c.gamma_mode = GammaMode::linear;
    c.gamma_slope = 1.005;
    c.deltas = {0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1, 0.3, 0.6};
    c.kappa_bar = 100;
    for (double a : {0.1, -0.1, 0.05, -0.05}) c.initial_states.push_back((Vector(3) << a, a, 0.0).finished());
    c.horizon = 500;
    c.steady_state_from = 400;
    c.sigma_dataset = 0.01;
    c.sigma_online = 0.01;
  } else {
    throw ConfigError("unknown plant: " + plant);
  }
  return c;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_list(const std::string& text, char sep = ',') {
  std::vector<double> out;
  std::istringstream ss(text);
  for (std::string cell; std::getline(ss, cell, sep);) {
    cell = trim(cell);
    if (!cell.empty()) out.push_back(parse_double(cell));
  }
  return out;
}

inline bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("not a boolean: " + text);
}

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"run", {"plant", "seed", "out", "noisy"}},
      {"data", {"order", "delay", "pairing", "inputs_per_state", "trajectory_length"}},
      {"kernel", {"family", "signal_scale", "length_scales", "grid_signal_scales", "grid_length_multipliers", "lambda",
                  "lambda_noisy"}},
      {"bounds", {"L_f", "L_c", "Gamma", "Gamma_safety", "eta_mode", "eta_denominator", "gamma_mode", "gamma_slope"}},
      {"controller", {"deltas", "kappa_bar", "fallback"}},
      {"simulate", {"initial_states", "horizon", "steady_state_from"}},
      {"noise", {"sigma_dataset", "sigma_online"}},
      {"verify", {"samples", "grid_points", "sphere_samples", "geometry_configs"}},
  };
  return schema;
}

}  // namespace detail

struct ConfigOverrides {
  std::optional<std::string> plant;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  bool noisy = false;
};

/// Defaults for the plant, then the file's keys, then command-line overrides.
inline RunConfig load_config(std::istream* in, const ConfigOverrides& ov = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  if (in) {
    try {
      pt::read_ini(*in, tree);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError(std::string("config parse error: ") + e.what());
    }
  }
  const auto& schema = detail::config_schema();
  for (const auto& [section, body] : tree) {
    const auto it = schema.find(section);
    if (it == schema.end()) throw ConfigError("unknown config section [" + section + "]");
    if (!body.data().empty()) throw ConfigError("top-level key outside a section: " + section);
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigError("unknown key " + key + " in [" + section + "]");
  }
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (const auto v = tree.get_optional<std::string>(path)) return detail::trim(*v);
    return std::nullopt;
  };

  std::string plant = ov.plant.value_or(get("run.plant").value_or("numerical"));
  RunConfig c = default_config(plant);
  try {
    if (auto v = get("run.seed")) c.seed = std::stoull(*v);
    if (auto v = get("run.out")) c.out = *v;
    if (auto v = get("run.noisy")) c.noisy = detail::parse_bool(*v);

    if (auto v = get("data.order")) c.order = std::stoi(*v);
    if (auto v = get("data.delay")) c.delay = std::stoi(*v);
    if (auto v = get("data.pairing")) {
      if (*v == "independent") c.pairing = GridPairing::independent;
      else if (*v == "tied") c.pairing = GridPairing::tied;
      else throw ConfigError("pairing must be independent or tied");
    }
    if (auto v = get("data.inputs_per_state")) c.inputs_per_state = std::stoi(*v);
    if (auto v = get("data.trajectory_length")) c.trajectory_length = std::stoi(*v);

    if (auto v = get("kernel.family")) c.kernel.family = *v;
    if (auto v = get("kernel.signal_scale")) c.kernel.signal_scale = parse_double(*v);
    if (auto v = get("kernel.length_scales")) c.kernel.length_scales = *v == "auto" ? std::vector<double>{} : detail::parse_list(*v);
    if (auto v = get("kernel.grid_signal_scales")) c.kernel.grid_signal_scales = detail::parse_list(*v);
    if (auto v = get("kernel.grid_length_multipliers")) c.kernel.grid_length_multipliers = detail::parse_list(*v);
    if (auto v = get("kernel.lambda")) c.lambda = parse_double(*v);
    if (auto v = get("kernel.lambda_noisy")) c.lambda_noisy = parse_double(*v);

    if (auto v = get("bounds.L_f")) c.L_f = parse_double(*v);
    if (auto v = get("bounds.L_c")) c.L_c = parse_double(*v);
    if (auto v = get("bounds.Gamma")) c.Gamma = *v == "auto" ? std::nullopt : std::optional<double>(parse_double(*v));
    if (auto v = get("bounds.Gamma_safety")) c.Gamma_safety = parse_double(*v);
    if (auto v = get("bounds.eta_mode")) c.eta_mode = eta_mode_from_string(*v);
    if (auto v = get("bounds.eta_denominator")) c.eta_denominator = parse_double(*v);
    if (auto v = get("bounds.gamma_mode")) c.gamma_mode = gamma_mode_from_string(*v);
    if (auto v = get("bounds.gamma_slope")) c.gamma_slope = parse_double(*v);

    if (auto v = get("controller.deltas")) c.deltas = detail::parse_list(*v);
    if (auto v = get("controller.kappa_bar")) c.kappa_bar = std::stoi(*v);
    if (auto v = get("controller.fallback"); v && *v != "nearest")
      throw ConfigError("fallback must be nearest");

    if (auto v = get("simulate.initial_states")) {
      c.initial_states.clear();
      std::istringstream ss(*v);
      for (std::string cell; std::getline(ss, cell, ';');) {
        const auto values = detail::parse_list(cell);
        if (values.empty()) continue;
        c.initial_states.push_back(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
      }
    }
    if (auto v = get("simulate.horizon")) c.horizon = std::stoi(*v);
    if (auto v = get("simulate.steady_state_from")) c.steady_state_from = std::stoi(*v);

    if (auto v = get("noise.sigma_dataset")) c.sigma_dataset = parse_double(*v);
    if (auto v = get("noise.sigma_online")) c.sigma_online = parse_double(*v);

    if (auto v = get("verify.samples")) c.verify_samples = std::stoi(*v);
    if (auto v = get("verify.grid_points")) c.verify_grid = std::stoi(*v);
    if (auto v = get("verify.sphere_samples")) c.sphere_samples = std::stoi(*v);
    if (auto v = get("verify.geometry_configs")) c.geometry_configs = std::stoi(*v);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw ConfigError(std::string("config value out of range: ") + e.what());
  }

  if (ov.seed) c.seed = *ov.seed;
  if (ov.out) c.out = *ov.out;
  if (ov.noisy) c.noisy = true;
  c.validate();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& ov = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  return load_config(&in, ov);
}

inline RunConfig load_config_text(const std::string& text, const ConfigOverrides& ov = {}) {
  std::istringstream in(text);
  return load_config(&in, ov);
}

}  // namespace invctl
