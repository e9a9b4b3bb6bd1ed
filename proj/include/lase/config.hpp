#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "lase/trainer.hpp"

// JSON form of TrainRun. Every key is optional; unknown keys are rejected.
//
//   {
//     "arch": "sage", "depth": 2, "hidden": 64, "activation": "relu",
//     "combine": "concat", "amplifier_sigmoid": false, "kernel_mode": false,
//     "constant_decay": 0.5, "rw_central_term": false, "wl_depth": 1,
//     "relabel_activation": "sigmoid",
//     "optimizer": {"kind": "adam", "lr": 0.001, "beta1": 0.9, "beta2": 0.999,
//                   "eps": 1e-8, "weight_decay": 0},
//     "batch_size": 32, "max_epochs": 100, "patience": 10,
//     "sampling": {"strategy": "full", "sample_size": 4, "refresh_interval": 1},
//     "seed": 42, "snr": "inf"
//   }

namespace lase {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (known.count(key) == 0) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

inline double parse_snr(const nlohmann::json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "Inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    throw ConfigError("snr: expected a number or \"inf\", got '" + s + "'");
  }
  if (!v.is_number()) throw ConfigError("snr: expected a number or \"inf\"");
  return v.get<double>();
}

}  // namespace detail

inline TrainRun train_run_from_json(const nlohmann::json& j) {
  detail::reject_unknown(j,
                         {"arch", "depth", "hidden", "activation", "combine", "amplifier_sigmoid", "kernel_mode",
                          "constant_decay", "rw_central_term", "wl_depth", "relabel_activation", "optimizer",
                          "batch_size", "max_epochs", "patience", "sampling", "seed", "snr"},
                         "config");
  TrainRun r;
  try {
    if (j.contains("arch")) r.stack.arch = parse_architecture(j.at("arch").get<std::string>());
    if (j.contains("activation")) r.stack.output_activation = parse_activation(j.at("activation").get<std::string>());
    if (j.contains("combine")) r.stack.combine = parse_combine(j.at("combine").get<std::string>());
    if (j.contains("relabel_activation")) {
      r.stack.relabel_activation = parse_activation(j.at("relabel_activation").get<std::string>());
    }
    detail::read_opt(j, "depth", r.stack.depth);
    detail::read_opt(j, "hidden", r.stack.hidden);
    detail::read_opt(j, "amplifier_sigmoid", r.stack.amplifier_sigmoid);
    detail::read_opt(j, "kernel_mode", r.stack.kernel_mode);
    detail::read_opt(j, "constant_decay", r.stack.constant_decay);
    detail::read_opt(j, "rw_central_term", r.stack.rw_central_term);
    detail::read_opt(j, "wl_depth", r.stack.wl_depth);
    detail::read_opt(j, "batch_size", r.batch_size);
    detail::read_opt(j, "max_epochs", r.max_epochs);
    detail::read_opt(j, "patience", r.patience);
    detail::read_opt(j, "seed", r.seed);
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      detail::reject_unknown(o, {"kind", "lr", "beta1", "beta2", "eps", "weight_decay"}, "config.optimizer");
      if (o.contains("kind")) r.optimizer.kind = parse_optimizer(o.at("kind").get<std::string>());
      detail::read_opt(o, "lr", r.optimizer.lr);
      detail::read_opt(o, "beta1", r.optimizer.beta1);
      detail::read_opt(o, "beta2", r.optimizer.beta2);
      detail::read_opt(o, "eps", r.optimizer.eps);
      detail::read_opt(o, "weight_decay", r.optimizer.weight_decay);
    }
    if (j.contains("sampling")) {
      const auto& p = j.at("sampling");
      detail::reject_unknown(p, {"strategy", "sample_size", "refresh_interval"}, "config.sampling");
      if (p.contains("strategy")) r.plan.strategy = parse_strategy(p.at("strategy").get<std::string>());
      detail::read_opt(p, "sample_size", r.plan.sample_size);
      detail::read_opt(p, "refresh_interval", r.plan.refresh_interval);
    }
    if (j.contains("snr")) r.snr = detail::parse_snr(j.at("snr"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  try {
    r.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return r;
}

inline nlohmann::json train_run_to_json(const TrainRun& r) {
  nlohmann::json j;
  j["arch"] = to_string(r.stack.arch);
  j["depth"] = r.stack.depth;
  j["hidden"] = r.stack.hidden;
  j["activation"] = to_string(r.stack.output_activation);
  j["combine"] = to_string(r.stack.combine);
  j["amplifier_sigmoid"] = r.stack.amplifier_sigmoid;
  j["kernel_mode"] = r.stack.kernel_mode;
  j["constant_decay"] = r.stack.constant_decay;
  j["rw_central_term"] = r.stack.rw_central_term;
  j["wl_depth"] = r.stack.wl_depth;
  j["relabel_activation"] = to_string(r.stack.relabel_activation);
  j["optimizer"] = {{"kind", to_string(r.optimizer.kind)},
                    {"lr", r.optimizer.lr},
                    {"beta1", r.optimizer.beta1},
                    {"beta2", r.optimizer.beta2},
                    {"eps", r.optimizer.eps},
                    {"weight_decay", r.optimizer.weight_decay}};
  j["batch_size"] = r.batch_size;
  j["max_epochs"] = r.max_epochs;
  j["patience"] = r.patience;
  j["sampling"] = {{"strategy", to_string(r.plan.strategy)},
                   {"sample_size", r.plan.sample_size},
                   {"refresh_interval", r.plan.refresh_interval}};
  j["seed"] = r.seed;
  if (r.snr) {
    if (std::isinf(*r.snr)) {
      j["snr"] = "inf";
    } else {
      j["snr"] = *r.snr;
    }
  }
  return j;
}

inline TrainRun load_train_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::filesystem::filesystem_error("cannot open config", path, std::make_error_code(std::errc::no_such_file_or_directory));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return train_run_from_json(j);
}

}  // namespace lase
