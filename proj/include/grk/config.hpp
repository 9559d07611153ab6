#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "grk/errors.hpp"
#include "grk/linalg.hpp"

namespace grk {

// Fully resolved run configuration. Precedence (highest first):
// GRK_SEED environment variable (seed only) > command-line flags > config
// file > built-in defaults. Nothing except GRK_SEED is read from the
// environment.
struct RunConfig {
  std::string command;
  std::uint64_t seed = 42;
  std::size_t n = 3;
  std::vector<double> taus = {0.1, 0.5, 1.0};
  std::vector<std::size_t> ks = {1, 10, 100};
  std::vector<std::size_t> bs = {1};
  std::size_t replicates = 0;  // 0 = per-command default
  std::vector<std::string> estimators;
  std::size_t grid_resolution = 40;
  double grid_margin = 1e-3;
  std::string out;
  Vec theta;  // empty = default point
  double lr = 0.05;
  std::size_t iters = 2000;
  std::size_t train_seeds = 10;
  double threshold_offset = 0.05;
  double jacobian_tol = 1e-6;
  std::size_t conditional_draws = 100000;
  std::size_t k_ref = 1000000;

  std::size_t replicates_or(std::size_t fallback) const {
    return replicates ? replicates : fallback;
  }
};

namespace detail {

inline void apply_config_json(RunConfig& cfg, const nlohmann::json& j) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const nlohmann::json& v = it.value();
    try {
      if (key == "version") {
        if (v.get<int>() != 1) throw usage_error("config: unsupported version");
      } else if (key == "seed") {
        cfg.seed = v.get<std::uint64_t>();
      } else if (key == "n") {
        cfg.n = v.get<std::size_t>();
      } else if (key == "taus") {
        cfg.taus = v.get<std::vector<double>>();
      } else if (key == "ks") {
        cfg.ks = v.get<std::vector<std::size_t>>();
      } else if (key == "bs") {
        cfg.bs = v.get<std::vector<std::size_t>>();
      } else if (key == "replicates") {
        cfg.replicates = v.get<std::size_t>();
      } else if (key == "estimators") {
        cfg.estimators = v.get<std::vector<std::string>>();
      } else if (key == "grid_resolution") {
        cfg.grid_resolution = v.get<std::size_t>();
      } else if (key == "grid_margin") {
        cfg.grid_margin = v.get<double>();
      } else if (key == "out") {
        cfg.out = v.get<std::string>();
      } else if (key == "theta") {
        cfg.theta = v.get<Vec>();
      } else if (key == "lr") {
        cfg.lr = v.get<double>();
      } else if (key == "iters") {
        cfg.iters = v.get<std::size_t>();
      } else if (key == "train_seeds") {
        cfg.train_seeds = v.get<std::size_t>();
      } else if (key == "threshold_offset") {
        cfg.threshold_offset = v.get<double>();
      } else if (key == "jacobian_tol") {
        cfg.jacobian_tol = v.get<double>();
      } else if (key == "conditional_draws") {
        cfg.conditional_draws = v.get<std::size_t>();
      } else if (key == "k_ref") {
        cfg.k_ref = v.get<std::size_t>();
      } else {
        throw usage_error("config: unknown key \"" + key + "\"");
      }
    } catch (const nlohmann::json::exception& e) {
      throw usage_error("config: bad value for \"" + key + "\": " + e.what());
    }
  }
}

}  // namespace detail

inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw usage_error("config: parse error in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw usage_error("config: top level must be an object");
  detail::apply_config_json(cfg, j);
}

// GRK_SEED overrides every other seed source; it is the single environment
// escape hatch.
inline void apply_env_seed(RunConfig& cfg) {
  const char* env = std::getenv("GRK_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') throw usage_error("GRK_SEED: not a valid integer");
  cfg.seed = static_cast<std::uint64_t>(v);
}

inline void validate_config(const RunConfig& cfg) {
  if (cfg.n < 2) throw usage_error("config: n must be >= 2");
  if (cfg.taus.empty()) throw usage_error("config: need at least one tau");
  for (double t : cfg.taus)
    if (!(t > 0.0)) throw usage_error("config: tau must be > 0");
  for (std::size_t k : cfg.ks)
    if (k == 0) throw usage_error("config: K must be >= 1");
  for (std::size_t b : cfg.bs)
    if (b == 0) throw usage_error("config: B must be >= 1");
  if (cfg.grid_resolution < 1) throw usage_error("config: grid_resolution must be >= 1");
  if (!cfg.theta.empty() && cfg.theta.size() != cfg.n)
    throw usage_error("config: theta length must equal n");
}

// Default logits when none are configured: softmax gives p_i proportional to
// i+1, a mildly asymmetric interior point.
inline Vec default_theta(std::size_t n) {
  Vec theta(n);
  for (std::size_t i = 0; i < n; ++i) theta[i] = std::log(static_cast<double>(i + 1));
  return theta;
}

}  // namespace grk
