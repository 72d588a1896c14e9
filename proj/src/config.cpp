// This file is part of psdfit, a library for fitting nonnegative and
// cone-valued functions with positive semidefinite kernel models.
//
// Copyright (c) 2026 The psdfit authors
// SPDX-License-Identifier: MIT

#include "config.hpp"

#include <psdfit/common.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "io.hpp"

namespace psdfit::app {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& message) { throw ValidationError("config: " + message); }

template <class T>
void read_scalar(const json& j, const char* key, T& out) {
  const auto& v = j.at(key);
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) fail(std::string("field '") + key + "' must be a string");
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) fail(std::string("field '") + key + "' must be a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() && !v.is_number_unsigned())
      fail(std::string("field '") + key + "' must be an integer");
    if (std::is_unsigned_v<T> && v.is_number_integer() && v.get<long long>() < 0)
      fail(std::string("field '") + key + "' must be nonnegative");
  } else {
    if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
  }
  out = v.get<T>();
}

template <class T>
void read_array(const json& j, const char* key, std::vector<T>& out) {
  const auto& v = j.at(key);
  if (!v.is_array()) fail(std::string("field '") + key + "' must be an array");
  std::vector<T> parsed;
  parsed.reserve(v.size());
  for (const auto& item : v) {
    if constexpr (std::is_integral_v<T>) {
      if (!item.is_number_integer() && !item.is_number_unsigned())
        fail(std::string("field '") + key + "' must contain only integers");
    } else {
      if (!item.is_number()) fail(std::string("field '") + key + "' must contain only numbers");
    }
    parsed.push_back(item.get<T>());
  }
  out = std::move(parsed);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "schema_version", "task",           "model",        "n",
      "test_n",         "data_csv",       "sigma_grid",   "lambda_grid",
      "lambda1_scale",  "lambda2_scale",  "cv_folds",     "train_fraction",
      "seed",           "output_dir",     "base",         "base_mean",
      "base_scale",     "levels",         "mc_samples",   "restarts",
      "grid_points",    "grid_lo",        "grid_hi",      "n_values",
  };
  return keys;
}

}  // namespace

TaskKind parse_task(const std::string& name) {
  if (name == "density1d") return TaskKind::density1d;
  if (name == "density10d") return TaskKind::density10d;
  if (name == "hetero") return TaskKind::hetero;
  if (name == "quantile") return TaskKind::quantile;
  if (name == "counterexample") return TaskKind::counterexample;
  fail("unknown task '" + name +
       "' (expected density1d, density10d, hetero, quantile, or counterexample)");
}

ModelKind parse_model(const std::string& name) {
  if (name == "psd") return ModelKind::psd;
  if (name == "ncm") return ModelKind::ncm;
  if (name == "pnm") return ModelKind::pnm;
  if (name == "glm") return ModelKind::glm;
  fail("unknown model '" + name + "' (expected psd, ncm, pnm, or glm)");
}

BaseKind parse_base(const std::string& name) {
  if (name == "lebesgue") return BaseKind::lebesgue;
  if (name == "gaussian") return BaseKind::gaussian;
  fail("unknown base '" + name + "' (expected lebesgue or gaussian)");
}

std::string to_string(TaskKind t) {
  switch (t) {
    case TaskKind::density1d: return "density1d";
    case TaskKind::density10d: return "density10d";
    case TaskKind::hetero: return "hetero";
    case TaskKind::quantile: return "quantile";
    case TaskKind::counterexample: return "counterexample";
  }
  fail("invalid task enum value");
}

std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::psd: return "psd";
    case ModelKind::ncm: return "ncm";
    case ModelKind::pnm: return "pnm";
    case ModelKind::glm: return "glm";
  }
  fail("invalid model enum value");
}

std::string to_string(BaseKind b) {
  switch (b) {
    case BaseKind::lebesgue: return "lebesgue";
    case BaseKind::gaussian: return "gaussian";
  }
  fail("invalid base enum value");
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) fail("top-level JSON value must be an object");
  for (const auto& item : j.items()) {
    if (known_keys().count(item.key()) == 0) fail("unknown field '" + item.key() + "'");
  }

  ExperimentConfig cfg;
  auto has = [&](const char* key) { return j.contains(key); };

  if (has("schema_version")) read_scalar(j, "schema_version", cfg.schema_version);
  if (cfg.schema_version != 1)
    fail("unsupported schema_version " + std::to_string(cfg.schema_version));

  if (has("task")) read_scalar(j, "task", cfg.task);
  if (has("model")) read_scalar(j, "model", cfg.model);
  if (has("n")) read_scalar(j, "n", cfg.n);
  if (has("test_n")) read_scalar(j, "test_n", cfg.test_n);
  if (has("data_csv")) read_scalar(j, "data_csv", cfg.data_csv);
  if (has("sigma_grid")) read_array(j, "sigma_grid", cfg.sigma_grid);
  if (has("lambda_grid")) read_array(j, "lambda_grid", cfg.lambda_grid);
  if (has("lambda1_scale")) read_scalar(j, "lambda1_scale", cfg.lambda1_scale);
  if (has("lambda2_scale")) read_scalar(j, "lambda2_scale", cfg.lambda2_scale);
  if (has("cv_folds")) read_scalar(j, "cv_folds", cfg.cv_folds);
  if (has("train_fraction")) read_scalar(j, "train_fraction", cfg.train_fraction);
  if (has("seed")) read_scalar(j, "seed", cfg.seed);
  if (has("output_dir")) read_scalar(j, "output_dir", cfg.output_dir);
  if (has("base")) read_scalar(j, "base", cfg.base);
  if (has("base_mean")) read_scalar(j, "base_mean", cfg.base_mean);
  if (has("base_scale")) read_scalar(j, "base_scale", cfg.base_scale);
  if (has("levels")) read_array(j, "levels", cfg.levels);
  if (has("mc_samples")) read_scalar(j, "mc_samples", cfg.mc_samples);
  if (has("restarts")) read_scalar(j, "restarts", cfg.restarts);
  if (has("grid_points")) read_scalar(j, "grid_points", cfg.grid_points);
  if (has("grid_lo")) read_scalar(j, "grid_lo", cfg.grid_lo);
  if (has("grid_hi")) read_scalar(j, "grid_hi", cfg.grid_hi);
  if (has("n_values")) read_array(j, "n_values", cfg.n_values);

  return cfg;
}

ordered_json config_to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["schema_version"] = cfg.schema_version;
  j["task"] = cfg.task;
  j["model"] = cfg.model;
  j["n"] = cfg.n;
  j["test_n"] = cfg.test_n;
  j["data_csv"] = cfg.data_csv;
  j["sigma_grid"] = cfg.sigma_grid;
  j["lambda_grid"] = cfg.lambda_grid;
  j["lambda1_scale"] = cfg.lambda1_scale;
  j["lambda2_scale"] = cfg.lambda2_scale;
  j["cv_folds"] = cfg.cv_folds;
  j["train_fraction"] = cfg.train_fraction;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["base"] = cfg.base;
  j["base_mean"] = cfg.base_mean;
  j["base_scale"] = cfg.base_scale;
  j["levels"] = cfg.levels;
  j["mc_samples"] = cfg.mc_samples;
  j["restarts"] = cfg.restarts;
  j["grid_points"] = cfg.grid_points;
  j["grid_lo"] = cfg.grid_lo;
  j["grid_hi"] = cfg.grid_hi;
  j["n_values"] = cfg.n_values;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("cannot parse '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  write_text_file(path, config_to_json(cfg).dump(2) + "\n");
}

void validate_config(const ExperimentConfig& cfg) {
  const TaskKind task = cfg.task_kind();
  cfg.model_kind();
  const BaseKind base = cfg.base_kind();

  if (cfg.n <= 0) fail("n must be positive");
  if (cfg.test_n < 0) fail("test_n must be nonnegative");
  if (cfg.sigma_grid.empty()) fail("sigma_grid must be nonempty");
  for (double s : cfg.sigma_grid)
    if (!(s > 0) || !std::isfinite(s)) fail("sigma_grid entries must be positive finite");
  if (cfg.lambda_grid.empty()) fail("lambda_grid must be nonempty");
  for (double l : cfg.lambda_grid)
    if (!(l > 0) || !std::isfinite(l)) fail("lambda_grid entries must be positive finite");
  if (!(cfg.lambda1_scale >= 0) || !std::isfinite(cfg.lambda1_scale))
    fail("lambda1_scale must be nonnegative finite");
  if (!(cfg.lambda2_scale > 0) || !std::isfinite(cfg.lambda2_scale))
    fail("lambda2_scale must be positive finite");
  if (cfg.cv_folds < 2) fail("cv_folds must be at least 2");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
    fail("train_fraction must lie strictly between 0 and 1");
  if (!(cfg.base_scale > 0) || !std::isfinite(cfg.base_scale))
    fail("base_scale must be positive finite");
  if (!std::isfinite(cfg.base_mean)) fail("base_mean must be finite");
  if (cfg.mc_samples <= 0) fail("mc_samples must be positive");
  if (cfg.restarts <= 0) fail("restarts must be positive");
  if (cfg.grid_points < 2) fail("grid_points must be at least 2");
  if (!(cfg.grid_hi > cfg.grid_lo)) fail("grid_hi must exceed grid_lo");

  if (task == TaskKind::quantile) {
    if (cfg.levels.empty() || cfg.levels.size() % 2 == 0)
      fail("levels must contain an odd number of quantile levels");
    for (double t : cfg.levels)
      if (!(t > 0.0 && t < 1.0)) fail("levels entries must lie strictly between 0 and 1");
    std::vector<double> sorted = cfg.levels;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      fail("levels must be distinct");
    if (sorted[sorted.size() / 2] != 0.5) fail("the middle quantile level must be 0.5");
  }

  if (task == TaskKind::counterexample) {
    if (cfg.n_values.empty()) fail("n_values must be nonempty");
    for (int nv : cfg.n_values)
      if (nv <= 0) fail("n_values entries must be positive");
  }

  if (task == TaskKind::density10d && base != BaseKind::gaussian)
    fail("density10d requires the gaussian base measure");
}

}  // namespace psdfit::app
