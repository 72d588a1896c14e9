// This file is part of psdfit, a library for fitting nonnegative and
// cone-valued functions with positive semidefinite kernel models.
//
// Copyright (c) 2026 The psdfit authors
// SPDX-License-Identifier: MIT

#ifndef PSDFIT_APP_CONFIG_HPP
#define PSDFIT_APP_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace psdfit::app {

// Which experiment a config describes.
enum class TaskKind { density1d, density10d, hetero, quantile, counterexample };

// Which estimator family to fit.
//   psd : the positive semidefinite quadratic-form model (this library's core)
//   ncm : nonnegative-coefficient kernel model, min over alpha >= 0
//   pnm : kernel model constrained to be nonnegative at the anchors only
//   glm : log-link kernel model f = exp(g), g in the RKHS
enum class ModelKind { psd, ncm, pnm, glm };

// Base measure for density normalization integrals.
enum class BaseKind { lebesgue, gaussian };

TaskKind parse_task(const std::string& name);
ModelKind parse_model(const std::string& name);
BaseKind parse_base(const std::string& name);
std::string to_string(TaskKind t);
std::string to_string(ModelKind m);
std::string to_string(BaseKind b);

// A complete, flat description of one experiment run.  Every field has a
// default so that a config file only needs to mention what it changes; the
// CLI may further override individual fields with flags.  Serialization is
// deterministic (fixed key order) so a config written twice is byte-identical.
struct ExperimentConfig {
  int schema_version = 1;

  std::string task = "density1d";
  std::string model = "psd";

  // Sample sizes.  test_n = 0 means "no held-out evaluation set".
  int n = 50;
  int test_n = 0;

  // Optional path to a CSV with input data; empty means generate synthetic
  // data for the task from the seed.
  std::string data_csv;

  // Kernel bandwidths and regularization weights to consider.  A single-entry
  // grid means "use this fixed value"; multi-entry grids are searched by
  // cross-validation.  The two curvature weights of the psd model are tied to
  // the grid value lambda as lambda1 = lambda1_scale * lambda and
  // lambda2 = lambda2_scale * lambda.
  std::vector<double> sigma_grid{1.0};
  std::vector<double> lambda_grid{1e-4};
  double lambda1_scale = 1.0;
  double lambda2_scale = 0.01;

  // Model-selection protocol.
  int cv_folds = 7;
  double train_fraction = 0.7;

  // RNG seed for data generation, fold shuffling, and randomized restarts.
  std::uint64_t seed = 0;

  // Where artifacts (result CSV, model dump, plot data, metadata) are written.
  std::string output_dir = "out";

  // Base measure for density tasks: "lebesgue" or "gaussian".  For the
  // gaussian base, the measure is N(base_mean * 1, base_scale^2 * I).
  std::string base = "lebesgue";
  double base_mean = 0.0;
  double base_scale = 1.0;

  // Quantile levels for the quantile task (odd count, must include 0.5).
  std::vector<double> levels{0.25, 0.5, 0.75};

  // Monte Carlo sample count for the log-link density normalizer, and number
  // of random restarts for the log-link fit.
  int mc_samples = 10000;
  int restarts = 10;

  // Evaluation grid (1-d tasks).
  int grid_points = 1001;
  double grid_lo = -4.0;
  double grid_hi = 4.0;

  // Anchor counts for the counterexample sweep.
  std::vector<int> n_values{100, 1000};

  TaskKind task_kind() const { return parse_task(task); }
  ModelKind model_kind() const { return parse_model(model); }
  BaseKind base_kind() const { return parse_base(base); }

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) = default;
};

// Strict conversion from a flat JSON object: unknown keys and wrongly typed
// values raise ValidationError; missing keys keep their defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);

// Deterministic serialization with a fixed key order covering every field.
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);

// File front-ends for the two functions above.
ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);

// Cross-field validation (ranges, grid shapes, task/model compatibility).
// Throws ValidationError with a message naming the offending field.
void validate_config(const ExperimentConfig& cfg);

}  // namespace psdfit::app

#endif  // PSDFIT_APP_CONFIG_HPP
