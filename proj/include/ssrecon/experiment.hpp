#pragma once

// End-to-end experiments driven by a single JSON config: method
// comparisons over a (sigma_n, R_omega, R_lambda) grid, alpha sweeps and
// the oracle verification suite.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssrecon/estimators.hpp"
#include "ssrecon/inference.hpp"
#include "ssrecon/methods.hpp"
#include "ssrecon/oracles.hpp"
#include "ssrecon/synthetic.hpp"
#include "ssrecon/training.hpp"

namespace ssrecon {

inline constexpr const char* kVersion = "0.1.0";

struct DataSpec {
  Index n_train = 200;
  Index n_test = 100;
  Index n_val = 0;
  std::string ground_truth = "gaussian";  // gaussian | phantom (1D only)
  Index n_blocks = 4;
};

struct GridSpec {
  std::vector<double> sigma_n;
  std::vector<double> r_omega;
  std::vector<double> r_lambda;
};

struct SweepSpec {
  std::vector<double> alphas{0.05, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75};
  std::vector<Method> methods{Method::noisier2full, Method::noisier2full_unweighted, Method::robust_ssdu,
                              Method::robust_ssdu_unweighted};
  Method benchmark = Method::fully_supervised;
};

struct VerifySpec {
  std::int64_t gradient_samples = 100000;
  std::int64_t slope_samples = 1000000;
  std::int64_t mse_samples = 100000;
  Index n_theta = 5;
  std::vector<double> slope_alphas{0.5, 1.0};
  Index identity_pairs = 100;
  Index shards = 64;
};

struct ExperimentConfig {
  PriorSpec prior;
  MaskDistribution omega;
  MaskDistribution lambda;
  NoiseSpec noise;
  EstimatorConfig estimator;
  TrainSpec train;
  DataSpec data;
  std::vector<Method> methods;
  std::map<Method, double> alpha;  // per-method alpha (defaults filled in)
  GridSpec grid;
  SweepSpec sweep;
  VerifySpec verify;
  std::uint64_t seed = 0;
  ReconMode mode = ReconMode::practical;
  bool timing = false;
  bool parallel = true;
};

/// Parses and validates a config, filling defaults. Unknown fields and type
/// errors raise ConfigError naming the field path.
ExperimentConfig parse_config(const nlohmann::json& j);
/// The fully resolved config (every default spelled out).
nlohmann::json config_to_json(const ExperimentConfig& c);

/// Alpha used for a method: config override, else the per-method default.
double method_alpha(const ExperimentConfig& c, Method m);

/// Model for one grid cell.
MeasurementModel cell_model(const ExperimentConfig& c, double sigma_n, double r_omega, double r_lambda, double alpha);

struct Dataset {
  std::vector<TrainItem> items;
};
/// Items are generated from substream (tag, item) of the master seed, with
/// noise scaled from a unit draw so every grid cell sees the same ground
/// truth and noise directions.
Dataset make_dataset(const ExperimentConfig& c, const MeasurementModel& model, const std::string& tag, Index count);

struct Evaluation {
  double nmse_mean = 0.0;
  double nmse_se = 0.0;
  double ssim_mean = 0.0;
  double ssim_se = 0.0;
  Index fallbacks = 0;
  bool finite = true;
};
Evaluation evaluate(Method method, const Estimator& est, const MeasurementModel& model, const Dataset& test,
                    double alpha, ReconMode mode, const Rng& rng);
/// Scores the raw noisy sub-sampled input y.
Evaluation evaluate_input(const MeasurementModel& model, const Dataset& test);

struct CellResult {
  std::string method;
  double sigma_n = 0.0;
  double r_omega = 0.0;
  double r_lambda = 0.0;
  double alpha = 0.0;  // NaN when the method has no alpha
  Evaluation eval;
  double seconds = 0.0;
  std::vector<HistoryRow> history;
};

struct TrainedCell {
  EstimatorPtr estimator;
  std::vector<HistoryRow> history;
  MeasurementModel model;
  Dataset test;
};

/// Trains one method on one grid cell and keeps the test set.
TrainedCell train_cell(const ExperimentConfig& c, Method method, double sigma_n, double r_omega, double r_lambda,
                       double alpha);

std::vector<CellResult> run_compare(const ExperimentConfig& c);
std::vector<CellResult> run_alpha_sweep(const ExperimentConfig& c);

/// Header (version, config) plus the result rows.
std::string results_csv(const ExperimentConfig& c, const std::vector<CellResult>& rows);

struct VerifyResult {
  std::vector<OracleReport> reports;
  bool all_passed = true;
};
/// Validates the mask conditions first (ValidationError), then runs every
/// oracle check on the config's model at its first grid cell.
VerifyResult run_verify(const ExperimentConfig& c);
nlohmann::json verify_json(const ExperimentConfig& c, const VerifyResult& r);

/// version / config comment lines for text outputs.
std::string output_header(const ExperimentConfig& c);

}  // namespace ssrecon
