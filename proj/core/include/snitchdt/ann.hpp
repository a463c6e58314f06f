#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "snitchdt/plant.hpp"
#include "snitchdt/rng.hpp"

namespace snitchdt {

// Flat feature vector: n_m samples of v_g_meas (newest last) followed by n_m
// samples of i_g_meas (newest last); length = 2 * n_m.
using FeatureWindow = std::vector<double>;

// Last n_m samples ending at the end of history. Throws ConfigError when the
// history is shorter than n_m (the detector stays inactive until then).
FeatureWindow build_features(const std::vector<NodeTelemetry>& history, int n_m);
FeatureWindow build_features(const std::vector<double>& v_meas,
                             const std::vector<double>& i_meas, int n_m);

// One hidden layer, tanh activation, scalar linear output.
struct MlpParams {
  int n_in = 0;
  int n_hidden = 0;
  std::vector<double> w1;  // n_hidden x n_in, row-major
  std::vector<double> b1;  // n_hidden
  std::vector<double> w2;  // n_hidden
  double b2 = 0.0;

  void validate() const;  // shape + finiteness; throws ConfigError
};

// Xavier-uniform weights (limit sqrt(6 / (fan_in + fan_out))), zero biases.
// Draw order: w1 row-major, then w2.
MlpParams xavier_init(int n_in, int n_hidden, Rng& rng);

// Affine - tanh - affine. Throws ConfigError on input length mismatch.
double forward(const MlpParams& p, const FeatureWindow& x);

struct Gradients {
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  double b2 = 0.0;
};

// Squared-error loss (y - target)^2 and its parameter gradients for one sample.
double backprop(const MlpParams& p, const FeatureWindow& x, double target,
                Gradients& out);

// true iff |q_g_meas - q_hat| > epsilon_ann, strict (same convention as the
// residual threshold). Throws ConfigError when epsilon_ann <= 0.
bool ann_detect(double q_g_meas, double q_hat, double epsilon_ann);

// Per-feature z-score with statistics from the training split.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> std_dev;  // floored at 1e-12

  FeatureWindow apply(const FeatureWindow& x) const;
};

Normalizer fit_normalizer(const std::vector<FeatureWindow>& rows);

struct AnnSample {
  FeatureWindow features;
  double target_setpoint = 0.0;  // clean setpoint at the window's last step
  double q_g_meas = 0.0;         // measured output there, for threshold calibration
};

struct TrainConfig {
  int n_hidden = 16;
  double learning_rate = 0.02;
  int epochs = 40;
  int batch_size = 64;
  double val_split = 0.2;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError; epochs >= 0 (0 = initial params)
};

struct EpochStats {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct AnnModel {
  int n_m = 0;
  MlpParams params;
  Normalizer norm;
  double epsilon_ann = 0.0;  // 0 until calibrated
  double initial_val_mse = 0.0;
  double final_val_mse = 0.0;
  std::vector<EpochStats> curve;
  TrainConfig train_config;

  // Normalized forward pass on raw features.
  double predict(const FeatureWindow& raw) const;
};

// Seeded mini-batch SGD on squared error. The dataset is shuffled once for the
// train/validation split and once per epoch (Fisher-Yates on the train rows);
// batch gradients are averaged. Non-finite loss aborts with TrainingError
// carrying the epoch; a final validation MSE above the pre-training value is
// also a TrainingError (the model failed to learn).
AnnModel train_sgd(const std::vector<AnnSample>& dataset, int n_m,
                   const TrainConfig& cfg);

// Deviation threshold via the shared calibration rule (mean|dev| + 4 std) over
// the held-out rows. Throws CalibrationError with fewer than 1000 rows.
double calibrate_ann_threshold(const AnnModel& model,
                               const std::vector<AnnSample>& validation_rows);

// JSON round-trip; save embeds master_seed and config_hash alongside the model.
void save_ann_model(const AnnModel& m, const std::string& path,
                    std::uint64_t master_seed, const std::string& config_hash);
AnnModel load_ann_model(const std::string& path);

}  // namespace snitchdt
