#pragma once

// Small fully-connected ReLU regressor (input -> 25 -> 25 -> 1 by default)
// with inverted dropout, mini-batch backpropagation on squared error, and
// k-fold cross-validation.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dasent {

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows);

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // in x out, row-major
  std::vector<double> bias;     // out

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

inline constexpr std::size_t kHiddenWidth = 25;
inline constexpr double kDropoutRate = 0.2;

struct MlpModel {
  std::vector<std::size_t> layer_dims;
  std::vector<DenseLayer> layers;
  double dropout_rate = kDropoutRate;
  // Index of the hidden layer whose output is dropped out (0-based).
  std::size_t dropout_layer = 1;
  std::uint64_t seed = 0;

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t parameter_count() const;

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

// Standard architecture [input_dim, 25, 25, 1].
MlpModel init_model(std::size_t input_dim, std::uint64_t seed);
// Arbitrary chain; weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
MlpModel init_model(std::vector<std::size_t> layer_dims, std::uint64_t seed, double dropout_rate = kDropoutRate,
                    std::size_t dropout_layer = 1);

enum class Mode { Train, Eval };

class Rng;

// Eval mode is deterministic; train mode needs an rng for the dropout mask.
double forward(const MlpModel& model, std::span<const double> x, Mode mode = Mode::Eval, Rng* rng = nullptr);

enum class Optimizer { GradientDescent, Adam };

struct TrainConfig {
  std::size_t epochs = 500;
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  Optimizer optimizer = Optimizer::Adam;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;  // shuffling and dropout
};

struct TrainResult {
  MlpModel model;
  std::vector<double> loss_history;  // mean mini-batch loss per epoch
};

TrainResult train(MlpModel model, const Matrix& x, std::span<const double> y, const TrainConfig& cfg);

std::vector<double> predict(const MlpModel& model, const Matrix& x);

struct EvalMetrics {
  double mse = 0.0;
  std::optional<double> pearson_r;  // undefined for constant series
  std::optional<double> r_squared;  // undefined for constant truth
};

EvalMetrics evaluate(std::span<const double> pred, std::span<const double> truth);

struct CvConfig {
  std::size_t folds = 4;
  std::size_t repeats = 10;
  std::uint64_t master_seed = 0;
  TrainConfig train;
  std::size_t threads = 1;
};

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over repeats
  std::size_t n = 0;
};

struct CvResult {
  Aggregate mse;
  Aggregate pearson_r;
  Aggregate r_squared;
  std::vector<EvalMetrics> per_repeat;  // fold-averaged
  std::size_t excluded_folds = 0;       // folds with undefined R/R^2
  std::vector<std::string> warnings;
};

// Row order of each repeat's folds; fold f holds rows
// [f*n/k, (f+1)*n/k) of the shuffled order.
std::vector<std::vector<std::size_t>> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed);

CvResult cross_validate(const Matrix& x, std::span<const double> y, const CvConfig& cfg);

// Max relative error between backprop and central finite differences of the
// squared error at (x, y), eval mode.
double gradient_check(const MlpModel& model, std::span<const double> x, double y, double eps = 1e-5);

// Analytic gradient of (f(x) - y)^2 w.r.t. every parameter, flattened in
// storage order (per layer: weights then biases).
std::vector<double> loss_gradient(const MlpModel& model, std::span<const double> x, double y);
std::vector<double> flatten_parameters(const MlpModel& model);
void assign_parameters(MlpModel& model, std::span<const double> flat);

// Binary container, little-endian: magic, version, dims, dropout, seed,
// row-major parameters.
void write_model(const MlpModel& model, std::ostream& out);
MlpModel read_model(std::istream& in);
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace dasent
