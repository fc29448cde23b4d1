#include "dasent/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "dasent/errors.hpp"
#include "dasent/rng.hpp"

namespace dasent {

namespace {

constexpr char kModelMagic[8] = {'D', 'A', 'S', 'M', 'L', 'P', '\0', '\0'};
constexpr std::uint32_t kModelVersion = 1;

// Per-sample activations: pre[l] and post[l] for each layer l; post includes
// the dropout scaling.
struct Trace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
  std::vector<std::vector<double>> mask;  // empty when no dropout on layer
};

double run(const MlpModel& model, std::span<const double> x, Mode mode, Rng* rng, Trace* trace) {
  if (x.size() != model.input_dim())
    throw ShapeError("input has " + std::to_string(x.size()) + " entries, model expects " +
                     std::to_string(model.input_dim()));
  if (mode == Mode::Train && model.dropout_rate > 0.0 && rng == nullptr)
    throw std::invalid_argument("train-mode forward needs an rng");
  const std::size_t n_layers = model.layers.size();
  if (trace) {
    trace->pre.assign(n_layers, {});
    trace->post.assign(n_layers, {});
    trace->mask.assign(n_layers, {});
  }
  std::vector<double> input(x.begin(), x.end());
  std::vector<double> z;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = model.layers[l];
    z.assign(layer.bias.begin(), layer.bias.end());
    for (std::size_t i = 0; i < layer.in; ++i) {
      double a = input[i];
      if (a == 0.0) continue;
      const double* w = layer.weights.data() + i * layer.out;
      for (std::size_t o = 0; o < layer.out; ++o) z[o] += a * w[o];
    }
    std::vector<double> a(z.size());
    for (std::size_t o = 0; o < z.size(); ++o) a[o] = z[o] > 0.0 ? z[o] : 0.0;
    const bool hidden = l + 1 < n_layers;
    if (mode == Mode::Train && hidden && l == model.dropout_layer && model.dropout_rate > 0.0) {
      const double keep = 1.0 - model.dropout_rate;
      std::vector<double> mask(a.size());
      for (std::size_t o = 0; o < a.size(); ++o) {
        mask[o] = rng->uniform() < keep ? 1.0 / keep : 0.0;
        a[o] *= mask[o];
      }
      if (trace) trace->mask[l] = std::move(mask);
    }
    if (trace) {
      trace->pre[l] = z;
      trace->post[l] = a;
    }
    input = std::move(a);
  }
  return input.front();
}

// Accumulates d(loss)/d(params) for one sample into `grads` (same layout as
// the model), given d(loss)/d(output).
void backprop(const MlpModel& model, std::span<const double> x, const Trace& trace, double dloss_dout,
              std::vector<DenseLayer>& grads) {
  const std::size_t n_layers = model.layers.size();
  std::vector<double> upstream{dloss_dout};
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& layer = model.layers[l];
    std::vector<double> delta(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      double d = trace.pre[l][o] > 0.0 ? upstream[o] : 0.0;
      if (!trace.mask[l].empty()) d *= trace.mask[l][o];
      delta[o] = d;
    }
    std::span<const double> input = l == 0 ? x : std::span<const double>(trace.post[l - 1]);
    auto& g = grads[l];
    for (std::size_t i = 0; i < layer.in; ++i) {
      double a = input[i];
      if (a == 0.0) continue;
      double* gw = g.weights.data() + i * layer.out;
      for (std::size_t o = 0; o < layer.out; ++o) gw[o] += a * delta[o];
    }
    for (std::size_t o = 0; o < layer.out; ++o) g.bias[o] += delta[o];
    if (l == 0) break;
    std::vector<double> next(layer.in, 0.0);
    for (std::size_t i = 0; i < layer.in; ++i) {
      const double* w = layer.weights.data() + i * layer.out;
      double s = 0.0;
      for (std::size_t o = 0; o < layer.out; ++o) s += w[o] * delta[o];
      next[i] = s;
    }
    upstream = std::move(next);
  }
}

std::vector<DenseLayer> zero_like(const MlpModel& model) {
  std::vector<DenseLayer> g;
  for (const auto& layer : model.layers)
    g.push_back({layer.in, layer.out, std::vector<double>(layer.weights.size(), 0.0),
                 std::vector<double>(layer.bias.size(), 0.0)});
  return g;
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw InputError("model file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw InputError("model file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.n = values.size();
  if (values.empty()) return a;
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return a;
}

}  // namespace

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m;
  m.rows = rows.size();
  m.cols = rows.empty() ? 0 : rows.front().size();
  m.data.reserve(m.rows * m.cols);
  for (const auto& r : rows) {
    if (r.size() != m.cols) throw ShapeError("ragged rows in matrix");
    m.data.insert(m.data.end(), r.begin(), r.end());
  }
  return m;
}

Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

MlpModel init_model(std::size_t input_dim, std::uint64_t seed) {
  if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
  return init_model({input_dim, kHiddenWidth, kHiddenWidth, 1}, seed);
}

MlpModel init_model(std::vector<std::size_t> layer_dims, std::uint64_t seed, double dropout_rate,
                    std::size_t dropout_layer) {
  if (layer_dims.size() < 2) throw ConfigError("a model needs at least input and output dimensions");
  for (auto d : layer_dims)
    if (d < 1) throw ConfigError("layer dimensions must be >= 1");
  if (layer_dims.back() != 1) throw ConfigError("output dimension must be 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout rate must be in [0, 1)");
  MlpModel m;
  m.layer_dims = std::move(layer_dims);
  m.dropout_rate = dropout_rate;
  m.dropout_layer = dropout_layer;
  m.seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
    DenseLayer layer{m.layer_dims[l], m.layer_dims[l + 1], {}, {}};
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    layer.weights.resize(layer.in * layer.out);
    for (double& w : layer.weights) w = rng.uniform(-bound, bound);
    layer.bias.assign(layer.out, 0.0);
    m.layers.push_back(std::move(layer));
  }
  return m;
}

double forward(const MlpModel& model, std::span<const double> x, Mode mode, Rng* rng) {
  return run(model, x, mode, rng, nullptr);
}

TrainResult train(MlpModel model, const Matrix& x, std::span<const double> y, const TrainConfig& cfg) {
  if (x.rows != y.size()) throw ShapeError("feature rows and targets differ in length");
  if (x.rows == 0) throw InputError("cannot train on an empty dataset");
  if (x.cols != model.input_dim()) throw ShapeError("feature width does not match model input");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (cfg.batch_size < 1 || cfg.batch_size > x.rows)
    throw ConfigError("batch_size must be in [1, " + std::to_string(x.rows) + "]");
  for (double v : y)
    if (!(v >= 0.0)) throw InputError("targets must be non-negative and finite");

  TrainResult result{std::move(model), {}};
  MlpModel& m = result.model;
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(x.rows);
  std::iota(order.begin(), order.end(), 0);

  auto first = zero_like(m);
  auto second = zero_like(m);
  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  std::uint64_t step = 0;
  Trace trace;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      auto grads = zero_like(m);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        auto row = x.row(order[k]);
        double out = run(m, row, Mode::Train, &rng, &trace);
        double err = out - y[order[k]];
        batch_loss += err * err;
        backprop(m, row, trace, 2.0 * err * scale, grads);
      }
      batch_loss *= scale;
      if (!std::isfinite(batch_loss)) throw DivergenceError(epoch, cfg.learning_rate);
      epoch_loss += batch_loss;
      ++batches;

      ++step;
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < m.layers.size(); ++l) {
        auto update = [&](std::vector<double>& param, std::vector<double>& grad, std::vector<double>& m1,
                          std::vector<double>& m2, bool decay) {
          for (std::size_t i = 0; i < param.size(); ++i) {
            double g = grad[i];
            if (decay) g += cfg.weight_decay * param[i];
            if (cfg.optimizer == Optimizer::Adam) {
              m1[i] = beta1 * m1[i] + (1.0 - beta1) * g;
              m2[i] = beta2 * m2[i] + (1.0 - beta2) * g * g;
              param[i] -= cfg.learning_rate * (m1[i] / bc1) / (std::sqrt(m2[i] / bc2) + adam_eps);
            } else {
              param[i] -= cfg.learning_rate * g;
            }
          }
        };
        update(m.layers[l].weights, grads[l].weights, first[l].weights, second[l].weights,
               cfg.weight_decay > 0.0);
        update(m.layers[l].bias, grads[l].bias, first[l].bias, second[l].bias, false);
      }
    }
    double mean_loss = epoch_loss / static_cast<double>(batches);
    if (!std::isfinite(mean_loss)) throw DivergenceError(epoch, cfg.learning_rate);
    result.loss_history.push_back(mean_loss);
  }
  return result;
}

std::vector<double> predict(const MlpModel& model, const Matrix& x) {
  if (x.rows > 0 && x.cols != model.input_dim()) throw ShapeError("feature width does not match model input");
  std::vector<double> out;
  out.reserve(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out.push_back(forward(model, x.row(i), Mode::Eval));
  return out;
}

EvalMetrics evaluate(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw ShapeError("prediction and truth lengths differ");
  if (pred.empty()) throw InputError("cannot evaluate zero predictions");
  const double n = static_cast<double>(pred.size());
  double mp = 0.0, mt = 0.0, sse = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    mp += pred[i];
    mt += truth[i];
    sse += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  }
  mp /= n;
  mt /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    sxy += (pred[i] - mp) * (truth[i] - mt);
    sxx += (pred[i] - mp) * (pred[i] - mp);
    syy += (truth[i] - mt) * (truth[i] - mt);
  }
  EvalMetrics m;
  m.mse = sse / n;
  if (syy > 0.0) {
    m.r_squared = 1.0 - sse / syy;
    if (sxx > 0.0) m.pearson_r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  }
  return m;
}

std::vector<std::vector<std::size_t>> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (n < folds)
    throw ConfigError("cannot split " + std::to_string(n) + " rows into " + std::to_string(folds) + " folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> out(folds);
  for (std::size_t f = 0; f < folds; ++f)
    out[f].assign(order.begin() + static_cast<std::ptrdiff_t>(f * n / folds),
                  order.begin() + static_cast<std::ptrdiff_t>((f + 1) * n / folds));
  return out;
}

CvResult cross_validate(const Matrix& x, std::span<const double> y, const CvConfig& cfg) {
  if (x.rows != y.size()) throw ShapeError("feature rows and targets differ in length");
  if (cfg.repeats < 1) throw ConfigError("repeats must be >= 1");
  if (cfg.folds < 2) throw ConfigError("folds must be >= 2");
  if (x.rows < cfg.folds)
    throw ConfigError("cannot split " + std::to_string(x.rows) + " rows into " + std::to_string(cfg.folds) +
                      " folds");

  struct RepeatOutcome {
    EvalMetrics metrics;
    std::size_t excluded = 0;
    std::string error;
  };
  std::vector<RepeatOutcome> outcomes(cfg.repeats);

  auto run_repeat = [&](std::size_t r) {
    try {
      auto folds = fold_assignment(x.rows, cfg.folds, derive_seed(cfg.master_seed, "fold", r));
      std::vector<double> mse, pr, r2;
      for (std::size_t f = 0; f < cfg.folds; ++f) {
        std::vector<std::size_t> train_rows;
        for (std::size_t g = 0; g < cfg.folds; ++g)
          if (g != f) train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
        std::sort(train_rows.begin(), train_rows.end());
        auto test_rows = folds[f];
        std::sort(test_rows.begin(), test_rows.end());
        const std::size_t run_index = r * cfg.folds + f;

        auto xtr = select_rows(x, train_rows);
        std::vector<double> ytr;
        for (auto i : train_rows) ytr.push_back(y[i]);
        TrainConfig tc = cfg.train;
        tc.seed = derive_seed(cfg.master_seed, "dropout", run_index);
        auto model = init_model(x.cols, derive_seed(cfg.master_seed, "init", run_index));
        auto trained = train(std::move(model), xtr, ytr, tc);

        auto pred = predict(trained.model, select_rows(x, test_rows));
        std::vector<double> yte;
        for (auto i : test_rows) yte.push_back(y[i]);
        auto m = evaluate(pred, yte);
        mse.push_back(m.mse);
        if (m.pearson_r && m.r_squared) {
          pr.push_back(*m.pearson_r);
          r2.push_back(*m.r_squared);
        } else {
          ++outcomes[r].excluded;
        }
      }
      auto& out = outcomes[r].metrics;
      out.mse = aggregate(mse).mean;
      if (!pr.empty()) out.pearson_r = aggregate(pr).mean;
      if (!r2.empty()) out.r_squared = aggregate(r2).mean;
    } catch (const std::exception& e) {
      outcomes[r].error = e.what();
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, cfg.repeats));
  if (threads == 1) {
    for (std::size_t r = 0; r < cfg.repeats; ++r) run_repeat(r);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t r = t; r < cfg.repeats; r += threads) run_repeat(r);
      });
    for (auto& th : pool) th.join();
  }

  CvResult result;
  std::vector<double> mse, pr, r2;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const auto& o = outcomes[r];
    if (!o.error.empty()) throw std::runtime_error("cross-validation repeat " + std::to_string(r) + ": " + o.error);
    result.per_repeat.push_back(o.metrics);
    result.excluded_folds += o.excluded;
    mse.push_back(o.metrics.mse);
    if (o.metrics.pearson_r) pr.push_back(*o.metrics.pearson_r);
    if (o.metrics.r_squared) r2.push_back(*o.metrics.r_squared);
  }
  if (result.excluded_folds > 0)
    result.warnings.push_back(std::to_string(result.excluded_folds) +
                              " fold(s) had constant targets or predictions; R and R^2 excluded");
  result.mse = aggregate(mse);
  result.pearson_r = aggregate(pr);
  result.r_squared = aggregate(r2);
  return result;
}

std::vector<double> flatten_parameters(const MlpModel& model) {
  std::vector<double> flat;
  flat.reserve(model.parameter_count());
  for (const auto& l : model.layers) {
    flat.insert(flat.end(), l.weights.begin(), l.weights.end());
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
  }
  return flat;
}

void assign_parameters(MlpModel& model, std::span<const double> flat) {
  if (flat.size() != model.parameter_count()) throw ShapeError("parameter vector has the wrong length");
  std::size_t k = 0;
  for (auto& l : model.layers) {
    for (double& w : l.weights) w = flat[k++];
    for (double& b : l.bias) b = flat[k++];
  }
}

std::vector<double> loss_gradient(const MlpModel& model, std::span<const double> x, double y) {
  Trace trace;
  double out = run(model, x, Mode::Eval, nullptr, &trace);
  auto grads = zero_like(model);
  backprop(model, x, trace, 2.0 * (out - y), grads);
  std::vector<double> flat;
  for (const auto& g : grads) {
    flat.insert(flat.end(), g.weights.begin(), g.weights.end());
    flat.insert(flat.end(), g.bias.begin(), g.bias.end());
  }
  return flat;
}

double gradient_check(const MlpModel& model, std::span<const double> x, double y, double eps) {
  auto analytic = loss_gradient(model, x, y);
  auto params = flatten_parameters(model);
  MlpModel probe = model;
  auto output_at = [&](std::span<const double> p) {
    assign_parameters(probe, p);
    return forward(probe, x, Mode::Eval);
  };
  // Floor on the denominator so parameters with vanishing gradients are
  // judged by absolute error.
  constexpr double kFloor = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + eps;
    const double up = output_at(params);
    params[i] = saved - eps;
    const double down = output_at(params);
    params[i] = saved;
    // (up-y)^2 - (down-y)^2 factored to avoid cancellation for large losses.
    const double numeric = (up - down) * (up + down - 2.0 * y) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), kFloor});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

void write_model(const MlpModel& model, std::ostream& out) {
  out.write(kModelMagic, sizeof(kModelMagic));
  put_u32(out, kModelVersion);
  put_u32(out, static_cast<std::uint32_t>(model.layer_dims.size()));
  for (auto d : model.layer_dims) put_u64(out, d);
  put_f64(out, model.dropout_rate);
  put_u64(out, model.dropout_layer);
  put_u64(out, model.seed);
  for (const auto& l : model.layers) {
    for (double w : l.weights) put_f64(out, w);
    for (double b : l.bias) put_f64(out, b);
  }
  if (!out) throw InputError("failed writing model");
}

MlpModel read_model(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kModelMagic)) throw InputError("not a model file");
  auto version = get_u32(in);
  if (version != kModelVersion) throw InputError("unsupported model version " + std::to_string(version));
  auto n_dims = get_u32(in);
  if (n_dims < 2 || n_dims > 64) throw InputError("corrupt model header");
  MlpModel m;
  for (std::uint32_t i = 0; i < n_dims; ++i) {
    auto d = get_u64(in);
    if (d < 1 || d > (1u << 24)) throw InputError("corrupt model dimensions");
    m.layer_dims.push_back(d);
  }
  m.dropout_rate = get_f64(in);
  m.dropout_layer = get_u64(in);
  m.seed = get_u64(in);
  for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
    DenseLayer layer{m.layer_dims[l], m.layer_dims[l + 1], {}, {}};
    layer.weights.resize(layer.in * layer.out);
    layer.bias.resize(layer.out);
    for (double& w : layer.weights) w = get_f64(in);
    for (double& b : layer.bias) b = get_f64(in);
    m.layers.push_back(std::move(layer));
  }
  for (const auto& l : m.layers) {
    for (double w : l.weights)
      if (!std::isfinite(w)) throw InputError("model contains non-finite parameters");
    for (double b : l.bias)
      if (!std::isfinite(b)) throw InputError("model contains non-finite parameters");
  }
  return m;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  write_model(model, out);
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return read_model(in);
}

}  // namespace dasent
