#include "snitchdt/ann.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "snitchdt/errors.hpp"
#include "snitchdt/twin.hpp"

namespace snitchdt {

namespace {

FeatureWindow tail_features(const std::vector<double>& v, const std::vector<double>& i,
                            int n_m) {
  if (n_m < 1) throw ConfigError("ann: n_m must be >= 1");
  const auto m = static_cast<std::size_t>(n_m);
  if (v.size() < m || i.size() < m)
    throw ConfigError("ann: history shorter than the feature window");
  FeatureWindow x;
  x.reserve(2 * m);
  x.insert(x.end(), v.end() - m, v.end());
  x.insert(x.end(), i.end() - m, i.end());
  return x;
}

double mean_squared_error(const MlpParams& p, const std::vector<FeatureWindow>& xs,
                          const std::vector<double>& ts,
                          const std::vector<std::size_t>& idx) {
  double acc = 0.0;
  for (std::size_t k : idx) {
    const double e = forward(p, xs[k]) - ts[k];
    acc += e * e;
  }
  return idx.empty() ? 0.0 : acc / static_cast<double>(idx.size());
}

void fisher_yates(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

FeatureWindow build_features(const std::vector<NodeTelemetry>& history, int n_m) {
  if (n_m < 1) throw ConfigError("ann: n_m must be >= 1");
  if (history.size() < static_cast<std::size_t>(n_m))
    throw ConfigError("ann: history shorter than the feature window");
  std::vector<double> v, i;
  v.reserve(n_m);
  i.reserve(n_m);
  for (std::size_t k = history.size() - n_m; k < history.size(); ++k) {
    v.push_back(history[k].v_g_meas);
    i.push_back(history[k].i_g_meas);
  }
  return tail_features(v, i, n_m);
}

FeatureWindow build_features(const std::vector<double>& v_meas,
                             const std::vector<double>& i_meas, int n_m) {
  return tail_features(v_meas, i_meas, n_m);
}

void MlpParams::validate() const {
  if (n_in < 1 || n_hidden < 1) throw ConfigError("mlp: layer sizes must be >= 1");
  if (w1.size() != static_cast<std::size_t>(n_hidden) * n_in ||
      b1.size() != static_cast<std::size_t>(n_hidden) ||
      w2.size() != static_cast<std::size_t>(n_hidden))
    throw ConfigError("mlp: parameter shapes do not match layer sizes");
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(w1) || !finite(b1) || !finite(w2) || !std::isfinite(b2))
    throw ConfigError("mlp: non-finite parameter");
}

MlpParams xavier_init(int n_in, int n_hidden, Rng& rng) {
  if (n_in < 1 || n_hidden < 1) throw ConfigError("mlp: layer sizes must be >= 1");
  MlpParams p;
  p.n_in = n_in;
  p.n_hidden = n_hidden;
  const double lim1 = std::sqrt(6.0 / (n_in + n_hidden));
  const double lim2 = std::sqrt(6.0 / (n_hidden + 1));
  p.w1.resize(static_cast<std::size_t>(n_hidden) * n_in);
  for (double& w : p.w1) w = rng.uniform(-lim1, lim1);
  p.b1.assign(n_hidden, 0.0);
  p.w2.resize(n_hidden);
  for (double& w : p.w2) w = rng.uniform(-lim2, lim2);
  p.b2 = 0.0;
  return p;
}

double forward(const MlpParams& p, const FeatureWindow& x) {
  if (x.size() != static_cast<std::size_t>(p.n_in))
    throw ConfigError("mlp: input length does not match n_in");
  double y = p.b2;
  for (int j = 0; j < p.n_hidden; ++j) {
    double z = p.b1[j];
    const double* row = &p.w1[static_cast<std::size_t>(j) * p.n_in];
    for (int i = 0; i < p.n_in; ++i) z += row[i] * x[i];
    y += p.w2[j] * std::tanh(z);
  }
  return y;
}

double backprop(const MlpParams& p, const FeatureWindow& x, double target,
                Gradients& out) {
  if (x.size() != static_cast<std::size_t>(p.n_in))
    throw ConfigError("mlp: input length does not match n_in");
  std::vector<double> h(p.n_hidden);
  double y = p.b2;
  for (int j = 0; j < p.n_hidden; ++j) {
    double z = p.b1[j];
    const double* row = &p.w1[static_cast<std::size_t>(j) * p.n_in];
    for (int i = 0; i < p.n_in; ++i) z += row[i] * x[i];
    h[j] = std::tanh(z);
    y += p.w2[j] * h[j];
  }
  const double e = y - target;
  const double dy = 2.0 * e;
  out.w1.assign(p.w1.size(), 0.0);
  out.b1.assign(p.b1.size(), 0.0);
  out.w2.assign(p.w2.size(), 0.0);
  out.b2 = dy;
  for (int j = 0; j < p.n_hidden; ++j) {
    out.w2[j] = dy * h[j];
    const double dz = dy * p.w2[j] * (1.0 - h[j] * h[j]);
    out.b1[j] = dz;
    double* grow = &out.w1[static_cast<std::size_t>(j) * p.n_in];
    for (int i = 0; i < p.n_in; ++i) grow[i] = dz * x[i];
  }
  return e * e;
}

bool ann_detect(double q_g_meas, double q_hat, double epsilon_ann) {
  if (!(epsilon_ann > 0.0)) throw ConfigError("ann: epsilon_ann must be > 0");
  return std::abs(q_g_meas - q_hat) > epsilon_ann;
}

FeatureWindow Normalizer::apply(const FeatureWindow& x) const {
  if (x.size() != mean.size())
    throw ConfigError("normalizer: input length does not match statistics");
  FeatureWindow out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = (x[i] - mean[i]) / std_dev[i];
  return out;
}

Normalizer fit_normalizer(const std::vector<FeatureWindow>& rows) {
  if (rows.empty()) throw ConfigError("normalizer: no rows to fit");
  const std::size_t d = rows[0].size();
  Normalizer n;
  n.mean.assign(d, 0.0);
  n.std_dev.assign(d, 0.0);
  for (const auto& r : rows) {
    if (r.size() != d) throw ConfigError("normalizer: ragged feature rows");
    for (std::size_t i = 0; i < d; ++i) n.mean[i] += r[i];
  }
  for (double& m : n.mean) m /= static_cast<double>(rows.size());
  for (const auto& r : rows)
    for (std::size_t i = 0; i < d; ++i) {
      const double dev = r[i] - n.mean[i];
      n.std_dev[i] += dev * dev;
    }
  for (double& s : n.std_dev)
    s = std::max(std::sqrt(s / static_cast<double>(rows.size())), 1e-12);
  return n;
}

void TrainConfig::validate() const {
  if (n_hidden < 1) throw ConfigError("ann.n_hidden must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("ann.learning_rate must be > 0");
  if (epochs < 0) throw ConfigError("ann.epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("ann.batch_size must be >= 1");
  if (!(val_split > 0.0 && val_split <= 0.5))
    throw ConfigError("ann.val_split must be in (0, 0.5]");
}

double AnnModel::predict(const FeatureWindow& raw) const {
  return forward(params, norm.apply(raw));
}

AnnModel train_sgd(const std::vector<AnnSample>& dataset, int n_m,
                   const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.size() < 2) throw ConfigError("ann: dataset needs at least 2 samples");
  Rng rng(cfg.seed);

  // One shuffle decides the split; the validation rows never touch training.
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  fisher_yates(order, rng);
  auto n_val = static_cast<std::size_t>(
      std::lround(static_cast<double>(dataset.size()) * cfg.val_split));
  if (n_val == 0) n_val = 1;
  std::vector<std::size_t> train_idx(order.begin(), order.end() - n_val);
  std::vector<std::size_t> val_idx(order.end() - n_val, order.end());
  if (train_idx.empty()) throw ConfigError("ann: no training rows after split");

  std::vector<FeatureWindow> raw;
  std::vector<double> targets;
  raw.reserve(dataset.size());
  targets.reserve(dataset.size());
  for (const auto& s : dataset) {
    raw.push_back(s.features);
    targets.push_back(s.target_setpoint);
  }

  AnnModel model;
  model.n_m = n_m;
  model.train_config = cfg;
  {
    std::vector<FeatureWindow> train_raw;
    train_raw.reserve(train_idx.size());
    for (std::size_t k : train_idx) train_raw.push_back(raw[k]);
    model.norm = fit_normalizer(train_raw);
  }
  std::vector<FeatureWindow> x;
  x.reserve(raw.size());
  for (const auto& r : raw) x.push_back(model.norm.apply(r));

  const int n_in = static_cast<int>(x[0].size());
  model.params = xavier_init(n_in, cfg.n_hidden, rng);
  model.initial_val_mse = mean_squared_error(model.params, x, targets, val_idx);

  Gradients g, acc;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    fisher_yates(train_idx, rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < train_idx.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(train_idx.size(),
                                     b + static_cast<std::size_t>(cfg.batch_size));
      acc.w1.assign(model.params.w1.size(), 0.0);
      acc.b1.assign(model.params.b1.size(), 0.0);
      acc.w2.assign(model.params.w2.size(), 0.0);
      acc.b2 = 0.0;
      for (std::size_t k = b; k < e; ++k) {
        const std::size_t row = train_idx[k];
        epoch_loss += backprop(model.params, x[row], targets[row], g);
        for (std::size_t i = 0; i < acc.w1.size(); ++i) acc.w1[i] += g.w1[i];
        for (std::size_t i = 0; i < acc.b1.size(); ++i) acc.b1[i] += g.b1[i];
        for (std::size_t i = 0; i < acc.w2.size(); ++i) acc.w2[i] += g.w2[i];
        acc.b2 += g.b2;
      }
      const double scale = cfg.learning_rate / static_cast<double>(e - b);
      for (std::size_t i = 0; i < acc.w1.size(); ++i) model.params.w1[i] -= scale * acc.w1[i];
      for (std::size_t i = 0; i < acc.b1.size(); ++i) model.params.b1[i] -= scale * acc.b1[i];
      for (std::size_t i = 0; i < acc.w2.size(); ++i) model.params.w2[i] -= scale * acc.w2[i];
      model.params.b2 -= scale * acc.b2;
    }
    const double train_mse = epoch_loss / static_cast<double>(train_idx.size());
    const double val_mse = mean_squared_error(model.params, x, targets, val_idx);
    if (!std::isfinite(train_mse) || !std::isfinite(val_mse))
      throw TrainingError("ann training diverged to a non-finite loss", epoch);
    model.curve.push_back({epoch, train_mse, val_mse});
  }

  model.final_val_mse = mean_squared_error(model.params, x, targets, val_idx);
  if (model.final_val_mse > model.initial_val_mse)
    throw TrainingError("ann training ended worse than it started (validation MSE " +
                            std::to_string(model.final_val_mse) + " > " +
                            std::to_string(model.initial_val_mse) + ")",
                        cfg.epochs);
  model.params.validate();
  return model;
}

double calibrate_ann_threshold(const AnnModel& model,
                               const std::vector<AnnSample>& validation_rows) {
  std::vector<double> deviations;
  deviations.reserve(validation_rows.size());
  for (const auto& s : validation_rows)
    deviations.push_back(s.q_g_meas - model.predict(s.features));
  return calibrate(deviations).epsilon;
}

void save_ann_model(const AnnModel& m, const std::string& path,
                    std::uint64_t master_seed, const std::string& config_hash) {
  nlohmann::json j;
  j["master_seed"] = master_seed;
  j["config_hash"] = config_hash;
  j["n_m"] = m.n_m;
  j["layer_sizes"] = {m.params.n_in, m.params.n_hidden, 1};
  j["w1"] = m.params.w1;
  j["b1"] = m.params.b1;
  j["w2"] = m.params.w2;
  j["b2"] = m.params.b2;
  j["norm_mean"] = m.norm.mean;
  j["norm_std"] = m.norm.std_dev;
  j["epsilon_ann"] = m.epsilon_ann;
  j["initial_val_mse"] = m.initial_val_mse;
  j["final_val_mse"] = m.final_val_mse;
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& e : m.curve)
    curve.push_back({{"epoch", e.epoch}, {"train_mse", e.train_mse}, {"val_mse", e.val_mse}});
  j["curve"] = curve;
  j["train_config"] = {{"n_hidden", m.train_config.n_hidden},
                       {"learning_rate", m.train_config.learning_rate},
                       {"epochs", m.train_config.epochs},
                       {"batch_size", m.train_config.batch_size},
                       {"val_split", m.train_config.val_split},
                       {"seed", m.train_config.seed}};
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

AnnModel load_ann_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("model file " + path + " is not valid JSON: " + e.what());
  }
  AnnModel m;
  try {
    m.n_m = j.at("n_m").get<int>();
    const auto sizes = j.at("layer_sizes").get<std::vector<int>>();
    if (sizes.size() != 3 || sizes[2] != 1)
      throw ConfigError("model file " + path + ": unsupported layer_sizes");
    m.params.n_in = sizes[0];
    m.params.n_hidden = sizes[1];
    m.params.w1 = j.at("w1").get<std::vector<double>>();
    m.params.b1 = j.at("b1").get<std::vector<double>>();
    m.params.w2 = j.at("w2").get<std::vector<double>>();
    m.params.b2 = j.at("b2").get<double>();
    m.norm.mean = j.at("norm_mean").get<std::vector<double>>();
    m.norm.std_dev = j.at("norm_std").get<std::vector<double>>();
    m.epsilon_ann = j.at("epsilon_ann").get<double>();
    m.initial_val_mse = j.at("initial_val_mse").get<double>();
    m.final_val_mse = j.at("final_val_mse").get<double>();
    for (const auto& e : j.at("curve"))
      m.curve.push_back({e.at("epoch").get<int>(), e.at("train_mse").get<double>(),
                         e.at("val_mse").get<double>()});
    const auto& tc = j.at("train_config");
    m.train_config.n_hidden = tc.at("n_hidden").get<int>();
    m.train_config.learning_rate = tc.at("learning_rate").get<double>();
    m.train_config.epochs = tc.at("epochs").get<int>();
    m.train_config.batch_size = tc.at("batch_size").get<int>();
    m.train_config.val_split = tc.at("val_split").get<double>();
    m.train_config.seed = tc.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("model file " + path + " is missing fields: " + e.what());
  }
  m.params.validate();
  if (m.norm.mean.size() != static_cast<std::size_t>(m.params.n_in) ||
      m.norm.std_dev.size() != m.norm.mean.size())
    throw ConfigError("model file " + path + ": normalization shape mismatch");
  return m;
}

}  // namespace snitchdt
