// Copyright 2026 The hypogsr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>

#include "hypogsr/error.hpp"
#include "hypogsr/models.hpp"

namespace hypogsr {

namespace {

constexpr Eigen::Index kInferenceChunk = 256;

std::string_view arch_name(Architecture a) {
  switch (a) {
    case Architecture::kMlp:
      return "mlp";
    case Architecture::kCnn:
      return "cnn";
    case Architecture::kLstm:
      return "lstm";
  }
  return "mlp";
}

Architecture parse_arch(std::string_view name) {
  if (name == "mlp") return Architecture::kMlp;
  if (name == "cnn") return Architecture::kCnn;
  if (name == "lstm") return Architecture::kLstm;
  throw ParseError("unknown network architecture '" + std::string(name) + "'");
}

ad::Parameter he_uniform(std::string name, std::size_t fan_in, std::size_t rows, std::size_t cols,
                         Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-limit, limit);
  ad::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return {std::move(name), std::move(m)};
}

ad::Parameter zeros(std::string name, std::size_t cols) {
  return {std::move(name), ad::Matrix::Zero(1, static_cast<Eigen::Index>(cols))};
}

struct ParamShape {
  std::string name;
  std::size_t fan_in;
  std::size_t rows;
  std::size_t cols;
  bool bias;
};

std::vector<ParamShape> layout_of(const NetworkSpec& s) {
  switch (s.arch) {
    case Architecture::kMlp:
      return {{"dense1_w", s.input_cols, s.input_cols, s.hidden1, false},
              {"dense1_b", 0, 1, s.hidden1, true},
              {"dense2_w", s.hidden1, s.hidden1, s.hidden2, false},
              {"dense2_b", 0, 1, s.hidden2, true},
              {"out_w", s.hidden2, s.hidden2, 1, false},
              {"out_b", 0, 1, 1, true}};
    case Architecture::kCnn:
      return {{"conv1_w", s.kernel, s.kernel, s.hidden1, false},
              {"conv1_b", 0, 1, s.hidden1, true},
              {"conv2_w", s.kernel * s.hidden1, s.kernel * s.hidden1, s.hidden2, false},
              {"conv2_b", 0, 1, s.hidden2, true},
              {"out_w", s.hidden2, s.hidden2, 1, false},
              {"out_b", 0, 1, 1, true}};
    case Architecture::kLstm: {
      std::vector<ParamShape> p{{"lstm_wx", 1, 1, 4 * s.hidden1, false},
                                {"lstm_wh", s.hidden1, s.hidden1, 4 * s.hidden1, false},
                                {"lstm_b", 0, 1, 4 * s.hidden1, true}};
      if (s.lstm_relu_on_output) {
        p.push_back({"out_w", s.hidden1, s.hidden1, 1, false});
        p.push_back({"out_b", 0, 1, 1, true});
      } else {
        p.push_back({"dense_w", s.hidden1, s.hidden1, s.hidden2, false});
        p.push_back({"dense_b", 0, 1, s.hidden2, true});
        p.push_back({"out_w", s.hidden2, s.hidden2, 1, false});
        p.push_back({"out_b", 0, 1, 1, true});
      }
      return p;
    }
  }
  return {};
}

ad::Var dense(ad::Tape& t, ad::Var x, ad::Parameter& w, ad::Parameter& b) {
  return ad::add_bias(ad::matmul(x, t.param(w)), t.param(b));
}

}  // namespace

NetworkSpec NetworkSpec::from(Architecture arch, std::size_t input_cols, const TrainConfig& cfg) {
  NetworkSpec s;
  s.arch = arch;
  s.input_cols = input_cols;
  s.steps = input_cols > 1 ? input_cols : cfg.sequence_steps;
  s.dropout = cfg.dropout_rate;
  s.kernel = cfg.cnn_kernel;
  s.lstm_relu_on_output = cfg.lstm_relu_on_output;
  switch (arch) {
    case Architecture::kMlp:
      s.hidden1 = cfg.mlp_hidden1;
      s.hidden2 = cfg.mlp_hidden2;
      break;
    case Architecture::kCnn:
      s.hidden1 = cfg.cnn_channels1;
      s.hidden2 = cfg.cnn_channels2;
      break;
    case Architecture::kLstm:
      s.hidden1 = cfg.lstm_hidden;
      s.hidden2 = cfg.lstm_dense;
      break;
  }
  return s;
}

nlohmann::json NetworkSpec::to_json() const {
  return {{"arch", arch_name(arch)},   {"input_cols", input_cols}, {"steps", steps},
          {"hidden1", hidden1},        {"hidden2", hidden2},       {"kernel", kernel},
          {"dropout", dropout},        {"lstm_relu_on_output", lstm_relu_on_output}};
}

NetworkSpec NetworkSpec::from_json(const nlohmann::json& j) {
  NetworkSpec s;
  s.arch = parse_arch(j.at("arch").get<std::string>());
  s.input_cols = j.at("input_cols").get<std::size_t>();
  s.steps = j.at("steps").get<std::size_t>();
  s.hidden1 = j.at("hidden1").get<std::size_t>();
  s.hidden2 = j.at("hidden2").get<std::size_t>();
  s.kernel = j.at("kernel").get<std::size_t>();
  s.dropout = j.at("dropout").get<double>();
  s.lstm_relu_on_output = j.at("lstm_relu_on_output").get<bool>();
  return s;
}

Network::Network(const NetworkSpec& spec, std::uint64_t init_seed) : spec_(spec) {
  if (spec.arch != Architecture::kMlp) {
    if (spec.input_cols != 1 && spec.input_cols != spec.steps)
      throw ShapeError("sequence networks need 1 or " + std::to_string(spec.steps) +
                       " input columns, got " + std::to_string(spec.input_cols));
    if (spec.arch == Architecture::kCnn && 2 * (spec.kernel - 1) >= spec.steps)
      throw ShapeError("cnn kernel too long for " + std::to_string(spec.steps) + " steps");
  }
  Rng rng(init_seed);
  for (const auto& p : layout_of(spec))
    params_.push_back(p.bias ? zeros(p.name, p.cols) : he_uniform(p.name, p.fan_in, p.rows, p.cols,
                                                                  rng));
}

Network::Network(const NetworkSpec& spec, std::vector<ad::Parameter> params)
    : spec_(spec), params_(std::move(params)) {
  const auto shapes = layout_of(spec);
  if (shapes.size() != params_.size()) throw ParseError("network parameter count mismatch");
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (params_[i].name != shapes[i].name ||
        params_[i].value.rows() != static_cast<Eigen::Index>(shapes[i].rows) ||
        params_[i].value.cols() != static_cast<Eigen::Index>(shapes[i].cols))
      throw ParseError("network parameter '" + params_[i].name + "' has the wrong shape");
    params_[i].zero_grad();
  }
}

ad::Var Network::input(ad::Tape& tape, const ad::Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != spec_.input_cols)
    throw ShapeError("network expects " + std::to_string(spec_.input_cols) + " input columns, got " +
                     std::to_string(x.cols()));
  if (spec_.arch != Architecture::kMlp && spec_.input_cols == 1 && spec_.steps > 1)
    return tape.constant(x.replicate(1, static_cast<Eigen::Index>(spec_.steps)));
  return tape.constant(x);
}

ad::Var Network::forward(ad::Tape& tape, const ad::Matrix& x, bool training,
                         std::uint64_t dropout_seed) {
  return forward_impl(tape, x, training, dropout_seed);
}

ad::Var Network::forward_impl(ad::Tape& tape, const ad::Matrix& x, bool training,
                              std::uint64_t dropout_seed) {
  const double rate = training ? spec_.dropout : 0.0;
  auto& p = params_;
  ad::Var in = input(tape, x);
  switch (spec_.arch) {
    case Architecture::kMlp: {
      ad::Var h = ad::relu(dense(tape, in, p[0], p[1]));
      h = ad::dropout(h, rate, dropout_seed);
      h = ad::relu(dense(tape, h, p[2], p[3]));
      return dense(tape, h, p[4], p[5]);
    }
    case Architecture::kCnn: {
      const auto steps = static_cast<Eigen::Index>(spec_.steps);
      const auto k = static_cast<Eigen::Index>(spec_.kernel);
      const auto c1 = static_cast<Eigen::Index>(spec_.hidden1);
      const auto c2 = static_cast<Eigen::Index>(spec_.hidden2);
      ad::Var h = ad::relu(ad::conv1d(in, tape.param(p[0]), tape.param(p[1]), steps, 1));
      h = ad::relu(ad::conv1d(h, tape.param(p[2]), tape.param(p[3]), steps - k + 1, c1));
      h = ad::global_max_pool(h, steps - 2 * (k - 1), c2);
      h = ad::dropout(h, rate, dropout_seed);
      return dense(tape, h, p[4], p[5]);
    }
    case Architecture::kLstm: {
      const auto hidden = static_cast<Eigen::Index>(spec_.hidden1);
      const Eigen::Index b = x.rows();
      ad::LstmState state{tape.constant(ad::Matrix::Zero(b, hidden)),
                          tape.constant(ad::Matrix::Zero(b, hidden))};
      ad::Var wx = tape.param(p[0]);
      ad::Var wh = tape.param(p[1]);
      ad::Var bias = tape.param(p[2]);
      for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(spec_.steps); ++t)
        state = ad::lstm_cell(ad::slice_cols(in, t, 1), state, wx, wh, bias);
      if (spec_.lstm_relu_on_output) {
        ad::Var h = ad::dropout(ad::relu(state.h), rate, dropout_seed);
        return dense(tape, h, p[3], p[4]);
      }
      ad::Var h = ad::dropout(state.h, rate, dropout_seed);
      h = ad::relu(dense(tape, h, p[3], p[4]));
      return dense(tape, h, p[5], p[6]);
    }
  }
  throw ShapeError("unknown architecture");
}

ad::Matrix Network::logits(const ad::Matrix& x) const {
  auto& self = const_cast<Network&>(*this);
  ad::Matrix out(x.rows(), 1);
  for (Eigen::Index start = 0; start < x.rows(); start += kInferenceChunk) {
    const Eigen::Index n = std::min(kInferenceChunk, x.rows() - start);
    ad::Tape tape(false);
    out.middleRows(start, n) = self.forward_impl(tape, x.middleRows(start, n), false, 0).value();
  }
  return out;
}

double Network::loss(const ad::Matrix& x, std::span<const double> y, std::span<const double> w,
                     bool training, std::uint64_t dropout_seed, bool with_grad) {
  ad::Tape tape(with_grad);
  ad::Var logits = forward_impl(tape, x, training, dropout_seed);
  ad::Var loss = ad::bce_with_logits(logits, y, w);
  const double value = loss.value()(0, 0);
  if (with_grad) {
    for (auto& p : params_) p.zero_grad();
    tape.backward(loss);
  }
  return value;
}

void adam_step(ad::Matrix& param, const ad::Matrix& grad, AdamState& state,
               const AdamOptions& options, std::string_view block) {
  if (grad.rows() != param.rows() || grad.cols() != param.cols())
    throw ShapeError("adam: gradient shape differs for '" + std::string(block) + "'");
  if (!grad.allFinite())
    throw NumericalError("non-finite gradient in parameter block '" + std::string(block) + "'");
  if (state.m.size() == 0) {
    state.m = ad::Matrix::Zero(param.rows(), param.cols());
    state.v = ad::Matrix::Zero(param.rows(), param.cols());
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  state.m = options.beta1 * state.m + (1.0 - options.beta1) * grad;
  state.v = options.beta2 * state.v + (1.0 - options.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(options.beta1, t);
  const double c2 = 1.0 - std::pow(options.beta2, t);
  param.array() -= options.learning_rate * (state.m.array() / c1) /
                   ((state.v.array() / c2).sqrt() + options.epsilon);
}

void Adam::step(std::vector<ad::Parameter>& params) {
  if (states_.size() != params.size()) states_.assign(params.size(), AdamState{});
  for (std::size_t i = 0; i < params.size(); ++i)
    adam_step(params[i].value, params[i].grad, states_[i], options_, params[i].name);
}

Architecture architecture_of(Family family) {
  switch (family) {
    case Family::kMlp:
      return Architecture::kMlp;
    case Family::kCnn:
      return Architecture::kCnn;
    case Family::kLstm:
      return Architecture::kLstm;
    default:
      throw ConfigError(std::string(family_name(family)) + " is not a neural family");
  }
}

NeuralModel::NeuralModel(Family family, FeatureLayout layout, Network network, TrainingMeta meta)
    : TrainedModel(family, layout, network.spec().input_cols, std::move(meta)),
      network_(std::move(network)) {}

std::vector<ParameterBlock> NeuralModel::parameters() const {
  std::vector<ParameterBlock> blocks;
  for (const auto& p : network_.params())
    blocks.push_back({p.name, static_cast<std::size_t>(p.value.rows()),
                      static_cast<std::size_t>(p.value.cols()),
                      std::vector<double>(p.value.data(), p.value.data() + p.value.size())});
  return blocks;
}

nlohmann::json NeuralModel::structure() const { return network_.spec().to_json(); }

std::vector<double> NeuralModel::score(const FeatureMatrix& x) const {
  const ad::Matrix z = network_.logits(x.to_matrix());
  std::vector<double> p(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) p[i] = ad::stable_sigmoid(z(static_cast<Eigen::Index>(i), 0));
  return p;
}

std::unique_ptr<NeuralModel> fit_neural(Family family, const FeatureMatrix& x,
                                        std::span<const int> y, const TrainConfig& cfg,
                                        const FeatureMatrix& x_val, std::span<const int> y_val) {
  cfg.validate();
  x.validate();
  x_val.validate();
  const Architecture arch = architecture_of(family);
  if (x.rows != y.size() || x_val.rows != y_val.size())
    throw ShapeError(std::string(family_name(family)) + ": row and label counts differ");
  if (x_val.rows == 0)
    throw ConfigError(std::string(family_name(family)) + " needs a non-empty validation set");
  if (x_val.cols != x.cols || x_val.layout != x.layout)
    throw ShapeError("training and validation layouts differ");
  const auto hypo = std::count(y.begin(), y.end(), 1);
  if (hypo == 0 || hypo == static_cast<std::ptrdiff_t>(y.size()))
    throw InsufficientClassError(std::string(family_name(family)) +
                                 " needs both classes in the training set");

  const ClassWeights weights = cfg.resolve_weights(y);
  const NetworkSpec spec = NetworkSpec::from(arch, x.cols, cfg);
  Network net(spec, derive_seed(cfg.seed, "init"));
  Adam adam({cfg.learning_rate});

  const ad::Matrix X = x.to_matrix();
  const ad::Matrix Xv = x_val.to_matrix();
  std::vector<double> yd(y.begin(), y.end());
  std::vector<double> wd(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) wd[i] = weights.weight(y[i]);

  std::optional<BalancedBatchSampler> balanced;
  std::optional<ShuffledBatchSampler> shuffled;
  const std::uint64_t batch_seed = derive_seed(cfg.seed, "batches");
  if (cfg.balanced_batches)
    balanced.emplace(y, cfg.batch_size, cfg.min_minority_fraction, batch_seed);
  else
    shuffled.emplace(y.size(), cfg.batch_size, batch_seed);
  const std::uint64_t dropout_root = derive_seed(cfg.seed, "dropout");

  EarlyStopping stopper(cfg.patience);
  std::vector<ad::Parameter> best = net.params();
  std::uint64_t step = 0;
  ad::Matrix xb;
  std::vector<double> yb, wb;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto batches = balanced ? balanced->next_epoch() : shuffled->next_epoch();
    for (const auto& batch : batches) {
      xb.resize(static_cast<Eigen::Index>(batch.size()), X.cols());
      yb.resize(batch.size());
      wb.resize(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        xb.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(batch[i]));
        yb[i] = yd[batch[i]];
        wb[i] = wd[batch[i]];
      }
      const double loss = net.loss(xb, yb, wb, true, derive_seed(dropout_root, step++), true);
      if (!std::isfinite(loss))
        throw NumericalError(std::string(family_name(family)) + " training loss is not finite");
      if (cfg.l2_lambda > 0.0)
        for (auto& p : net.params())
          if (p.name.ends_with("_w") || p.name.ends_with("_wx") || p.name.ends_with("_wh"))
            p.grad += cfg.l2_lambda * p.value;
      adam.step(net.params());
    }
    const ad::Matrix zv = net.logits(Xv);
    std::vector<double> pv(x_val.rows);
    for (std::size_t i = 0; i < pv.size(); ++i)
      pv[i] = ad::stable_sigmoid(zv(static_cast<Eigen::Index>(i), 0));
    const double val_loss = weighted_bce(pv, y_val, weights);
    if (!std::isfinite(val_loss))
      throw NumericalError(std::string(family_name(family)) + " validation loss is not finite");
    const std::size_t best_before = stopper.best_round();
    const bool stop = stopper.update(val_loss);
    if (stopper.best_round() != best_before) best = net.params();
    if (stop) break;
  }
  for (auto& p : best) p.zero_grad();
  Network final_net(spec, std::move(best));

  TrainingMeta meta;
  meta.seed = cfg.seed;
  meta.epochs_run = stopper.rounds();
  meta.best_epoch = stopper.best_round();
  meta.best_val_loss = stopper.best_loss();
  meta.weights = cfg.class_weights ? "explicit" : (cfg.use_class_weights ? "balanced" : "unit");
  meta.balanced_batches = cfg.balanced_batches;
  return std::make_unique<NeuralModel>(family, x.layout, std::move(final_net), std::move(meta));
}

}  // namespace hypogsr
