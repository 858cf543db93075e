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

#include "hypogsr/autodiff.hpp"

#include <cmath>
#include <random>

#include "hypogsr/error.hpp"
#include "hypogsr/seed.hpp"

namespace hypogsr::ad {

namespace {

std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_tape(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) throw ShapeError("vars belong to different tapes");
}

}  // namespace

const Matrix& Var::value() const { return tape->value(id); }

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return {this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, {}, &p, recording_});
  return {this, nodes_.size() - 1};
}

Var Tape::push(Matrix value, BackwardFn backward) {
  nodes_.push_back(Node{std::move(value), {}, recording_ ? std::move(backward) : BackwardFn{},
                        nullptr, recording_});
  return {this, nodes_.size() - 1};
}

Matrix& Tape::grad_slot(std::size_t id) {
  Node& n = nodes_[id];
  if (n.param != nullptr) {
    if (n.param->grad.rows() != n.value.rows() || n.param->grad.cols() != n.value.cols())
      n.param->grad.setZero(n.value.rows(), n.value.cols());
    return n.param->grad;
  }
  if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  if (!nodes_[id].requires_grad) return;
  grad_slot(id) += g;
}

void Tape::backward(Var loss) {
  if (!recording_) throw StageError("backward() on a tape that is not recording");
  if (loss.tape != this) throw ShapeError("loss belongs to another tape");
  if (nodes_[loss.id].value.size() != 1)
    throw ShapeError("backward() needs a scalar loss, got " + shape_of(nodes_[loss.id].value));
  nodes_[loss.id].grad = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this, n.grad);
  }
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows())
    throw ShapeError("matmul " + shape_of(av) + " by " + shape_of(bv));
  Matrix out = av * bv;
  return a.tape->push(std::move(out), [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a.id)) t.accumulate(a.id, g * t.value(b.id).transpose());
    if (t.requires_grad(b.id)) t.accumulate(b.id, t.value(a.id).transpose() * g);
  });
}

Var add_bias(Var x, Var bias) {
  require_same_tape(x, bias);
  const Matrix& xv = x.value();
  const Matrix& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols())
    throw ShapeError("add_bias " + shape_of(xv) + " with bias " + shape_of(bv));
  Matrix out = xv.rowwise() + bv.row(0);
  return x.tape->push(std::move(out), [x, bias](Tape& t, const Matrix& g) {
    t.accumulate(x.id, g);
    if (t.requires_grad(bias.id)) t.accumulate(bias.id, g.colwise().sum());
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("add " + shape_of(a.value()) + " and " + shape_of(b.value()));
  Matrix out = a.value() + b.value();
  return a.tape->push(std::move(out), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a.id, g);
    t.accumulate(b.id, g);
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("mul " + shape_of(a.value()) + " and " + shape_of(b.value()));
  Matrix out = a.value().cwiseProduct(b.value());
  return a.tape->push(std::move(out), [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a.id)) t.accumulate(a.id, g.cwiseProduct(t.value(b.id)));
    if (t.requires_grad(b.id)) t.accumulate(b.id, g.cwiseProduct(t.value(a.id)));
  });
}

Var relu(Var x) {
  Matrix out = x.value().cwiseMax(0.0);
  return x.tape->push(std::move(out), [x](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(x.id);
    t.accumulate(x.id, (xv.array() > 0.0).select(g, 0.0));
  });
}

Var sigmoid(Var x) {
  Matrix out = x.value().unaryExpr([](double z) { return stable_sigmoid(z); });
  const std::size_t out_id = x.tape->size();
  return x.tape->push(std::move(out), [x, out_id](Tape& t, const Matrix& g) {
    const auto y = t.value(out_id).array();
    t.accumulate(x.id, (g.array() * y * (1.0 - y)).matrix());
  });
}

Var tanh(Var x) {
  Matrix out = x.value().array().tanh().matrix();
  const std::size_t out_id = x.tape->size();
  return x.tape->push(std::move(out), [x, out_id](Tape& t, const Matrix& g) {
    const auto y = t.value(out_id).array();
    t.accumulate(x.id, (g.array() * (1.0 - y.square())).matrix());
  });
}

Var slice_cols(Var x, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > x.cols())
    throw ShapeError("slice_cols [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") of " + shape_of(x.value()));
  Matrix out = x.value().middleCols(start, count);
  return x.tape->push(std::move(out), [x, start, count](Tape& t, const Matrix& g) {
    t.accumulate_block(x.id, start, count, g);
  });
}

Var conv1d(Var x, Var weight, Var bias, Eigen::Index steps, Eigen::Index c_in) {
  require_same_tape(x, weight);
  require_same_tape(x, bias);
  const Matrix& xv = x.value();
  const Matrix& wv = weight.value();
  if (steps < 1 || c_in < 1 || xv.cols() != steps * c_in)
    throw ShapeError("conv1d input " + shape_of(xv) + " is not " + std::to_string(steps) + " x " +
                     std::to_string(c_in));
  if (wv.rows() % c_in != 0)
    throw ShapeError("conv1d weight " + shape_of(wv) + " for " + std::to_string(c_in) +
                     " input channels");
  const Eigen::Index k = wv.rows() / c_in;
  const Eigen::Index c_out = wv.cols();
  if (k > steps) throw ShapeError("conv1d kernel longer than the sequence");
  if (bias.rows() != 1 || bias.cols() != c_out)
    throw ShapeError("conv1d bias " + shape_of(bias.value()));
  const Eigen::Index out_steps = steps - k + 1;
  Matrix out(xv.rows(), out_steps * c_out);
  const auto& bv = bias.value();
  for (Eigen::Index s = 0; s < out_steps; ++s) {
    out.middleCols(s * c_out, c_out).noalias() = xv.middleCols(s * c_in, k * c_in) * wv;
    out.middleCols(s * c_out, c_out).rowwise() += bv.row(0);
  }
  return x.tape->push(std::move(out), [=](Tape& t, const Matrix& g) {
    const Matrix& xval = t.value(x.id);
    const Matrix& wval = t.value(weight.id);
    const bool need_x = t.requires_grad(x.id);
    const bool need_w = t.requires_grad(weight.id);
    Matrix gw = Matrix::Zero(wval.rows(), wval.cols());
    Matrix gb = Matrix::Zero(1, c_out);
    for (Eigen::Index s = 0; s < out_steps; ++s) {
      const auto gs = g.middleCols(s * c_out, c_out);
      if (need_w) gw.noalias() += xval.middleCols(s * c_in, k * c_in).transpose() * gs;
      gb += gs.colwise().sum();
      if (need_x) t.accumulate_block(x.id, s * c_in, k * c_in, gs * wval.transpose());
    }
    if (need_w) t.accumulate(weight.id, gw);
    t.accumulate(bias.id, gb);
  });
}

Var global_max_pool(Var x, Eigen::Index steps, Eigen::Index channels) {
  const Matrix& xv = x.value();
  if (steps < 1 || xv.cols() != steps * channels)
    throw ShapeError("global_max_pool input " + shape_of(xv) + " is not " +
                     std::to_string(steps) + " x " + std::to_string(channels));
  Matrix out(xv.rows(), channels);
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(xv.rows() * channels));
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    for (Eigen::Index c = 0; c < channels; ++c) {
      Eigen::Index best = 0;
      double best_v = xv(r, c);
      for (Eigen::Index s = 1; s < steps; ++s) {
        const double v = xv(r, s * channels + c);
        if (v > best_v) {
          best_v = v;
          best = s;
        }
      }
      out(r, c) = best_v;
      arg[static_cast<std::size_t>(r * channels + c)] = best * channels + c;
    }
  }
  return x.tape->push(std::move(out), [x, channels, arg = std::move(arg)](Tape& t,
                                                                          const Matrix& g) {
    if (!t.requires_grad(x.id)) return;
    const Matrix& xv = t.value(x.id);
    Matrix gx = Matrix::Zero(xv.rows(), xv.cols());
    for (Eigen::Index r = 0; r < g.rows(); ++r)
      for (Eigen::Index c = 0; c < channels; ++c)
        gx(r, arg[static_cast<std::size_t>(r * channels + c)]) += g(r, c);
    t.accumulate(x.id, gx);
  });
}

Var dropout(Var x, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  if (rate == 0.0) return x;
  const double keep = 1.0 - rate;
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = u(rng) < keep ? 1.0 / keep : 0.0;
  Matrix out = x.value().cwiseProduct(mask);
  return x.tape->push(std::move(out), [x, mask = std::move(mask)](Tape& t, const Matrix& g) {
    t.accumulate(x.id, g.cwiseProduct(mask));
  });
}

LstmState lstm_cell(Var x_t, const LstmState& prev, Var w_x, Var w_h, Var bias) {
  const Eigen::Index h = prev.h.cols();
  if (w_x.cols() != 4 * h || w_h.cols() != 4 * h || w_h.rows() != h || bias.cols() != 4 * h)
    throw ShapeError("lstm_cell weights do not match hidden size " + std::to_string(h));
  if (prev.c.cols() != h || prev.c.rows() != prev.h.rows())
    throw ShapeError("lstm_cell state shapes disagree");
  Var z = add_bias(add(matmul(x_t, w_x), matmul(prev.h, w_h)), bias);
  Var i = sigmoid(slice_cols(z, 0, h));
  Var f = sigmoid(slice_cols(z, h, h));
  Var g = tanh(slice_cols(z, 2 * h, h));
  Var o = sigmoid(slice_cols(z, 3 * h, h));
  Var c = add(mul(f, prev.c), mul(i, g));
  return {mul(o, tanh(c)), c};
}

Var bce_with_logits(Var logits, std::span<const double> labels, std::span<const double> weights) {
  const Matrix& z = logits.value();
  if (z.cols() != 1 || static_cast<std::size_t>(z.rows()) != labels.size() ||
      labels.size() != weights.size() || labels.empty())
    throw ShapeError("bce_with_logits on " + shape_of(z) + " with " +
                     std::to_string(labels.size()) + " labels and " +
                     std::to_string(weights.size()) + " weights");
  const auto n = static_cast<Eigen::Index>(labels.size());
  std::vector<double> dz(labels.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = stable_sigmoid(z(i, 0));
    const double pc = std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    const double y = labels[static_cast<std::size_t>(i)];
    const double w = weights[static_cast<std::size_t>(i)];
    total += -w * (y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
    const bool clipped = p < kProbabilityEpsilon || p > 1.0 - kProbabilityEpsilon;
    dz[static_cast<std::size_t>(i)] = clipped ? 0.0 : w * (p - y) / static_cast<double>(n);
  }
  Matrix out(1, 1);
  out(0, 0) = total / static_cast<double>(n);
  return logits.tape->push(std::move(out), [logits, dz = std::move(dz)](Tape& t,
                                                                         const Matrix& g) {
    Matrix gz(static_cast<Eigen::Index>(dz.size()), 1);
    for (std::size_t i = 0; i < dz.size(); ++i) gz(static_cast<Eigen::Index>(i), 0) = dz[i] * g(0, 0);
    t.accumulate(logits.id, gz);
  });
}

}  // namespace hypogsr::ad
