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

#ifndef HYPOGSR_AUTODIFF_HPP_
#define HYPOGSR_AUTODIFF_HPP_

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace hypogsr::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

// Handle to a tape node. Cheap to copy; only valid while its tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

// Reverse-mode tape. With recording off, ops only compute values.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(Parameter& p);

  // Seeds d(loss)/d(loss) = 1 and runs every backward rule in reverse order.
  // Parameter gradients accumulate into Parameter::grad.
  void backward(Var loss);

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }
  const Matrix& value(std::size_t id) const { return nodes_[id].value; }

  using BackwardFn = std::function<void(Tape&, const Matrix& grad_out)>;
  Var push(Matrix value, BackwardFn backward);
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  void accumulate(std::size_t id, const Matrix& g);
  template <typename Expr>
  void accumulate_block(std::size_t id, Eigen::Index col, Eigen::Index ncols, const Expr& g);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  Matrix& grad_slot(std::size_t id);

  std::vector<Node> nodes_;
  bool recording_;
};

template <typename Expr>
void Tape::accumulate_block(std::size_t id, Eigen::Index col, Eigen::Index ncols, const Expr& g) {
  if (!nodes_[id].requires_grad) return;
  grad_slot(id).middleCols(col, ncols) += g;
}

Var matmul(Var a, Var b);
Var add_bias(Var x, Var bias);  // bias is 1 x cols, broadcast over rows
Var add(Var a, Var b);
Var mul(Var a, Var b);          // elementwise
Var relu(Var x);
Var sigmoid(Var x);
Var tanh(Var x);
Var slice_cols(Var x, Eigen::Index start, Eigen::Index count);

// x: B x (T*c_in), time-major with channels inner. weight: (k*c_in) x c_out.
// Valid padding, stride 1. Output: B x ((T-k+1)*c_out).
Var conv1d(Var x, Var weight, Var bias, Eigen::Index steps, Eigen::Index c_in);

// x: B x (T*c). Output: B x c, maximum over time. Ties go to the earliest step.
Var global_max_pool(Var x, Eigen::Index steps, Eigen::Index channels);

// Inverted dropout with a seeded Bernoulli mask. Identity when rate == 0.
Var dropout(Var x, double rate, std::uint64_t seed);

struct LstmState {
  Var h;
  Var c;
};

// Gate order in the 4H columns of w_x, w_h, bias: input, forget, candidate, output.
LstmState lstm_cell(Var x_t, const LstmState& prev, Var w_x, Var w_h, Var bias);

inline constexpr double kProbabilityEpsilon = 1e-7;

// Mean over rows of -w_i [y_i ln p_i + (1-y_i) ln(1-p_i)] with p = clip(sigmoid(z), eps, 1-eps).
// logits: B x 1. Returns a 1 x 1 node.
Var bce_with_logits(Var logits, std::span<const double> labels, std::span<const double> weights);

double stable_sigmoid(double z);

}  // namespace hypogsr::ad

#endif  // HYPOGSR_AUTODIFF_HPP_
