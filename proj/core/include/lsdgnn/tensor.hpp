#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "lsdgnn/errors.hpp"

namespace lsdgnn {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);

namespace detail {

struct TensorNode {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Pulls this node's grad into the parents' grads. Set only on op outputs
  // that participate in the tape.
  std::function<void(TensorNode&)> backprop;

  std::size_t size() const { return data.size(); }
  std::vector<double>& grad_buffer();  // allocates zeros on first use
};

}  // namespace detail

// Dense 64-bit float tensor with reverse-mode gradient participation.
// Value-semantics handle: copies share the underlying node, so a Tensor can
// live both in a ParameterStore and in a model's typed parameter structs.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  // Row-major matrix literal, e.g. Tensor::matrix({{1,2},{3,4}}).
  static Tensor matrix(const std::vector<std::vector<double>>& rows,
                       bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  // uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
  static Tensor glorot_uniform(Shape shape, std::mt19937_64& rng,
                               bool requires_grad = true);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  std::size_t rows() const;  // 2-D only
  std::size_t cols() const;  // 2-D only
  bool is_scalar() const { return defined() && size() == 1; }

  double value() const;  // scalar extraction; ContractError otherwise
  double at(std::size_t i) const;
  double at(std::size_t r, std::size_t c) const;

  std::vector<double>& data();
  const std::vector<double>& data() const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool has_grad() const;
  const std::vector<double>& grad() const;  // ContractError if absent
  std::vector<double>& grad_buffer();       // allocates zeros if absent
  void zero_grad();                         // keep buffer, fill with zeros
  void clear_grad();                        // drop buffer

  // Deep copy of the values, detached from any tape.
  Tensor clone_detached() const;

  detail::TensorNode* node() const { return node_.get(); }
  std::shared_ptr<detail::TensorNode> shared_node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node)
      : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;

  friend Tensor make_op_result(Shape shape, std::vector<double> data,
                               std::vector<Tensor> parents,
                               std::function<void(detail::TensorNode&)> backprop,
                               const char* op_name);
};

// Disables tape construction for its lifetime (thread-local). Forward passes
// under the guard produce plain value tensors.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// ---- elementwise / structural ops -----------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor add_scalar(const Tensor& x, double c);
Tensor scale(const Tensor& x, double c);
Tensor reciprocal(const Tensor& x);
// Elementwise min(x, cap); gradient flows only where x < cap.
Tensor min_with(const Tensor& x, double cap);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh_op(const Tensor& x);

Tensor matmul(const Tensor& a, const Tensor& b);  // [n x m] * [m x k]
Tensor transpose(const Tensor& x);                // 2-D
Tensor reshape(const Tensor& x, Shape shape);     // same element count

// Concatenate along axis 0 or 1. 1-D tensors support axis 0 only.
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
// Extract row r of a 2-D tensor as [1 x cols].
Tensor row(const Tensor& x, std::size_t r);
// Place a [p] / [1 x p] value vector at the given column indices of a
// zero-initialized [1 x width] row.
Tensor scatter_row(const Tensor& values, const std::vector<std::size_t>& cols,
                   std::size_t width);

Tensor sum(const Tensor& x);   // scalar
Tensor mean(const Tensor& x);  // scalar

// Max-shifted softmax along the given axis.
Tensor softmax(const Tensor& x, std::size_t axis);

// y = x W (+ b broadcast per row). x: [n x d_in], W: [d_in x d_out], b: [d_out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias = {});

// Inverted dropout; identity when probability == 0.
Tensor dropout(const Tensor& x, double probability, std::mt19937_64& rng);

struct GruWeights {
  // Gate weights act on [input ++ hidden], shape [(d_x + d_h) x d_h].
  Tensor update_w, reset_w, candidate_w;
  Tensor update_b, reset_b, candidate_b;  // [d_h]
};

// Gated recurrent update:
//   z = sigmoid([x, h] Wz + bz), r = sigmoid([x, h] Wr + br),
//   c = tanh([x, r*h] Wc + bc), h' = (1 - z) * h + z * c.
Tensor gru_cell(const Tensor& x, const Tensor& h_prev, const GruWeights& w);

// -sum_i log softmax(logits)[i, labels[i]], fused for stability.
Tensor cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels);

// sqrt(sum((a - b)^2)); gradient defined as 0 at distance 0.
Tensor frobenius_distance(const Tensor& a, const Tensor& b);

// Reverse-mode sweep from a scalar loss. Accumulates into every
// requires_grad tensor on the tape.
void backward(const Tensor& loss);

// Row-wise argmax with ties broken by lowest class index.
std::vector<int> argmax_rows(const Tensor& x);

}  // namespace lsdgnn
