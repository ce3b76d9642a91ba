#include "lsdgnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace lsdgnn {

namespace {

thread_local bool g_grad_enabled = true;

std::size_t shape_product(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

void check_finite(const std::vector<double>& data, const char* op_name) {
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op_name) +
                         ": produced a non-finite value");
    }
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()) + " differ");
  }
}

std::vector<double>& grad_of(detail::TensorNode* node) {
  return node->grad_buffer();
}

}  // namespace

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace detail {

std::vector<double>& TensorNode::grad_buffer() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  return grad;
}

}  // namespace detail

// ---- Tensor ----------------------------------------------------------------

Tensor Tensor::from_data(Shape shape, std::vector<double> data,
                         bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) {
      throw DimensionError("tensor: zero dimension in shape " +
                           shape_str(shape));
    }
  }
  if (shape_product(shape) != data.size()) {
    throw DimensionError("tensor: shape " + shape_str(shape) + " needs " +
                         std::to_string(shape_product(shape)) +
                         " values, got " + std::to_string(data.size()));
  }
  check_finite(data, "from_data");
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::vector<double> data(shape_product(shape), 0.0);
  return from_data(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::vector<double> data(shape_product(shape), value);
  return from_data(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data(Shape{}, {value}, requires_grad);
}

Tensor Tensor::matrix(const std::vector<std::vector<double>>& rows,
                      bool requires_grad) {
  if (rows.empty()) throw DimensionError("tensor: empty matrix literal");
  std::size_t cols = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) {
      throw DimensionError("tensor: ragged matrix literal");
    }
    data.insert(data.end(), r.begin(), r.end());
  }
  return from_data({rows.size(), cols}, std::move(data), requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  std::size_t n = values.size();
  return from_data({n}, std::move(values), requires_grad);
}

Tensor Tensor::glorot_uniform(Shape shape, std::mt19937_64& rng,
                              bool requires_grad) {
  double fan_in = static_cast<double>(shape.empty() ? 1 : shape[0]);
  double fan_out = shape.size() >= 2 ? static_cast<double>(shape[1]) : 1.0;
  double a = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  std::vector<double> data(shape_product(shape));
  for (double& v : data) v = dist(rng);
  return from_data(std::move(shape), std::move(data), requires_grad);
}

const Shape& Tensor::shape() const {
  if (!node_) throw ContractError("tensor: use of undefined tensor");
  return node_->shape;
}

std::size_t Tensor::size() const {
  if (!node_) throw ContractError("tensor: use of undefined tensor");
  return node_->data.size();
}

std::size_t Tensor::rows() const {
  if (rank() != 2) {
    throw DimensionError("tensor: rows() on shape " + shape_str(shape()));
  }
  return shape()[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) {
    throw DimensionError("tensor: cols() on shape " + shape_str(shape()));
  }
  return shape()[1];
}

double Tensor::value() const {
  if (!is_scalar()) {
    throw ContractError("tensor: value() on non-scalar shape " +
                        shape_str(shape()));
  }
  return node_->data[0];
}

double Tensor::at(std::size_t i) const {
  if (i >= size()) throw IndexError("tensor: flat index out of range");
  return node_->data[i];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (rank() != 2 || r >= shape()[0] || c >= shape()[1]) {
    throw IndexError("tensor: index (" + std::to_string(r) + "," +
                     std::to_string(c) + ") out of range for " +
                     shape_str(shape()));
  }
  return node_->data[r * shape()[1] + c];
}

std::vector<double>& Tensor::data() {
  if (!node_) throw ContractError("tensor: use of undefined tensor");
  return node_->data;
}

const std::vector<double>& Tensor::data() const {
  if (!node_) throw ContractError("tensor: use of undefined tensor");
  return node_->data;
}

bool Tensor::requires_grad() const {
  return node_ != nullptr && node_->requires_grad;
}

void Tensor::set_requires_grad(bool value) {
  if (!node_) throw ContractError("tensor: use of undefined tensor");
  node_->requires_grad = value;
}

bool Tensor::has_grad() const {
  return node_ != nullptr && node_->grad.size() == node_->data.size();
}

const std::vector<double>& Tensor::grad() const {
  if (!has_grad()) {
    throw ContractError("tensor: gradient not populated");
  }
  return node_->grad;
}

std::vector<double>& Tensor::grad_buffer() {
  if (!node_) throw ContractError("tensor: use of undefined tensor");
  return node_->grad_buffer();
}

void Tensor::zero_grad() {
  if (node_ && !node_->grad.empty()) {
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
  }
}

void Tensor::clear_grad() {
  if (node_) node_->grad.clear();
}

Tensor Tensor::clone_detached() const {
  if (!node_) return {};
  return from_data(node_->shape, node_->data, false);
}

// ---- tape plumbing ---------------------------------------------------------

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor make_op_result(Shape shape, std::vector<double> data,
                      std::vector<Tensor> parents,
                      std::function<void(detail::TensorNode&)> backprop,
                      const char* op_name) {
  check_finite(data, op_name);
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  bool track = g_grad_enabled &&
               std::any_of(parents.begin(), parents.end(),
                           [](const Tensor& p) { return p.requires_grad(); });
  if (track) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (const Tensor& p : parents) node->parents.push_back(p.shared_node());
    node->backprop = std::move(backprop);
  }
  return Tensor(std::move(node));
}

void backward(const Tensor& loss) {
  if (!loss.defined() || !loss.is_scalar()) {
    throw ContractError("backward: loss must be a scalar tensor");
  }
  detail::TensorNode* root = loss.node();
  if (!root->requires_grad) return;  // constant loss: nothing on the tape

  // Postorder DFS over grad-tracked ancestors: every node ends up after all
  // of its parents, so the reversed list is a valid backward order.
  std::vector<detail::TensorNode*> order;
  std::unordered_set<detail::TensorNode*> visited;
  std::vector<std::pair<detail::TensorNode*, std::size_t>> stack;
  visited.reserve(1024);
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    bool descended = false;
    while (next < node->parents.size()) {
      detail::TensorNode* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
        descended = true;
        break;
      }
    }
    if (!descended && (stack.back().second >= stack.back().first->parents.size())) {
      order.push_back(stack.back().first);
      stack.pop_back();
    }
  }

  auto& seed = root->grad_buffer();
  seed[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorNode* node = *it;
    if (node->backprop && !node->grad.empty()) {
      node->backprop(*node);
    }
  }
}

// ---- elementwise ops -------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] + db[i];
  detail::TensorNode* na = a.node();
  detail::TensorNode* nb = b.node();
  bool ga = a.requires_grad(), gb = b.requires_grad();
  return make_op_result(
      a.shape(), std::move(out), {a, b},
      [na, nb, ga, gb](detail::TensorNode& self) {
        if (ga) {
          auto& g = grad_of(na);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (gb) {
          auto& g = grad_of(nb);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
      },
      "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] - db[i];
  detail::TensorNode* na = a.node();
  detail::TensorNode* nb = b.node();
  bool ga = a.requires_grad(), gb = b.requires_grad();
  return make_op_result(
      a.shape(), std::move(out), {a, b},
      [na, nb, ga, gb](detail::TensorNode& self) {
        if (ga) {
          auto& g = grad_of(na);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (gb) {
          auto& g = grad_of(nb);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
        }
      },
      "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] * db[i];
  detail::TensorNode* na = a.node();
  detail::TensorNode* nb = b.node();
  bool ga = a.requires_grad(), gb = b.requires_grad();
  return make_op_result(
      a.shape(), std::move(out), {a, b},
      [na, nb, ga, gb](detail::TensorNode& self) {
        if (ga) {
          auto& g = grad_of(na);
          for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += self.grad[i] * nb->data[i];
        }
        if (gb) {
          auto& g = grad_of(nb);
          for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += self.grad[i] * na->data[i];
        }
      },
      "mul");
}

Tensor add_scalar(const Tensor& x, double c) {
  std::vector<double> out(x.size());
  const auto& dx = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dx[i] + c;
  detail::TensorNode* nx = x.node();
  return make_op_result(
      x.shape(), std::move(out), {x},
      [nx](detail::TensorNode& self) {
        auto& g = grad_of(nx);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      },
      "add_scalar");
}

Tensor scale(const Tensor& x, double c) {
  std::vector<double> out(x.size());
  const auto& dx = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dx[i] * c;
  detail::TensorNode* nx = x.node();
  return make_op_result(
      x.shape(), std::move(out), {x},
      [nx, c](detail::TensorNode& self) {
        auto& g = grad_of(nx);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * c;
      },
      "scale");
}

Tensor reciprocal(const Tensor& x) {
  std::vector<double> out(x.size());
  const auto& dx = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / dx[i];
  detail::TensorNode* nx = x.node();
  return make_op_result(
      x.shape(), std::move(out), {x},
      [nx](detail::TensorNode& self) {
        auto& g = grad_of(nx);
        for (std::size_t i = 0; i < g.size(); ++i) {
          double y = self.data[i];
          g[i] -= self.grad[i] * y * y;
        }
      },
      "reciprocal");
}

Tensor min_with(const Tensor& x, double cap) {
  std::vector<double> out(x.size());
  const auto& dx = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(dx[i], cap);
  detail::TensorNode* nx = x.node();
  return make_op_result(
      x.shape(), std::move(out), {x},
      [nx, cap](detail::TensorNode& self) {
        auto& g = grad_of(nx);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (nx->data[i] < cap) g[i] += self.grad[i];
        }
      },
      "min_with");
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.size());
  const auto& dx = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dx[i] > 0 ? dx[i] : 0;
  detail::TensorNode* nx = x.node();
  return make_op_result(
      x.shape(), std::move(out), {x},
      [nx](detail::TensorNode& self) {
        auto& g = grad_of(nx);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (nx->data[i] > 0) g[i] += self.grad[i];
        }
      },
      "relu");
}

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.size());
  const auto& dx = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 1.0 / (1.0 + std::exp(-dx[i]));
  }
  detail::TensorNode* nx = x.node();
  return make_op_result(
      x.shape(), std::move(out), {x},
      [nx](detail::TensorNode& self) {
        auto& g = grad_of(nx);
        for (std::size_t i = 0; i < g.size(); ++i) {
          double y = self.data[i];
          g[i] += self.grad[i] * y * (1.0 - y);
        }
      },
      "sigmoid");
}

Tensor tanh_op(const Tensor& x) {
  std::vector<double> out(x.size());
  const auto& dx = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(dx[i]);
  detail::TensorNode* nx = x.node();
  return make_op_result(
      x.shape(), std::move(out), {x},
      [nx](detail::TensorNode& self) {
        auto& g = grad_of(nx);
        for (std::size_t i = 0; i < g.size(); ++i) {
          double y = self.data[i];
          g[i] += self.grad[i] * (1.0 - y * y);
        }
      },
      "tanh");
}

// ---- structural ops --------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw DimensionError("matmul: shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " are incompatible");
  }
  const std::size_t n = a.rows(), m = a.cols(), k = b.cols();
  std::vector<double> out(n * k, 0.0);
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double aij = da[i * m + j];
      const double* brow = &db[j * k];
      double* orow = &out[i * k];
      for (std::size_t c = 0; c < k; ++c) orow[c] += aij * brow[c];
    }
  }
  detail::TensorNode* na = a.node();
  detail::TensorNode* nb = b.node();
  bool ga = a.requires_grad(), gb = b.requires_grad();
  return make_op_result(
      {n, k}, std::move(out), {a, b},
      [na, nb, ga, gb, n, m, k](detail::TensorNode& self) {
        const auto& go = self.grad;
        if (ga) {
          auto& g = grad_of(na);  // dA = dC * B^T
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
              double acc = 0.0;
              const double* grow = &go[i * k];
              const double* brow = &nb->data[j * k];
              for (std::size_t c = 0; c < k; ++c) acc += grow[c] * brow[c];
              g[i * m + j] += acc;
            }
          }
        }
        if (gb) {
          auto& g = grad_of(nb);  // dB = A^T * dC
          for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
              double aij = na->data[i * m + j];
              const double* grow = &go[i * k];
              double* grad_row = &g[j * k];
              for (std::size_t c = 0; c < k; ++c) grad_row[c] += aij * grow[c];
            }
          }
        }
      },
      "matmul");
}

Tensor transpose(const Tensor& x) {
  if (x.rank() != 2) {
    throw DimensionError("transpose: expected 2-D, got " +
                         shape_str(x.shape()));
  }
  const std::size_t n = x.rows(), m = x.cols();
  std::vector<double> out(n * m);
  const auto& dx = x.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j * n + i] = dx[i * m + j];
  detail::TensorNode* nx = x.node();
  return make_op_result(
      {m, n}, std::move(out), {x},
      [nx, n, m](detail::TensorNode& self) {
        auto& g = grad_of(nx);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j)
            g[i * m + j] += self.grad[j * n + i];
      },
      "transpose");
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_product(shape) != x.size()) {
    throw DimensionError("reshape: " + shape_str(x.shape()) + " to " +
                         shape_str(shape) + " changes element count");
  }
  detail::TensorNode* nx = x.node();
  return make_op_result(
      std::move(shape), x.data(), {x},
      [nx](detail::TensorNode& self) {
        auto& g = grad_of(nx);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      },
      "reshape");
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const std::size_t rank = parts.front().rank();
  if (rank == 0 || rank > 2 || axis >= rank) {
    throw DimensionError("concat: unsupported rank/axis for " +
                         shape_str(parts.front().shape()));
  }
  for (const Tensor& p : parts) {
    if (p.rank() != rank) throw DimensionError("concat: mixed ranks");
  }

  Shape out_shape;
  std::vector<double> out;
  if (rank == 1) {
    std::size_t total = 0;
    for (const Tensor& p : parts) total += p.size();
    out.reserve(total);
    for (const Tensor& p : parts)
      out.insert(out.end(), p.data().begin(), p.data().end());
    out_shape = {total};
  } else if (axis == 0) {
    const std::size_t cols = parts.front().cols();
    std::size_t total_rows = 0;
    for (const Tensor& p : parts) {
      if (p.cols() != cols) {
        throw DimensionError("concat: column mismatch " +
                             shape_str(p.shape()) + " vs " +
                             shape_str(parts.front().shape()));
      }
      total_rows += p.rows();
    }
    out.reserve(total_rows * cols);
    for (const Tensor& p : parts)
      out.insert(out.end(), p.data().begin(), p.data().end());
    out_shape = {total_rows, cols};
  } else {
    const std::size_t rows_n = parts.front().rows();
    std::size_t total_cols = 0;
    for (const Tensor& p : parts) {
      if (p.rows() != rows_n) {
        throw DimensionError("concat: row mismatch " + shape_str(p.shape()) +
                             " vs " + shape_str(parts.front().shape()));
      }
      total_cols += p.cols();
    }
    out.resize(rows_n * total_cols);
    std::size_t col_offset = 0;
    for (const Tensor& p : parts) {
      const std::size_t pc = p.cols();
      const auto& pd = p.data();
      for (std::size_t r = 0; r < rows_n; ++r) {
        std::copy(pd.begin() + static_cast<std::ptrdiff_t>(r * pc),
                  pd.begin() + static_cast<std::ptrdiff_t>((r + 1) * pc),
                  out.begin() +
                      static_cast<std::ptrdiff_t>(r * total_cols + col_offset));
      }
      col_offset += pc;
    }
    out_shape = {rows_n, total_cols};
  }

  struct Piece {
    detail::TensorNode* node;
    bool tracked;
    std::size_t extent;  // rows (axis 0 / rank 1) or cols (axis 1)
  };
  std::vector<Piece> pieces;
  pieces.reserve(parts.size());
  for (const Tensor& p : parts) {
    std::size_t extent = (rank == 1) ? p.size()
                         : (axis == 0 ? p.rows() : p.cols());
    pieces.push_back({p.node(), p.requires_grad(), extent});
  }
  const std::size_t out_cols = rank == 2 ? out_shape[1] : 0;
  const std::size_t out_rows = rank == 2 ? out_shape[0] : 0;
  return make_op_result(
      out_shape, std::move(out), parts,
      [pieces, rank, axis, out_cols, out_rows](detail::TensorNode& self) {
        if (rank == 1 || axis == 0) {
          std::size_t offset = 0;
          for (const Piece& piece : pieces) {
            std::size_t count = piece.node->data.size();
            if (piece.tracked) {
              auto& g = grad_of(piece.node);
              for (std::size_t i = 0; i < count; ++i)
                g[i] += self.grad[offset + i];
            }
            offset += count;
          }
        } else {
          std::size_t col_offset = 0;
          for (const Piece& piece : pieces) {
            if (piece.tracked) {
              auto& g = grad_of(piece.node);
              for (std::size_t r = 0; r < out_rows; ++r)
                for (std::size_t c = 0; c < piece.extent; ++c)
                  g[r * piece.extent + c] +=
                      self.grad[r * out_cols + col_offset + c];
            }
            col_offset += piece.extent;
          }
        }
      },
      "concat");
}

Tensor row(const Tensor& x, std::size_t r) {
  if (x.rank() != 2) {
    throw DimensionError("row: expected 2-D, got " + shape_str(x.shape()));
  }
  if (r >= x.rows()) {
    throw IndexError("row: index " + std::to_string(r) + " out of range for " +
                     shape_str(x.shape()));
  }
  const std::size_t cols = x.cols();
  std::vector<double> out(x.data().begin() + static_cast<std::ptrdiff_t>(r * cols),
                          x.data().begin() +
                              static_cast<std::ptrdiff_t>((r + 1) * cols));
  detail::TensorNode* nx = x.node();
  return make_op_result(
      {1, cols}, std::move(out), {x},
      [nx, r, cols](detail::TensorNode& self) {
        auto& g = grad_of(nx);
        for (std::size_t c = 0; c < cols; ++c)
          g[r * cols + c] += self.grad[c];
      },
      "row");
}

Tensor scatter_row(const Tensor& values, const std::vector<std::size_t>& cols,
                   std::size_t width) {
  if (values.size() != cols.size()) {
    throw DimensionError("scatter_row: " + std::to_string(values.size()) +
                         " values for " + std::to_string(cols.size()) +
                         " columns");
  }
  std::vector<double> out(width, 0.0);
  const auto& dv = values.data();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] >= width) {
      throw IndexError("scatter_row: column " + std::to_string(cols[i]) +
                       " out of range for width " + std::to_string(width));
    }
    out[cols[i]] = dv[i];
  }
  detail::TensorNode* nv = values.node();
  return make_op_result(
      {1, width}, std::move(out), {values},
      [nv, cols](detail::TensorNode& self) {
        auto& g = grad_of(nv);
        for (std::size_t i = 0; i < cols.size(); ++i)
          g[i] += self.grad[cols[i]];
      },
      "scatter_row");
}

Tensor sum(const Tensor& x) {
  double total = std::accumulate(x.data().begin(), x.data().end(), 0.0);
  detail::TensorNode* nx = x.node();
  return make_op_result(
      Shape{}, {total}, {x},
      [nx](detail::TensorNode& self) {
        auto& g = grad_of(nx);
        for (double& gi : g) gi += self.grad[0];
      },
      "sum");
}

Tensor mean(const Tensor& x) {
  double inv = 1.0 / static_cast<double>(x.size());
  double total = std::accumulate(x.data().begin(), x.data().end(), 0.0) * inv;
  detail::TensorNode* nx = x.node();
  return make_op_result(
      Shape{}, {total}, {x},
      [nx, inv](detail::TensorNode& self) {
        auto& g = grad_of(nx);
        for (double& gi : g) gi += self.grad[0] * inv;
      },
      "mean");
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  if (x.rank() == 0 || axis >= x.rank()) {
    throw DomainError("softmax: invalid axis " + std::to_string(axis) +
                      " for shape " + shape_str(x.shape()));
  }
  // Treat a 1-D tensor as one lane; a 2-D tensor has one lane per row
  // (axis 1) or per column (axis 0).
  std::size_t lanes, lane_len, lane_stride, elem_stride;
  if (x.rank() == 1) {
    lanes = 1;
    lane_len = x.size();
    lane_stride = 0;
    elem_stride = 1;
  } else if (axis == 1) {
    lanes = x.rows();
    lane_len = x.cols();
    lane_stride = x.cols();
    elem_stride = 1;
  } else {
    lanes = x.cols();
    lane_len = x.rows();
    lane_stride = 1;
    elem_stride = x.cols();
  }

  const auto& dx = x.data();
  std::vector<double> out(x.size());
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    const std::size_t base = lane * lane_stride;
    double hi = dx[base];
    for (std::size_t i = 1; i < lane_len; ++i)
      hi = std::max(hi, dx[base + i * elem_stride]);
    double total = 0.0;
    for (std::size_t i = 0; i < lane_len; ++i) {
      double e = std::exp(dx[base + i * elem_stride] - hi);
      out[base + i * elem_stride] = e;
      total += e;
    }
    for (std::size_t i = 0; i < lane_len; ++i)
      out[base + i * elem_stride] /= total;
  }

  detail::TensorNode* nx = x.node();
  return make_op_result(
      x.shape(), std::move(out), {x},
      [nx, lanes, lane_len, lane_stride, elem_stride](detail::TensorNode& self) {
        auto& g = grad_of(nx);
        for (std::size_t lane = 0; lane < lanes; ++lane) {
          const std::size_t base = lane * lane_stride;
          double dot = 0.0;
          for (std::size_t i = 0; i < lane_len; ++i) {
            std::size_t idx = base + i * elem_stride;
            dot += self.grad[idx] * self.data[idx];
          }
          for (std::size_t i = 0; i < lane_len; ++i) {
            std::size_t idx = base + i * elem_stride;
            g[idx] += self.data[idx] * (self.grad[idx] - dot);
          }
        }
      },
      "softmax");
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() != 2 || weight.rank() != 2 || x.cols() != weight.rows()) {
    throw DimensionError("linear: input " + shape_str(x.shape()) +
                         " incompatible with weight " +
                         shape_str(weight.shape()));
  }
  Tensor y = matmul(x, weight);
  if (!bias.defined()) return y;
  if (bias.rank() != 1 || bias.size() != weight.cols()) {
    throw DimensionError("linear: bias " + shape_str(bias.shape()) +
                         " incompatible with weight " +
                         shape_str(weight.shape()));
  }
  const std::size_t n = y.rows(), k = y.cols();
  std::vector<double> out = y.data();
  const auto& db = bias.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) out[i * k + c] += db[c];
  detail::TensorNode* ny = y.node();
  detail::TensorNode* nb = bias.node();
  bool gy = y.requires_grad(), gb = bias.requires_grad();
  return make_op_result(
      y.shape(), std::move(out), {y, bias},
      [ny, nb, gy, gb, n, k](detail::TensorNode& self) {
        if (gy) {
          auto& g = grad_of(ny);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (gb) {
          auto& g = grad_of(nb);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < k; ++c) g[c] += self.grad[i * k + c];
        }
      },
      "linear");
}

Tensor dropout(const Tensor& x, double probability, std::mt19937_64& rng) {
  if (probability < 0.0 || probability >= 1.0) {
    throw DomainError("dropout: probability " + std::to_string(probability) +
                      " outside [0, 1)" );
  }
  if (probability == 0.0) return x;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - probability);
  std::vector<double> mask(x.size());
  for (double& m : mask) {
    m = uniform(rng) < probability ? 0.0 : keep_scale;
  }
  std::vector<double> out(x.size());
  const auto& dx = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dx[i] * mask[i];
  detail::TensorNode* nx = x.node();
  return make_op_result(
      x.shape(), std::move(out), {x},
      [nx, mask = std::move(mask)](detail::TensorNode& self) {
        auto& g = grad_of(nx);
        for (std::size_t i = 0; i < g.size(); ++i)
          g[i] += self.grad[i] * mask[i];
      },
      "dropout");
}

// ---- composite ops ---------------------------------------------------------

namespace {

Tensor as_row(const Tensor& x) {
  if (x.rank() == 1) return reshape(x, {1, x.size()});
  return x;
}

}  // namespace

Tensor gru_cell(const Tensor& x, const Tensor& h_prev, const GruWeights& w) {
  const bool vector_io = h_prev.rank() == 1;
  Tensor xr = as_row(x);
  Tensor hr = as_row(h_prev);
  if (xr.rank() != 2 || hr.rank() != 2 || xr.rows() != 1 || hr.rows() != 1) {
    throw DimensionError("gru_cell: expected single-step inputs, got " +
                         shape_str(x.shape()) + " and " +
                         shape_str(h_prev.shape()));
  }
  const std::size_t dx = xr.cols(), dh = hr.cols();
  auto check_gate = [&](const Tensor& gate_w, const Tensor& gate_b,
                        const char* name) {
    if (gate_w.rank() != 2 || gate_w.rows() != dx + dh || gate_w.cols() != dh ||
        gate_b.rank() != 1 || gate_b.size() != dh) {
      throw DimensionError(std::string("gru_cell: ") + name + " weights " +
                           shape_str(gate_w.shape()) + "/" +
                           shape_str(gate_b.shape()) +
                           " do not match inputs " + shape_str(x.shape()) +
                           ", " + shape_str(h_prev.shape()));
    }
  };
  check_gate(w.update_w, w.update_b, "update");
  check_gate(w.reset_w, w.reset_b, "reset");
  check_gate(w.candidate_w, w.candidate_b, "candidate");

  Tensor xh = concat({xr, hr}, 1);
  Tensor update = sigmoid(linear(xh, w.update_w, w.update_b));
  Tensor reset = sigmoid(linear(xh, w.reset_w, w.reset_b));
  Tensor gated = concat({xr, mul(reset, hr)}, 1);
  Tensor candidate = tanh_op(linear(gated, w.candidate_w, w.candidate_b));
  Tensor keep = add_scalar(scale(update, -1.0), 1.0);  // 1 - z
  Tensor out = add(mul(keep, hr), mul(update, candidate));
  return vector_io ? reshape(out, {dh}) : out;
}

Tensor cross_entropy_loss(const Tensor& logits,
                          const std::vector<int>& labels) {
  if (logits.rank() != 2) {
    throw DimensionError("cross_entropy_loss: expected [n x K] logits, got " +
                         shape_str(logits.shape()));
  }
  const std::size_t n = logits.rows(), k = logits.cols();
  if (labels.size() != n) {
    throw ContractError("cross_entropy_loss: " + std::to_string(labels.size()) +
                        " labels for " + std::to_string(n) + " rows");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw IndexError("cross_entropy_loss: label " +
                       std::to_string(labels[i]) + " out of range [0," +
                       std::to_string(k) + ") at row " + std::to_string(i));
    }
  }
  const auto& dl = logits.data();
  // Cache the softmax for the backward pass.
  std::vector<double> probs(n * k);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* lrow = &dl[i * k];
    double hi = lrow[0];
    for (std::size_t c = 1; c < k; ++c) hi = std::max(hi, lrow[c]);
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      double e = std::exp(lrow[c] - hi);
      probs[i * k + c] = e;
      total += e;
    }
    for (std::size_t c = 0; c < k; ++c) probs[i * k + c] /= total;
    double log_norm = std::log(total) + hi;
    loss += log_norm - lrow[static_cast<std::size_t>(labels[i])];
  }
  detail::TensorNode* nl = logits.node();
  return make_op_result(
      Shape{}, {loss}, {logits},
      [nl, probs = std::move(probs), labels, n, k](detail::TensorNode& self) {
        auto& g = grad_of(nl);
        const double upstream = self.grad[0];
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t c = 0; c < k; ++c) {
            double delta = probs[i * k + c];
            if (c == static_cast<std::size_t>(labels[i])) delta -= 1.0;
            g[i * k + c] += upstream * delta;
          }
        }
      },
      "cross_entropy_loss");
}

Tensor frobenius_distance(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "frobenius_distance");
  const auto& da = a.data();
  const auto& db = b.data();
  double sq = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    double d = da[i] - db[i];
    sq += d * d;
  }
  double dist = std::sqrt(sq);
  detail::TensorNode* na = a.node();
  detail::TensorNode* nb = b.node();
  bool ga = a.requires_grad(), gb = b.requires_grad();
  return make_op_result(
      Shape{}, {dist}, {a, b},
      [na, nb, ga, gb](detail::TensorNode& self) {
        const double dist_value = self.data[0];
        if (dist_value == 0.0) return;  // subgradient 0 at coincidence
        const double coeff = self.grad[0] / dist_value;
        if (ga) {
          auto& g = grad_of(na);
          for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += coeff * (na->data[i] - nb->data[i]);
        }
        if (gb) {
          auto& g = grad_of(nb);
          for (std::size_t i = 0; i < g.size(); ++i)
            g[i] -= coeff * (na->data[i] - nb->data[i]);
        }
      },
      "frobenius_distance");
}

std::vector<int> argmax_rows(const Tensor& x) {
  if (x.rank() != 2) {
    throw DimensionError("argmax_rows: expected 2-D, got " +
                         shape_str(x.shape()));
  }
  const std::size_t n = x.rows(), k = x.cols();
  const auto& dx = x.data();
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (dx[i * k + c] > dx[i * k + best]) best = c;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace lsdgnn
