#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lsdgnn/tensor.hpp"

namespace lsdgnn {

// Ordered map from unique parameter name to a requires_grad tensor.
// Iteration order is insertion order, which pins optimizer update order
// and checkpoint layout.
class ParameterStore {
 public:
  using Entry = std::pair<std::string, Tensor>;

  // Registers the tensor under the given name and flips requires_grad on.
  Tensor add(const std::string& name, Tensor tensor);

  bool has(const std::string& name) const;
  Tensor get(const std::string& name) const;  // LookupError if missing

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t total_elements() const;

  std::vector<Entry>::iterator begin() { return entries_.begin(); }
  std::vector<Entry>::iterator end() { return entries_.end(); }
  std::vector<Entry>::const_iterator begin() const { return entries_.begin(); }
  std::vector<Entry>::const_iterator end() const { return entries_.end(); }

  // Allocates zero gradient buffers for parameters the last backward pass
  // never reached, so every parameter reads as zero-gradient afterwards.
  void ensure_grad_buffers();
  void clear_grads();

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace lsdgnn
