#include "lsdgnn/param_store.hpp"

namespace lsdgnn {

Tensor ParameterStore::add(const std::string& name, Tensor tensor) {
  if (index_.count(name)) {
    throw ContractError("parameter store: duplicate name '" + name + "'");
  }
  if (!tensor.defined()) {
    throw ContractError("parameter store: undefined tensor for '" + name +
                        "'");
  }
  tensor.set_requires_grad(true);
  index_.emplace(name, entries_.size());
  entries_.emplace_back(name, tensor);
  return tensor;
}

bool ParameterStore::has(const std::string& name) const {
  return index_.count(name) != 0;
}

Tensor ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw LookupError("parameter store: unknown name '" + name + "'");
  }
  return entries_[it->second].second;
}

std::size_t ParameterStore::total_elements() const {
  std::size_t total = 0;
  for (const Entry& entry : entries_) total += entry.second.size();
  return total;
}

void ParameterStore::ensure_grad_buffers() {
  for (Entry& entry : entries_) entry.second.grad_buffer();
}

void ParameterStore::clear_grads() {
  for (Entry& entry : entries_) entry.second.clear_grad();
}

}  // namespace lsdgnn
