#pragma once

#include <cstddef>
#include <random>
#include <utility>
#include <vector>

namespace lsdgnn {

// Fisher-Yates with an explicitly pinned draw, so shuffles do not depend on
// the standard library's unspecified std::shuffle internals.
template <typename T>
void seeded_shuffle(std::vector<T>& values, std::mt19937_64& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace lsdgnn
