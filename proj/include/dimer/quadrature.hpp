#pragma once

#include <cstddef>
#include <vector>

namespace dimer {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  explicit GaussLegendre(std::size_t n);

  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached rule for the given order; safe to call concurrently.
const GaussLegendre& gauss_legendre(std::size_t n);

}  // namespace dimer
