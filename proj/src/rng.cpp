#include "hydra/rng.hpp"

#include <cmath>

namespace hydra {

std::uint32_t Rng::poisson(double lambda) {
  if (lambda <= 0.0) return 0;
  // Split large rates so exp(-lambda) never underflows.
  std::uint32_t total = 0;
  while (lambda > 30.0) {
    total += poisson(30.0);
    lambda -= 30.0;
  }
  const double limit = std::exp(-lambda);
  double product = uniform01();
  std::uint32_t k = 0;
  while (product > limit) {
    ++k;
    product *= uniform01();
  }
  return total + k;
}

}  // namespace hydra
