#include "gogan/autodiff/random.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gogan::ad {

std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string serialize_rng(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng deserialize_rng(const std::string& text) {
  std::istringstream is(text);
  Rng rng;
  is >> rng;
  if (!is) throw std::runtime_error("deserialize_rng: malformed generator state");
  return rng;
}

}  // namespace gogan::ad
