#include "fbh/rng.hpp"

#include <cmath>

namespace fbh {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t s = master;
  (void)splitmix64(s);
  s ^= 0xd1b54a32d192ed03ull * (a + 1);
  (void)splitmix64(s);
  s ^= 0x8cb92ba72f3d8dd7ull * (b + 1);
  (void)splitmix64(s);
  s ^= 0xa24baed4963ee407ull * (c + 1);
  return splitmix64(s);
}

double GaussianStream::uniform() {
  const std::uint64_t u = splitmix64(state_);
  // 53-bit mantissa, shifted into (0,1)
  return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
}

double GaussianStream::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

void GaussianStream::fill_gaussian(std::vector<double>& out, std::size_t n) {
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = gaussian();
}

}  // namespace fbh
