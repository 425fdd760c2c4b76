#pragma once

#include <cstdint>
#include <vector>

namespace fbh {

/// splitmix64 step; used to derive independent substream seeds from a master seed.
std::uint64_t splitmix64(std::uint64_t& state);

/// Collapse an id tuple into a substream seed. Distinct tuples give distinct,
/// well-mixed seeds, so per-(cell, replica) streams are independent of thread
/// scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

/// Deterministic Gaussian stream (xoshiro-free: splitmix64 core + Box-Muller).
class GaussianStream {
public:
  explicit GaussianStream(std::uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ull) {}

  double uniform();  // in (0,1)
  double gaussian();

  void fill_gaussian(std::vector<double>& out, std::size_t n);

private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fbh
