#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace pvi {

// One draw of auxiliary noise for the reparameterization z = mu + sigma*eps.
// The same (seed, stream, index) always produces the same eps.
struct NoiseDraw {
  Eigen::VectorXd eps;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t index = 0;
};

// Counter-based generator: every value is a pure function of
// (seed, stream, index, component), so streams can be split across threads
// or replayed without carrying state.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed, std::uint64_t stream = 0);

  // Standard-normal vector for draw `index`.
  static Eigen::VectorXd normal_at(std::uint64_t seed, std::uint64_t stream,
                                   std::uint64_t index, int dim);

  // Uniform on [0, 1) for draw `index`, component `j`.
  static double uniform_at(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t index, std::uint64_t j = 0);

  NoiseDraw next(int dim);
  std::vector<NoiseDraw> next_batch(int count, int dim);
  double next_uniform();
  double next_normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t position() const { return index_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t index_ = 0;
};

}  // namespace pvi
