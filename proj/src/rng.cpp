#include "pvi/rng.hpp"

#include <cmath>
#include <numbers>

namespace pvi {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t fmix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t draw_key(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t index) {
  const std::uint64_t key = fmix(seed ^ fmix(stream + kGolden));
  return fmix(key + (index + 1) * 0xD1B54A32D192ED03ULL);
}

double bits_to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double uniform_from_key(std::uint64_t key, std::uint64_t j) {
  return bits_to_unit(fmix(key ^ fmix((j + 1) * kGolden)));
}

// Box-Muller, cosine branch only so each component owns two counters.
double normal_from_key(std::uint64_t key, std::uint64_t j) {
  const double u1 = 1.0 - uniform_from_key(key, 2 * j);
  const double u2 = uniform_from_key(key, 2 * j + 1);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {}

Eigen::VectorXd NoiseStream::normal_at(std::uint64_t seed,
                                       std::uint64_t stream,
                                       std::uint64_t index, int dim) {
  const std::uint64_t key = draw_key(seed, stream, index);
  Eigen::VectorXd eps(dim);
  for (int j = 0; j < dim; ++j) eps[j] = normal_from_key(key, j);
  return eps;
}

double NoiseStream::uniform_at(std::uint64_t seed, std::uint64_t stream,
                               std::uint64_t index, std::uint64_t j) {
  return uniform_from_key(draw_key(seed, stream, index), j);
}

NoiseDraw NoiseStream::next(int dim) {
  NoiseDraw d{normal_at(seed_, stream_, index_, dim), seed_, stream_, index_};
  ++index_;
  return d;
}

std::vector<NoiseDraw> NoiseStream::next_batch(int count, int dim) {
  std::vector<NoiseDraw> out;
  out.reserve(count);
  for (int s = 0; s < count; ++s) out.push_back(next(dim));
  return out;
}

double NoiseStream::next_uniform() { return uniform_at(seed_, stream_, index_++); }

double NoiseStream::next_normal() {
  return normal_from_key(draw_key(seed_, stream_, index_++), 0);
}

}  // namespace pvi
