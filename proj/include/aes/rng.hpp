#pragma once

#include <cstdint>
#include <string_view>

namespace aes {

/// Deterministic random stream. All samplers are implemented in-repo
/// (xoshiro256** core, Box-Muller normals, Marsaglia-Tsang gammas) so that
/// sequences are identical across platforms and standard-library versions.
///
/// Streams are derived from a master seed plus a stage name; two streams
/// with different names never share state, so consuming draws in one stage
/// cannot perturb another.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);
  RngStream(std::uint64_t seed, std::string_view stream_name);

  /// Child stream: same master seed, name scoped under this stream.
  RngStream substream(std::string_view name) const;

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in {0, ..., n-1}.
  std::uint64_t uniform_int(std::uint64_t n);

  /// Standard normal via Box-Muller (the spare draw is cached).
  double normal();
  double normal(double mean, double stddev);

  /// Gamma(shape, scale) via Marsaglia-Tsang; shape may be < 1.
  double gamma(double shape, double scale);

 private:
  std::uint64_t state_[4];
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
  std::uint64_t seed_ = 0;        // retained so substreams re-derive from root
  std::uint64_t name_hash_ = 0;
};

/// FNV-1a hash of a stage name; used to key sub-streams off the master seed.
std::uint64_t hash_stream_name(std::string_view name);

}  // namespace aes
