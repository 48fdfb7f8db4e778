#pragma once

#include <cstdint>
#include <string_view>

namespace dysonlab {

std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a hash of a tag string, used to name experiments and sub-batches.
std::uint64_t hash_tag(std::string_view tag);

/// Deterministic random stream. (master_seed, stream_id) fixes every draw.
///
/// The generator is xoshiro256** seeded through splitmix64 from the pair, so
/// distinct stream ids give decorrelated streams. Normal and gamma variates
/// are produced by fixed algorithms (Box-Muller, Marsaglia-Tsang) rather than
/// <random> distributions so the bit pattern does not depend on the standard
/// library.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Counter-derived child stream: replica r of this stream.
  RngStream substream(std::uint64_t index) const;
  /// Child stream named by a tag (e.g. "centering").
  RngStream substream(std::string_view tag) const;

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }
  double normal();
  /// Gamma(shape, 1).
  double gamma(double shape);
  /// Chi random variable with (real) dof degrees of freedom.
  double chi(double dof);

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace dysonlab
